#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <stdexcept>

#include "oracles.hpp"
#include "stochhom/errors.hpp"
#include "stochhom/generator.hpp"
#include "stochhom/graph.hpp"
#include "stochhom/io.hpp"
#include "stochhom/solver.hpp"

namespace stochhom {
namespace {

using testing::kWorkedExampleIncidence;
using testing::worked_example_adjacency;
using testing::worked_example_graph;

Contact contact(ContactKind kind, double depth, bool sphere = true) {
    Contact c;
    c.kind = kind;
    c.overlap_depth = depth;
    c.boundary_sphere = sphere;
    return c;
}

Eigen::MatrixXd identity_residual(const GraphMatrices& m) {
    const Eigen::MatrixXd a(m.incidence);
    const Eigen::MatrixXd c(m.conductance);
    const Eigen::MatrixXd d(m.degree);
    return a * c * a.transpose() - d - Eigen::MatrixXd(m.adjacency);
}

Sample puffed_sample(std::uint64_t seed, double fraction = 0.3) {
    GenerationSpec spec;
    spec.method = PlacementMethod::MD;
    spec.target_volume_fraction = fraction;
    spec.n_spheres = 40;
    spec.n_cylinders = 40;
    spec.seed = seed;
    return puff_up(generate(resolve_radii(spec, 0.5)), 1.15, 0);
}

TEST(ConductanceFromContact, LinearLaw) {
    CalibrationConstants cal;
    EXPECT_DOUBLE_EQ(conductance_from_contact(contact(ContactKind::SphereSphere, 0.1), cal), 0.1);
    cal.k_cc = 2.0;
    EXPECT_DOUBLE_EQ(conductance_from_contact(contact(ContactKind::CylinderCylinder, 0.05), cal), 0.1);
}

TEST(ConductanceFromContact, BoundaryUsesShapeConstant) {
    CalibrationConstants cal;
    cal.k_boundary_s = 3.0;
    cal.k_boundary_c = 5.0;
    EXPECT_DOUBLE_EQ(conductance_from_contact(contact(ContactKind::InclusionBoundary, 0.1, true), cal), 0.3);
    EXPECT_DOUBLE_EQ(conductance_from_contact(contact(ContactKind::InclusionBoundary, 0.1, false), cal), 0.5);
}

TEST(ConductanceFromContact, ZeroDepthRejected) {
    EXPECT_THROW((void)conductance_from_contact(contact(ContactKind::SphereSphere, 0.0), {}), std::invalid_argument);
}

TEST(ConductanceFromContact, HertzExponent) {
    CalibrationConstants cal;
    cal.law = ContactLaw::Hertz;
    EXPECT_NEAR(conductance_from_contact(contact(ContactKind::SphereSphere, 0.04), cal), 0.008, 1e-15);
}

TEST(CalibrationConstants, ValidateRejectsNonPositive) {
    CalibrationConstants cal;
    EXPECT_NO_THROW(cal.validate());
    cal.k_edge = 0.0;
    EXPECT_THROW(cal.validate(), ConfigError);
}

TEST(CircuitGraph, ValidateRejectsMalformedGraphs) {
    CircuitGraph g;
    g.n_vertices = 3;
    g.source = 0;
    g.sink = 2;
    g.edges = {{0, 1, 1.0}};
    EXPECT_NO_THROW(g.validate());
    g.edges = {{1, 1, 1.0}};
    EXPECT_THROW(g.validate(), FormatError);
    g.edges = {{0, 2, 1.0}};
    EXPECT_THROW(g.validate(), FormatError);
    g.edges = {{0, 1, -1.0}};
    EXPECT_THROW(g.validate(), FormatError);
    g.edges = {{0, 3, 1.0}};
    EXPECT_THROW(g.validate(), FormatError);
}

TEST(BuildContactGraph, EmptySample) {
    const CircuitGraph g = build_contact_graph(Sample{}, TerminalSpec::diagonal(0), {});
    EXPECT_EQ(g.n_vertices, 2U);
    EXPECT_EQ(g.n_edges(), 0U);
    EXPECT_FALSE(percolates(g));
}

TEST(BuildContactGraph, SingleSpanningInclusion) {
    Sample s;
    s.inclusions.emplace_back(Cylinder{{0.5, 0.5, 0.5}, Vec3::UnitX(), 0.45, 0.1});
    CalibrationConstants cal;
    cal.k_boundary_c = 2.0;
    const CircuitGraph g = build_contact_graph(s, TerminalSpec::diagonal(0), cal);
    ASSERT_EQ(g.n_vertices, 3U);
    ASSERT_EQ(g.n_edges(), 2U);
    EXPECT_EQ(g.source, 1U);
    EXPECT_EQ(g.sink, 2U);
    EXPECT_EQ(g.edges[0].u, 0U);
    EXPECT_EQ(g.edges[0].v, 1U);
    EXPECT_EQ(g.edges[1].v, 2U);
    EXPECT_NEAR(g.edges[0].conductance, 0.1, 1e-14);
    EXPECT_NEAR(g.edges[1].conductance, 0.1, 1e-14);
    EXPECT_TRUE(percolates(g));
    EXPECT_FALSE(percolates(build_contact_graph(s, TerminalSpec::diagonal(1), cal)));
}

TEST(BuildContactGraph, NoWrapAlongTerminalAxis) {
    Sample s;
    s.inclusions.emplace_back(Sphere{{0.05, 0.5, 0.5}, 0.1});
    s.inclusions.emplace_back(Sphere{{0.95, 0.5, 0.5}, 0.1});
    const CircuitGraph gx = build_contact_graph(s, TerminalSpec::diagonal(0), {});
    for (const Edge& e : gx.edges) EXPECT_FALSE(e.u == 0 && e.v == 1);
    EXPECT_FALSE(percolates(gx));

    const CircuitGraph gy = build_contact_graph(s, TerminalSpec::diagonal(1), {});
    ASSERT_EQ(gy.n_edges(), 1U);
    EXPECT_NEAR(gy.edges[0].conductance, 0.1, 1e-14);
}

TEST(BuildContactGraph, PeriodicImagesMergeAsParallelContacts) {
    // Long cylinders half a cell apart touch through two images along y.
    Sample s;
    s.inclusions.emplace_back(Cylinder{{0.5, 0.2, 0.5}, Vec3::UnitX(), 0.2, 0.3});
    s.inclusions.emplace_back(Cylinder{{0.5, 0.7, 0.5}, Vec3::UnitX(), 0.2, 0.3});
    const auto terminals = TerminalSpec::diagonal(2);
    const CircuitGraph raw = build_contact_graph(s, terminals, {}, false);
    const CircuitGraph merged = build_contact_graph(s, terminals, {}, true);
    ASSERT_EQ(raw.n_edges(), 2U);
    ASSERT_EQ(merged.n_edges(), 1U);
    EXPECT_NEAR(merged.edges[0].conductance, raw.edges[0].conductance + raw.edges[1].conductance, 1e-15);
}

TEST(BuildContactGraph, OffDiagonalKeepsOnlyCentralZone) {
    const auto terminals = TerminalSpec::off_diagonal(0, 1);
    Sample central;
    central.inclusions.emplace_back(Sphere{{0.05, 0.5, 0.5}, 0.1});
    const CircuitGraph g1 = build_contact_graph(central, terminals, {});
    ASSERT_EQ(g1.n_edges(), 1U);
    EXPECT_EQ(g1.edges[0].v, g1.source);

    Sample corner;
    corner.inclusions.emplace_back(Sphere{{0.05, 0.05, 0.5}, 0.1});
    EXPECT_EQ(build_contact_graph(corner, terminals, {}).n_edges(), 0U);
    EXPECT_EQ(build_contact_graph(corner, TerminalSpec::off_diagonal(0, 1, 1.0), {}).n_edges(), 2U);
}

TEST(BuildContactGraph, EdgesSortedAndPositive) {
    const Sample s = puffed_sample(4);
    const CircuitGraph g = build_contact_graph(s, TerminalSpec::diagonal(0), {});
    EXPECT_NO_THROW(g.validate());
    for (std::size_t k = 0; k < g.n_edges(); ++k) {
        EXPECT_LT(g.edges[k].u, g.edges[k].v);
        EXPECT_GT(g.edges[k].conductance, 0.0);
        if (k > 0) {
            EXPECT_TRUE(std::tie(g.edges[k - 1].u, g.edges[k - 1].v) < std::tie(g.edges[k].u, g.edges[k].v));
        }
    }
}

TEST(BuildContactGraph, ScaleCovariance) {
    const Sample s = puffed_sample(7);
    const CalibrationConstants cal;
    const double lambda = 3.7;
    for (int axis = 0; axis < 3; ++axis) {
        const CircuitGraph g = build_contact_graph(s, TerminalSpec::diagonal(axis), cal);
        const CircuitGraph h = build_contact_graph(s, TerminalSpec::diagonal(axis), cal.scaled(lambda));
        ASSERT_EQ(g.n_edges(), h.n_edges());
        for (std::size_t k = 0; k < g.n_edges(); ++k) {
            EXPECT_NEAR(h.edges[k].conductance, lambda * g.edges[k].conductance, 1e-15 * h.edges[k].conductance);
        }
        const double eg = effective_conductance(g);
        EXPECT_NEAR(effective_conductance(h), lambda * eg, 1e-10 * lambda * eg);
    }
}

TEST(BuildContactGraph, MergingKeepsEffectiveConductance) {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Sample s = puffed_sample(seed, 0.35);
        for (int axis = 0; axis < 3; ++axis) {
            const auto t = TerminalSpec::diagonal(axis);
            const double merged = effective_conductance(build_contact_graph(s, t, {}, true));
            const double raw = effective_conductance(build_contact_graph(s, t, {}, false));
            EXPECT_NEAR(merged, raw, 1e-10 * std::max(1.0, merged));
        }
    }
}

TEST(GraphMatrices, WorkedExampleAdjacencyAndIncidence) {
    const GraphMatrices m = graph_matrices(worked_example_graph());
    const Eigen::MatrixXd adj(m.adjacency);
    EXPECT_EQ(adj, Eigen::MatrixXd(worked_example_adjacency()));
    const Eigen::MatrixXd inc(m.incidence);
    ASSERT_EQ(inc.rows(), 8);
    ASSERT_EQ(inc.cols(), 13);
    for (int i = 0; i < 8; ++i) {
        for (int k = 0; k < 13; ++k) EXPECT_EQ(inc(i, k), kWorkedExampleIncidence[i][k]) << i << "," << k;
    }
    EXPECT_LE(identity_residual(m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GraphMatrices, WorkedExampleFileMatches) {
    const CircuitGraph g = graph_from_text(read_file(STOCHHOM_TEST_DATA_DIR "/worked_example_graph.json"));
    const CircuitGraph ref = worked_example_graph();
    ASSERT_EQ(g.n_vertices, ref.n_vertices);
    EXPECT_EQ(g.source, ref.source);
    EXPECT_EQ(g.sink, ref.sink);
    ASSERT_EQ(g.n_edges(), ref.n_edges());
    for (std::size_t k = 0; k < g.n_edges(); ++k) {
        EXPECT_EQ(g.edges[k].u, ref.edges[k].u);
        EXPECT_EQ(g.edges[k].v, ref.edges[k].v);
        EXPECT_EQ(g.edges[k].conductance, ref.edges[k].conductance);
    }
}

TEST(GraphMatrices, ChainPattern) {
    CircuitGraph g;
    g.n_vertices = 3;
    g.source = 0;
    g.sink = 2;
    g.edges = {{0, 1, 0.5}, {1, 2, 0.25}};
    const GraphMatrices m = graph_matrices(g);
    Eigen::MatrixXd a_expected(3, 2);
    a_expected << 1, 0, 1, 1, 0, 1;
    EXPECT_EQ(Eigen::MatrixXd(m.incidence), a_expected);
    const Eigen::MatrixXd adj(m.adjacency);
    EXPECT_EQ(adj(0, 1), 0.5);
    EXPECT_EQ(adj(1, 2), 0.25);
    EXPECT_EQ(adj(0, 2), 0.0);
}

TEST(GraphMatrices, IdentityOnRandomGraphs) {
    RandomStream rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 30);
        const CircuitGraph g = testing::random_graph(rng, n, uniform(rng, 0.05, 0.6));
        const GraphMatrices m = graph_matrices(g);
        ASSERT_LE(identity_residual(m).cwiseAbs().maxCoeff(), 1e-12) << trial;

        const Eigen::MatrixXd inc(m.incidence);
        const Eigen::MatrixXd adj(m.adjacency);
        ASSERT_TRUE(adj.isApprox(adj.transpose(), 0.0) || adj.size() == 0);
        for (Eigen::Index i = 0; i < adj.rows(); ++i) ASSERT_EQ(adj(i, i), 0.0);
        for (Eigen::Index k = 0; k < inc.cols(); ++k) ASSERT_EQ(inc.col(k).sum(), 2.0);
        std::vector<double> degree(n, 0.0);
        for (const Edge& e : g.edges) {
            degree[e.u] += 1.0;
            degree[e.v] += 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(inc.row(static_cast<Eigen::Index>(i)).sum(), degree[i]);
    }
}

TEST(Percolates, EdgelessAndWorkedExample) {
    CircuitGraph g;
    EXPECT_FALSE(percolates(g));
    EXPECT_TRUE(percolates(worked_example_graph()));
}

TEST(Percolates, BrokenChain) {
    CircuitGraph g;
    g.n_vertices = 4;
    g.source = 0;
    g.sink = 3;
    g.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}};
    EXPECT_TRUE(percolates(g));
    g.edges.pop_back();
    EXPECT_FALSE(percolates(g));
}

TEST(ComponentLabels, SmallestIdPerComponent) {
    CircuitGraph g;
    g.n_vertices = 6;
    g.source = 0;
    g.sink = 5;
    g.edges = {{4, 2, 1.0}, {3, 5, 1.0}, {1, 0, 1.0}};
    const std::vector<std::size_t> expected{0, 0, 2, 3, 2, 3};
    EXPECT_EQ(component_labels(g), expected);
}

TEST(MergeParallelEdges, SumsAndSorts) {
    CircuitGraph g;
    g.n_vertices = 4;
    g.source = 0;
    g.sink = 3;
    g.edges = {{2, 1, 0.5}, {0, 1, 1.0}, {1, 2, 0.25}, {2, 3, 2.0}};
    const CircuitGraph m = merge_parallel_edges(g);
    ASSERT_EQ(m.n_edges(), 3U);
    EXPECT_EQ(m.edges[1].u, 1U);
    EXPECT_EQ(m.edges[1].v, 2U);
    EXPECT_EQ(m.edges[1].conductance, 0.75);
}

}  // namespace
}  // namespace stochhom
