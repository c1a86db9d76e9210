#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "stochhom/errors.hpp"
#include "stochhom/generator.hpp"
#include "stochhom/solver.hpp"

namespace stochhom {
namespace {

using testing::dense_total_current;
using testing::worked_example_graph;

CircuitGraph chain(std::vector<double> conductances) {
    CircuitGraph g;
    g.n_vertices = conductances.size() + 1;
    g.source = 0;
    g.sink = conductances.size();
    for (std::size_t k = 0; k < conductances.size(); ++k) g.edges.push_back({k, k + 1, conductances[k]});
    return g;
}

CircuitGraph swapped_terminals(CircuitGraph g) {
    std::swap(g.source, g.sink);
    return g;
}

// Signed current sum leaving vertex i.
double net_current(const CircuitGraph& g, const CircuitSolution& s, std::size_t i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < g.n_edges(); ++k) {
        if (g.edges[k].u == i) sum += s.currents[k];
        if (g.edges[k].v == i) sum -= s.currents[k];
    }
    return sum;
}

const SolverOptions kFull{SolveMethod::FullDirect};
const SolverOptions kLapDirect{SolveMethod::LaplacianDirect};
const SolverOptions kCg{SolveMethod::LaplacianCG};

TEST(AssembleSystem, WorkedExampleShape) {
    const LinearSystem s = assemble_system(worked_example_graph());
    EXPECT_EQ(s.n_unknowns, 21U);
    EXPECT_EQ(s.n_equations, 21U);
    EXPECT_EQ(s.n_ohm_rows, 13U);
    EXPECT_EQ(s.n_kirchhoff_rows, 6U);
    EXPECT_EQ(s.n_boundary_rows, 2U);
    EXPECT_EQ(s.matrix.rows(), 21);
    EXPECT_EQ(s.matrix.cols(), 21);
}

TEST(AssembleSystem, SmallShapes) {
    const LinearSystem c = assemble_system(chain({1.0, 1.0}));
    EXPECT_EQ(c.n_unknowns, 5U);
    EXPECT_EQ(c.n_equations, 5U);
    const LinearSystem e = assemble_system(CircuitGraph{});
    EXPECT_EQ(e.n_unknowns, 2U);
    EXPECT_EQ(e.n_equations, 2U);
    EXPECT_EQ(e.n_boundary_rows, 2U);
}

TEST(AssembleSystem, CountIdentityOnRandomGraphs) {
    RandomStream rng(1);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 40);
        const CircuitGraph g = testing::random_graph(rng, n, uniform(rng, 0.0, 0.5));
        const LinearSystem s = assemble_system(g);
        ASSERT_EQ(s.n_equations, g.n_edges() + g.n_internal() + 2);
        ASSERT_EQ(s.n_equations, s.n_unknowns);
    }
}

TEST(Solve, SeriesChains) {
    for (const SolverOptions& o : {kFull, kLapDirect, kCg}) {
        EXPECT_NEAR(solve(chain({1.0, 1.0}), o).total_current, 0.5, 1e-14);
        EXPECT_NEAR(solve(chain({2.0, 2.0}), o).total_current, 1.0, 1e-14);
    }
}

TEST(Solve, WorkedExample) {
    const CircuitSolution s = solve(worked_example_graph(), kFull);
    EXPECT_NEAR(s.total_current, 0.11, 0.005);
    EXPECT_NEAR(s.total_current, dense_total_current(worked_example_graph()), 1e-12);
    EXPECT_NEAR(s.sink_current, s.total_current, 1e-12);
    EXPECT_LE(s.relative_residual, 1e-10);
    EXPECT_EQ(s.potentials[0], 1.0);
    EXPECT_EQ(s.potentials[7], 0.0);
}

TEST(Solve, FloatingComponentsAreAbsent) {
    CircuitGraph g = chain({1.0, 1.0});
    g.n_vertices = 5;
    g.sink = 2;
    g.edges.push_back({3, 4, 7.0});
    for (const SolverOptions& o : {kFull, kLapDirect, kCg}) {
        const CircuitSolution s = solve(g, o);
        EXPECT_FALSE(s.potentials[3].has_value());
        EXPECT_FALSE(s.potentials[4].has_value());
        EXPECT_EQ(s.currents[2], 0.0);
        EXPECT_NEAR(s.total_current, 0.5, 1e-14);
    }
}

TEST(Solve, DisconnectedTerminalsCarryNoCurrent) {
    CircuitGraph g;
    g.n_vertices = 4;
    g.source = 0;
    g.sink = 3;
    g.edges = {{0, 1, 1.0}, {2, 3, 1.0}};
    for (const SolverOptions& o : {kFull, kLapDirect, kCg}) {
        const CircuitSolution s = solve(g, o);
        EXPECT_EQ(s.total_current, 0.0);
        for (const auto& p : s.potentials) {
            ASSERT_TRUE(p.has_value());
            EXPECT_TRUE(std::isfinite(*p));
        }
        EXPECT_EQ(*s.potentials[1], 1.0);
        EXPECT_EQ(*s.potentials[2], 0.0);
    }
    EXPECT_EQ(effective_conductance(g), 0.0);
}

TEST(EffectiveConductance, ParallelChains) {
    CircuitGraph g;
    g.n_vertices = 4;
    g.source = 0;
    g.sink = 3;
    // Two chains, each of two unit edges: conductance 0.5 each.
    g.edges = {{0, 1, 1.0}, {1, 3, 1.0}, {0, 2, 1.0}, {2, 3, 1.0}};
    EXPECT_NEAR(effective_conductance(g), 1.0, 1e-14);
}

TEST(EffectiveConductance, NormalizationReference) {
    SolverOptions o;
    o.full_conductor_reference = 4.0;
    EXPECT_NEAR(effective_conductance(chain({2.0, 2.0}), o), 0.25, 1e-14);
    o.full_conductor_reference = 0.0;
    EXPECT_THROW((void)effective_conductance(chain({2.0, 2.0}), o), ConfigError);
}

TEST(EffectiveConductance, WorkedExampleIsFast) {
    const CircuitGraph g = worked_example_graph();
    const auto t0 = std::chrono::steady_clock::now();
    const double c = effective_conductance(g);
    const auto dt = std::chrono::steady_clock::now() - t0;
    EXPECT_NEAR(c, 0.11, 0.005);
    EXPECT_LT(std::chrono::duration<double>(dt).count(), 1e-3);
}

TEST(Properties, ReductionEquivalenceAndResidual) {
    RandomStream rng(7);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 3 + static_cast<std::size_t>(uniform01(rng) * 60);
        const CircuitGraph g = testing::random_graph(rng, n, uniform(rng, 0.03, 0.3));
        const CircuitSolution full = solve(g, kFull);
        const CircuitSolution lap = solve(g, kLapDirect);
        const CircuitSolution cg = solve(g, kCg);
        const double scale = std::max(full.total_current, 1e-3);
        ASSERT_NEAR(lap.total_current, full.total_current, 1e-10 * scale) << t;
        ASSERT_NEAR(cg.total_current, full.total_current, 1e-10 * scale) << t;
        ASSERT_NEAR(full.total_current, dense_total_current(g), 1e-10 * scale) << t;
        ASSERT_LE(full.relative_residual, 1e-10);
        ASSERT_LE(lap.relative_residual, 1e-10);
    }
}

TEST(Properties, ConservationAndMaximumPrinciple) {
    RandomStream rng(8);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 3 + static_cast<std::size_t>(uniform01(rng) * 60);
        const CircuitGraph g = testing::random_graph(rng, n, uniform(rng, 0.03, 0.3));
        const CircuitSolution s = solve(g, kFull);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == g.source || i == g.sink) continue;
            if (s.potentials[i]) {
                ASSERT_LE(std::abs(net_current(g, s, i)), 1e-10 * std::max(s.total_current, 1.0));
                ASSERT_GE(*s.potentials[i], -1e-12);
                ASSERT_LE(*s.potentials[i], 1.0 + 1e-12);
            }
        }
        ASSERT_NEAR(s.sink_current, s.total_current, 1e-10 * std::max(s.total_current, 1.0));
    }
}

TEST(Properties, Reciprocity) {
    RandomStream rng(9);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 3 + static_cast<std::size_t>(uniform01(rng) * 60);
        const CircuitGraph g = testing::random_graph(rng, n, uniform(rng, 0.03, 0.3));
        const double a = effective_conductance(g);
        ASSERT_NEAR(effective_conductance(swapped_terminals(g)), a, 1e-10 * std::max(a, 1e-300));
    }
}

TEST(Properties, RayleighMonotonicity) {
    RandomStream rng(10);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 3 + static_cast<std::size_t>(uniform01(rng) * 40);
        CircuitGraph g = testing::random_graph(rng, n, uniform(rng, 0.05, 0.4));
        if (g.edges.empty()) continue;
        const double before = effective_conductance(g);
        const auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(g.n_edges()));
        g.edges[k].conductance *= uniform(rng, 1.0, 10.0);
        ASSERT_GE(effective_conductance(g), before - 1e-12);
    }
}

TEST(Properties, Scale) {
    RandomStream rng(11);
    for (int t = 0; t < 100; ++t) {
        CircuitGraph g = testing::random_graph(rng, 30, 0.2);
        const double a = effective_conductance(g);
        const double lambda = uniform(rng, 0.1, 10.0);
        for (auto& e : g.edges) e.conductance *= lambda;
        ASSERT_NEAR(effective_conductance(g), lambda * a, 1e-10 * lambda * std::max(a, 1e-300));
    }
}

TEST(Properties, SeriesParallelOracle) {
    RandomStream rng(12);
    for (int t = 0; t < 500; ++t) {
        const auto sp = testing::random_series_parallel(rng, 1 + static_cast<int>(uniform01(rng) * 6));
        for (const SolverOptions& o : {kFull, kLapDirect, kCg}) {
            ASSERT_NEAR(effective_conductance(sp.graph, o), sp.conductance, 1e-10 * sp.conductance) << t;
        }
    }
}

TEST(Properties, LargeSparseGraphsAgreeAcrossRoutes) {
    RandomStream rng(13);
    for (int t = 0; t < 5; ++t) {
        const CircuitGraph g = testing::random_sparse_graph(rng, 2000, 4.0);
        const double full = effective_conductance(g, kFull);
        const double cg = effective_conductance(g, kCg);
        ASSERT_NEAR(cg, full, 1e-8 * std::max(full, 1e-300));
    }
}

TEST(Solve, AutoPicksRouteByEdgeCount) {
    SolverOptions o;
    o.direct_edge_limit = 5;
    EXPECT_EQ(solve(chain({1.0, 1.0}), o).method, SolveMethod::FullDirect);
    EXPECT_EQ(solve(worked_example_graph(), o).method, SolveMethod::LaplacianCG);
}

TEST(ConductivityTensor, EmptySampleIsZero) {
    const ConductivityTensor t = conductivity_tensor(Sample{}, {});
    EXPECT_EQ(t.L, Eigen::Matrix3d::Zero());
    EXPECT_FALSE(t.percolating[0]);
}

TEST(ConductivityTensor, ChainAlongXConductsOnlyAlongX) {
    Sample s;
    for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) s.inclusions.emplace_back(Sphere{{x, 0.5, 0.5}, 0.12});
    const ConductivityTensor t = conductivity_tensor(s, {});
    EXPECT_GT(t.L(0, 0), 0.0);
    EXPECT_EQ(t.L(1, 1), 0.0);
    EXPECT_EQ(t.L(2, 2), 0.0);
    EXPECT_TRUE(t.percolating[0]);
    EXPECT_FALSE(t.percolating[1]);
    // Two boundary edges of 0.02 and four contacts of 0.04 in series.
    EXPECT_NEAR(t.L(0, 0), 1.0 / (2.0 / 0.02 + 4.0 / 0.04), 1e-12);
    EXPECT_EQ(t.L, t.L.transpose());
}

TEST(ConductivityTensor, StatisticallyIsotropic) {
    GenerationSpec spec;
    spec.method = PlacementMethod::MD;
    spec.target_volume_fraction = 0.25;
    spec.n_spheres = 60;
    spec.n_cylinders = 60;
    spec = resolve_radii(spec, 0.5);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        spec.seed = seed;
        const Sample s = puff_up(generate(spec), 1.2, 0);
        sum += conductivity_tensor(s, {}).L.diagonal();
    }
    const Eigen::Vector3d mean = sum / 50.0;
    ASSERT_GT(mean.minCoeff(), 0.0);
    EXPECT_LE((mean.maxCoeff() - mean.minCoeff()) / mean.mean(), 0.10) << mean.transpose();
}

}  // namespace
}  // namespace stochhom
