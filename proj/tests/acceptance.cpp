// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stochhom/calibrate.hpp"
#include "stochhom/generator.hpp"
#include "stochhom/io.hpp"
#include "stochhom/montecarlo.hpp"
#include "stochhom/solver.hpp"
#include "stochhom/voxel.hpp"

namespace {

using namespace stochhom;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt_double(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

std::size_t random_size(RandomStream& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

Outcome worked_example() {
    const CircuitGraph g = graph_from_text(read_file(STOCHHOM_TEST_DATA_DIR "/worked_example_graph.json"));
    const auto t0 = Clock::now();
    const double c = effective_conductance(g);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return {std::abs(c - 0.11) <= 0.005 && ms < 1.0,
            "conductance " + fmt_double("%.6f", c) + ", solve " + fmt_double("%.3f", ms) + " ms"};
}

Outcome system_shape() {
    const LinearSystem p = assemble_system(testing::worked_example_graph());
    bool ok = p.n_unknowns == 21 && p.n_equations == 21 && p.n_ohm_rows == 13 && p.n_kirchhoff_rows == 6 &&
              p.n_boundary_rows == 2;
    RandomStream rng(101);
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        const CircuitGraph g = testing::random_graph(rng, random_size(rng, 2, 40), uniform(rng, 0.0, 0.5));
        const LinearSystem s = assemble_system(g);
        if (s.n_equations != g.n_edges() + g.n_internal() + 2 || s.n_equations != s.n_unknowns ||
            static_cast<std::size_t>(s.matrix.rows()) != s.n_equations) {
            ++bad;
        }
    }
    ok = ok && bad == 0;
    return {ok, "worked example " + std::to_string(p.n_unknowns) + " unknowns / " + std::to_string(p.n_equations) +
                    " equations; random mismatches " + std::to_string(bad) + "/1000"};
}

double identity_error(const CircuitGraph& g) {
    const GraphMatrices m = graph_matrices(g);
    const Eigen::MatrixXd a(m.incidence);
    const Eigen::MatrixXd c(m.conductance);
    const Eigen::MatrixXd d(m.degree);
    const Eigen::MatrixXd r = a * c * a.transpose() - d - Eigen::MatrixXd(m.adjacency);
    return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

Outcome matrix_identity() {
    double worst = identity_error(testing::worked_example_graph());
    const GraphMatrices pm = graph_matrices(testing::worked_example_graph());
    bool example_match = Eigen::MatrixXd(pm.adjacency) == Eigen::MatrixXd(testing::worked_example_adjacency());
    const Eigen::MatrixXd inc(pm.incidence);
    for (int i = 0; i < 8; ++i) {
        for (int k = 0; k < 13; ++k) example_match = example_match && inc(i, k) == testing::kWorkedExampleIncidence[i][k];
    }
    RandomStream rng(202);
    for (int t = 0; t < 1000; ++t) {
        const CircuitGraph g = testing::random_graph(rng, random_size(rng, 2, 40), uniform(rng, 0.02, 0.6));
        worst = std::max(worst, identity_error(g));
    }
    return {worst <= 1e-12 && example_match, "max |A C A^T - D - Adj| = " + fmt_double("%.3e", worst) +
                                                 (example_match ? ", worked example Adj/A reproduced" : ", worked example Adj/A MISMATCH")};
}

Outcome series_parallel() {
    RandomStream rng(303);
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        const auto sp = testing::random_series_parallel(rng, 1 + static_cast<int>(uniform01(rng) * 6));
        worst = std::max(worst, rel_gap(effective_conductance(sp.graph), sp.conductance));
    }
    return {worst <= 1e-10, "max relative error " + fmt_double("%.3e", worst) + " over 500 networks"};
}

Outcome dense_vs_sparse() {
    RandomStream rng(404);
    double worst = 0.0;
    std::size_t largest = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = random_size(rng, 10, 500);
        largest = std::max(largest, n);
        const CircuitGraph g = testing::random_sparse_graph(rng, n, uniform(rng, 2.0, 8.0));
        const double full = solve(g, SolverOptions{SolveMethod::FullDirect}).total_current;
        const double cg = solve(g, SolverOptions{SolveMethod::LaplacianCG}).total_current;
        if (full == 0.0 && cg == 0.0) continue;
        worst = std::max(worst, rel_gap(full, cg));
    }
    return {worst <= 1e-8, "max relative gap (u,I) LU vs Laplacian CG " + fmt_double("%.3e", worst) +
                               ", up to " + std::to_string(largest) + " vertices"};
}

Outcome non_percolation() {
    RandomStream rng(505);
    int bad = 0;
    for (int t = 0; t < 500; ++t) {
        CircuitGraph g = testing::random_graph(rng, random_size(rng, 4, 60), uniform(rng, 0.05, 0.5));
        // Cut every edge crossing a random partition that separates the terminals.
        std::vector<bool> side(g.n_vertices);
        for (std::size_t i = 0; i < g.n_vertices; ++i) side[i] = uniform01(rng) < 0.5;
        side[g.source] = true;
        side[g.sink] = false;
        std::erase_if(g.edges, [&](const Edge& e) { return side[e.u] != side[e.v]; });
        // And a floating island that touches neither terminal.
        const std::size_t a = g.n_vertices;
        g.n_vertices += 2;
        g.edges.push_back({a, a + 1, 0.5});

        const double c = effective_conductance(g);
        const CircuitSolution s = solve(g);
        bool clean = c == 0.0 && s.total_current == 0.0 && !s.potentials[a] && !s.potentials[a + 1];
        for (const auto& u : s.potentials) clean = clean && (!u || std::isfinite(*u));
        for (double i : s.currents) clean = clean && std::isfinite(i);
        const std::string dump = solution_to_text(g, s);
        clean = clean && dump.find("nan") == std::string::npos && dump.find("inf") == std::string::npos;
        if (!clean) ++bad;
    }
    return {bad == 0, "violations " + std::to_string(bad) + "/500"};
}

Outcome generation() {
    std::string detail;
    bool ok = true;
    for (PlacementMethod m : {PlacementMethod::RSA, PlacementMethod::MD}) {
        GenerationSpec spec;
        spec.method = m;
        spec.n_spheres = 200;
        spec.target_volume_fraction = 0.20;
        spec.seed = 777;
        spec = resolve_radii(spec, 0.0);
        const auto t0 = Clock::now();
        const Sample a = generate(spec);
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        const Sample b = generate(spec);
        const double depth = max_overlap_depth(a);
        const bool same = sample_to_text(a) == sample_to_text(b);
        const bool pass = depth <= 1e-9 && same && secs < 10.0 && a.inclusions.size() == 200;
        ok = ok && pass;
        detail += std::string(to_string(m)) + ": max overlap " + fmt_double("%.2e", depth) + ", " +
                  (same ? "bit-identical" : "NOT identical") + ", " + fmt_double("%.2f", secs) + " s; ";
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome monotonicity() {
    RandomStream rng(808);
    int bad = 0;
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        CircuitGraph g = testing::random_graph(rng, random_size(rng, 3, 60), uniform(rng, 0.05, 0.4));
        if (g.edges.empty()) g.edges.push_back({g.source, 1, 1.0});
        const double before = effective_conductance(g);
        const std::size_t k = random_size(rng, 0, g.n_edges() - 1);
        g.edges[k].conductance *= uniform(rng, 1.0 + 1e-6, 20.0);
        const double after = effective_conductance(g);
        worst = std::min(worst, after - before);
        if (after < before - 1e-12) ++bad;
    }
    return {bad == 0, "violations " + std::to_string(bad) + "/200, worst change " + fmt_double("%.2e", worst)};
}

Outcome voxel_oracles() {
    const CalibrationConstants cal;
    double column_err = 0.0;
    for (std::size_t n : {1, 2, 7, 16, 33}) {
        VoxelGrid g(GridDims{5, n, 4});
        for (std::size_t y = 0; y < n; ++y) g.set(2, y, 1, true);
        const double k = effective_conductance(voxel_graph(g, 1, cal));
        column_err = std::max(column_err, rel_gap(k, cal.k_face / static_cast<double>(n + 1)));
    }

    VoxelGrid full(GridDims{16, 16, 16});
    std::fill(full.occupancy().begin(), full.occupancy().end(), 1);
    const auto kf = voxel_effective_conductivity(full, cal);
    const double full_gap = std::max(rel_gap(kf[0], kf[1]), rel_gap(kf[0], kf[2]));

    RandomStream rng(909);
    VoxelGrid g(GridDims{12, 13, 14});
    for (auto& v : g.occupancy()) v = uniform01(rng) < 0.55 ? 1 : 0;
    const auto k = voxel_effective_conductivity(g, cal);
    double swap_gap = 0.0;
    const std::array<std::array<int, 3>, 3> swaps{{{1, 0, 2}, {2, 1, 0}, {0, 2, 1}}};
    for (const auto& perm : swaps) {
        const GridDims& d = g.dims();
        VoxelGrid p(GridDims{d[perm[0]], d[perm[1]], d[perm[2]]});
        for (std::size_t z = 0; z < d.nz; ++z) {
            for (std::size_t y = 0; y < d.ny; ++y) {
                for (std::size_t x = 0; x < d.nx; ++x) {
                    const std::size_t c[3] = {x, y, z};
                    p.set(c[perm[0]], c[perm[1]], c[perm[2]], g.occupied(x, y, z));
                }
            }
        }
        const auto kp = voxel_effective_conductivity(p, cal);
        for (int a = 0; a < 3; ++a) {
            swap_gap = std::max(swap_gap, rel_gap(kp[static_cast<std::size_t>(perm[a])], k[static_cast<std::size_t>(a)]));
        }
    }
    const bool ok = column_err <= 1e-10 && full_gap <= 1e-8 && swap_gap <= 1e-8 && k[0] > 0.0;
    return {ok, "column " + fmt_double("%.2e", column_err) + ", full 16^3 axis gap " + fmt_double("%.2e", full_gap) +
                    ", axis swap " + fmt_double("%.2e", swap_gap)};
}

Outcome aspect_ordering() {
    CampaignConfig cfg;
    cfg.workers = 0;
    cfg.master_seed = 2024;
    std::vector<PointSummary> by_aspect[2];
    const double aspects[2] = {3.0, 5.0};
    for (int a = 0; a < 2; ++a) {
        cfg.base.cylinder_aspect = aspects[a];
        by_aspect[a] = run_campaign(cfg).points;
    }
    int compared = 0;
    int violations = 0;
    std::string table;
    for (std::size_t p = 0; p < cfg.sweep_values.size(); ++p) {
        const PointSummary& s3 = by_aspect[0][p];
        const PointSummary& s5 = by_aspect[1][p];
        table += " " + fmt_double("%.3g", s3.scalar_mean()) + "/" + fmt_double("%.3g", s5.scalar_mean());
        if (s3.percolation_rate < 0.5 || s5.percolation_rate < 0.5) continue;
        // Cylinder share 0 carries no cylinders, so both aspects give the same samples.
        if (s5.scalar_mean() < s3.scalar_mean()) ++violations;
        ++compared;
    }
    return {compared > 0 && violations <= 1, std::to_string(violations) + " violations over " +
                                                 std::to_string(compared) + " percolating points; mean L a3/a5:" +
                                                 table};
}

Outcome calibration() {
    const FitResult r = fit_constants({{CalibrationKind::SphereSphere, 0.1, 0.2}, {CalibrationKind::SphereSphere, 0.2, 0.3}});
    const FitResult one = fit_constants({{CalibrationKind::SphereSphere, 0.1, 0.05}});
    const FitResult two = fit_constants({{CalibrationKind::SphereSphere, 0.1, 0.2}, {CalibrationKind::SphereSphere, 0.2, 0.4}});
    const double e = std::abs(r.constants.k_ss - 1.6);
    const bool ok = e <= 1e-12 && r.fits.at(CalibrationKind::SphereSphere).sum_squared_residual > 0.0 &&
                    std::abs(one.constants.k_ss - 0.5) <= 1e-12 && std::abs(two.constants.k_ss - 2.0) <= 1e-12 &&
                    two.fits.at(CalibrationKind::SphereSphere).sum_squared_residual <= 1e-30;
    return {ok, "k = " + fmt_double("%.15g", r.constants.k_ss) + " (|k - 1.6| = " + fmt_double("%.1e", e) + ")"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "worked example conductance 0.11 +- 0.005", 1.0, worked_example},
        {2, "system shape identity", 1.0, system_shape},
        {3, "Adj = A C A^T - D", 5.0, matrix_identity},
        {4, "series/parallel oracle", 5.0, series_parallel},
        {5, "full (u,I) direct vs Laplacian CG", 30.0, dense_vs_sparse},
        {6, "non-percolation gives exact zero", 30.0, non_percolation},
        {7, "generation overlap and determinism", 20.0, generation},
        {8, "Rayleigh monotonicity", 10.0, monotonicity},
        {9, "voxel oracles", 30.0, voxel_oracles},
        {10, "aspect 5 >= aspect 3 across the repartition sweep", 600.0, aspect_ordering},
        {11, "calibration least-squares closed form", 1.0, calibration},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.ok && in_time;
        if (!pass) ++failed;
        std::printf("[%s] criterion %2d: %s | %s | %.3f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s, in_time ? "" : " OVER BUDGET");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
