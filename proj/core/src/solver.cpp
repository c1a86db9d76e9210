#include "stochhom/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <fmt/format.h>

#include "stochhom/errors.hpp"

namespace stochhom {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);

LinearSystem assemble_coupled(const CircuitGraph& g) {
    const std::size_t n = g.n_vertices;
    const std::size_t m = g.edges.size();
    LinearSystem sys;
    sys.graph = g;
    sys.n_unknowns = n + m;
    sys.n_ohm_rows = m;
    sys.n_kirchhoff_rows = n - 2;
    sys.n_boundary_rows = 2;
    sys.n_equations = sys.n_ohm_rows + sys.n_kirchhoff_rows + sys.n_boundary_rows;

    std::vector<Triplet> trip;
    trip.reserve(3 * m + 2 * m + 2);
    const auto col_u = [](std::size_t i) { return static_cast<Eigen::Index>(i); };
    const auto col_i = [n](std::size_t k) { return static_cast<Eigen::Index>(n + k); };

    for (std::size_t k = 0; k < m; ++k) {
        const Edge& e = g.edges[k];
        const auto row = static_cast<Eigen::Index>(k);
        trip.emplace_back(row, col_i(k), 1.0);
        trip.emplace_back(row, col_u(e.u), -e.conductance);
        trip.emplace_back(row, col_u(e.v), e.conductance);
    }

    // Internal vertex i gets Kirchhoff row m + (its rank among internal vertices).
    std::vector<std::size_t> kirchhoff_row(n, kAbsent);
    std::size_t next = m;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == g.source || i == g.sink) continue;
        kirchhoff_row[i] = next++;
    }
    for (std::size_t k = 0; k < m; ++k) {
        const Edge& e = g.edges[k];
        if (kirchhoff_row[e.u] != kAbsent) trip.emplace_back(static_cast<Eigen::Index>(kirchhoff_row[e.u]), col_i(k), 1.0);
        if (kirchhoff_row[e.v] != kAbsent) trip.emplace_back(static_cast<Eigen::Index>(kirchhoff_row[e.v]), col_i(k), -1.0);
    }

    const auto src_row = static_cast<Eigen::Index>(next);
    const auto snk_row = static_cast<Eigen::Index>(next + 1);
    trip.emplace_back(src_row, col_u(g.source), 1.0);
    trip.emplace_back(snk_row, col_u(g.sink), 1.0);

    const auto rows = static_cast<Eigen::Index>(sys.n_equations);
    const auto cols = static_cast<Eigen::Index>(sys.n_unknowns);
    sys.matrix.resize(rows, cols);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.rhs = Eigen::VectorXd::Zero(rows);
    sys.rhs[src_row] = 1.0;
    return sys;
}

// Vertices whose component contains a terminal.
std::vector<bool> terminal_connected(const CircuitGraph& g) {
    const auto labels = component_labels(g);
    std::vector<bool> active(g.n_vertices);
    for (std::size_t i = 0; i < g.n_vertices; ++i) {
        active[i] = labels[i] == labels[g.source] || labels[i] == labels[g.sink];
    }
    return active;
}

struct Reduction {
    CircuitGraph graph;
    std::vector<std::size_t> vertex_map;  // full id -> reduced id or kAbsent
    std::vector<std::size_t> edge_map;    // full edge -> reduced edge or kAbsent
};

Reduction drop_floating(const CircuitGraph& g) {
    const auto active = terminal_connected(g);
    Reduction r;
    r.vertex_map.assign(g.n_vertices, kAbsent);
    std::size_t next = 0;
    for (std::size_t i = 0; i < g.n_vertices; ++i) {
        if (active[i]) r.vertex_map[i] = next++;
    }
    r.graph.n_vertices = next;
    r.graph.source = r.vertex_map[g.source];
    r.graph.sink = r.vertex_map[g.sink];
    r.edge_map.assign(g.edges.size(), kAbsent);
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        const Edge& e = g.edges[k];
        if (!active[e.u]) continue;
        r.edge_map[k] = r.graph.edges.size();
        r.graph.edges.push_back({r.vertex_map[e.u], r.vertex_map[e.v], e.conductance});
    }
    return r;
}

void fill_terminal_currents(const CircuitGraph& g, CircuitSolution& sol) {
    sol.total_current = 0.0;
    sol.sink_current = 0.0;
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        const Edge& e = g.edges[k];
        const double i = sol.currents[k];
        if (e.u == g.source) sol.total_current += i;
        if (e.v == g.source) sol.total_current -= i;
        if (e.v == g.sink) sol.sink_current += i;
        if (e.u == g.sink) sol.sink_current -= i;
    }
}

double coupled_residual(const LinearSystem& sys, const CircuitSolution& sol) {
    const std::size_t n = sys.graph.n_vertices;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.n_unknowns));
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.potentials[i]) x[static_cast<Eigen::Index>(i)] = *sol.potentials[i];
    }
    for (std::size_t k = 0; k < sol.currents.size(); ++k) x[static_cast<Eigen::Index>(n + k)] = sol.currents[k];
    const Eigen::VectorXd r = sys.matrix * x - sys.rhs;
    return r.norm() / std::max(sys.rhs.norm(), 1.0);
}

// Source and sink in different components: potentials are constant per side, no current flows.
CircuitSolution split_solution(const CircuitGraph& g, SolveMethod method) {
    const auto labels = component_labels(g);
    CircuitSolution sol;
    sol.method = method;
    sol.potentials.assign(g.n_vertices, std::nullopt);
    for (std::size_t i = 0; i < g.n_vertices; ++i) {
        if (labels[i] == labels[g.source]) sol.potentials[i] = 1.0;
        if (labels[i] == labels[g.sink]) sol.potentials[i] = 0.0;
    }
    sol.currents.assign(g.edges.size(), 0.0);
    sol.total_current = 0.0;
    sol.sink_current = 0.0;
    sol.relative_residual = coupled_residual(assemble_coupled(g), sol);
    return sol;
}

}  // namespace

LinearSystem assemble_system(const CircuitGraph& g) {
    g.validate();
    return assemble_coupled(g);
}

CircuitSolution solve_system(const LinearSystem& system) {
    const CircuitGraph& g = system.graph;
    if (!percolates(g)) return split_solution(g, SolveMethod::FullDirect);
    const Reduction red = drop_floating(g);
    const LinearSystem reduced = assemble_coupled(red.graph);

    SpMat a = reduced.matrix;
    a.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) {
        throw SingularSystem(fmt::format("sparse LU failed on the {}x{} coupled system: {}", a.rows(), a.cols(),
                                         lu.lastErrorMessage()));
    }
    const Eigen::VectorXd x = lu.solve(reduced.rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) {
        throw SingularSystem("sparse LU back-substitution failed");
    }

    CircuitSolution sol;
    sol.method = SolveMethod::FullDirect;
    sol.potentials.assign(g.n_vertices, std::nullopt);
    sol.currents.assign(g.edges.size(), 0.0);
    const std::size_t rn = red.graph.n_vertices;
    for (std::size_t i = 0; i < g.n_vertices; ++i) {
        if (red.vertex_map[i] != kAbsent) sol.potentials[i] = x[static_cast<Eigen::Index>(red.vertex_map[i])];
    }
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        if (red.edge_map[k] != kAbsent) sol.currents[k] = x[static_cast<Eigen::Index>(rn + red.edge_map[k])];
    }
    fill_terminal_currents(g, sol);
    sol.relative_residual = coupled_residual(system, sol);
    return sol;
}

CircuitSolution solve_laplacian(const CircuitGraph& g, const SolverOptions& options, bool iterative) {
    g.validate();
    if (!percolates(g)) return split_solution(g, iterative ? SolveMethod::LaplacianCG : SolveMethod::LaplacianDirect);
    const auto active = terminal_connected(g);

    // Unknowns: terminal-connected internal vertices.
    std::vector<std::size_t> index(g.n_vertices, kAbsent);
    std::size_t nu = 0;
    for (std::size_t i = 0; i < g.n_vertices; ++i) {
        if (active[i] && i != g.source && i != g.sink) index[i] = nu++;
    }
    const auto boundary_value = [&](std::size_t i) { return i == g.source ? 1.0 : 0.0; };

    CircuitSolution sol;
    sol.method = iterative ? SolveMethod::LaplacianCG : SolveMethod::LaplacianDirect;
    sol.potentials.assign(g.n_vertices, std::nullopt);
    sol.potentials[g.source] = 1.0;
    sol.potentials[g.sink] = 0.0;

    if (nu > 0) {
        std::vector<Triplet> trip;
        trip.reserve(4 * g.edges.size());
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nu));
        for (const Edge& e : g.edges) {
            const std::size_t iu = index[e.u];
            const std::size_t iv = index[e.v];
            const double c = e.conductance;
            if (iu != kAbsent) trip.emplace_back(static_cast<Eigen::Index>(iu), static_cast<Eigen::Index>(iu), c);
            if (iv != kAbsent) trip.emplace_back(static_cast<Eigen::Index>(iv), static_cast<Eigen::Index>(iv), c);
            if (iu != kAbsent && iv != kAbsent) {
                trip.emplace_back(static_cast<Eigen::Index>(iu), static_cast<Eigen::Index>(iv), -c);
                trip.emplace_back(static_cast<Eigen::Index>(iv), static_cast<Eigen::Index>(iu), -c);
            } else if (iu != kAbsent && active[e.v]) {
                b[static_cast<Eigen::Index>(iu)] += c * boundary_value(e.v);
            } else if (iv != kAbsent && active[e.u]) {
                b[static_cast<Eigen::Index>(iv)] += c * boundary_value(e.u);
            }
        }
        SpMat lap(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(nu));
        lap.setFromTriplets(trip.begin(), trip.end());
        lap.makeCompressed();

        Eigen::VectorXd u;
        if (iterative) {
            Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
            cg.setTolerance(options.cg_tolerance);
            cg.setMaxIterations(static_cast<Eigen::Index>(
                options.cg_max_iterations > 0 ? options.cg_max_iterations : 10 * nu + 100));
            cg.compute(lap);
            u = cg.solve(b);
            if (cg.info() != Eigen::Success && cg.error() > 1e3 * options.cg_tolerance) {
                throw SingularSystem(fmt::format("CG did not converge: relative residual {:.3e} after {} iterations",
                                                 cg.error(), cg.iterations()));
            }
        } else {
            Eigen::SimplicialLDLT<SpMat> ldlt(lap);
            if (ldlt.info() != Eigen::Success) throw SingularSystem("Cholesky factorization of the Laplacian failed");
            u = ldlt.solve(b);
        }
        if (!u.allFinite()) throw SingularSystem("Laplacian solve produced non-finite potentials");
        for (std::size_t i = 0; i < g.n_vertices; ++i) {
            if (index[i] != kAbsent) sol.potentials[i] = u[static_cast<Eigen::Index>(index[i])];
        }
    }

    sol.currents.assign(g.edges.size(), 0.0);
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        const Edge& e = g.edges[k];
        if (sol.potentials[e.u] && sol.potentials[e.v]) {
            sol.currents[k] = e.conductance * (*sol.potentials[e.u] - *sol.potentials[e.v]);
        }
    }
    fill_terminal_currents(g, sol);
    sol.relative_residual = coupled_residual(assemble_coupled(g), sol);
    return sol;
}

CircuitSolution solve(const CircuitGraph& g, const SolverOptions& options) {
    SolveMethod method = options.method;
    if (method == SolveMethod::Auto) {
        method = g.edges.size() < options.direct_edge_limit ? SolveMethod::FullDirect : SolveMethod::LaplacianCG;
    }
    switch (method) {
        case SolveMethod::FullDirect: return solve_system(assemble_system(g));
        case SolveMethod::LaplacianDirect: return solve_laplacian(g, options, false);
        default: return solve_laplacian(g, options, true);
    }
}

double effective_conductance(const CircuitGraph& g, const SolverOptions& options) {
    if (!(options.full_conductor_reference > 0.0)) {
        throw ConfigError("full_conductor_reference must be positive");
    }
    g.validate();
    if (!percolates(g)) return 0.0;
    return solve(g, options).total_current / options.full_conductor_reference;
}

ConductivityTensor conductivity_tensor(const Sample& sample, const CalibrationConstants& cal,
                                       const TensorOptions& options) {
    ConductivityTensor out;
    for (int a = 0; a < 3; ++a) {
        const CircuitGraph g = build_contact_graph(sample, TerminalSpec::diagonal(a), cal);
        out.percolating[static_cast<std::size_t>(a)] = percolates(g);
        out.L(a, a) = effective_conductance(g, options.solver);
    }
    constexpr std::array<std::pair<int, int>, 3> off{{{0, 1}, {0, 2}, {1, 2}}};
    for (const auto& [i, j] : off) {
        const CircuitGraph g =
            build_contact_graph(sample, TerminalSpec::off_diagonal(i, j, options.central_zone_fraction), cal);
        const double v = effective_conductance(g, options.solver);
        out.L(i, j) = v;
        out.L(j, i) = v;
    }
    return out;
}

}  // namespace stochhom
