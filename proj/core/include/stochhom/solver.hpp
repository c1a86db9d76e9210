#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "stochhom/graph.hpp"
#include "stochhom/sample.hpp"

namespace stochhom {

enum class SolveMethod : std::uint8_t {
    Auto,             ///< FullDirect below direct_edge_limit edges, LaplacianCG above
    FullDirect,       ///< sparse LU on the coupled potential/current system
    LaplacianDirect,  ///< sparse Cholesky on the potential-only reduction
    LaplacianCG,      ///< Jacobi-preconditioned CG on the potential-only reduction
};

struct SolverOptions {
    SolveMethod method = SolveMethod::Auto;
    std::size_t direct_edge_limit = 2000;
    double cg_tolerance = 1e-13;
    /// 0 means 10 * number of unknowns.
    std::size_t cg_max_iterations = 0;
    /// Conductance of a cell made entirely of conductor; results are divided by it.
    double full_conductor_reference = 1.0;
};

/// The coupled Ohm + Kirchhoff system for one graph.
///
/// Unknowns are ordered u_0..u_{n-1} (vertex potentials) then I_0..I_{m-1}
/// (edge currents, positive from edge.u to edge.v). Rows are ordered
///   - m Ohm rows:        I_k - c_k (u_{u(k)} - u_{v(k)}) = 0
///   - n-2 Kirchhoff rows: sum of currents leaving each internal vertex = 0
///   - 2 boundary rows:    u_source = 1, u_sink = 0
struct LinearSystem {
    CircuitGraph graph;
    std::size_t n_unknowns = 0;
    std::size_t n_equations = 0;
    std::size_t n_ohm_rows = 0;
    std::size_t n_kirchhoff_rows = 0;
    std::size_t n_boundary_rows = 0;
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
};

struct CircuitSolution {
    /// Absent for vertices in components that reach neither terminal.
    std::vector<std::optional<double>> potentials;
    /// Per edge, positive in the edge.u -> edge.v direction.
    std::vector<double> currents;
    /// Sum of currents leaving the source.
    double total_current = 0.0;
    /// Sum of currents entering the sink.
    double sink_current = 0.0;
    SolveMethod method = SolveMethod::Auto;
    /// ||M x - b|| / max(||b||, 1) of the coupled system at the solution.
    double relative_residual = 0.0;
};

[[nodiscard]] LinearSystem assemble_system(const CircuitGraph& g);

/// Solve the coupled system. Components disconnected from both terminals are
/// removed before factorization and reported as absent potentials with zero
/// currents. Throws SingularSystem on numerical breakdown.
[[nodiscard]] CircuitSolution solve_system(const LinearSystem& system);

/// Potential-only route: eliminate currents, solve the weighted Laplacian on
/// the internal vertices, then recover currents by Ohm's law.
[[nodiscard]] CircuitSolution solve_laplacian(const CircuitGraph& g, const SolverOptions& options = {},
                                              bool iterative = false);

/// Solve with the method selected by `options`.
[[nodiscard]] CircuitSolution solve(const CircuitGraph& g, const SolverOptions& options = {});

/// Total current under unit potential difference, divided by
/// options.full_conductor_reference; exactly 0 when the terminals are not
/// connected.
[[nodiscard]] double effective_conductance(const CircuitGraph& g, const SolverOptions& options = {});

struct ConductivityTensor {
    Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
    /// Whether the terminals of each diagonal direction are connected.
    std::array<bool, 3> percolating{false, false, false};

    [[nodiscard]] double trace_mean() const { return L.trace() / 3.0; }
};

struct TensorOptions {
    SolverOptions solver;
    double central_zone_fraction = 0.5;
};

/// Diagonal entries from opposite-face pairs; off-diagonal L_ij from the low
/// faces of axes i and j restricted to their central zones, computed once and
/// mirrored.
[[nodiscard]] ConductivityTensor conductivity_tensor(const Sample& sample, const CalibrationConstants& cal,
                                                     const TensorOptions& options = {});

}  // namespace stochhom
