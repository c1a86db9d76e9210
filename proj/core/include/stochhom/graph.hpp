#pragma once

#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "stochhom/geometry.hpp"
#include "stochhom/sample.hpp"

namespace stochhom {

enum class ContactLaw : std::uint8_t {
    Linear,  ///< c = k * depth
    Hertz,   ///< c = k * depth^(3/2)
};

[[nodiscard]] double law_exponent(ContactLaw law);

/// Conductance per unit overlap measure for each contact kind.
struct CalibrationConstants {
    double k_ss = 1.0;
    double k_sc = 1.0;
    double k_cc = 1.0;
    double k_boundary_s = 1.0;
    double k_boundary_c = 1.0;
    double k_face = 1.0;
    double k_edge = 0.35;
    double k_vertex = 0.15;
    ContactLaw law = ContactLaw::Linear;

    /// Throws ConfigError unless every constant is finite and positive.
    void validate() const;
    /// Every constant multiplied by lambda.
    [[nodiscard]] CalibrationConstants scaled(double lambda) const;
};

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double conductance = 0.0;
};

/// Weighted circuit on n_vertices vertices, two of which are the terminals
/// (source is held at potential 1, sink at 0).
struct CircuitGraph {
    std::size_t n_vertices = 2;
    std::size_t source = 0;
    std::size_t sink = 1;
    std::vector<Edge> edges;

    [[nodiscard]] std::size_t n_edges() const { return edges.size(); }
    [[nodiscard]] std::size_t n_internal() const { return n_vertices - 2; }

    /// Throws FormatError on a self-loop, an out-of-range endpoint, a direct
    /// source-sink edge, a non-positive conductance or coincident terminals.
    void validate() const;
};

/// Sum conductances of parallel edges and order edges by (min id, max id).
[[nodiscard]] CircuitGraph merge_parallel_edges(const CircuitGraph& g);

/// Which pair of cube faces act as the two terminals.
struct TerminalSpec {
    Face first = Face::XLow;
    Face second = Face::XHigh;
    /// For neighbouring faces, boundary contacts only count when their contact
    /// point falls in the centred square covering this fraction of the face.
    double central_zone_fraction = 0.5;

    [[nodiscard]] bool opposite() const { return face_axis(first) == face_axis(second); }
    [[nodiscard]] static TerminalSpec diagonal(int axis) { return {make_face(axis, false), make_face(axis, true)}; }
    [[nodiscard]] static TerminalSpec off_diagonal(int axis_i, int axis_j, double zone = 0.5) {
        return {make_face(axis_i, false), make_face(axis_j, false), zone};
    }
};

[[nodiscard]] double conductance_from_contact(const Contact& contact, const CalibrationConstants& cal);

/// All contacts relevant to a terminal pair: every overlapping periodic image of
/// every inclusion pair (wrap disabled along the terminal axes) followed by the
/// boundary contacts against the two terminal faces.
[[nodiscard]] std::vector<Contact> collect_contacts(const Sample& sample, const TerminalSpec& terminals);

/// Inclusions become vertices 0..n-1, the first terminal face is vertex n and
/// the second n+1. With merge=false parallel contacts stay as separate edges.
[[nodiscard]] CircuitGraph build_contact_graph(const Sample& sample, const TerminalSpec& terminals,
                                               const CalibrationConstants& cal, bool merge = true);

struct GraphMatrices {
    Eigen::SparseMatrix<double> adjacency;  ///< (n)x(n), symmetric, zero diagonal
    Eigen::SparseMatrix<double> incidence;  ///< (n)x(m), two unit entries per column
    Eigen::SparseMatrix<double> conductance;  ///< (m)x(m) diagonal
    Eigen::SparseMatrix<double> degree;       ///< (n)x(n) diagonal, D = diag(A c)
};

/// Adjacency is built directly from the edge list, not from the identity
/// Adj = A C A^T - D, so the identity can be checked.
[[nodiscard]] GraphMatrices graph_matrices(const CircuitGraph& g);

/// Connected-component label per vertex (labels are the smallest vertex id of
/// the component).
[[nodiscard]] std::vector<std::size_t> component_labels(const CircuitGraph& g);

[[nodiscard]] bool percolates(const CircuitGraph& g);

}  // namespace stochhom
