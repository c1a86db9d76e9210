#include "stochhom/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numeric>
#include <stdexcept>

#include "stochhom/cell_list.hpp"
#include "stochhom/errors.hpp"

namespace stochhom {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // The smaller root wins so labels are the minimum id of each component.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

bool in_central_zone(const Contact& c, const UnitCell& cell, double fraction) {
    const int k = face_axis(static_cast<Face>(c.second));
    const double L = cell.edge_length;
    const double half_side = 0.5 * L * std::sqrt(fraction);
    const Vec3 p = wrap_position(c.point, cell);
    for (int a = 0; a < 3; ++a) {
        if (a == k) continue;
        if (std::abs(p[a] - 0.5 * L) > half_side) return false;
    }
    return true;
}

void sort_edges(std::vector<Edge>& edges) {
    for (auto& e : edges) {
        if (e.v < e.u) std::swap(e.u, e.v);
    }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
}

}  // namespace

double law_exponent(ContactLaw law) { return law == ContactLaw::Hertz ? 1.5 : 1.0; }

void CalibrationConstants::validate() const {
    const std::pair<const char*, double> all[] = {
        {"k_ss", k_ss},     {"k_sc", k_sc},         {"k_cc", k_cc},     {"k_boundary_s", k_boundary_s},
        {"k_boundary_c", k_boundary_c}, {"k_face", k_face}, {"k_edge", k_edge}, {"k_vertex", k_vertex},
    };
    for (const auto& [name, value] : all) {
        if (!(std::isfinite(value) && value > 0.0)) {
            throw ConfigError(fmt::format("calibration constant {} must be positive, got {}", name, value));
        }
    }
}

CalibrationConstants CalibrationConstants::scaled(double lambda) const {
    CalibrationConstants out = *this;
    for (double* k : {&out.k_ss, &out.k_sc, &out.k_cc, &out.k_boundary_s, &out.k_boundary_c, &out.k_face,
                      &out.k_edge, &out.k_vertex}) {
        *k *= lambda;
    }
    return out;
}

void CircuitGraph::validate() const {
    if (source >= n_vertices || sink >= n_vertices) throw FormatError("terminal id out of range");
    if (source == sink) throw FormatError("source and sink terminals coincide");
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const Edge& e = edges[k];
        if (e.u >= n_vertices || e.v >= n_vertices) {
            throw FormatError(fmt::format("edge {} references a vertex outside [0, {})", k, n_vertices));
        }
        if (e.u == e.v) throw FormatError(fmt::format("edge {} is a self-loop on vertex {}", k, e.u));
        if ((e.u == source && e.v == sink) || (e.u == sink && e.v == source)) {
            throw FormatError(fmt::format("edge {} joins the two terminals directly", k));
        }
        if (!(std::isfinite(e.conductance) && e.conductance > 0.0)) {
            throw FormatError(fmt::format("edge {} has non-positive conductance {}", k, e.conductance));
        }
    }
}

CircuitGraph merge_parallel_edges(const CircuitGraph& g) {
    std::map<std::pair<std::size_t, std::size_t>, double> merged;
    for (const Edge& e : g.edges) merged[std::minmax(e.u, e.v)] += e.conductance;
    CircuitGraph out = g;
    out.edges.clear();
    out.edges.reserve(merged.size());
    for (const auto& [key, c] : merged) out.edges.push_back({key.first, key.second, c});
    return out;
}

double conductance_from_contact(const Contact& contact, const CalibrationConstants& cal) {
    if (!(contact.overlap_depth > 0.0)) {
        throw std::invalid_argument("conductance_from_contact requires a positive overlap depth");
    }
    double k = 0.0;
    switch (contact.kind) {
        case ContactKind::SphereSphere: k = cal.k_ss; break;
        case ContactKind::SphereCylinder: k = cal.k_sc; break;
        case ContactKind::CylinderCylinder: k = cal.k_cc; break;
        case ContactKind::InclusionBoundary: k = contact.boundary_sphere ? cal.k_boundary_s : cal.k_boundary_c; break;
    }
    if (cal.law == ContactLaw::Linear) return k * contact.overlap_depth;
    return k * std::pow(contact.overlap_depth, law_exponent(cal.law));
}

std::vector<Contact> collect_contacts(const Sample& sample, const TerminalSpec& terminals) {
    WrapMask wrap = kWrapAll;
    wrap[face_axis(terminals.first)] = false;
    wrap[face_axis(terminals.second)] = false;

    const auto& incs = sample.inclusions;
    std::vector<Contact> out;
    if (!incs.empty()) {
        const CellList list = make_cell_list(incs, sample.cell);
        for (std::size_t i = 0; i < incs.size(); ++i) {
            for (std::size_t j : list.candidates(incs[i])) {
                if (j <= i) continue;
                for (const PairOverlap& ov : overlapping_images(incs[i], incs[j], sample.cell, wrap)) {
                    Contact c;
                    c.kind = pair_kind(incs[i], incs[j]);
                    c.overlap_depth = ov.depth;
                    c.first = i;
                    c.second = j;
                    c.point = wrap_position(center_of(incs[i]) + ov.point, sample.cell);
                    out.push_back(c);
                }
            }
        }
    }
    for (const Face face : {terminals.first, terminals.second}) {
        for (std::size_t i = 0; i < incs.size(); ++i) {
            auto c = boundary_contact(incs[i], face, sample.cell, i);
            if (!c) continue;
            if (!terminals.opposite() && !in_central_zone(*c, sample.cell, terminals.central_zone_fraction)) continue;
            out.push_back(*c);
        }
    }
    return out;
}

CircuitGraph build_contact_graph(const Sample& sample, const TerminalSpec& terminals,
                                 const CalibrationConstants& cal, bool merge) {
    if (terminals.first == terminals.second) throw ConfigError("terminal faces must differ");
    const std::size_t n = sample.inclusions.size();
    CircuitGraph g;
    g.n_vertices = n + 2;
    g.source = n;
    g.sink = n + 1;
    for (const Contact& c : collect_contacts(sample, terminals)) {
        Edge e;
        e.conductance = conductance_from_contact(c, cal);
        if (c.kind == ContactKind::InclusionBoundary) {
            e.u = c.first;
            e.v = static_cast<Face>(c.second) == terminals.first ? g.source : g.sink;
        } else {
            e.u = c.first;
            e.v = c.second;
        }
        g.edges.push_back(e);
    }
    if (merge) return merge_parallel_edges(g);
    sort_edges(g.edges);
    return g;
}

GraphMatrices graph_matrices(const CircuitGraph& g) {
    using Triplet = Eigen::Triplet<double>;
    const auto n = static_cast<Eigen::Index>(g.n_vertices);
    const auto m = static_cast<Eigen::Index>(g.edges.size());

    std::vector<Triplet> adj;
    std::vector<Triplet> inc;
    std::vector<Triplet> cond;
    adj.reserve(2 * g.edges.size());
    inc.reserve(2 * g.edges.size());
    cond.reserve(g.edges.size());
    for (Eigen::Index k = 0; k < m; ++k) {
        const Edge& e = g.edges[static_cast<std::size_t>(k)];
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        adj.emplace_back(u, v, e.conductance);
        adj.emplace_back(v, u, e.conductance);
        inc.emplace_back(u, k, 1.0);
        inc.emplace_back(v, k, 1.0);
        cond.emplace_back(k, k, e.conductance);
    }

    GraphMatrices out;
    out.adjacency.resize(n, n);
    out.adjacency.setFromTriplets(adj.begin(), adj.end());
    out.incidence.resize(n, m);
    out.incidence.setFromTriplets(inc.begin(), inc.end());
    out.conductance.resize(m, m);
    out.conductance.setFromTriplets(cond.begin(), cond.end());

    Eigen::VectorXd c(m);
    for (Eigen::Index k = 0; k < m; ++k) c[k] = g.edges[static_cast<std::size_t>(k)].conductance;
    const Eigen::VectorXd deg = out.incidence * c;
    std::vector<Triplet> dtrip;
    dtrip.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (deg[i] != 0.0) dtrip.emplace_back(i, i, deg[i]);
    }
    out.degree.resize(n, n);
    out.degree.setFromTriplets(dtrip.begin(), dtrip.end());
    return out;
}

std::vector<std::size_t> component_labels(const CircuitGraph& g) {
    DisjointSets sets(g.n_vertices);
    for (const Edge& e : g.edges) sets.unite(e.u, e.v);
    std::vector<std::size_t> labels(g.n_vertices);
    for (std::size_t i = 0; i < g.n_vertices; ++i) labels[i] = sets.find(i);
    return labels;
}

bool percolates(const CircuitGraph& g) {
    const auto labels = component_labels(g);
    return labels[g.source] == labels[g.sink];
}

}  // namespace stochhom
