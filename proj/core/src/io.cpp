#include "stochhom/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <system_error>

#include "stochhom/errors.hpp"

namespace stochhom {

namespace {

using Json = nlohmann::ordered_json;

Json vec_to_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 vec_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw FormatError(fmt::format("{} must be an array of 3 numbers", what));
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json header(std::string_view format) {
    Json j;
    j["format"] = std::string(format);
    j["version"] = kDocumentVersion;
    return j;
}

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const char* where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw FormatError(fmt::format("unknown key '{}' in {}", key, where));
        }
    }
}

Json parse_document(std::string_view text, std::string_view format) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::exception& e) {
        throw FormatError(fmt::format("{} document is not valid JSON: {}", format, e.what()));
    }
    if (!j.is_object() || !j.contains("format") || !j["format"].is_string()) {
        throw FormatError(fmt::format("expected a {} document with a \"format\" field", format));
    }
    const auto tag = j["format"].get<std::string>();
    if (tag != format) throw FormatError(fmt::format("expected a {} document, got {}", format, tag));
    if (j.value("version", 0) != kDocumentVersion) {
        throw FormatError(fmt::format("unsupported {} version {}", format, j.value("version", 0)));
    }
    return j;
}

// json's get<>() throws its own exception types; funnel them into FormatError.
template <typename Fn>
auto guarded(std::string_view format, Fn&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        throw FormatError(fmt::format("malformed {} document: {}", format, e.what()));
    }
}

Json spec_to_json(const GenerationSpec& s) {
    Json j;
    j["target_volume_fraction"] = s.target_volume_fraction;
    j["n_spheres"] = s.n_spheres;
    j["n_cylinders"] = s.n_cylinders;
    j["sphere_radius"] = s.sphere_radius;
    j["cylinder_radius"] = s.cylinder_radius;
    j["cylinder_aspect"] = s.cylinder_aspect;
    j["method"] = to_string(s.method);
    j["puff_factor"] = s.puff_factor;
    j["puff_axial"] = s.puff_axial;
    j["seed"] = s.seed;
    j["max_attempts"] = s.max_attempts;
    j["md_tolerance"] = s.md_tolerance;
    return j;
}

GenerationSpec spec_from_json(const Json& j, double edge) {
    check_keys(j,
               {"target_volume_fraction", "n_spheres", "n_cylinders", "sphere_radius", "cylinder_radius",
                "cylinder_aspect", "method", "puff_factor", "puff_axial", "seed", "max_attempts", "md_tolerance"},
               "generation");
    GenerationSpec s;
    s.edge_length = edge;
    s.target_volume_fraction = j.value("target_volume_fraction", s.target_volume_fraction);
    s.n_spheres = j.value("n_spheres", s.n_spheres);
    s.n_cylinders = j.value("n_cylinders", s.n_cylinders);
    s.sphere_radius = j.value("sphere_radius", s.sphere_radius);
    s.cylinder_radius = j.value("cylinder_radius", s.cylinder_radius);
    s.cylinder_aspect = j.value("cylinder_aspect", s.cylinder_aspect);
    if (j.contains("method")) s.method = placement_method_from_string(j["method"].get<std::string>());
    s.puff_factor = j.value("puff_factor", s.puff_factor);
    s.puff_axial = j.value("puff_axial", s.puff_axial);
    s.seed = j.value("seed", s.seed);
    s.max_attempts = j.value("max_attempts", s.max_attempts);
    s.md_tolerance = j.value("md_tolerance", s.md_tolerance);
    return s;
}

}  // namespace

const char* to_string(ContactLaw law) { return law == ContactLaw::Hertz ? "hertz" : "linear"; }

ContactLaw contact_law_from_string(const std::string& name) {
    if (name == "linear") return ContactLaw::Linear;
    if (name == "hertz") return ContactLaw::Hertz;
    throw ConfigError(fmt::format("unknown contact_law '{}' (expected linear or hertz)", name));
}

const char* to_string(PlacementMethod method) { return method == PlacementMethod::MD ? "md" : "rsa"; }

PlacementMethod placement_method_from_string(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "rsa") return PlacementMethod::RSA;
    if (lower == "md") return PlacementMethod::MD;
    throw ConfigError(fmt::format("unknown placement method '{}' (expected rsa or md)", name));
}

std::string sample_to_text(const Sample& sample) {
    Json j = header(kSampleFormat);
    j["edge_length"] = sample.cell.edge_length;
    j["achieved_fraction"] = sample.achieved_fraction;
    j["generation"] = spec_to_json(sample.spec);
    Json incs = Json::array();
    for (const auto& inc : sample.inclusions) {
        Json r;
        if (const auto* s = std::get_if<Sphere>(&inc)) {
            r["kind"] = "sphere";
            r["center"] = vec_to_json(s->center);
            r["radius"] = s->radius;
        } else {
            const auto& c = std::get<Cylinder>(inc);
            r["kind"] = "cylinder";
            r["center"] = vec_to_json(c.center);
            r["radius"] = c.radius;
            r["axis"] = vec_to_json(c.axis);
            r["half_length"] = c.half_length;
        }
        incs.push_back(std::move(r));
    }
    j["inclusions"] = std::move(incs);
    return j.dump(1) + "\n";
}

Sample sample_from_text(std::string_view text) {
    const Json j = parse_document(text, kSampleFormat);
    return guarded(kSampleFormat, [&] {
        check_keys(j, {"format", "version", "edge_length", "achieved_fraction", "generation", "inclusions"},
                   "sample");
        Sample s;
        s.cell.edge_length = j.value("edge_length", 1.0);
        if (!(s.cell.edge_length > 0.0)) throw FormatError("sample edge_length must be positive");
        s.spec = j.contains("generation") ? spec_from_json(j["generation"], s.cell.edge_length) : GenerationSpec{};
        s.spec.edge_length = s.cell.edge_length;
        for (const auto& r : j.at("inclusions")) {
            const auto kind = r.at("kind").get<std::string>();
            if (kind == "sphere") {
                check_keys(r, {"kind", "center", "radius"}, "sphere record");
                Sphere sp;
                sp.center = vec_from_json(r.at("center"), "center");
                sp.radius = r.at("radius").get<double>();
                if (!(sp.radius > 0.0)) throw FormatError("sphere radius must be positive");
                s.inclusions.emplace_back(sp);
            } else if (kind == "cylinder") {
                check_keys(r, {"kind", "center", "radius", "axis", "half_length"}, "cylinder record");
                Cylinder c;
                c.center = vec_from_json(r.at("center"), "center");
                c.radius = r.at("radius").get<double>();
                c.axis = vec_from_json(r.at("axis"), "axis");
                c.half_length = r.at("half_length").get<double>();
                if (!(c.radius > 0.0 && c.half_length > 0.0)) {
                    throw FormatError("cylinder radius and half_length must be positive");
                }
                if (std::abs(c.axis.norm() - 1.0) > 1e-12) throw FormatError("cylinder axis must be a unit vector");
                s.inclusions.emplace_back(c);
            } else {
                throw FormatError(fmt::format("unknown inclusion kind '{}'", kind));
            }
        }
        s.achieved_fraction = j.contains("achieved_fraction") ? j["achieved_fraction"].get<double>()
                                                              : analytic_fraction(s);
        return s;
    });
}

std::string graph_to_text(const CircuitGraph& graph) {
    Json j = header(kGraphFormat);
    j["n_vertices"] = graph.n_vertices;
    j["terminals"] = Json::array({graph.source, graph.sink});
    Json edges = Json::array();
    for (const Edge& e : graph.edges) edges.push_back(Json::array({e.u, e.v, e.conductance}));
    j["edges"] = std::move(edges);
    // One edge per line keeps hand-written graph files readable.
    std::string out = "{\n";
    out += fmt::format(" \"format\": {},\n \"version\": {},\n \"n_vertices\": {},\n \"terminals\": {},\n \"edges\": [",
                       j["format"].dump(), j["version"].dump(), j["n_vertices"].dump(), j["terminals"].dump());
    for (std::size_t k = 0; k < j["edges"].size(); ++k) {
        out += (k == 0 ? "\n  " : ",\n  ") + j["edges"][k].dump();
    }
    out += graph.edges.empty() ? "]\n}\n" : "\n ]\n}\n";
    return out;
}

CircuitGraph graph_from_text(std::string_view text) {
    const Json j = parse_document(text, kGraphFormat);
    return guarded(kGraphFormat, [&] {
        check_keys(j, {"format", "version", "n_vertices", "terminals", "edges"}, "graph");
        CircuitGraph g;
        g.n_vertices = j.at("n_vertices").get<std::size_t>();
        const auto& t = j.at("terminals");
        if (!t.is_array() || t.size() != 2) throw FormatError("terminals must be a pair of vertex ids");
        g.source = t[0].get<std::size_t>();
        g.sink = t[1].get<std::size_t>();
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 3) throw FormatError("each edge must be [i, j, conductance]");
            g.edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
        }
        g.validate();
        return g;
    });
}

std::string constants_to_text(const CalibrationConstants& cal) {
    Json j = header(kConstantsFormat);
    j["contact_law"] = to_string(cal.law);
    j["k_ss"] = cal.k_ss;
    j["k_sc"] = cal.k_sc;
    j["k_cc"] = cal.k_cc;
    j["k_boundary_s"] = cal.k_boundary_s;
    j["k_boundary_c"] = cal.k_boundary_c;
    j["k_face"] = cal.k_face;
    j["k_edge"] = cal.k_edge;
    j["k_vertex"] = cal.k_vertex;
    return j.dump(1) + "\n";
}

CalibrationConstants constants_from_text(std::string_view text) {
    const Json j = parse_document(text, kConstantsFormat);
    return guarded(kConstantsFormat, [&] {
        check_keys(j,
                   {"format", "version", "contact_law", "k_ss", "k_sc", "k_cc", "k_boundary_s", "k_boundary_c",
                    "k_face", "k_edge", "k_vertex"},
                   "constants");
        CalibrationConstants c;
        if (j.contains("contact_law")) c.law = contact_law_from_string(j["contact_law"].get<std::string>());
        c.k_ss = j.value("k_ss", c.k_ss);
        c.k_sc = j.value("k_sc", c.k_sc);
        c.k_cc = j.value("k_cc", c.k_cc);
        c.k_boundary_s = j.value("k_boundary_s", c.k_boundary_s);
        c.k_boundary_c = j.value("k_boundary_c", c.k_boundary_c);
        c.k_face = j.value("k_face", c.k_face);
        c.k_edge = j.value("k_edge", c.k_edge);
        c.k_vertex = j.value("k_vertex", c.k_vertex);
        c.validate();
        return c;
    });
}

std::string references_to_text(const std::vector<ReferencePoint>& points) {
    Json j = header(kReferencesFormat);
    Json arr = Json::array();
    for (const auto& p : points) {
        Json r;
        r["kind"] = to_string(p.kind);
        r["overlap_depth"] = p.overlap_depth;
        r["measured_conductance"] = p.measured_conductance;
        arr.push_back(std::move(r));
    }
    j["points"] = std::move(arr);
    return j.dump(1) + "\n";
}

std::vector<ReferencePoint> references_from_text(std::string_view text) {
    const Json j = parse_document(text, kReferencesFormat);
    return guarded(kReferencesFormat, [&] {
        check_keys(j, {"format", "version", "points"}, "references");
        std::vector<ReferencePoint> out;
        for (const auto& r : j.at("points")) {
            check_keys(r, {"kind", "overlap_depth", "measured_conductance"}, "reference point");
            const auto name = r.at("kind").get<std::string>();
            const auto kind = calibration_kind_from_string(name);
            if (!kind) throw FormatError(fmt::format("unknown reference kind '{}'", name));
            out.push_back({*kind, r.at("overlap_depth").get<double>(), r.at("measured_conductance").get<double>()});
        }
        return out;
    });
}

std::string solution_to_text(const CircuitGraph& graph, const CircuitSolution& solution) {
    Json j = header(kSolutionFormat);
    j["terminals"] = Json::array({graph.source, graph.sink});
    j["total_current"] = solution.total_current;
    j["sink_current"] = solution.sink_current;
    j["relative_residual"] = solution.relative_residual;
    Json pot = Json::array();
    for (const auto& u : solution.potentials) pot.push_back(u ? Json(*u) : Json(nullptr));
    j["potentials"] = std::move(pot);
    Json cur = Json::array();
    for (std::size_t k = 0; k < graph.edges.size(); ++k) {
        const Edge& e = graph.edges[k];
        cur.push_back(Json::array({e.u, e.v, solution.currents[k]}));
    }
    j["currents"] = std::move(cur);
    return j.dump(1) + "\n";
}

std::string tensor_to_text(const ConductivityTensor& tensor) {
    Json j;
    j["format"] = "stochhom-tensor";
    j["version"] = kDocumentVersion;
    Json rows = Json::array();
    for (int i = 0; i < 3; ++i) rows.push_back(Json::array({tensor.L(i, 0), tensor.L(i, 1), tensor.L(i, 2)}));
    j["L"] = std::move(rows);
    j["percolating"] = Json::array({tensor.percolating[0], tensor.percolating[1], tensor.percolating[2]});
    return j.dump(1) + "\n";
}

std::string detect_format(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos || text[first] != '{') return {};
    try {
        const Json j = Json::parse(text.begin(), text.end());
        if (j.is_object() && j.contains("format") && j["format"].is_string()) return j["format"].get<std::string>();
    } catch (const Json::exception&) {
    }
    return {};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(fmt::format("error reading {}", path.string()));
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::random_device rd;
    std::filesystem::path tmp = path;
    tmp += fmt::format(".tmp{:08x}", rd());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot create {}", tmp.string()));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError(fmt::format("error writing {}", path.string()));
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(fmt::format("cannot move output into place at {}", path.string()));
    }
}

}  // namespace stochhom
