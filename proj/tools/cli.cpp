#include "cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>

#include "stochhom/errors.hpp"
#include "stochhom/generator.hpp"
#include "stochhom/io.hpp"

namespace stochhom::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::pair<Command, const char*>, 7> kCommands{{
    {Command::Generate, "generate"},
    {Command::Homogenize, "homogenize"},
    {Command::Tensor, "tensor"},
    {Command::Campaign, "campaign"},
    {Command::Voxel, "voxel"},
    {Command::Calibrate, "calibrate"},
    {Command::RveScan, "rve-scan"},
}};

constexpr std::array<std::pair<SolveMethod, const char*>, 4> kSolveMethods{{
    {SolveMethod::Auto, "auto"},
    {SolveMethod::FullDirect, "full-direct"},
    {SolveMethod::LaplacianDirect, "laplacian-direct"},
    {SolveMethod::LaplacianCG, "laplacian-cg"},
}};

constexpr std::array<std::pair<VoxelConnectivity, const char*>, 3> kConnectivity{{
    {VoxelConnectivity::Face, "face"},
    {VoxelConnectivity::FaceEdge, "face-edge"},
    {VoxelConnectivity::Full, "full"},
}};

constexpr std::array<const char*, 3> kAxes{"x", "y", "z"};

template <class E, std::size_t N>
const char* name_of(const std::array<std::pair<E, const char*>, N>& table, E value) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "?";
}

template <class E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, const char*>, N>& table, const std::string& name) {
    for (const auto& [v, n] : table) {
        if (name == n) return v;
    }
    return std::nullopt;
}

template <class E, std::size_t N>
std::string choices(const std::array<std::pair<E, const char*>, N>& table) {
    std::string s;
    for (const auto& entry : table) s += (s.empty() ? "" : ", ") + std::string(entry.second);
    return s;
}

// Reads the keys of one config section and remembers which were seen.
class Section {
public:
    Section(const Json& doc, std::string name) : name_(std::move(name)) {
        if (!doc.contains(name_)) return;
        node_ = &doc.at(name_);
        if (!node_->is_object()) throw UsageError(fmt::format("config section '{}' must be an object", name_));
    }

    template <class T>
    void read(const char* key, T& out) {
        const Json* v = find(key);
        if (v == nullptr) return;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v->is_boolean()) bad(key, "a boolean");
            out = v->get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v->is_string()) bad(key, "a string");
            out = v->get<std::string>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v->is_number()) bad(key, "a number");
            out = v->get<T>();
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v->is_number_unsigned()) bad(key, "a non-negative integer");
            out = v->get<T>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer()) bad(key, "an integer");
            out = v->get<T>();
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v->is_array()) bad(key, "an array of numbers");
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_number()) bad(key, "an array of numbers");
                out.push_back(x.get<double>());
            }
        } else {
            static_assert(sizeof(T) == 0, "unsupported config value type");
        }
    }

    template <class E, std::size_t N>
    void read_enum(const char* key, const std::array<std::pair<E, const char*>, N>& table, E& out) {
        std::string s;
        if (find(key) == nullptr) return;
        read(key, s);
        const auto v = value_of(table, s);
        if (!v) throw UsageError(fmt::format("{}.{}: '{}' is not one of {}", name_, key, s, choices(table)));
        out = *v;
    }

    [[nodiscard]] const Json* find(const char* key) {
        seen_.emplace_back(key);
        if (node_ == nullptr || !node_->contains(key)) return nullptr;
        return &node_->at(key);
    }

    [[noreturn]] void bad(const char* key, const char* what) const {
        throw UsageError(fmt::format("{}.{} must be {}", name_, key, what));
    }

    // Call after all reads.
    void finish() const {
        if (node_ == nullptr) return;
        for (const auto& [key, value] : node_->items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw UsageError(fmt::format("unknown config key '{}.{}'", name_, key));
            }
        }
    }

private:
    std::string name_;
    const Json* node_ = nullptr;
    std::vector<std::string> seen_;
};

// Command-line flags and the config key each one sets.
struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr std::array<FlagSpec, 40> kFlags{{
    {"--sample", "io.sample", "sample document"},
    {"--constants", "io.constants", "calibration constants document (replaces the calibration section)"},
    {"--graph", "io.graph", "circuit graph document"},
    {"--references", "io.references", "calibration reference points document"},
    {"--input,-i", "io.input", "raw voxel volume, PGM slice or directory of PGM slices"},
    {"--output,-o", "io.output", "result path (default: standard output)"},
    {"--samples-output", "io.samples_output", "campaign per-sample CSV"},
    {"--method", "generation.method", "placement method: RSA or MD"},
    {"--fraction", "generation.target_volume_fraction", "pre-puff solid fraction"},
    {"--spheres", "generation.n_spheres", "number of spheres"},
    {"--cylinders", "generation.n_cylinders", "number of cylinders"},
    {"--sphere-radius", "generation.sphere_radius", "sphere radius (0: derive)"},
    {"--cylinder-radius", "generation.cylinder_radius", "cylinder radius (0: derive)"},
    {"--aspect", "generation.cylinder_aspect", "cylinder length / radius"},
    {"--cylinder-share", "generation.cylinder_share", "share of inclusion volume in cylinders"},
    {"--puff", "generation.puff_factor", "puff-up factor"},
    {"--puff-axial", "generation.puff_axial", "scale cylinder length when puffing (true/false)"},
    {"--seed", "generation.seed", "generation seed"},
    {"--max-attempts", "generation.max_attempts", "RSA attempts per inclusion or MD iteration cap"},
    {"--md-tolerance", "generation.md_tolerance", "MD overlap tolerance"},
    {"--probes", "generation.fraction_probes", "Monte Carlo probes for the post-puff fraction"},
    {"--law", "calibration.contact_law", "contact law: linear or hertz"},
    {"--solver", "solver.method", "auto, full-direct, laplacian-direct or laplacian-cg"},
    {"--cg-tolerance", "solver.cg_tolerance", "CG relative tolerance"},
    {"--reference", "solver.full_conductor_reference", "conductance of a full cell"},
    {"--central-zone", "tensor.central_zone_fraction", "face area fraction for off-diagonal terminals"},
    {"--axis", "tensor.axis", "homogenize terminal axis: x, y or z"},
    {"--sweep", "campaign.sweep_values", "comma-separated cylinder shares"},
    {"--samples-per-point", "campaign.n_samples_per_point", "samples per sweep point"},
    {"--master-seed", "campaign.master_seed", "campaign master seed"},
    {"--workers", "campaign.workers", "worker threads (0: all cores)"},
    {"--progress", "campaign.progress", "log campaign progress (true/false)"},
    {"--dims", "voxel.dims", "raw volume size nx,ny,nz"},
    {"--threshold", "voxel.threshold", "occupied iff value >= threshold"},
    {"--spacing", "voxel.spacing", "voxel edge length"},
    {"--resolution", "voxel.resolution", "voxels per axis when voxelizing a sample"},
    {"--connectivity", "voxel.connectivity", "face, face-edge or full"},
    {"--periodic-transverse", "voxel.periodic_transverse", "wrap transverse directions (true/false)"},
    {"--multipliers", "rve.multipliers", "comma-separated inclusion count multipliers"},
    {"--required", "calibrate.required", "comma-separated kinds that must have points"},
}};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    std::size_t used = 0;
    try {
        if constexpr (std::is_floating_point_v<T>) {
            value = std::stod(text, &used);
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
            value = std::stoull(text, &used);
        } else {
            value = std::stoll(text, &used);
        }
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw UsageError(fmt::format("{}: cannot parse '{}'", key, text));
    return value;
}

// A flag value typed after the default config entry it replaces.
Json typed_value(const std::string& key, const std::string& text, const Json& like) {
    if (like.is_boolean()) {
        if (text == "true" || text == "1" || text == "yes") return true;
        if (text == "false" || text == "0" || text == "no") return false;
        throw UsageError(fmt::format("{}: '{}' is not a boolean", key, text));
    }
    if (like.is_number_unsigned()) return parse_number<std::uint64_t>(key, text);
    if (like.is_number_integer()) return parse_number<std::int64_t>(key, text);
    if (like.is_number_float()) return parse_number<double>(key, text);
    if (like.is_array()) {
        Json arr = Json::array();
        const bool strings = like.empty() || like.front().is_string();
        for (const auto& item : split_list(text)) {
            arr.push_back(strings ? Json(item) : typed_value(key, item, like.front()));
        }
        return arr;
    }
    return text;
}

void set_path(Json& doc, const std::string& key, const std::string& text, const Json& defaults) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw UsageError(fmt::format("--set expects section.key=value, got '{}'", key));
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);
    if (!defaults.contains(section) || !defaults[section].is_object() || !defaults[section].contains(name)) {
        throw UsageError(fmt::format("unknown config key '{}'", key));
    }
    doc[section][name] = typed_value(key, text, defaults[section][name]);
}

const char* axis_name(int axis) { return kAxes[static_cast<std::size_t>(std::clamp(axis, 0, 2))]; }

std::string usage_text() {
    std::string s =
        "usage: stochhom <command> [--config FILE] [flags]\n"
        "\n"
        "commands:\n"
        "  generate    place inclusions and write a sample document\n"
        "  homogenize  solve one circuit (--graph, or --sample with --axis)\n"
        "  tensor      conductivity tensor of a sample\n"
        "  campaign    repartition sweep, CSV of mean tensors per point\n"
        "  voxel       effective conductivity of a segmented volume or voxelized sample\n"
        "  calibrate   fit contact constants to reference points\n"
        "  rve-scan    size convergence of the scalar conductivity\n"
        "\n"
        "Run 'stochhom --help' for every flag.\n";
    return s;
}

GraySlice read_slice_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path));
    return read_pgm(in);
}

VoxelGrid load_voxel_input(const RunConfig& c) {
    const auto threshold = static_cast<std::uint8_t>(c.voxel.threshold);
    if (c.io.input.empty()) {
        const Sample s = sample_from_text(read_file(c.io.sample));
        return voxelize_sample(s, c.voxel.resolution);
    }
    const std::filesystem::path p(c.io.input);
    if (std::filesystem::is_directory(p)) return load_slice_directory(p, threshold, c.voxel.spacing);
    const std::string bytes = read_file(p);
    const std::string kind = detect_format(bytes);
    if (!kind.empty()) {
        throw UsageError(fmt::format("voxel expects a raw volume or PGM slices, but '{}' is a {} document",
                                     c.io.input, kind));
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) {
        return load_slice_stack({read_slice_file(c.io.input)}, threshold, c.voxel.spacing);
    }
    if (c.voxel.dims.count() == 0) throw UsageError("voxel.dims is required for a raw volume");
    const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
    return load_voxel_grid(std::span<const std::uint8_t>(data, bytes.size()), c.voxel.dims, threshold,
                           c.voxel.spacing);
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty()) {
        out << content;
        if (!content.empty() && content.back() != '\n') out << '\n';
    } else {
        write_file_atomic(path, content);
        spdlog::info("wrote {}", path);
    }
}

CalibrationConstants effective_constants(const RunConfig& c) {
    if (c.io.constants.empty()) return c.calibration;
    return constants_from_text(read_file(c.io.constants));
}

void require_path(const std::string& value, const char* key, Command command) {
    if (value.empty()) throw UsageError(fmt::format("{} requires io.{}", to_string(command), key));
}

}  // namespace

const char* to_string(Command command) { return name_of(kCommands, command); }

std::optional<Command> command_from_string(const std::string& name) { return value_of(kCommands, name); }

GenerationSpec RunConfig::resolved_generation() const {
    GenerationSpec spec = generation;
    if (spec.sphere_radius != 0.0 || spec.cylinder_radius != 0.0) return spec;
    // A family with no members carries no volume whatever the configured share.
    double share = cylinder_share;
    if (spec.n_cylinders == 0) share = 0.0;
    if (spec.n_spheres == 0) share = 1.0;
    return resolve_radii(spec, share);
}

CampaignConfig RunConfig::campaign() const {
    CampaignConfig c;
    c.base = generation;
    c.sweep_values = sweep_values;
    c.n_samples_per_point = n_samples_per_point;
    c.calibration = calibration;
    c.tensor = tensor;
    c.master_seed = master_seed;
    c.fraction_probes = fraction_probes;
    c.workers = workers;
    c.progress = progress;
    return c;
}

void RunConfig::validate() const {
    const auto guard = [](const char* key, auto&& check) {
        try {
            check();
        } catch (const ConfigError& e) {
            throw UsageError(fmt::format("{}: {}", key, e.what()));
        }
    };
    guard("calibration", [&] { calibration.validate(); });
    if (!(tensor.solver.cg_tolerance > 0.0)) throw UsageError("solver.cg_tolerance must be positive");
    if (!(tensor.solver.full_conductor_reference > 0.0)) {
        throw UsageError("solver.full_conductor_reference must be positive");
    }
    if (!(tensor.central_zone_fraction > 0.0 && tensor.central_zone_fraction <= 1.0)) {
        throw UsageError("tensor.central_zone_fraction must be in (0, 1]");
    }

    switch (command) {
        case Command::Generate:
            guard("generation", [&] { stochhom::validate(resolved_generation()); });
            break;
        case Command::Homogenize:
            if (io.graph.empty() && io.sample.empty()) throw UsageError("homogenize requires io.graph or io.sample");
            if (!io.graph.empty() && !io.sample.empty()) {
                throw UsageError("homogenize takes io.graph or io.sample, not both");
            }
            break;
        case Command::Tensor: require_path(io.sample, "sample", command); break;
        case Command::Campaign:
        case Command::RveScan:
            guard("campaign", [&] { campaign().validate(); });
            if (command == Command::RveScan) {
                if (rve_multipliers.empty()) throw UsageError("rve.multipliers must not be empty");
                for (double m : rve_multipliers) {
                    if (!(m >= 1.0)) throw UsageError(fmt::format("rve.multipliers: {} is below 1", m));
                }
            }
            break;
        case Command::Voxel:
            if (io.input.empty() == io.sample.empty()) throw UsageError("voxel requires exactly one of io.input, io.sample");
            if (voxel.threshold < 0 || voxel.threshold > 255) throw UsageError("voxel.threshold must be in [0, 255]");
            if (!(voxel.spacing > 0.0)) throw UsageError("voxel.spacing must be positive");
            if (voxel.resolution < 8) throw UsageError("voxel.resolution must be at least 8");
            break;
        case Command::Calibrate: require_path(io.references, "references", command); break;
    }
}

Json config_to_json(const RunConfig& c) {
    Json j;
    j["config_version"] = kConfigVersion;
    j["io"] = {{"sample", c.io.sample},         {"constants", c.io.constants}, {"graph", c.io.graph},
               {"references", c.io.references}, {"input", c.io.input},         {"output", c.io.output},
               {"samples_output", c.io.samples_output}};
    const GenerationSpec& g = c.generation;
    j["generation"] = {{"method", to_string(g.method)},
                       {"target_volume_fraction", g.target_volume_fraction},
                       {"n_spheres", g.n_spheres},
                       {"n_cylinders", g.n_cylinders},
                       {"sphere_radius", g.sphere_radius},
                       {"cylinder_radius", g.cylinder_radius},
                       {"cylinder_aspect", g.cylinder_aspect},
                       {"cylinder_share", c.cylinder_share},
                       {"puff_factor", g.puff_factor},
                       {"puff_axial", g.puff_axial},
                       {"seed", g.seed},
                       {"max_attempts", g.max_attempts},
                       {"md_tolerance", g.md_tolerance},
                       {"edge_length", g.edge_length},
                       {"fraction_probes", c.fraction_probes}};
    Json cal = Json::parse(constants_to_text(c.calibration));
    cal.erase("format");
    cal.erase("version");
    j["calibration"] = cal;
    const SolverOptions& s = c.tensor.solver;
    j["solver"] = {{"method", name_of(kSolveMethods, s.method)},
                   {"direct_edge_limit", s.direct_edge_limit},
                   {"cg_tolerance", s.cg_tolerance},
                   {"cg_max_iterations", s.cg_max_iterations},
                   {"full_conductor_reference", s.full_conductor_reference}};
    j["tensor"] = {{"central_zone_fraction", c.tensor.central_zone_fraction}, {"axis", axis_name(c.axis)}};
    j["campaign"] = {{"sweep_values", c.sweep_values},
                     {"n_samples_per_point", c.n_samples_per_point},
                     {"master_seed", c.master_seed},
                     {"workers", c.workers},
                     {"progress", c.progress}};
    j["voxel"] = {{"dims", {c.voxel.dims.nx, c.voxel.dims.ny, c.voxel.dims.nz}},
                  {"threshold", c.voxel.threshold},
                  {"spacing", c.voxel.spacing},
                  {"resolution", c.voxel.resolution},
                  {"connectivity", name_of(kConnectivity, c.voxel.graph.connectivity)},
                  {"periodic_transverse", c.voxel.graph.periodic_transverse}};
    j["rve"] = {{"multipliers", c.rve_multipliers}};
    Json required = Json::array();
    for (CalibrationKind k : c.required_kinds) required.push_back(stochhom::to_string(k));
    j["calibrate"] = {{"required", required}};
    return j;
}

RunConfig config_from_json(const Json& doc, RunConfig c) {
    if (!doc.is_object()) throw UsageError("config must be a JSON object");
    if (!doc.contains("config_version")) throw UsageError("config is missing 'config_version'");
    if (doc["config_version"] != kConfigVersion) {
        throw UsageError(fmt::format("unsupported config_version {} (expected {})", doc["config_version"].dump(),
                                     kConfigVersion));
    }
    static const std::array<const char*, 10> kSections{"io",     "generation", "calibration", "solver", "tensor",
                                                        "campaign", "voxel",    "rve",         "calibrate", "config_version"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find_if(kSections.begin(), kSections.end(), [&](const char* s) { return key == s; }) ==
            kSections.end()) {
            throw UsageError(fmt::format("unknown config section '{}'", key));
        }
    }

    Section io(doc, "io");
    io.read("sample", c.io.sample);
    io.read("constants", c.io.constants);
    io.read("graph", c.io.graph);
    io.read("references", c.io.references);
    io.read("input", c.io.input);
    io.read("output", c.io.output);
    io.read("samples_output", c.io.samples_output);
    io.finish();

    Section gen(doc, "generation");
    if (gen.find("method") != nullptr) {
        std::string m;
        gen.read("method", m);
        try {
            c.generation.method = placement_method_from_string(m);
        } catch (const ConfigError& e) {
            throw UsageError(fmt::format("generation.method: {}", e.what()));
        }
    }
    gen.read("target_volume_fraction", c.generation.target_volume_fraction);
    gen.read("n_spheres", c.generation.n_spheres);
    gen.read("n_cylinders", c.generation.n_cylinders);
    gen.read("sphere_radius", c.generation.sphere_radius);
    gen.read("cylinder_radius", c.generation.cylinder_radius);
    gen.read("cylinder_aspect", c.generation.cylinder_aspect);
    gen.read("cylinder_share", c.cylinder_share);
    gen.read("puff_factor", c.generation.puff_factor);
    gen.read("puff_axial", c.generation.puff_axial);
    gen.read("seed", c.generation.seed);
    gen.read("max_attempts", c.generation.max_attempts);
    gen.read("md_tolerance", c.generation.md_tolerance);
    gen.read("edge_length", c.generation.edge_length);
    gen.read("fraction_probes", c.fraction_probes);
    gen.finish();

    if (doc.contains("calibration")) {
        const Json& cal = doc["calibration"];
        if (!cal.is_object()) throw UsageError("config section 'calibration' must be an object");
        // Merge over the current constants and let the document reader check keys.
        Json merged = Json::parse(constants_to_text(c.calibration));
        for (const auto& [key, value] : cal.items()) {
            if (key == "format" || key == "version" || !merged.contains(key)) {
                throw UsageError(fmt::format("unknown config key 'calibration.{}'", key));
            }
            merged[key] = value;
        }
        try {
            c.calibration = constants_from_text(merged.dump());
        } catch (const Error& e) {
            throw UsageError(fmt::format("calibration: {}", e.what()));
        }
    }

    Section solver(doc, "solver");
    solver.read_enum("method", kSolveMethods, c.tensor.solver.method);
    solver.read("direct_edge_limit", c.tensor.solver.direct_edge_limit);
    solver.read("cg_tolerance", c.tensor.solver.cg_tolerance);
    solver.read("cg_max_iterations", c.tensor.solver.cg_max_iterations);
    solver.read("full_conductor_reference", c.tensor.solver.full_conductor_reference);
    solver.finish();

    Section tensor(doc, "tensor");
    tensor.read("central_zone_fraction", c.tensor.central_zone_fraction);
    if (tensor.find("axis") != nullptr) {
        std::string a;
        tensor.read("axis", a);
        const auto it = std::find(kAxes.begin(), kAxes.end(), a);
        if (it == kAxes.end()) throw UsageError(fmt::format("tensor.axis: '{}' is not one of x, y, z", a));
        c.axis = static_cast<int>(it - kAxes.begin());
    }
    tensor.finish();

    Section campaign(doc, "campaign");
    campaign.read("sweep_values", c.sweep_values);
    campaign.read("n_samples_per_point", c.n_samples_per_point);
    campaign.read("master_seed", c.master_seed);
    campaign.read("workers", c.workers);
    campaign.read("progress", c.progress);
    campaign.finish();

    Section voxel(doc, "voxel");
    if (const Json* d = voxel.find("dims")) {
        if (!d->is_array() || d->size() != 3 || !std::all_of(d->begin(), d->end(), [](const Json& x) {
                return x.is_number_unsigned();
            })) {
            voxel.bad("dims", "three non-negative integers");
        }
        c.voxel.dims = GridDims{(*d)[0].get<std::size_t>(), (*d)[1].get<std::size_t>(), (*d)[2].get<std::size_t>()};
    }
    voxel.read("threshold", c.voxel.threshold);
    voxel.read("spacing", c.voxel.spacing);
    voxel.read("resolution", c.voxel.resolution);
    voxel.read_enum("connectivity", kConnectivity, c.voxel.graph.connectivity);
    voxel.read("periodic_transverse", c.voxel.graph.periodic_transverse);
    voxel.finish();

    Section rve(doc, "rve");
    rve.read("multipliers", c.rve_multipliers);
    rve.finish();

    Section calibrate(doc, "calibrate");
    if (const Json* r = calibrate.find("required")) {
        if (!r->is_array()) calibrate.bad("required", "an array of kind names");
        c.required_kinds.clear();
        for (const auto& k : *r) {
            const auto kind = k.is_string() ? calibration_kind_from_string(k.get<std::string>()) : std::nullopt;
            if (!kind) throw UsageError(fmt::format("calibrate.required: unknown kind {}", k.dump()));
            c.required_kinds.push_back(*kind);
        }
    }
    calibrate.finish();
    return c;
}

std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& out) {
    CLI::App app{"Stochastic homogenization of conductive composites", "stochhom"};
    std::string command;
    std::string config_path;
    std::vector<std::string> sets;
    app.add_option("command", command, "generate, homogenize, tensor, campaign, voxel, calibrate or rve-scan");
    app.add_option("--config,-c", config_path, "JSON config file");
    app.add_option("--set", sets, "override any config key: section.key=value")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->allow_extra_args(false);
    std::vector<std::vector<std::string>> values(kFlags.size());
    for (std::size_t f = 0; f < kFlags.size(); ++f) {
        app.add_option(kFlags[f].flag, values[f], fmt::format("{} [{}]", kFlags[f].help, kFlags[f].key))
            ->expected(1)
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
            ->allow_extra_args(false);
    }

    // CLI11 wants argv order reversed.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (command.empty()) throw UsageError("missing command\n" + usage_text());
    const auto cmd = command_from_string(command);
    if (!cmd) throw UsageError(fmt::format("unknown command '{}'\n{}", command, usage_text()));

    RunConfig config;
    if (!config_path.empty()) {
        Json doc;
        try {
            doc = Json::parse(read_file(config_path));
        } catch (const Json::parse_error& e) {
            throw UsageError(fmt::format("config '{}' is not valid JSON: {}", config_path, e.what()));
        }
        config = config_from_json(doc, config);
    }

    const Json defaults = config_to_json(RunConfig{});
    Json patch;
    patch["config_version"] = kConfigVersion;
    std::map<std::string, std::string> last;
    const auto apply = [&](const std::string& flag, const std::string& key, const std::vector<std::string>& given) {
        if (given.size() > 1) {
            spdlog::warn("{} given {} times; using the last value '{}'", flag, given.size(), given.back());
        }
        if (!given.empty()) set_path(patch, key, given.back(), defaults);
    };
    for (std::size_t f = 0; f < kFlags.size(); ++f) {
        const std::string flag(kFlags[f].flag);
        apply(flag.substr(0, flag.find(',')), kFlags[f].key, values[f]);
    }
    std::map<std::string, std::vector<std::string>> by_key;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError(fmt::format("--set expects section.key=value, got '{}'", s));
        by_key[s.substr(0, eq)].push_back(s.substr(eq + 1));
    }
    for (const auto& [key, given] : by_key) apply("--set " + key, key, given);

    config = config_from_json(patch, config);
    config.command = *cmd;
    config.validate();
    return config;
}

void run(const RunConfig& c, std::ostream& out) {
    spdlog::info("command: {}", to_string(c.command));
    spdlog::info("effective config: {}", config_to_json(c).dump());

    switch (c.command) {
        case Command::Generate: {
            const GenerationSpec spec = c.resolved_generation();
            const Sample s = puff_up(generate(spec), spec.puff_factor, c.fraction_probes);
            spdlog::info("placed {} inclusions, achieved fraction {:.6f}", s.inclusions.size(), s.achieved_fraction);
            emit(c.io.output, sample_to_text(s), out);
            break;
        }
        case Command::Homogenize: {
            CircuitGraph g;
            if (!c.io.graph.empty()) {
                g = graph_from_text(read_file(c.io.graph));
            } else {
                const Sample s = sample_from_text(read_file(c.io.sample));
                TerminalSpec t = TerminalSpec::diagonal(c.axis);
                g = build_contact_graph(s, t, effective_constants(c));
            }
            const CircuitSolution sol = solve(g, c.tensor.solver);
            spdlog::info("{} vertices, {} edges, total current {:.12g}, relative residual {:.3e}", g.n_vertices,
                         g.n_edges(), sol.total_current, sol.relative_residual);
            emit(c.io.output, solution_to_text(g, sol), out);
            break;
        }
        case Command::Tensor: {
            const Sample s = sample_from_text(read_file(c.io.sample));
            const ConductivityTensor t = conductivity_tensor(s, effective_constants(c), c.tensor);
            emit(c.io.output, tensor_to_text(t), out);
            break;
        }
        case Command::Campaign: {
            CampaignConfig cc = c.campaign();
            cc.calibration = effective_constants(c);
            const CampaignResult r = run_campaign(cc);
            std::ostringstream csv;
            export_csv(r, csv);
            std::size_t failed = 0;
            for (const auto& p : r.points) {
                failed += p.n_failed;
                if (p.flagged) spdlog::warn("sweep point {} flagged: {} of {} generations failed", p.sweep_value,
                                            p.n_failed, p.n_failed + p.n_samples);
            }
            if (failed > 0) spdlog::warn("{} sample generations failed in total", failed);
            if (!c.io.samples_output.empty()) {
                std::ostringstream rows;
                export_samples_csv(r, rows);
                write_file_atomic(c.io.samples_output, rows.str());
            }
            emit(c.io.output, csv.str(), out);
            break;
        }
        case Command::Voxel: {
            const VoxelGrid grid = load_voxel_input(c);
            const auto k = voxel_effective_conductivity(grid, effective_constants(c), c.voxel.graph, c.tensor.solver);
            Json j;
            j["format"] = "stochhom-voxel-conductivity";
            j["version"] = kDocumentVersion;
            j["dims"] = {grid.dims().nx, grid.dims().ny, grid.dims().nz};
            j["occupied_fraction"] = grid.occupied_fraction();
            j["conductivity"] = {k[0], k[1], k[2]};
            emit(c.io.output, j.dump(2), out);
            break;
        }
        case Command::Calibrate: {
            const auto points = references_from_text(read_file(c.io.references));
            const FitResult r = fit_constants(points, effective_constants(c), c.required_kinds);
            for (const auto& [kind, fit] : r.fits) {
                spdlog::info("{}: k = {:.12g} from {} points, max |residual| {:.3e}", stochhom::to_string(kind),
                             fit.constant, fit.n_points, fit.max_abs_residual);
            }
            emit(c.io.output, constants_to_text(r.constants), out);
            break;
        }
        case Command::RveScan: {
            CampaignConfig cc = c.campaign();
            cc.calibration = effective_constants(c);
            const auto rows = rve_convergence_scan(cc, c.rve_multipliers);
            std::ostringstream csv;
            export_rve_csv(rows, csv);
            emit(c.io.output, csv.str(), out);
            break;
        }
    }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << usage_text();
        return 2;
    }
    auto logger = std::make_shared<spdlog::logger>("stochhom", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);

    std::optional<RunConfig> config;
    try {
        config = parse_config(args, out);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const IoError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    if (!config) return 0;

    try {
        run(*config, out);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}

}  // namespace stochhom::cli
