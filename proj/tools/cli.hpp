#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stochhom/calibrate.hpp"
#include "stochhom/graph.hpp"
#include "stochhom/montecarlo.hpp"
#include "stochhom/sample.hpp"
#include "stochhom/solver.hpp"
#include "stochhom/voxel.hpp"

namespace stochhom::cli {

inline constexpr int kConfigVersion = 1;

enum class Command { Generate, Homogenize, Tensor, Campaign, Voxel, Calibrate, RveScan };

/// Bad command line or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IoPaths {
    std::string sample;
    std::string constants;
    std::string graph;
    std::string references;
    /// Voxel input: raw 8-bit volume, single PGM slice or directory of slices.
    std::string input;
    /// Empty means standard output.
    std::string output;
    std::string samples_output;
};

struct VoxelSettings {
    /// Raw volume dimensions; zeros when the input carries its own size.
    GridDims dims{0, 0, 0};
    int threshold = 128;
    double spacing = 1.0;
    /// Grid size per axis when voxelizing a sample.
    std::size_t resolution = 64;
    VoxelGraphOptions graph;
};

struct RunConfig {
    Command command = Command::Generate;
    IoPaths io;
    /// Radii of zero are derived from target_volume_fraction and cylinder_share.
    GenerationSpec generation = reference_generation();
    double cylinder_share = 0.5;
    std::size_t fraction_probes = 20000;
    CalibrationConstants calibration;
    TensorOptions tensor;
    /// Homogenize: terminal axis for a sample input.
    int axis = 0;
    std::vector<double> sweep_values = reference_sweep(8);
    std::size_t n_samples_per_point = 30;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    bool progress = false;
    VoxelSettings voxel;
    std::vector<double> rve_multipliers{1.0, 2.0, 4.0};
    /// Kinds that must have reference points.
    std::vector<CalibrationKind> required_kinds;

    /// Checks every parameter the command uses. Throws UsageError naming the key.
    void validate() const;
    /// Generation spec with derived radii applied. When one family has no
    /// members the other carries the whole volume.
    [[nodiscard]] GenerationSpec resolved_generation() const;
    [[nodiscard]] CampaignConfig campaign() const;
};

[[nodiscard]] const char* to_string(Command command);
[[nodiscard]] std::optional<Command> command_from_string(const std::string& name);

/// Versioned JSON form of every setting except the command.
[[nodiscard]] nlohmann::ordered_json config_to_json(const RunConfig& config);
/// Overlay `doc` onto `base`. Unknown sections or keys and wrongly typed
/// values throw UsageError.
[[nodiscard]] RunConfig config_from_json(const nlohmann::ordered_json& doc, RunConfig base = {});

/// Defaults, then the --config file, then flags (last occurrence of a
/// repeated flag wins). Returns nullopt when help was printed to `out`.
[[nodiscard]] std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& out);

/// Execute a parsed configuration; results without an output path go to `out`.
void run(const RunConfig& config, std::ostream& out);

/// Full entry point: 0 success, 1 computation failure, 2 usage error.
/// Usage text for an empty command line goes to `err`; logs go to stderr.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stochhom::cli
