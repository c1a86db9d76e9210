#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stochhom/graph.hpp"
#include "stochhom/sample.hpp"
#include "stochhom/solver.hpp"

namespace stochhom {

/// Generation settings of the reference repartition study: MD placement,
/// pre-puff fraction 0.30, 100 spheres and 100 cylinders of aspect 3, puff 1.1.
[[nodiscard]] GenerationSpec reference_generation();

/// n equally spaced values covering [0, 1] (n >= 2), or {0} for n == 1.
[[nodiscard]] std::vector<double> reference_sweep(std::size_t n);

/// Stochastic homogenization campaign: for every sweep value, generate
/// n_samples_per_point independent samples, homogenize and aggregate.
///
/// The sweep variable is the share of the inclusion volume carried by
/// cylinders at fixed total fraction (base.target_volume_fraction); radii are
/// derived per point by resolve_radii().
struct CampaignConfig {
    GenerationSpec base = reference_generation();
    /// Eight repartition points from all-sphere (0) to all-cylinder (1).
    std::vector<double> sweep_values = reference_sweep(8);
    std::size_t n_samples_per_point = 30;
    CalibrationConstants calibration;
    TensorOptions tensor;
    std::uint64_t master_seed = 0;
    /// Monte Carlo probes for the post-puff fraction estimate (0 = skip).
    std::size_t fraction_probes = 20000;
    /// 0 means std::thread::hardware_concurrency().
    std::size_t workers = 1;
    /// Log progress on standard error.
    bool progress = false;

    /// Throws ConfigError for an unusable configuration.
    void validate() const;
};

struct SampleRecord {
    std::size_t point = 0;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool generated = false;
    std::string failure;
    ConductivityTensor tensor;
    double achieved_fraction = 0.0;

    /// All three diagonal directions percolate.
    [[nodiscard]] bool percolating() const {
        return generated && tensor.percolating[0] && tensor.percolating[1] && tensor.percolating[2];
    }
};

struct PointSummary {
    double sweep_value = 0.0;
    Eigen::Matrix3d mean = Eigen::Matrix3d::Zero();
    /// Sample standard deviation (n-1 denominator; 0 when n < 2).
    Eigen::Matrix3d stddev = Eigen::Matrix3d::Zero();
    double percolation_rate = 0.0;
    /// Successful generations.
    std::size_t n_samples = 0;
    std::size_t n_failed = 0;
    /// Fewer than half of the requested generations succeeded.
    bool flagged = false;

    [[nodiscard]] double scalar_mean() const { return mean.trace() / 3.0; }
};

struct CampaignResult {
    std::vector<PointSummary> points;
    /// Ordered by (point, sample index).
    std::vector<SampleRecord> samples;
};

/// Aggregate the records of one point.
[[nodiscard]] PointSummary summarize(double sweep_value, const std::vector<SampleRecord>& records,
                                     std::size_t requested);

[[nodiscard]] CampaignResult run_campaign(const CampaignConfig& cfg);

struct RveRow {
    double multiplier = 1.0;
    std::size_t n_inclusions = 0;
    double mean = 0.0;  ///< mean of trace(L)/3
    double stddev = 0.0;
    std::size_t n_samples = 0;
};

/// Scale inclusion counts by each multiplier at fixed volume fraction (sweep
/// value = cfg.sweep_values.front(), or 0 when empty) and report mean and
/// spread of the scalar conductivity. Logs a warning when the spread does not
/// shrink with size.
[[nodiscard]] std::vector<RveRow> rve_convergence_scan(const CampaignConfig& cfg,
                                                       const std::vector<double>& multipliers);

/// Header plus one row per sweep point; numbers use 10 significant digits.
void export_csv(const CampaignResult& result, std::ostream& out);
/// One row per sample with the full tensor.
void export_samples_csv(const CampaignResult& result, std::ostream& out);
void export_rve_csv(const std::vector<RveRow>& rows, std::ostream& out);

[[nodiscard]] std::string campaign_csv_header();

}  // namespace stochhom
