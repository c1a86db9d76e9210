#include "stochhom/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fmt/format.h>
#include <mutex>
#include <ostream>
#include <thread>

#include "stochhom/errors.hpp"
#include "stochhom/generator.hpp"

namespace stochhom {

namespace {

constexpr std::array<std::pair<int, int>, 6> kEntries{{{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<const char*, 6> kEntryNames{"L_xx", "L_yy", "L_zz", "L_xy", "L_xz", "L_yz"};

std::string num(double v) { return fmt::format("{:.10g}", v); }

SampleRecord homogenize_one(const CampaignConfig& cfg, const GenerationSpec& point_spec, std::size_t point,
                            std::size_t index) {
    SampleRecord rec;
    rec.point = point;
    rec.index = index;
    rec.seed = derive_seed(cfg.master_seed, point, index);
    GenerationSpec spec = point_spec;
    spec.seed = rec.seed;
    try {
        const Sample raw = generate(spec);
        const Sample puffed = puff_up(raw, spec.puff_factor, cfg.fraction_probes);
        rec.achieved_fraction = puffed.achieved_fraction;
        rec.tensor = conductivity_tensor(puffed, cfg.calibration, cfg.tensor);
        rec.generated = true;
    } catch (const PlacementFailure& e) {
        rec.failure = e.what();
    } catch (const RelaxationFailure& e) {
        rec.failure = e.what();
    }
    return rec;
}

std::size_t worker_count(std::size_t requested, std::size_t tasks) {
    std::size_t w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return std::max<std::size_t>(1, std::min(w, tasks));
}

}  // namespace

GenerationSpec reference_generation() {
    GenerationSpec spec;
    spec.method = PlacementMethod::MD;
    spec.target_volume_fraction = 0.30;
    spec.n_spheres = 100;
    spec.n_cylinders = 100;
    spec.cylinder_aspect = 3.0;
    spec.puff_factor = 1.1;
    return spec;
}

std::vector<double> reference_sweep(std::size_t n) {
    if (n <= 1) return {0.0};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

void CampaignConfig::validate() const {
    if (n_samples_per_point == 0) throw ConfigError("n_samples_per_point must be at least 1");
    calibration.validate();
    if (!(tensor.solver.full_conductor_reference > 0.0)) throw ConfigError("full_conductor_reference must be positive");
    if (!(tensor.central_zone_fraction > 0.0 && tensor.central_zone_fraction <= 1.0)) {
        throw ConfigError("central_zone_fraction must lie in (0, 1]");
    }
    for (double v : sweep_values) {
        const GenerationSpec spec = resolve_radii(base, v);
        try {
            stochhom::validate(spec);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("sweep value {}: {}", v, e.what()));
        }
    }
}

PointSummary summarize(double sweep_value, const std::vector<SampleRecord>& records, std::size_t requested) {
    PointSummary s;
    s.sweep_value = sweep_value;
    std::size_t perc = 0;
    for (const auto& r : records) {
        if (!r.generated) {
            ++s.n_failed;
            continue;
        }
        ++s.n_samples;
        s.mean += r.tensor.L;
        if (r.percolating()) ++perc;
    }
    if (s.n_samples > 0) {
        const double n = static_cast<double>(s.n_samples);
        s.mean /= n;
        s.percolation_rate = static_cast<double>(perc) / n;
        if (s.n_samples > 1) {
            Eigen::Matrix3d ss = Eigen::Matrix3d::Zero();
            for (const auto& r : records) {
                if (!r.generated) continue;
                const Eigen::Matrix3d d = r.tensor.L - s.mean;
                ss += d.cwiseProduct(d);
            }
            s.stddev = (ss / (n - 1.0)).cwiseSqrt();
        }
    }
    s.flagged = 2 * s.n_samples < requested;
    return s;
}

CampaignResult run_campaign(const CampaignConfig& cfg) {
    cfg.validate();
    const std::size_t n_points = cfg.sweep_values.size();
    const std::size_t per = cfg.n_samples_per_point;
    const std::size_t n_tasks = n_points * per;

    std::vector<GenerationSpec> specs;
    specs.reserve(n_points);
    for (double v : cfg.sweep_values) specs.push_back(resolve_radii(cfg.base, v));

    CampaignResult result;
    result.samples.resize(n_tasks);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= n_tasks) return;
            try {
                result.samples[t] = homogenize_one(cfg, specs[t / per], t / per, t % per);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_tasks);
                return;
            }
            const std::size_t d = done.fetch_add(1) + 1;
            if (cfg.progress && (d == n_tasks || d % std::max<std::size_t>(1, n_tasks / 20) == 0)) {
                fmt::print(stderr, "[campaign] {}/{} samples\n", d, n_tasks);
            }
        }
    };

    const std::size_t workers = worker_count(cfg.workers, n_tasks);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);

    // Sequential reduce in sample order keeps the output independent of scheduling.
    result.points.reserve(n_points);
    for (std::size_t p = 0; p < n_points; ++p) {
        const std::vector<SampleRecord> slice(result.samples.begin() + static_cast<std::ptrdiff_t>(p * per),
                                              result.samples.begin() + static_cast<std::ptrdiff_t>((p + 1) * per));
        result.points.push_back(summarize(cfg.sweep_values[p], slice, per));
        if (cfg.progress && result.points.back().flagged) {
            fmt::print(stderr, "[campaign] warning: sweep value {} has only {}/{} successful generations\n",
                       cfg.sweep_values[p], result.points.back().n_samples, per);
        }
    }
    return result;
}

std::vector<RveRow> rve_convergence_scan(const CampaignConfig& cfg, const std::vector<double>& multipliers) {
    std::vector<RveRow> rows;
    const double share = cfg.sweep_values.empty() ? 0.0 : cfg.sweep_values.front();
    for (double m : multipliers) {
        if (!(m >= 1.0)) throw ConfigError(fmt::format("RVE size multiplier {} must be >= 1", m));
        CampaignConfig c = cfg;
        c.sweep_values = {share};
        c.base.n_spheres = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.base.n_spheres) * m));
        c.base.n_cylinders = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.base.n_cylinders) * m));
        const CampaignResult r = run_campaign(c);

        RveRow row;
        row.multiplier = m;
        row.n_inclusions = c.base.n_spheres + c.base.n_cylinders;
        std::vector<double> values;
        for (const auto& s : r.samples) {
            if (s.generated) values.push_back(s.tensor.trace_mean());
        }
        row.n_samples = values.size();
        if (!values.empty()) {
            double sum = 0.0;
            for (double v : values) sum += v;
            row.mean = sum / static_cast<double>(values.size());
            if (values.size() > 1) {
                double ss = 0.0;
                for (double v : values) ss += (v - row.mean) * (v - row.mean);
                row.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
            }
        }
        if (!rows.empty() && row.stddev > rows.back().stddev) {
            fmt::print(stderr, "[rve-scan] warning: spread grew from {:.4g} to {:.4g} at multiplier {}\n",
                       rows.back().stddev, row.stddev, m);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string campaign_csv_header() {
    std::string h = "sweep_value";
    for (const char* name : kEntryNames) h += fmt::format(",{0}_mean,{0}_std", name);
    h += ",percolation_rate,n";
    return h;
}

void export_csv(const CampaignResult& result, std::ostream& out) {
    out << campaign_csv_header() << '\n';
    for (const auto& p : result.points) {
        out << num(p.sweep_value);
        for (const auto& [i, j] : kEntries) out << ',' << num(p.mean(i, j)) << ',' << num(p.stddev(i, j));
        out << ',' << num(p.percolation_rate) << ',' << p.n_samples << '\n';
    }
    if (!out) throw IoError("failed writing campaign CSV");
}

void export_samples_csv(const CampaignResult& result, std::ostream& out) {
    out << "point,index,seed,generated,achieved_fraction";
    for (const char* name : kEntryNames) out << ',' << name;
    out << ",percolating,failure\n";
    for (const auto& s : result.samples) {
        out << s.point << ',' << s.index << ',' << s.seed << ',' << (s.generated ? 1 : 0) << ','
            << num(s.achieved_fraction);
        for (const auto& [i, j] : kEntries) out << ',' << num(s.tensor.L(i, j));
        std::string failure = s.failure;
        std::replace(failure.begin(), failure.end(), ',', ';');
        out << ',' << (s.percolating() ? 1 : 0) << ',' << failure << '\n';
    }
    if (!out) throw IoError("failed writing per-sample CSV");
}

void export_rve_csv(const std::vector<RveRow>& rows, std::ostream& out) {
    out << "multiplier,n_inclusions,mean,std,n\n";
    for (const auto& r : rows) {
        out << num(r.multiplier) << ',' << r.n_inclusions << ',' << num(r.mean) << ',' << num(r.stddev) << ','
            << r.n_samples << '\n';
    }
    if (!out) throw IoError("failed writing RVE scan CSV");
}

}  // namespace stochhom
