#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zvcv {

struct EstimateRecord {
    std::string integrand;
    std::string method;
    double estimate = 0.0;
};

/// Estimates of one independent replicate, with optional wall times.
struct ReplicateEstimates {
    std::vector<EstimateRecord> records;
    /// Seconds spent producing the samples.
    std::optional<double> sampling_seconds;
    /// Post-processing seconds per method.
    std::map<std::string, double> method_seconds;
};

/// Reference values: a common value, per-integrand values, or the mean of
/// a named method's estimates across replicates.
struct GoldStandard {
    std::optional<double> common;
    std::map<std::string, double> per_integrand;
    std::optional<std::string> method;
};

struct EfficiencyRow {
    std::string integrand;
    std::string method;
    std::size_t replicates = 0;
    double gold = 0.0;
    double mse = 0.0;
    double statistical = 0.0;
    bool capped = false;
    std::optional<double> overall;
    std::optional<double> mean_seconds;
};

constexpr double efficiency_cap = 1e12;

/// MSE[vanilla] / MSE[method] per (integrand, method), and the same ratio
/// of MSE x time when timings are available. Ratios above 1e12 (including
/// a zero-MSE method) are reported as 1e12 with `capped` set.
std::vector<EfficiencyRow> compute_efficiency(const std::vector<ReplicateEstimates>& replicates,
                                              const GoldStandard& gold, const std::string& baseline = "vanilla");

std::string efficiency_csv(const std::vector<EfficiencyRow>& rows);
std::string efficiency_markdown(const std::vector<EfficiencyRow>& rows);

/// Read an estimates.json written by the postprocess command, plus the
/// timings.log beside it when present.
ReplicateEstimates read_replicate_estimates(const std::filesystem::path& estimates_json);

}  // namespace zvcv
