#pragma once

#include "zvcv/efficiency.hpp"
#include "zvcv/evidence.hpp"
#include "zvcv/smc.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace zvcv {

/// Adaptive pilot run followed by `replicates` replays of its schedule.
/// Layout: out/pilot/, out/replicate_001/, ..., out/run_config.json.
struct SmcCommandOptions {
    std::string model = "conjugate_gaussian";
    SmcConfig smc;
    int replicates = 0;
    /// Replay this manifest instead of running an adaptive pilot.
    std::optional<std::filesystem::path> schedule;
    std::filesystem::path out = "smc_out";
};
void cmd_smc(const SmcCommandOptions& opts);

/// Control-variate estimates of posterior expectations from the final
/// (t = 1) population of a run, or from a bare sample CSV.
struct PostprocessOptions {
    std::filesystem::path archive;
    std::string methods = "vanilla,zv:Q=1,zv:Q=2";
    /// Comma-separated: mean, square, coord:K, square:K (K 1-based).
    std::string integrands = "mean";
    /// natural: integrands of the model's natural parameters; sampling:
    /// of the coordinates the sampler used.
    std::string scale = "natural";
    /// Model whose transform defines the natural scale (defaults to the one
    /// recorded in the run manifest).
    std::optional<std::string> model;
    std::uint64_t seed = 1;
    std::filesystem::path out = "postprocess_out";
};
void cmd_postprocess(const PostprocessOptions& opts);

struct EvidenceOptions {
    std::filesystem::path archive;
    std::vector<std::string> estimators = {"cti2"};
    std::string methods = "vanilla,zv:Q=2";
    std::optional<double> posthoc_rho;
    VMeanMode v_mean = VMeanMode::cv;
    std::uint64_t seed = 1;
    std::filesystem::path out = "evidence_out";
};
void cmd_evidence(const EvidenceOptions& opts);

struct EfficiencyOptions {
    /// estimates.json / evidence.json files, or directories holding
    /// replicate_*/ subdirectories of them.
    std::vector<std::filesystem::path> inputs;
    GoldStandard gold;
    std::string baseline = "vanilla";
    std::filesystem::path out = "efficiency_out";
};
void cmd_efficiency(const EfficiencyOptions& opts);

/// Values of the integrand specification at each sample.
std::vector<IntegrandValues> make_integrands(const std::string& spec, const Matrix& theta);

/// Command-line entry point; returns the process exit code (0 success,
/// 2 invalid input or configuration, 3 numerical failure, 4 I/O).
int run_cli(int argc, const char* const* argv);

}  // namespace zvcv
