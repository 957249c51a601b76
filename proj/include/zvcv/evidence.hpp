#pragma once

#include "zvcv/methods.hpp"
#include "zvcv/smc.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zvcv {

enum class EvidenceEstimator { cti_first, cti_second, smc };

std::string to_string(EvidenceEstimator e);
EvidenceEstimator parse_evidence_estimator(const std::string& name);  // cti1, cti2, smc

/// Which mean is plugged into the squared-deviation integrand when
/// estimating V_t[log l]: the control-variate estimate or the plain
/// weighted mean.
enum class VMeanMode { cv, raw };

struct ExpectationEntry {
    double t = 0.0;
    std::string kind;  // "E_loglike", "V_loglike" or "ratio"
    std::size_t population = 0;
    double raw = 0.0;
    double cv = 0.0;
    MethodEstimate method;
};

struct EvidenceReport {
    double log_evidence = 0.0;
    EvidenceEstimator estimator = EvidenceEstimator::cti_second;
    std::string method;
    std::vector<double> temperatures;
    std::vector<ExpectationEntry> per_expectation;
    int fallbacks_triggered = 0;
};

/// Control-variate estimate of E[phi] computed on phi / max|phi| and scaled
/// back. With `positive_required`, a non-positive result falls back:
/// regression methods refit with the intercept fixed at the weighted mean
/// of phi (then, if still non-positive, the weighted mean itself); CF and
/// anything else uses the weighted mean.
MethodEstimate stabilised_cv_expectation(const SampleSet& s, const IntegrandValues& phi, const MethodSpec& method,
                                         std::uint64_t seed = 1, bool positive_required = false);

/// Thermodynamic integration over the schedule: trapezoid rule on
/// E_t[log l], and for order 2 the correction
/// -sum (dt^2 / 12) (V_{t_j} - V_{t_{j-1}}).
EvidenceReport cti_estimate(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule, int order,
                            const MethodSpec& method, std::uint64_t seed = 1, VMeanMode v_mean = VMeanMode::cv);

/// Quadrature of given expectations (exposed for testing and reuse).
double cti_quadrature(const std::vector<double>& temperatures, const std::vector<double>& e,
                      const std::vector<double>* v = nullptr);

/// Telescoping-product estimator: log Z = sum_j log E_{p_{t_{j-1}}}[l^(t_j - t_{j-1})]
/// with each factor estimated by `method` on the max-scaled integrand.
EvidenceReport smc_evidence_estimate(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule,
                                     const MethodSpec& method, std::uint64_t seed = 1);

EvidenceReport estimate_evidence(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule,
                                 EvidenceEstimator estimator, const MethodSpec& method, std::uint64_t seed = 1,
                                 VMeanMode v_mean = VMeanMode::cv);

/// Pretty-printed JSON of one or more reports.
std::string to_json(const EvidenceReport& report);
std::string to_json(const std::vector<EvidenceReport>& reports);

}  // namespace zvcv
