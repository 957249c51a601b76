#include "zvcv/evidence.hpp"

#include "zvcv/errors.hpp"

#include <json.hpp>

#include <cmath>

namespace zvcv {

std::string to_string(EvidenceEstimator e) {
    switch (e) {
        case EvidenceEstimator::cti_first: return "cti1";
        case EvidenceEstimator::cti_second: return "cti2";
        case EvidenceEstimator::smc: return "smc";
    }
    return "?";
}

EvidenceEstimator parse_evidence_estimator(const std::string& name) {
    if (name == "cti1") return EvidenceEstimator::cti_first;
    if (name == "cti2") return EvidenceEstimator::cti_second;
    if (name == "smc") return EvidenceEstimator::smc;
    throw ConfigError("unknown evidence estimator '" + name + "' (expected cti1, cti2 or smc)");
}

namespace {

// Regression of phi on the method's Stein covariates with the intercept
// held at the weighted mean: minimise sum w (phi - c + x beta)^2 over beta.
double fixed_intercept_estimate(const SampleSet& s, const Vector& f, const ZvSpec& spec) {
    const Matrix x = zv_design(s, spec);
    const Vector& w = s.weights();
    const double c = w.dot(f);
    const Vector sw = w.cwiseSqrt();
    const Matrix xw = sw.asDiagonal() * x;
    const Vector rhs = -(sw.asDiagonal() * (f.array() - c).matrix());
    const Vector beta = Eigen::CompleteOrthogonalDecomposition<Matrix>(xw).solve(rhs);
    return w.dot(f + x * beta);
}

}  // namespace

MethodEstimate stabilised_cv_expectation(const SampleSet& s, const IntegrandValues& phi, const MethodSpec& method,
                                         std::uint64_t seed, bool positive_required) {
    if (phi.values.size() != s.count()) throw InvalidInput("integrand length does not match sample count");
    if (!phi.values.allFinite()) throw InvalidInput("integrand contains non-finite values");
    const double scale = phi.values.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        MethodEstimate zero;
        zero.label = method.label();
        return zero;
    }
    const IntegrandValues scaled{phi.values / scale, phi.label};
    MethodEstimate est = estimate_expectation(s, scaled, method, seed);
    if (positive_required && !(est.estimate > 0.0)) {
        est.fallback = true;
        const double vanilla = s.weights().dot(scaled.values);
        double replacement = vanilla;
        if (method.kind == MethodKind::zv || method.kind == MethodKind::crossval) {
            ZvSpec spec = method.zv;
            if (method.kind == MethodKind::crossval) {
                spec.q = est.q.value_or(1);
                spec.subset.reset();
            }
            const double refit = fixed_intercept_estimate(s, scaled.values, spec);
            if (refit > 0.0) replacement = refit;
        }
        est.estimate = replacement;
    }
    est.estimate *= scale;
    return est;
}

double cti_quadrature(const std::vector<double>& temperatures, const std::vector<double>& e,
                      const std::vector<double>* v) {
    if (temperatures.size() != e.size() || (v && v->size() != e.size()))
        throw InvalidInput("one expectation per temperature is required");
    double total = 0.0;
    for (std::size_t j = 1; j < temperatures.size(); ++j) {
        const double dt = temperatures[j] - temperatures[j - 1];
        total += 0.5 * dt * (e[j - 1] + e[j]);
        if (v) total -= dt * dt / 12.0 * ((*v)[j] - (*v)[j - 1]);
    }
    return total;
}

EvidenceReport cti_estimate(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule, int order,
                            const MethodSpec& method, std::uint64_t seed, VMeanMode v_mean) {
    if (order != 1 && order != 2) throw InvalidInput("CTI quadrature order must be 1 or 2");
    const auto samples = schedule_samples(snapshots, schedule);
    EvidenceReport report;
    report.estimator = order == 1 ? EvidenceEstimator::cti_first : EvidenceEstimator::cti_second;
    report.method = method.label();
    report.temperatures = schedule.temperatures;
    std::vector<double> e(samples.size()), v(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const SampleSet& s = samples[j];
        if (!s.log_like()) throw InvalidInput("snapshots need log-likelihood values");
        const Vector& ll = *s.log_like();
        if (!ll.allFinite()) throw InvalidInput("non-finite log-likelihood at temperature " + std::to_string(report.temperatures[j]));
        const double t = schedule.temperatures[j];
        const std::size_t pop = schedule.population_index[j];

        ExpectationEntry entry{t, "E_loglike", pop, s.weights().dot(ll), 0.0, {}};
        entry.method = estimate_expectation(s, IntegrandValues{ll, "log_like"}, method, seed);
        entry.cv = entry.method.estimate;
        e[j] = entry.cv;
        report.per_expectation.push_back(entry);

        if (order == 2) {
            const double centre = v_mean == VMeanMode::cv ? entry.cv : entry.raw;
            const Vector dev = (ll.array() - centre).square().matrix();
            const Vector raw_dev = (ll.array() - entry.raw).square().matrix();
            ExpectationEntry ventry{t, "V_loglike", pop, s.weights().dot(raw_dev), 0.0, {}};
            ventry.method = estimate_expectation(s, IntegrandValues{dev, "squared_deviation"}, method, seed);
            ventry.cv = ventry.method.estimate;
            v[j] = ventry.cv;
            report.per_expectation.push_back(ventry);
        }
    }
    report.log_evidence = cti_quadrature(schedule.temperatures, e, order == 2 ? &v : nullptr);
    return report;
}

EvidenceReport smc_evidence_estimate(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule,
                                     const MethodSpec& method, std::uint64_t seed) {
    const auto samples = schedule_samples(snapshots, schedule);
    EvidenceReport report;
    report.estimator = EvidenceEstimator::smc;
    report.method = method.label();
    report.temperatures = schedule.temperatures;
    double log_z = 0.0;
    for (std::size_t j = 1; j < samples.size(); ++j) {
        const SampleSet& s = samples[j - 1];
        if (!s.log_like()) throw InvalidInput("snapshots need log-likelihood values");
        const Vector& ll = *s.log_like();
        const double dt = schedule.temperatures[j] - schedule.temperatures[j - 1];
        // l^dt divided by its maximum; the scale returns as dt * max log l.
        double m = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < ll.size(); ++i)
            if (s.weights()[i] > 0.0) m = std::max(m, ll[i]);
        if (!std::isfinite(m)) throw DegenerateWeights("no finite log-likelihood in the population");
        Vector ratio(ll.size());
        for (Index i = 0; i < ll.size(); ++i) ratio[i] = std::exp(dt * (ll[i] - m));

        ExpectationEntry entry{schedule.temperatures[j - 1], "ratio", schedule.population_index[j - 1], 0.0, 0.0, {}};
        entry.raw = s.weights().dot(ratio);
        entry.method = stabilised_cv_expectation(s, IntegrandValues{ratio, "likelihood_ratio"}, method, seed, true);
        entry.cv = entry.method.estimate;
        if (entry.method.fallback) ++report.fallbacks_triggered;
        log_z += std::log(entry.cv) + dt * m;
        // Report factors on their natural scale.
        entry.raw = std::log(entry.raw) + dt * m;
        entry.cv = std::log(entry.cv) + dt * m;
        report.per_expectation.push_back(entry);
    }
    report.log_evidence = log_z;
    return report;
}

EvidenceReport estimate_evidence(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule,
                                 EvidenceEstimator estimator, const MethodSpec& method, std::uint64_t seed,
                                 VMeanMode v_mean) {
    switch (estimator) {
        case EvidenceEstimator::cti_first: return cti_estimate(snapshots, schedule, 1, method, seed, v_mean);
        case EvidenceEstimator::cti_second: return cti_estimate(snapshots, schedule, 2, method, seed, v_mean);
        case EvidenceEstimator::smc: return smc_evidence_estimate(snapshots, schedule, method, seed);
    }
    throw InvalidInput("unknown evidence estimator");
}

namespace {

nlohmann::ordered_json report_json(const EvidenceReport& r) {
    nlohmann::ordered_json j;
    j["estimator"] = to_string(r.estimator);
    j["method"] = r.method;
    j["log_evidence"] = r.log_evidence;
    j["fallbacks_triggered"] = r.fallbacks_triggered;
    j["temperatures"] = r.temperatures;
    auto& list = j["per_expectation"] = nlohmann::ordered_json::array();
    for (const auto& e : r.per_expectation) {
        nlohmann::ordered_json x;
        x["t"] = e.t;
        x["kind"] = e.kind;
        x["population"] = e.population;
        x["raw"] = e.raw;
        x["cv"] = e.cv;
        x["method"] = e.method.label;
        if (e.method.q) x["Q"] = *e.method.q;
        if (e.method.penalty) x["penalty"] = *e.method.penalty;
        if (e.method.lambda) x["lambda"] = *e.method.lambda;
        if (e.method.bandwidth) x["bandwidth"] = *e.method.bandwidth;
        x["fallback"] = e.method.fallback;
        list.push_back(std::move(x));
    }
    return j;
}

}  // namespace

std::string to_json(const EvidenceReport& report) { return report_json(report).dump(2) + "\n"; }

std::string to_json(const std::vector<EvidenceReport>& reports) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(report_json(r));
    return arr.dump(2) + "\n";
}

}  // namespace zvcv
