#include "zvcv/control_variates.hpp"

#include "zvcv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace zvcv {

std::string ZvSpec::label() const {
    std::ostringstream ss;
    if (subset) ss << "sub" << subset->size() << "-";
    switch (penalty) {
        case Penalty::ols: break;
        case Penalty::lasso: ss << "l-"; break;
        case Penalty::ridge: ss << "r-"; break;
    }
    ss << "ZV" << q;
    if (estimator == EstimatorKind::split) ss << "-split";
    return ss.str();
}

Matrix zv_design(const SampleSet& s, const ZvSpec& spec) {
    std::optional<SubsetSpec> subset;
    if (spec.subset) subset = SubsetSpec(*spec.subset, s.dim());
    const auto basis = enumerate_exponents(s.dim(), spec.q, subset, spec.basis_cap);
    return build_design_matrix(s, basis);
}

RegressionFit fit_for_spec(const Matrix& x, const Vector& f, const Vector& w, const ZvSpec& spec) {
    if (spec.penalty == Penalty::ols) return fit_ols(x, f, w);
    if (spec.lambda) return fit_penalised(spec.penalty, x, f, w, *spec.lambda, spec.cv.lasso);
    CvConfig cfg = spec.cv;
    cfg.folds = static_cast<int>(std::min<Index>(cfg.folds, x.rows()));
    return cv_lambda(x, f, w, spec.penalty, cfg).fit;
}

namespace {

void check_inputs(const SampleSet& s, const IntegrandValues& phi) {
    if (phi.values.size() != s.count()) throw InvalidInput("integrand length does not match sample count");
    if (!phi.values.allFinite()) throw InvalidInput("integrand contains non-finite values");
    if (s.count() < 2) throw InsufficientSamples("control variates need at least two samples");
}

Matrix take_rows(const Matrix& x, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = x.row(idx[r]);
    return out;
}

Vector take(const Vector& v, const std::vector<Index>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Index>(r)] = v[idx[r]];
    return out;
}

std::pair<std::vector<Index>, std::vector<Index>> halves(Index n, std::uint64_t seed) {
    const auto folds = assign_folds(n, 2, seed);
    std::pair<std::vector<Index>, std::vector<Index>> out;
    for (Index i = 0; i < n; ++i) (folds[static_cast<std::size_t>(i)] == 0 ? out.first : out.second).push_back(i);
    return out;
}

}  // namespace

ZvResult zvcv_estimate(const SampleSet& s, const IntegrandValues& phi, const ZvSpec& spec) {
    check_inputs(s, phi);
    if (spec.q < 1) throw InvalidInput("polynomial order must be at least 1");
    const Matrix x = zv_design(s, spec);
    const Vector& f = phi.values;
    const Vector& w = s.weights();

    if (spec.estimator == EstimatorKind::combined) {
        ZvResult out;
        out.fit = fit_for_spec(x, f, w, spec);
        out.estimate = out.fit.estimate(x, f, w);
        return out;
    }

    if (s.count() < 4) throw InsufficientSamples("split estimator needs at least four samples");
    const auto [a, b] = halves(s.count(), spec.seed);
    ZvResult out;
    double total = 0.0;
    for (int dir = 0; dir < 2; ++dir) {
        const auto& fit_idx = dir == 0 ? a : b;
        const auto& eval_idx = dir == 0 ? b : a;
        const Vector wf = take(w, fit_idx), we = take(w, eval_idx);
        if (!(wf.sum() > 0.0) || !(we.sum() > 0.0)) throw InvalidInput("split half carries zero weight");
        const auto fit = fit_for_spec(take_rows(x, fit_idx), take(f, fit_idx), normalise_weights(wf), spec);
        total += fit.estimate(take_rows(x, eval_idx), take(f, eval_idx), normalise_weights(we));
        if (dir == 0) out.fit = fit;
    }
    out.estimate = 0.5 * total;
    return out;
}

ZvResult apriori_estimate(const SampleSet& s, const IntegrandValues& phi, const SubsetSpec& subset, ZvSpec inner) {
    inner.subset = subset.indices();
    return zvcv_estimate(s, phi, inner);
}

double two_fold_cv_error(const SampleSet& s, const IntegrandValues& phi, const ZvSpec& spec, std::uint64_t seed) {
    check_inputs(s, phi);
    const Matrix x = zv_design(s, spec);
    const Vector& f = phi.values;
    const auto [a, b] = halves(s.count(), seed);
    double total = 0.0;
    for (int dir = 0; dir < 2; ++dir) {
        const auto& train = dir == 0 ? a : b;
        const auto& test = dir == 0 ? b : a;
        const Vector wtr = take(s.weights(), train), wte = take(s.weights(), test);
        const auto fit = fit_for_spec(take_rows(x, train), take(f, train), normalise_weights(wtr), spec);
        const Vector resid = take(f, test) - fit.predict(take_rows(x, test));
        // Weights rescaled to sum to the fold size: the plain residual sum
        // of squares when weights are uniform.
        const Vector wt = normalise_weights(wte) * static_cast<double>(test.size());
        total += wt.dot(resid.cwiseAbs2());
    }
    return 0.5 * total;
}

namespace {

int penalty_rank(Penalty p) {
    switch (p) {
        case Penalty::ols: return 0;
        case Penalty::lasso: return 1;
        case Penalty::ridge: return 2;
    }
    return 3;
}

Index subset_size(const ZvSpec& s, Index d) {
    return s.subset ? static_cast<Index>(s.subset->size()) : d;
}

}  // namespace

CrossvalOutcome crossval_select(const SampleSet& s, const IntegrandValues& phi, const std::vector<Candidate>& candidates,
                                const CrossvalConfig& cfg) {
    check_inputs(s, phi);
    if (candidates.empty()) throw InvalidInput("crossval_select needs at least one candidate");
    if (cfg.min_q < 1 || cfg.max_q < cfg.min_q) throw InvalidInput("invalid polynomial order range");

    const double scale = static_cast<double>(s.count()) * std::pow(weighted_sd(phi.values, s.weights()), 2);
    const double tie = cfg.tie_tolerance * std::max(scale, 1e-300);

    CrossvalOutcome out;
    auto& sel = out.selection;
    for (const auto& cand : candidates) {
        double previous = 0.0;
        for (int q = 1; q <= cfg.max_q; ++q) {
            ZvSpec spec;
            spec.q = q;
            spec.penalty = cand.penalty;
            spec.subset = cand.subset;
            spec.cv = cfg.inner;
            spec.seed = cfg.seed;
            spec.basis_cap = cfg.basis_cap;
            double err = 0.0;
            try {
                err = two_fold_cv_error(s, phi, spec, cfg.seed);
            } catch (const Error& e) {
                std::ostringstream ss;
                ss << spec.label() << ": " << (q == 1 ? "candidate excluded: " : "order search stopped: ") << e.what();
                sel.diagnostics.push_back(ss.str());
                break;
            }
            sel.trace.push_back({spec, err});
            if (q > cfg.min_q && !(err < previous - tie)) break;
            previous = err;
        }
    }
    if (sel.trace.empty()) throw InvalidInput("every crossval candidate failed");

    double best = sel.trace.front().cv_error;
    for (const auto& t : sel.trace) best = std::min(best, t.cv_error);
    const TraceEntry* winner = nullptr;
    const Index d = s.dim();
    for (const auto& t : sel.trace) {
        if (t.cv_error > best + tie) continue;
        if (!winner) {
            winner = &t;
            continue;
        }
        const auto key = [d](const TraceEntry& e) {
            return std::make_tuple(e.spec.q, penalty_rank(e.spec.penalty), subset_size(e.spec, d));
        };
        if (key(t) < key(*winner)) winner = &t;
    }
    sel.chosen = winner->spec;
    sel.cv_error = winner->cv_error;

    const auto final_fit = zvcv_estimate(s, phi, sel.chosen);
    out.estimate = final_fit.estimate;
    out.fit = final_fit.fit;
    return out;
}

std::vector<Candidate> default_candidates(const std::vector<std::vector<Index>>& subsets) {
    std::vector<Candidate> out{{Penalty::ols, std::nullopt}, {Penalty::lasso, std::nullopt}, {Penalty::ridge, std::nullopt}};
    for (const auto& s : subsets) out.push_back({Penalty::ols, s});
    return out;
}

}  // namespace zvcv
