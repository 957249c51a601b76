#pragma once

#include "zvcv/polybasis.hpp"
#include "zvcv/regression.hpp"
#include "zvcv/samples.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zvcv {

enum class EstimatorKind {
    combined,  // fit and evaluate on all samples
    split,     // fit on one half, evaluate on the other, average both directions
};

/// One zero-variance control variate: polynomial order, penalty, optional
/// coordinate subset and estimator form.
struct ZvSpec {
    int q = 2;
    Penalty penalty = Penalty::ols;
    std::optional<std::vector<Index>> subset;  // 0-based coordinates
    EstimatorKind estimator = EstimatorKind::combined;
    /// Fixed penalty; when absent penalised fits pick lambda by k-fold CV.
    std::optional<double> lambda;
    CvConfig cv;
    std::uint64_t seed = 1;  // split assignment
    std::int64_t basis_cap = default_basis_cap;

    std::string label() const;
};

struct ZvResult {
    double estimate = 0.0;
    /// The fit behind the estimate (first half for the split estimator).
    RegressionFit fit;
};

/// Stein covariates of `s` for the basis implied by `spec`.
Matrix zv_design(const SampleSet& s, const ZvSpec& spec);

/// Fit `spec`'s regression of f on x (fixed lambda, inner CV or OLS).
RegressionFit fit_for_spec(const Matrix& x, const Vector& f, const Vector& w, const ZvSpec& spec);

ZvResult zvcv_estimate(const SampleSet& s, const IntegrandValues& phi, const ZvSpec& spec);

/// zvcv_estimate with the basis restricted to `subset`; gradient columns
/// outside the subset are never read.
ZvResult apriori_estimate(const SampleSet& s, const IntegrandValues& phi, const SubsetSpec& subset, ZvSpec inner);

struct Candidate {
    Penalty penalty = Penalty::ols;
    std::optional<std::vector<Index>> subset;
};

struct CrossvalConfig {
    int min_q = 1;  // always compare at least up to this order
    int max_q = 6;
    std::uint64_t seed = 1;
    /// Relative tolerance (times n * var(phi)) under which CV errors tie.
    double tie_tolerance = 1e-10;
    CvConfig inner;  // lambda selection for penalised candidates
    std::int64_t basis_cap = default_basis_cap;
};

struct TraceEntry {
    ZvSpec spec;
    double cv_error = 0.0;
};

struct CvSelectionResult {
    ZvSpec chosen;
    double cv_error = 0.0;
    std::vector<TraceEntry> trace;
    std::vector<std::string> diagnostics;
};

struct CrossvalOutcome {
    CvSelectionResult selection;
    double estimate = 0.0;
    RegressionFit fit;
};

/// 2-fold CV error of `spec`: hold-out residual sum of squares averaged over
/// the two folds.
double two_fold_cv_error(const SampleSet& s, const IntegrandValues& phi, const ZvSpec& spec, std::uint64_t seed);

/// Automatic choice among (penalty, subset) candidates with polynomial order
/// increased from 1 until the 2-fold CV error stops improving; the winner is
/// refitted on every sample.
CrossvalOutcome crossval_select(const SampleSet& s, const IntegrandValues& phi, const std::vector<Candidate>& candidates,
                                const CrossvalConfig& cfg = {});

/// The candidate menu used by default: OLS, LASSO and ridge on all
/// coordinates, plus each subset given.
std::vector<Candidate> default_candidates(const std::vector<std::vector<Index>>& subsets = {});

}  // namespace zvcv
