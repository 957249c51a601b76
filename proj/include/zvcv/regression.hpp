#pragma once

#include "zvcv/samples.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zvcv {

enum class Penalty { ols, ridge, lasso };

std::string to_string(Penalty p);
Penalty parse_penalty(const std::string& name);

/// Fitted control-variate regression. The model is f ~ c - X beta, so the
/// control-variate estimator is sum_i w_i (f_i + x_i . beta).
struct RegressionFit {
    double intercept = 0.0;
    Vector beta;    // original scale; zero for dropped covariates
    Vector beta_s;  // standardised scale, retained covariates only
    Penalty method = Penalty::ols;
    double lambda = 0.0;
    std::optional<double> cv_mse;
    std::vector<Index> dropped;
    bool rank_deficient = false;
    int sweeps = 0;  // coordinate-descent sweeps (LASSO only)

    /// Fitted response c - X beta.
    Vector predict(const Matrix& x) const;
    /// Weighted control-variate estimate sum_i w_i (f_i + x_i . beta).
    double estimate(const Matrix& x, const Vector& f, const Vector& w) const;
};

struct LassoOptions {
    /// Stop when the largest standardised coefficient change in a sweep
    /// falls below this.
    double tolerance = 1e-7;
    int max_sweeps = 100000;
    /// Refit by least squares on the selected covariates.
    bool relaxed = false;
};

RegressionFit fit_ols(const Matrix& x, const Vector& f, const Vector& w);

/// Ridge on the standardised scale:
/// beta_s = (X_s' W X_s / N + lambda I)^-1 X_s' W f_s / N with W = N diag(w).
/// With `standardise = false` the covariates and response are only centred,
/// which is the form equivalent to a polynomial-kernel control functional.
RegressionFit fit_ridge(const Matrix& x, const Vector& f, const Vector& w, double lambda, bool standardise = true);

/// Weighted LASSO by cyclic coordinate descent on the standardised scale,
/// minimising 0.5 sum_i w_i r_i^2 + lambda ||beta_s||_1.
RegressionFit fit_lasso(const Matrix& x, const Vector& f, const Vector& w, double lambda,
                        const LassoOptions& opts = {});

RegressionFit fit_penalised(Penalty method, const Matrix& x, const Vector& f, const Vector& w, double lambda,
                            const LassoOptions& lasso = {});

/// Smallest lambda at which every standardised LASSO coefficient is zero:
/// max_j |sum_i w_i x_s[i,j] f_s[i]|.
double lasso_lambda_max(const Matrix& x, const Vector& f, const Vector& w);

/// `count` values log-spaced from the method's lambda_max down to
/// lambda_max * ratio. The ridge grid starts 1000 times higher.
std::vector<double> default_lambda_grid(Penalty method, const Matrix& x, const Vector& f, const Vector& w,
                                        int count = 100, double ratio = 1e-4);

struct CvConfig {
    int folds = 10;
    std::vector<double> lambda_grid;  // strictly descending; empty selects the default grid
    std::uint64_t seed = 1;
    /// Grid points whose CV error is within tolerance * var(f) of the
    /// minimum count as ties; the largest such lambda wins.
    double tolerance = 1e-10;
    LassoOptions lasso;
};

struct CvLambdaResult {
    double lambda = 0.0;
    RegressionFit fit;
    std::vector<double> grid;
    std::vector<double> cv_mse;
};

/// k-fold cross-validation over the lambda grid followed by a refit on all
/// samples at the selected value.
CvLambdaResult cv_lambda(const Matrix& x, const Vector& f, const Vector& w, Penalty method, const CvConfig& cfg);

/// Seeded assignment of n items to k folds of near-equal size.
std::vector<int> assign_folds(Index n, int k, std::uint64_t seed);

}  // namespace zvcv
