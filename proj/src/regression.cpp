#include "zvcv/regression.hpp"

#include "zvcv/errors.hpp"
#include "zvcv/rng.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace zvcv {

std::string to_string(Penalty p) {
    switch (p) {
        case Penalty::ols: return "ols";
        case Penalty::ridge: return "ridge";
        case Penalty::lasso: return "lasso";
    }
    return "unknown";
}

Penalty parse_penalty(const std::string& name) {
    if (name == "ols") return Penalty::ols;
    if (name == "ridge") return Penalty::ridge;
    if (name == "lasso") return Penalty::lasso;
    throw ConfigError("unknown penalty '" + name + "'");
}

Vector RegressionFit::predict(const Matrix& x) const {
    return (intercept - (x * beta).array()).matrix();
}

double RegressionFit::estimate(const Matrix& x, const Vector& f, const Vector& w) const {
    return normalise_weights(w).dot(f + x * beta);
}

namespace {

StandardisedData centre_only(const Matrix& x, const Vector& f, const Vector& w_in) {
    const Index n = x.rows();
    if (n < 2) throw InsufficientSamples("regression needs at least two samples");
    if (!x.allFinite() || !f.allFinite()) throw InvalidInput("regression: non-finite input");
    const Vector w = normalise_weights(w_in);
    StandardisedData out;
    auto& info = out.info;
    info.response_mean = w.dot(f);
    info.response_sd = 1.0;
    out.f = (f.array() - info.response_mean).matrix();
    info.covariate_means = x.transpose() * w;
    info.covariate_sds = Vector::Ones(x.cols());
    info.retained.resize(static_cast<std::size_t>(x.cols()));
    std::iota(info.retained.begin(), info.retained.end(), Index{0});
    out.x = x.rowwise() - info.covariate_means.transpose();
    return out;
}

StandardisedData prepare(const Matrix& x, const Vector& f, const Vector& w, bool scale) {
    if (x.rows() != f.size() || w.size() != f.size()) throw InvalidInput("regression: length mismatch");
    return scale ? standardise(x, f, w) : centre_only(x, f, w);
}

// b_s is the standardised-scale coefficient of f_s ~ X_s b_s; the stored
// coefficients use the opposite sign.
RegressionFit finish(const StandardisedData& sd, const Vector& b_s, Index total_cols, Penalty method,
                     double lambda) {
    RegressionFit fit;
    fit.method = method;
    fit.lambda = lambda;
    fit.dropped = sd.info.dropped;
    fit.beta_s = -b_s;
    fit.beta = Vector::Zero(total_cols);
    for (std::size_t r = 0; r < sd.info.retained.size(); ++r) {
        const Index c = sd.info.retained[r];
        fit.beta[c] = -b_s[static_cast<Index>(r)] * sd.info.response_sd / sd.info.covariate_sds[c];
    }
    fit.intercept = sd.info.response_mean + sd.info.covariate_means.dot(fit.beta);
    return fit;
}

Vector sqrt_weights(const Vector& w) {
    return normalise_weights(w).array().sqrt().matrix();
}

Vector ols_standardised(const Matrix& xs, const Vector& fs, const Vector& w, bool& rank_deficient) {
    if (xs.cols() == 0) {
        rank_deficient = false;
        return Vector();
    }
    const Vector sw = sqrt_weights(w);
    const Matrix a = sw.asDiagonal() * xs;
    const Vector y = sw.cwiseProduct(fs);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    rank_deficient = cod.rank() < xs.cols();
    return cod.solve(y);
}

Vector ridge_standardised(const Matrix& xs, const Vector& fs, const Vector& w, double lambda) {
    const Index n = xs.rows(), j = xs.cols();
    if (j == 0) return Vector();
    const Vector sw = sqrt_weights(w);
    const Matrix a = sw.asDiagonal() * xs;
    const Vector y = sw.cwiseProduct(fs);
    if (lambda == 0.0) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
        return cod.solve(y);
    }
    if (j <= n) {
        Matrix g = a.transpose() * a;
        g.diagonal().array() += lambda;
        return g.ldlt().solve(a.transpose() * y);
    }
    Matrix k = a * a.transpose();
    k.diagonal().array() += lambda;
    return a.transpose() * k.ldlt().solve(y);
}

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

// Weighted Gram matrix and correlations of a standardised LASSO problem.
// Coordinate descent works on the gradient q = X_s' W (f_s - X_s b), so one
// coordinate update costs O(J) whatever the sample size.
struct LassoProblem {
    Matrix gram;  // X_s' W X_s
    Vector xtf;   // X_s' W f_s
    double ftf;   // f_s' W f_s

    LassoProblem(const Matrix& xs, const Vector& fs, const Vector& w)
        : gram(xs.transpose() * w.asDiagonal() * xs), xtf(xs.transpose() * w.cwiseProduct(fs)),
          ftf(w.dot(fs.cwiseAbs2())) {}
};

[[maybe_unused]] double lasso_objective(const LassoProblem& pr, const Vector& b, double lambda) {
    return 0.5 * (pr.ftf - 2.0 * pr.xtf.dot(b) + b.dot(pr.gram * b)) + lambda * b.lpNorm<1>();
}

double sweep(const LassoProblem& pr, Vector& q, Vector& b, const std::vector<Index>& coords, double lambda) {
    double max_change = 0.0;
    for (Index j : coords) {
        const double v = pr.gram(j, j);
        if (!(v > 0.0)) continue;
        const double old = b[j];
        const double updated = soft_threshold(q[j] + v * old, lambda) / v;
        const double delta = updated - old;
        if (delta != 0.0) {
            q.noalias() -= delta * pr.gram.col(j);
            b[j] = updated;
            max_change = std::max(max_change, std::abs(delta) * std::sqrt(v));
        }
    }
    return max_change;
}

// Coordinate descent from the warm start in `b`, alternating full sweeps
// with sweeps over the active set. Returns sweeps used.
int lasso_cd(const LassoProblem& pr, double lambda, Vector& b, const LassoOptions& opts) {
    const Index j = pr.xtf.size();
    if (b.size() != j) b = Vector::Zero(j);
    if (j == 0) return 0;
    Vector q = pr.xtf - pr.gram * b;

    std::vector<Index> all(static_cast<std::size_t>(j));
    std::iota(all.begin(), all.end(), Index{0});
    int sweeps = 0;
    double change = 0.0;
#ifndef NDEBUG
    double previous = lasso_objective(pr, b, lambda);
    auto check_monotone = [&] {
        const double now = lasso_objective(pr, b, lambda);
        assert(now <= previous + 1e-10 * std::max(1.0, std::abs(previous)));
        previous = now;
    };
#else
    auto check_monotone = [] {};
#endif
    while (true) {
        change = sweep(pr, q, b, all, lambda);
        ++sweeps;
        check_monotone();
        if (change < opts.tolerance) return sweeps;
        if (sweeps >= opts.max_sweeps) break;
        std::vector<Index> active;
        for (Index k = 0; k < j; ++k)
            if (b[k] != 0.0) active.push_back(k);
        while (sweeps < opts.max_sweeps) {
            change = sweep(pr, q, b, active, lambda);
            ++sweeps;
            check_monotone();
            if (change < opts.tolerance) break;
        }
        if (sweeps >= opts.max_sweeps) break;
    }
    throw ConvergenceError("LASSO coordinate descent did not converge after " + std::to_string(sweeps) +
                               " sweeps (last max change " + std::to_string(change) + ")",
                           sweeps, change);
}

Vector relaxed_refit(const Matrix& xs, const Vector& fs, const Vector& w, const Vector& b) {
    std::vector<Index> active;
    for (Index k = 0; k < b.size(); ++k)
        if (b[k] != 0.0) active.push_back(k);
    Vector out = Vector::Zero(b.size());
    if (active.empty()) return out;
    Matrix sub(xs.rows(), static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) sub.col(static_cast<Index>(a)) = xs.col(active[a]);
    bool rd = false;
    const Vector coef = ols_standardised(sub, fs, w, rd);
    for (std::size_t a = 0; a < active.size(); ++a) out[active[a]] = coef[static_cast<Index>(a)];
    return out;
}

}  // namespace

RegressionFit fit_ols(const Matrix& x, const Vector& f, const Vector& w) {
    const auto sd = prepare(x, f, w, true);
    bool rank_deficient = false;
    const Vector b = ols_standardised(sd.x, sd.f, normalise_weights(w), rank_deficient);
    auto fit = finish(sd, b, x.cols(), Penalty::ols, 0.0);
    fit.rank_deficient = rank_deficient;
    return fit;
}

RegressionFit fit_ridge(const Matrix& x, const Vector& f, const Vector& w, double lambda, bool standardise_data) {
    if (!(lambda >= 0.0)) throw InvalidInput("ridge lambda must be nonnegative");
    const auto sd = prepare(x, f, w, standardise_data);
    const Vector b = ridge_standardised(sd.x, sd.f, normalise_weights(w), lambda);
    return finish(sd, b, x.cols(), lambda == 0.0 ? Penalty::ols : Penalty::ridge, lambda);
}

RegressionFit fit_lasso(const Matrix& x, const Vector& f, const Vector& w, double lambda, const LassoOptions& opts) {
    if (!(lambda >= 0.0)) throw InvalidInput("LASSO lambda must be nonnegative");
    const auto sd = prepare(x, f, w, true);
    const Vector wn = normalise_weights(w);
    Vector b = Vector::Zero(sd.x.cols());
    const int sweeps = lasso_cd(LassoProblem(sd.x, sd.f, wn), lambda, b, opts);
    if (opts.relaxed) b = relaxed_refit(sd.x, sd.f, wn, b);
    auto fit = finish(sd, b, x.cols(), lambda == 0.0 ? Penalty::ols : Penalty::lasso, lambda);
    fit.sweeps = sweeps;
    return fit;
}

RegressionFit fit_penalised(Penalty method, const Matrix& x, const Vector& f, const Vector& w, double lambda,
                            const LassoOptions& lasso) {
    switch (method) {
        case Penalty::ols: return fit_ols(x, f, w);
        case Penalty::ridge: return fit_ridge(x, f, w, lambda);
        case Penalty::lasso: return fit_lasso(x, f, w, lambda, lasso);
    }
    throw InvalidInput("unknown penalty");
}

double lasso_lambda_max(const Matrix& x, const Vector& f, const Vector& w) {
    const auto sd = standardise(x, f, w);
    if (sd.x.cols() == 0) return 0.0;
    const Vector wn = normalise_weights(w);
    return (sd.x.transpose() * wn.cwiseProduct(sd.f)).cwiseAbs().maxCoeff();
}

std::vector<double> default_lambda_grid(Penalty method, const Matrix& x, const Vector& f, const Vector& w, int count,
                                        double ratio) {
    if (count < 1) throw InvalidInput("lambda grid needs at least one value");
    double top = lasso_lambda_max(x, f, w);
    if (!(top > 0.0)) top = 1.0;
    if (method == Penalty::ridge) top *= 1e3;
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid[static_cast<std::size_t>(i)] = top * std::pow(ratio, frac);
    }
    return grid;
}

std::vector<int> assign_folds(Index n, int k, std::uint64_t seed) {
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng(seed);
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>(i % k);
    return fold;
}

namespace {

Matrix rows_of(const Matrix& x, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = x.row(idx[r]);
    return out;
}

Vector entries_of(const Vector& v, const std::vector<Index>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Index>(r)] = v[idx[r]];
    return out;
}

// Standardised-scale coefficients along the grid for one training set.
std::vector<Vector> coefficient_path(Penalty method, const StandardisedData& sd, const Vector& w,
                                     const std::vector<double>& grid, const LassoOptions& opts) {
    std::vector<Vector> path;
    path.reserve(grid.size());
    if (method == Penalty::lasso) {
        const LassoProblem problem(sd.x, sd.f, w);
        Vector b = Vector::Zero(sd.x.cols());
        for (double lambda : grid) {
            lasso_cd(problem, lambda, b, opts);
            path.push_back(b);
        }
        return path;
    }
    // Ridge: one thin SVD of diag(sqrt w) X_s serves every lambda.
    if (sd.x.cols() == 0) {
        path.assign(grid.size(), Vector());
        return path;
    }
    const Vector sw = w.array().sqrt().matrix();
    const Matrix a = sw.asDiagonal() * sd.x;
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector uty = svd.matrixU().transpose() * sw.cwiseProduct(sd.f);
    const Vector& s = svd.singularValues();
    for (double lambda : grid) {
        Vector scale(s.size());
        for (Index i = 0; i < s.size(); ++i) scale[i] = s[i] / (s[i] * s[i] + lambda);
        path.push_back(svd.matrixV() * scale.cwiseProduct(uty));
    }
    return path;
}

}  // namespace

CvLambdaResult cv_lambda(const Matrix& x, const Vector& f, const Vector& w_in, Penalty method, const CvConfig& cfg) {
    if (method == Penalty::ols) throw InvalidInput("cv_lambda applies to ridge or LASSO");
    const Index n = x.rows();
    if (cfg.folds < 2) throw InvalidInput("cross-validation needs at least two folds");
    if (n < cfg.folds) throw InsufficientSamples("fewer samples than cross-validation folds");
    const Vector w = normalise_weights(w_in);

    CvLambdaResult out;
    out.grid = cfg.lambda_grid.empty() ? default_lambda_grid(method, x, f, w) : cfg.lambda_grid;
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
        if (!(out.grid[i] > 0.0)) throw InvalidInput("lambda grid values must be positive");
        if (i > 0 && !(out.grid[i] < out.grid[i - 1])) throw InvalidInput("lambda grid must be strictly descending");
    }
    const std::size_t g = out.grid.size();
    out.cv_mse.assign(g, 0.0);

    const auto folds = assign_folds(n, cfg.folds, cfg.seed);
    for (int fold = 0; fold < cfg.folds; ++fold) {
        std::vector<Index> train, test;
        for (Index i = 0; i < n; ++i) (folds[static_cast<std::size_t>(i)] == fold ? test : train).push_back(i);
        if (train.size() < 2) throw InsufficientSamples("cross-validation training fold has fewer than two samples");
        const Matrix xtr = rows_of(x, train), xte = rows_of(x, test);
        const Vector ftr = entries_of(f, train), fte = entries_of(f, test);
        Vector wtr = entries_of(w, train), wte = entries_of(w, test);
        if (!(wtr.sum() > 0.0) || !(wte.sum() > 0.0)) throw InvalidInput("cross-validation fold carries zero weight");
        wtr = normalise_weights(wtr);
        wte = normalise_weights(wte);
        const auto sd = standardise(xtr, ftr, wtr);
        const auto path = coefficient_path(method, sd, wtr, out.grid, cfg.lasso);
        for (std::size_t l = 0; l < g; ++l) {
            const auto fit = finish(sd, path[l], x.cols(), method, out.grid[l]);
            const Vector resid = fte - fit.predict(xte);
            out.cv_mse[l] += wte.dot(resid.cwiseAbs2()) / cfg.folds;
        }
    }

    const double best = *std::min_element(out.cv_mse.begin(), out.cv_mse.end());
    const double fvar = std::pow(weighted_sd(f, w), 2);
    const double threshold = best + cfg.tolerance * std::max(fvar, 1e-300);
    std::size_t chosen = 0;
    while (out.cv_mse[chosen] > threshold) ++chosen;  // grid is descending: first hit is the largest lambda
    out.lambda = out.grid[chosen];
    out.fit = fit_penalised(method, x, f, w, out.lambda, cfg.lasso);
    out.fit.cv_mse = out.cv_mse[chosen];
    return out;
}

}  // namespace zvcv
