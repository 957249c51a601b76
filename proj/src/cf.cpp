#include "zvcv/cf.hpp"

#include "zvcv/errors.hpp"
#include "zvcv/polybasis.hpp"
#include "zvcv/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zvcv {

namespace {

// Closed form of L_a L_b exp(-|r|^2 / h), r = a - b, c = 1/h:
//   k [F^2 + 8c^2 d - 32 c^3 s]                       (lap_a lap_b k)
// + 4c^2 (d + 2 - 2cs) k r.(ua - ub)                   (mixed lap/grad terms)
// + k [2c ua.ub - 4c^2 (r.ua)(r.ub)]                   (grad_a grad_b' k)
// with s = |r|^2 and F = 4c^2 s - 2cd.
double gaussian_stein_kernel(double h, const Vector& a, const Vector& ua, const Vector& b, const Vector& ub) {
    const double c = 1.0 / h;
    const double d = static_cast<double>(a.size());
    const Vector r = a - b;
    const double s = r.squaredNorm();
    const double k = std::exp(-c * s);
    if (k == 0.0) return 0.0;
    const double f = 4.0 * c * c * s - 2.0 * c * d;
    const double lap_lap = f * f + 8.0 * c * c * d - 32.0 * c * c * c * s;
    const double ra = r.dot(ua), rb = r.dot(ub);
    const double mixed = 4.0 * c * c * (d + 2.0 - 2.0 * c * s) * (ra - rb);
    const double grad_grad = 2.0 * c * ua.dot(ub) - 4.0 * c * c * ra * rb;
    return k * (lap_lap + mixed + grad_grad);
}

}  // namespace

double stein_kernel(const KernelSpec& k, const Vector& a, const Vector& ua, const Vector& b, const Vector& ub) {
    if (k.kind == KernelKind::gaussian) {
        if (!(k.bandwidth > 0.0)) throw InvalidInput("gaussian kernel bandwidth must be positive");
        return gaussian_stein_kernel(k.bandwidth, a, ua, b, ub);
    }
    const auto basis = enumerate_exponents(a.size(), k.degree);
    return stein_covariates(basis, a, ua).dot(stein_covariates(basis, b, ub));
}

Matrix stein_kernel_cross(const KernelSpec& k, const Matrix& theta_a, const Matrix& grad_a, const Matrix& theta_b,
                          const Matrix& grad_b) {
    if (theta_a.cols() != theta_b.cols()) throw InvalidInput("stein kernel: dimension mismatch");
    if (k.kind == KernelKind::polynomial) {
        // Finite feature map: K0 = X_a X_b' with X the Stein covariates.
        const auto basis = enumerate_exponents(theta_a.cols(), k.degree);
        const Matrix xa = build_design_matrix(SampleSet(theta_a, grad_a), basis);
        const Matrix xb = build_design_matrix(SampleSet(theta_b, grad_b), basis);
        return xa * xb.transpose();
    }
    if (!(k.bandwidth > 0.0)) throw InvalidInput("gaussian kernel bandwidth must be positive");
    Matrix out(theta_a.rows(), theta_b.rows());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < theta_a.rows(); ++i) {
        const Vector a = theta_a.row(i).transpose(), ua = grad_a.row(i).transpose();
        for (Index l = 0; l < theta_b.rows(); ++l)
            out(i, l) = gaussian_stein_kernel(k.bandwidth, a, ua, theta_b.row(l).transpose(), grad_b.row(l).transpose());
    }
    return out;
}

Matrix stein_kernel_matrix(const SampleSet& s, const KernelSpec& k) {
    if (k.kind == KernelKind::polynomial)
        return stein_kernel_cross(k, s.theta(), s.grad_log_target(), s.theta(), s.grad_log_target());
    if (!(k.bandwidth > 0.0)) throw InvalidInput("gaussian kernel bandwidth must be positive");
    const Index n = s.count();
    Matrix out(n, n);
#pragma omp parallel for schedule(dynamic, 16)
    for (Index i = 0; i < n; ++i) {
        const Vector a = s.theta().row(i).transpose(), ua = s.grad_log_target().row(i).transpose();
        for (Index l = i; l < n; ++l) {
            const double v = gaussian_stein_kernel(k.bandwidth, a, ua, s.theta().row(l).transpose(),
                                                   s.grad_log_target().row(l).transpose());
            out(i, l) = v;
            out(l, i) = v;
        }
    }
    return out;
}

Vector CfFit::predict(const KernelSpec& k, const SampleSet& train, const Matrix& theta, const Matrix& grad) const {
    const Matrix cross = stein_kernel_cross(k, theta, grad, train.theta(), train.grad_log_target());
    return (constant + (cross * alpha).array()).matrix();
}

CfFit cf_fit(const SampleSet& s, const Vector& f, const KernelSpec& k, double lambda_r) {
    const Index n = s.count();
    if (n < 1) throw InsufficientSamples("control functionals need at least one sample");
    if (f.size() != n) throw InvalidInput("integrand length does not match sample count");
    if (!(lambda_r >= 0.0)) throw InvalidInput("CF regulariser must be nonnegative");
    if (!s.grad_log_target().allFinite()) throw InvalidInput("control functionals need every gradient component");
    const Matrix k0 = stein_kernel_matrix(s, k);
    const double mean_diag = k0.diagonal().mean();
    const double base = (mean_diag > 0.0 ? mean_diag : 1.0) * k.jitter;
    const Vector ones = Vector::Ones(n);

    double jitter = base;
    for (int attempt = 0; attempt <= 8; ++attempt, jitter *= 2.0) {
        Matrix kk = k0;
        kk.diagonal().array() += static_cast<double>(n) * lambda_r + jitter;
        Eigen::LLT<Matrix> llt(kk);
        if (llt.info() != Eigen::Success) continue;
        const Vector kinv_one = llt.solve(ones);
        const Vector kinv_f = llt.solve(f);
        const double denom = ones.dot(kinv_one);
        if (!(denom > 0.0) || !std::isfinite(denom)) continue;
        CfFit out;
        out.constant = ones.dot(kinv_f) / denom;
        out.alpha = kinv_f - out.constant * kinv_one;
        out.jitter_used = jitter;
        if (!out.alpha.allFinite()) continue;
        out.estimate = s.weights().dot(f - k0 * out.alpha);
        return out;
    }
    throw ConditioningError("Stein kernel matrix is not positive definite after jitter");
}

double cf_estimate(const SampleSet& s, const IntegrandValues& phi, const KernelSpec& k, double lambda_r) {
    return cf_fit(s, phi.values, k, lambda_r).estimate;
}

std::vector<double> default_bandwidth_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 14; ++i) grid.push_back(std::pow(10.0, -3.0 + 0.5 * i));
    return grid;
}

BandwidthCvResult cf_cv_bandwidth(const SampleSet& s, const IntegrandValues& phi, std::vector<double> grid, int folds,
                                  std::uint64_t seed, double lambda_r) {
    if (grid.empty()) throw InvalidInput("bandwidth grid is empty");
    BandwidthCvResult out;
    out.grid = std::move(grid);
    if (out.grid.size() == 1) {
        out.bandwidth = out.grid.front();
        out.cv_error = {0.0};
        return out;
    }
    const Index n = s.count();
    if (n < 2) throw InsufficientSamples("bandwidth cross-validation needs at least two samples");
    const int k = static_cast<int>(std::min<Index>(folds, n));
    const auto assignment = assign_folds(n, k, seed);
    out.cv_error.assign(out.grid.size(), 0.0);
    for (int fold = 0; fold < k; ++fold) {
        std::vector<Index> train, test;
        for (Index i = 0; i < n; ++i) (assignment[static_cast<std::size_t>(i)] == fold ? test : train).push_back(i);
        const SampleSet tr = s.subset(train);
        const SampleSet te = s.subset(test);
        Vector ftr(static_cast<Index>(train.size())), fte(static_cast<Index>(test.size()));
        for (std::size_t r = 0; r < train.size(); ++r) ftr[static_cast<Index>(r)] = phi.values[train[r]];
        for (std::size_t r = 0; r < test.size(); ++r) fte[static_cast<Index>(r)] = phi.values[test[r]];
        for (std::size_t g = 0; g < out.grid.size(); ++g) {
            KernelSpec spec{KernelKind::gaussian, out.grid[g], 2, 1e-10};
            double err = 0.0;
            try {
                const CfFit fit = cf_fit(tr, ftr, spec, lambda_r);
                err = (fte - fit.predict(spec, tr, te.theta(), te.grad_log_target())).squaredNorm();
            } catch (const NumericError&) {
                err = std::numeric_limits<double>::infinity();
            }
            out.cv_error[g] += err / k;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (double e : out.cv_error) best = std::min(best, e);
    std::size_t chosen = out.grid.size();
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
        if (!(out.cv_error[g] <= best * (1.0 + 1e-10))) continue;
        if (chosen == out.grid.size() || out.grid[g] > out.grid[chosen]) chosen = g;
    }
    if (chosen == out.grid.size()) throw ConditioningError("no bandwidth produced a finite cross-validation error");
    out.bandwidth = out.grid[chosen];
    return out;
}

}  // namespace zvcv
