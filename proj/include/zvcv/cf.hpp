#pragma once

#include "zvcv/samples.hpp"

#include <cstdint>
#include <vector>

namespace zvcv {

enum class KernelKind { gaussian, polynomial };

/// Base kernel for control functionals. Gaussian: k = exp(-|a-b|^2 / bandwidth).
/// Polynomial: k = sum_j P_j(a) P_j(b) over the monomials of total degree
/// 1..degree (the constant monomial is annihilated by the Stein operator).
struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double bandwidth = 1.0;
    int degree = 2;
    /// Diagonal jitter relative to the mean diagonal of K0.
    double jitter = 1e-10;
};

/// k0(a, b) = L_a L_b k(a, b) with L the second-order Langevin Stein
/// operator L g = lap g + grad g . u, u = grad log p.
double stein_kernel(const KernelSpec& k, const Vector& a, const Vector& ua, const Vector& b, const Vector& ub);

/// Gram matrix of the Stein kernel between two point sets.
Matrix stein_kernel_cross(const KernelSpec& k, const Matrix& theta_a, const Matrix& grad_a, const Matrix& theta_b,
                          const Matrix& grad_b);

/// N x N Stein kernel matrix K0 of a sample set.
Matrix stein_kernel_matrix(const SampleSet& s, const KernelSpec& k);

struct CfFit {
    double estimate = 0.0;
    double constant = 0.0;  // 1'K^-1 f / 1'K^-1 1
    Vector alpha;           // K^-1 (f - constant)
    double jitter_used = 0.0;

    /// Surrogate constant + sum_l k0(theta, theta_l) alpha_l at new points.
    Vector predict(const KernelSpec& k, const SampleSet& train, const Matrix& theta, const Matrix& grad) const;
};

/// Constant-offset control functional with K = K0 + N lambda_r I (+ jitter).
/// Weights enter only through the final average sum_i w_i (f_i - (K0 alpha)_i),
/// which equals `constant` for uniform weights.
CfFit cf_fit(const SampleSet& s, const Vector& f, const KernelSpec& k, double lambda_r = 0.0);

double cf_estimate(const SampleSet& s, const IntegrandValues& phi, const KernelSpec& k, double lambda_r = 0.0);

/// 10^(-3 + 0.5 i), i = 0..14.
std::vector<double> default_bandwidth_grid();

struct BandwidthCvResult {
    double bandwidth = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_error;
};

/// k-fold CV (default 5) of held-out squared prediction error of the
/// Gaussian-kernel surrogate over the bandwidth grid; ties go to the larger
/// bandwidth.
BandwidthCvResult cf_cv_bandwidth(const SampleSet& s, const IntegrandValues& phi,
                                  std::vector<double> grid = default_bandwidth_grid(), int folds = 5,
                                  std::uint64_t seed = 1, double lambda_r = 0.0);

}  // namespace zvcv
