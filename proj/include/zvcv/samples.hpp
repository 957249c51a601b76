#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace zvcv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

Vector uniform_weights(Index n);

/// Normalise nonnegative weights to sum to one. Throws InvalidInput on
/// negative, non-finite or all-zero weights.
Vector normalise_weights(const Vector& w);

/// N weighted draws in d dimensions with the gradient of the log target at
/// each draw.
///
/// Gradient entries may be NaN to mark a component that was never computed;
/// only bases restricted to the remaining coordinates can use such a set.
class SampleSet {
public:
    SampleSet() = default;
    SampleSet(Matrix theta, Matrix grad_log_target, Vector weights,
              std::optional<Vector> log_like = std::nullopt,
              std::optional<Vector> log_prior = std::nullopt);
    /// Uniform weights.
    SampleSet(Matrix theta, Matrix grad_log_target);

    const Matrix& theta() const { return theta_; }
    const Matrix& grad_log_target() const { return grad_; }
    const Vector& weights() const { return weights_; }
    const std::optional<Vector>& log_like() const { return log_like_; }
    const std::optional<Vector>& log_prior() const { return log_prior_; }

    Index count() const { return theta_.rows(); }
    Index dim() const { return theta_.cols(); }

    /// Rows `idx` with weights renormalised over the subset.
    SampleSet subset(const std::vector<Index>& idx) const;
    SampleSet with_weights(Vector weights) const;

private:
    Matrix theta_;
    Matrix grad_;
    Vector weights_;
    std::optional<Vector> log_like_;
    std::optional<Vector> log_prior_;
};

struct IntegrandValues {
    Vector values;
    std::string label;
};

/// Per-column location/scale used to put a regression on the standardised
/// scale. `retained` lists the covariates kept, in order; `dropped` those
/// with (numerically) zero spread.
struct Standardisation {
    double response_mean = 0.0;
    double response_sd = 0.0;
    Vector covariate_means;
    Vector covariate_sds;
    std::vector<Index> retained;
    std::vector<Index> dropped;
};

struct StandardisedData {
    Matrix x;  // N x retained.size()
    Vector f;
    Standardisation info;
};

double weighted_mean(const Vector& a, const Vector& w);

/// Weighted standard deviation with the reliability-weights denominator
/// 1 - sum(w^2); equals the (N-1)-denominator sd for uniform weights.
double weighted_sd(const Vector& a, const Vector& w);

/// Centre and scale every column of X and the response f. Zero-spread
/// covariates are dropped; a zero-spread response standardises to zeros.
StandardisedData standardise(const Matrix& x, const Vector& f, const Vector& w);

/// Weighted covariance of the rows of `theta` (reliability-weight
/// denominator).
Matrix weighted_covariance(const Matrix& theta, const Vector& w);

enum class TransformKind { identity, log, logit };

/// Coordinatewise reparameterisation psi = f(theta).
struct ParameterTransform {
    std::vector<TransformKind> kinds;

    static ParameterTransform identity(Index d);
    static ParameterTransform uniform(Index d, TransformKind kind);

    /// psi = f(theta). Throws DomainError outside the support.
    Vector forward(const Vector& theta) const;
    Vector inverse(const Vector& psi) const;
    /// log |d theta / d psi| evaluated at psi.
    double log_jacobian(const Vector& psi) const;
};

/// Map samples to psi = f(theta). Gradients become those of
/// log p_psi(psi) = log p_theta(f^-1(psi)) + log|d f^-1/d psi| and the
/// Jacobian term is added to `log_prior` when present.
SampleSet transform_samples(const SampleSet& s, const ParameterTransform& map);

/// Undo transform_samples.
SampleSet inverse_transform_samples(const SampleSet& s, const ParameterTransform& map);

}  // namespace zvcv
