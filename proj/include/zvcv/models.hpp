#pragma once

#include "zvcv/samples.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace zvcv {

/// Log-likelihood, log-prior and their gradients at one parameter value.
struct ModelEval {
    double log_like = 0.0;
    double log_prior = 0.0;
    Vector grad_log_like;
    Vector grad_log_prior;
};

/// A Bayesian target p(theta | y) proportional to l(y | theta) p0(theta),
/// expressed on the scale the sampler works on. `transform()` maps the
/// natural parameters to that scale (identity for unconstrained models).
class TargetModel {
public:
    virtual ~TargetModel() = default;

    virtual std::string name() const = 0;
    virtual Index dim() const = 0;
    /// Non-finite values are allowed for points outside the support.
    virtual ModelEval evaluate(const Vector& theta) const = 0;
    /// Rows are independent prior draws on the sampling scale.
    virtual Matrix sample_prior(Index n, std::uint64_t seed) const = 0;
    virtual ParameterTransform transform() const { return ParameterTransform::identity(dim()); }
    /// Why the Stein identity holds for this target (tails of p decay
    /// faster than any polynomial).
    virtual std::string boundary_note() const = 0;
    /// Closed-form log evidence, when known.
    virtual std::optional<double> log_evidence() const { return std::nullopt; }

    double log_like(const Vector& theta) const { return evaluate(theta).log_like; }
    double log_prior(const Vector& theta) const { return evaluate(theta).log_prior; }
};

using ModelPtr = std::shared_ptr<const TargetModel>;

/// N(mu, sigma) as the whole target: the prior, with l == 1.
class GaussianModel final : public TargetModel {
public:
    GaussianModel(Vector mu, Matrix sigma);

    std::string name() const override { return "gaussian"; }
    Index dim() const override { return mu_.size(); }
    ModelEval evaluate(const Vector& theta) const override;
    Matrix sample_prior(Index n, std::uint64_t seed) const override;
    std::string boundary_note() const override;
    std::optional<double> log_evidence() const override { return 0.0; }

private:
    Vector mu_;
    Matrix sigma_;
    Matrix precision_;
    Matrix chol_;
    double log_norm_;
};

/// Prior N(m0, S0) with n observations y_i ~ N(theta, noise). Everything
/// about its power posteriors is available in closed form, which makes it
/// the reference target for evidence estimators.
class ConjugateGaussianModel final : public TargetModel {
public:
    ConjugateGaussianModel(Vector prior_mean, Matrix prior_cov, Matrix noise_cov, Matrix data);

    std::string name() const override { return "conjugate_gaussian"; }
    Index dim() const override { return m0_.size(); }
    ModelEval evaluate(const Vector& theta) const override;
    Matrix sample_prior(Index n, std::uint64_t seed) const override;
    std::string boundary_note() const override;
    std::optional<double> log_evidence() const override { return log_z_; }

    /// Mean and covariance of the power posterior p_t.
    std::pair<Vector, Matrix> power_posterior(double t) const;
    /// E_{p_t}[log l] and V_{p_t}[log l].
    double expected_log_like(double t) const;
    double variance_log_like(double t) const;

private:
    Vector m0_;
    Matrix s0_, s0_inv_, noise_inv_, s0_chol_;
    Matrix data_;
    Vector ybar_;
    Matrix a_;  // n * noise^-1
    double const_ = 0.0;  // log l at theta = ybar
    double log_prior_norm_ = 0.0;
    double log_z_ = 0.0;
};

/// Bayesian logistic regression, y in {0, 1}, independent normal priors.
/// The design includes the intercept column.
class LogisticModel final : public TargetModel {
public:
    LogisticModel(Matrix design, Vector response, Vector prior_sds);

    std::string name() const override { return "logistic"; }
    Index dim() const override { return x_.cols(); }
    ModelEval evaluate(const Vector& theta) const override;
    Matrix sample_prior(Index n, std::uint64_t seed) const override;
    std::string boundary_note() const override;

    const Matrix& design() const { return x_; }
    const Vector& response() const { return y_; }

private:
    Matrix x_;
    Vector y_;
    Vector sds_;
};

/// Prepend an intercept column and scale each predictor to mean 0, sd 0.5.
Matrix prepare_logistic_design(const Matrix& predictors);

/// Intercept N(0, 20^2), slopes N(0, 5^2).
Vector default_logistic_prior_sds(Index dim);

/// Logistic model on the given predictors (standardised) and 0/1 response.
LogisticModel make_logistic_model(const Matrix& predictors, const Vector& response);

/// Seeded synthetic data set with `n` observations and `dim` coefficients
/// (intercept included).
LogisticModel synthetic_logistic_model(Index n = 100, Index dim = 5, std::uint64_t seed = 20190101);

/// Cormack-Jolly-Seber capture-recapture model over 7 years with
/// 11 parameters (phi_1..phi_5, p_2..p_6, phi_6 * p_7), uniform priors,
/// sampled on the logit scale.
class RecaptureModel final : public TargetModel {
public:
    /// `released[i]` birds released in year i+1; `recaptured(i, k)` first
    /// recaptured in year k+1 (entries with k <= i must be zero).
    RecaptureModel(Vector released, Matrix recaptured);

    std::string name() const override { return "recapture"; }
    Index dim() const override { return 11; }
    ModelEval evaluate(const Vector& psi) const override;
    Matrix sample_prior(Index n, std::uint64_t seed) const override;
    ParameterTransform transform() const override;
    std::string boundary_note() const override;

    /// Cell probabilities q(i, k) and never-seen probabilities chi_i at
    /// natural-scale theta.
    Matrix cell_probabilities(const Vector& theta) const;
    Vector never_seen_probabilities(const Vector& theta) const;

    const Vector& released() const { return released_; }
    const Matrix& recaptured() const { return y_; }

private:
    Vector released_;
    Matrix y_;
    Vector never_seen_;
};

/// The European dipper data (6 release cohorts, 7 years).
RecaptureModel dipper_recapture_model();

/// Read a recapture table: header row, then one row per release year with
/// the release count followed by recaptures in years 2..7.
RecaptureModel read_recapture_csv(const std::filesystem::path& path);

/// Built-in model by name (gaussian, conjugate_gaussian, logistic,
/// recapture) or a JSON manifest path.
ModelPtr load_model(const std::string& name_or_path);
ModelPtr load_model_manifest(const std::filesystem::path& path);

/// Evaluate the model at each row of theta and assemble a sample set for
/// the tempered target at inverse temperature t.
struct EvaluatedParticles {
    Vector log_like;
    Vector log_prior;
    Matrix grad_log_like;
    Matrix grad_log_prior;
};
EvaluatedParticles evaluate_all(const TargetModel& model, const Matrix& theta);

}  // namespace zvcv
