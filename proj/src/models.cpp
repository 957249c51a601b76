#include "zvcv/models.hpp"

#include "zvcv/archive.hpp"
#include "zvcv/errors.hpp"
#include "zvcv/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace zvcv {

namespace {

constexpr double log_2pi = 1.8378770664093454836;

Matrix cholesky_or_throw(const Matrix& m, const std::string& what) {
    if (m.rows() != m.cols()) throw InvalidInput(what + " must be square");
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw InvalidInput(what + " must be symmetric positive definite");
    return llt.matrixL();
}

double log_det_from_chol(const Matrix& l) { return 2.0 * l.diagonal().array().log().sum(); }

Matrix gaussian_draws(const Vector& mean, const Matrix& chol, Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix z(n, mean.size());
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < mean.size(); ++j) z(i, j) = rng.normal();
    Matrix out = z * chol.transpose();
    out.rowwise() += mean.transpose();
    return out;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

// ---------------------------------------------------------------- gaussian

GaussianModel::GaussianModel(Vector mu, Matrix sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    if (mu_.size() < 1 || sigma_.rows() != mu_.size()) throw InvalidInput("gaussian model: dimension mismatch");
    chol_ = cholesky_or_throw(sigma_, "gaussian covariance");
    precision_ = sigma_.llt().solve(Matrix::Identity(mu_.size(), mu_.size()));
    log_norm_ = -0.5 * (static_cast<double>(mu_.size()) * log_2pi + log_det_from_chol(chol_));
}

ModelEval GaussianModel::evaluate(const Vector& theta) const {
    const Vector r = theta - mu_;
    ModelEval e;
    e.grad_log_prior = -precision_ * r;
    e.log_prior = log_norm_ + 0.5 * r.dot(e.grad_log_prior);
    e.log_like = 0.0;
    e.grad_log_like = Vector::Zero(dim());
    return e;
}

Matrix GaussianModel::sample_prior(Index n, std::uint64_t seed) const { return gaussian_draws(mu_, chol_, n, seed); }

std::string GaussianModel::boundary_note() const {
    return "Gaussian tails decay like exp(-|theta|^2), faster than any polynomial.";
}

// ------------------------------------------------------ conjugate gaussian

ConjugateGaussianModel::ConjugateGaussianModel(Vector prior_mean, Matrix prior_cov, Matrix noise_cov, Matrix data)
    : m0_(std::move(prior_mean)), s0_(std::move(prior_cov)), data_(std::move(data)) {
    const Index d = m0_.size();
    if (d < 1 || s0_.rows() != d || noise_cov.rows() != d || data_.cols() != d)
        throw InvalidInput("conjugate gaussian model: dimension mismatch");
    if (data_.rows() < 1) throw InvalidInput("conjugate gaussian model needs at least one observation");
    s0_chol_ = cholesky_or_throw(s0_, "prior covariance");
    const Matrix noise_chol = cholesky_or_throw(noise_cov, "noise covariance");
    const Matrix eye = Matrix::Identity(d, d);
    s0_inv_ = s0_.llt().solve(eye);
    noise_inv_ = noise_cov.llt().solve(eye);
    const double n = static_cast<double>(data_.rows());
    ybar_ = data_.colwise().mean().transpose();
    a_ = n * noise_inv_;

    double scatter = 0.0;
    for (Index i = 0; i < data_.rows(); ++i) {
        const Vector r = data_.row(i).transpose() - ybar_;
        scatter += r.dot(noise_inv_ * r);
    }
    const double noise_logdet = log_det_from_chol(noise_chol);
    const_ = -0.5 * n * (static_cast<double>(d) * log_2pi + noise_logdet) - 0.5 * scatter;
    log_prior_norm_ = -0.5 * (static_cast<double>(d) * log_2pi + log_det_from_chol(s0_chol_));

    // exp(-n/2 (theta - ybar)' noise^-1 (theta - ybar)) is an unnormalised
    // N(ybar, noise / n); its product with the prior integrates to
    // N(ybar; m0, S0 + noise / n).
    const Matrix sn = noise_cov / n;
    const Matrix marg = s0_ + sn;
    const Matrix marg_chol = cholesky_or_throw(marg, "marginal covariance");
    const Vector r = ybar_ - m0_;
    const double log_marg =
        -0.5 * (static_cast<double>(d) * log_2pi + log_det_from_chol(marg_chol) + r.dot(marg.llt().solve(r)));
    log_z_ = const_ + 0.5 * (static_cast<double>(d) * log_2pi + noise_logdet - static_cast<double>(d) * std::log(n)) +
             log_marg;
}

ModelEval ConjugateGaussianModel::evaluate(const Vector& theta) const {
    ModelEval e;
    const Vector rl = theta - ybar_;
    e.grad_log_like = -a_ * rl;
    e.log_like = const_ + 0.5 * rl.dot(e.grad_log_like);
    const Vector rp = theta - m0_;
    e.grad_log_prior = -s0_inv_ * rp;
    e.log_prior = log_prior_norm_ + 0.5 * rp.dot(e.grad_log_prior);
    return e;
}

Matrix ConjugateGaussianModel::sample_prior(Index n, std::uint64_t seed) const {
    return gaussian_draws(m0_, s0_chol_, n, seed);
}

std::string ConjugateGaussianModel::boundary_note() const {
    return "Every power posterior is Gaussian; tails decay faster than any polynomial.";
}

std::pair<Vector, Matrix> ConjugateGaussianModel::power_posterior(double t) const {
    const Matrix precision = s0_inv_ + t * a_;
    const auto llt = precision.llt();
    const Matrix cov = llt.solve(Matrix::Identity(dim(), dim()));
    const Vector mean = llt.solve(s0_inv_ * m0_ + t * a_ * ybar_);
    return {mean, cov};
}

double ConjugateGaussianModel::expected_log_like(double t) const {
    const auto [m, c] = power_posterior(t);
    const Vector delta = m - ybar_;
    return const_ - 0.5 * ((a_ * c).trace() + delta.dot(a_ * delta));
}

double ConjugateGaussianModel::variance_log_like(double t) const {
    // log l = const - q/2 with q a quadratic form in a Gaussian vector:
    // Var[q/2] = tr(ACAC)/2 + delta' A C A delta.
    const auto [m, c] = power_posterior(t);
    const Vector delta = m - ybar_;
    const Matrix ac = a_ * c;
    return 0.5 * (ac * ac).trace() + delta.dot(ac * (a_ * delta));
}

// ---------------------------------------------------------------- logistic

LogisticModel::LogisticModel(Matrix design, Vector response, Vector prior_sds)
    : x_(std::move(design)), y_(std::move(response)), sds_(std::move(prior_sds)) {
    if (x_.rows() < 1 || x_.cols() < 1) throw InvalidInput("logistic model: empty design");
    if (y_.size() != x_.rows()) throw InvalidInput("logistic model: response length does not match design");
    if (sds_.size() != x_.cols()) throw InvalidInput("logistic model: one prior sd per coefficient required");
    if (!x_.allFinite()) throw InvalidInput("logistic model: non-finite design entries");
    for (Index i = 0; i < y_.size(); ++i)
        if (y_[i] != 0.0 && y_[i] != 1.0) throw InvalidInput("logistic model: response must be 0 or 1");
    if ((sds_.array() <= 0.0).any()) throw InvalidInput("logistic model: prior sds must be positive");
}

ModelEval LogisticModel::evaluate(const Vector& theta) const {
    const Vector eta = x_ * theta;
    Vector resid(eta.size());
    double ll = 0.0;
    for (Index i = 0; i < eta.size(); ++i) {
        ll += y_[i] * eta[i] - softplus(eta[i]);
        resid[i] = y_[i] - sigmoid(eta[i]);
    }
    ModelEval e;
    e.log_like = ll;
    e.grad_log_like = x_.transpose() * resid;
    const Vector z = theta.cwiseQuotient(sds_);
    e.log_prior = -0.5 * z.squaredNorm() - sds_.array().log().sum() - 0.5 * static_cast<double>(dim()) * log_2pi;
    e.grad_log_prior = -z.cwiseQuotient(sds_);
    return e;
}

Matrix LogisticModel::sample_prior(Index n, std::uint64_t seed) const {
    Rng rng(seed);
    Matrix out(n, dim());
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < dim(); ++j) out(i, j) = sds_[j] * rng.normal();
    return out;
}

std::string LogisticModel::boundary_note() const {
    return "Gaussian priors with a log-concave likelihood bounded above; the posterior has Gaussian tails.";
}

Matrix prepare_logistic_design(const Matrix& predictors) {
    const Index n = predictors.rows();
    if (n < 2) throw InsufficientSamples("standardising predictors needs at least two observations");
    Matrix out(n, predictors.cols() + 1);
    out.col(0).setOnes();
    const Vector w = uniform_weights(n);
    for (Index j = 0; j < predictors.cols(); ++j) {
        const Vector col = predictors.col(j);
        const double mean = weighted_mean(col, w);
        const double sd = weighted_sd(col, w);
        if (!(sd > 0.0)) throw InvalidInput("predictor " + std::to_string(j + 1) + " is constant");
        out.col(j + 1) = ((col.array() - mean) * (0.5 / sd)).matrix();
    }
    return out;
}

Vector default_logistic_prior_sds(Index dim) {
    Vector sds = Vector::Constant(dim, 5.0);
    sds[0] = 20.0;
    return sds;
}

LogisticModel make_logistic_model(const Matrix& predictors, const Vector& response) {
    const Matrix x = prepare_logistic_design(predictors);
    return LogisticModel(x, response, default_logistic_prior_sds(x.cols()));
}

LogisticModel synthetic_logistic_model(Index n, Index dim, std::uint64_t seed) {
    if (dim < 2) throw InvalidInput("synthetic logistic model needs an intercept and at least one predictor");
    Rng rng(seed);
    Matrix predictors(n, dim - 1);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < dim - 1; ++j) predictors(i, j) = rng.normal();
    const Matrix x = prepare_logistic_design(predictors);
    Vector truth(dim);
    truth[0] = -0.5;
    for (Index j = 1; j < dim; ++j) truth[j] = (j % 2 == 0 ? -1.0 : 1.0) * (0.5 + 0.5 * static_cast<double>(j));
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = rng.uniform() < sigmoid(x.row(i).dot(truth)) ? 1.0 : 0.0;
    return LogisticModel(x, y, default_logistic_prior_sds(dim));
}

// --------------------------------------------------------------- recapture

namespace {

constexpr int kYears = 7;
constexpr int kCohorts = 6;

// One factor of a cell probability: theta[index] or 1 - theta[index].
struct Factor {
    int index;
    bool complement;
};

// Natural-scale parameter layout: phi_1..phi_5 -> 0..4, p_2..p_6 -> 5..9,
// phi_6 p_7 -> 10. Cohort i (0-based, released in year i+1) first
// recaptured in year k+1 has probability
// phi_{i+1} p_{k+1} prod_{m=i+2}^{k} phi_m (1 - p_m); phi_6 and p_7 only
// ever appear as their product.
std::vector<Factor> cell_factors(int i, int k) {
    auto phi = [](int year) { return year - 1; };  // phi_year, year 1..5
    auto p = [](int year) { return year + 3; };    // p_year, year 2..6
    std::vector<Factor> out;
    if (k == kYears - 1) {
        if (i < kCohorts - 1) out.push_back({phi(i + 1), false});
        for (int m = i + 2; m <= 5; ++m) {
            out.push_back({phi(m), false});
            out.push_back({p(m), true});
        }
        if (i < kCohorts - 1) out.push_back({p(6), true});
        out.push_back({10, false});
    } else {
        out.push_back({phi(i + 1), false});
        for (int m = i + 2; m <= k; ++m) {
            out.push_back({phi(m), false});
            out.push_back({p(m), true});
        }
        out.push_back({p(k + 1), false});
    }
    return out;
}

const std::vector<std::vector<std::vector<Factor>>>& all_cell_factors() {
    static const auto table = [] {
        std::vector<std::vector<std::vector<Factor>>> t(kCohorts, std::vector<std::vector<Factor>>(kYears));
        for (int i = 0; i < kCohorts; ++i)
            for (int k = i + 1; k < kYears; ++k) t[i][k] = cell_factors(i, k);
        return t;
    }();
    return table;
}

}  // namespace

RecaptureModel::RecaptureModel(Vector released, Matrix recaptured)
    : released_(std::move(released)), y_(std::move(recaptured)) {
    if (released_.size() != kCohorts || y_.rows() != kCohorts || y_.cols() != kYears)
        throw InvalidInput("recapture model expects 6 release cohorts over 7 years");
    never_seen_.resize(kCohorts);
    for (int i = 0; i < kCohorts; ++i) {
        double caught = 0.0;
        for (int k = 0; k < kYears; ++k) {
            const double v = y_(i, k);
            if (!(v >= 0.0) || v != std::floor(v)) throw InvalidInput("recapture counts must be nonnegative integers");
            if (k <= i && v != 0.0) throw InvalidInput("recapture recorded before release");
            caught += v;
        }
        never_seen_[i] = released_[i] - caught;
        if (!(never_seen_[i] >= 0.0)) throw InvalidInput("more recaptures than releases in cohort " + std::to_string(i + 1));
    }
}

Matrix RecaptureModel::cell_probabilities(const Vector& theta) const {
    const auto& table = all_cell_factors();
    Matrix q = Matrix::Zero(kCohorts, kYears);
    for (int i = 0; i < kCohorts; ++i)
        for (int k = i + 1; k < kYears; ++k) {
            double v = 1.0;
            for (const auto& f : table[i][k]) v *= f.complement ? 1.0 - theta[f.index] : theta[f.index];
            q(i, k) = v;
        }
    return q;
}

Vector RecaptureModel::never_seen_probabilities(const Vector& theta) const {
    return (1.0 - cell_probabilities(theta).rowwise().sum().array()).matrix();
}

ModelEval RecaptureModel::evaluate(const Vector& psi) const {
    if (psi.size() != dim()) throw InvalidInput("recapture model: expected 11 parameters");
    Vector theta(dim());
    for (Index j = 0; j < dim(); ++j) theta[j] = sigmoid(psi[j]);
    // d log theta / d psi = 1 - theta; d log(1 - theta) / d psi = -theta.
    const auto& table = all_cell_factors();
    ModelEval e;
    e.log_like = 0.0;
    e.grad_log_like = Vector::Zero(dim());
    for (int i = 0; i < kCohorts; ++i) {
        double seen = 0.0;
        Vector grad_seen = Vector::Zero(dim());
        for (int k = i + 1; k < kYears; ++k) {
            double log_q = 0.0;
            Vector grad_log_q = Vector::Zero(dim());
            for (const auto& f : table[i][k]) {
                const double th = theta[f.index];
                if (f.complement) {
                    log_q += std::log1p(-th);
                    grad_log_q[f.index] -= th;
                } else {
                    log_q += std::log(th);
                    grad_log_q[f.index] += 1.0 - th;
                }
            }
            const double q = std::exp(log_q);
            seen += q;
            grad_seen += q * grad_log_q;
            if (y_(i, k) > 0.0) {
                e.log_like += y_(i, k) * log_q;
                e.grad_log_like += y_(i, k) * grad_log_q;
            }
        }
        const double chi = 1.0 - seen;
        if (never_seen_[i] > 0.0) {
            e.log_like += never_seen_[i] * std::log(chi);
            e.grad_log_like -= (never_seen_[i] / chi) * grad_seen;
        }
    }
    // Uniform prior on theta is the logistic density on psi.
    e.log_prior = 0.0;
    e.grad_log_prior.resize(dim());
    for (Index j = 0; j < dim(); ++j) {
        e.log_prior += psi[j] - 2.0 * softplus(psi[j]);
        e.grad_log_prior[j] = 1.0 - 2.0 * theta[j];
    }
    return e;
}

Matrix RecaptureModel::sample_prior(Index n, std::uint64_t seed) const {
    Rng rng(seed);
    Matrix out(n, dim());
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < dim(); ++j) {
            const double u = rng.uniform_open();
            out(i, j) = std::log(u) - std::log1p(-u);
        }
    return out;
}

ParameterTransform RecaptureModel::transform() const { return ParameterTransform::uniform(dim(), TransformKind::logit); }

std::string RecaptureModel::boundary_note() const {
    return "On the logit scale the uniform prior becomes a logistic density with exponential tails, and the "
           "likelihood is bounded, so the target decays faster than any polynomial.";
}

RecaptureModel dipper_recapture_model() {
    Vector released(6);
    released << 22, 60, 78, 80, 88, 98;
    Matrix y = Matrix::Zero(6, 7);
    y.row(0) << 0, 11, 2, 0, 0, 0, 0;
    y.row(1) << 0, 0, 24, 1, 0, 0, 0;
    y.row(2) << 0, 0, 0, 34, 2, 0, 0;
    y.row(3) << 0, 0, 0, 0, 45, 1, 2;
    y.row(4) << 0, 0, 0, 0, 0, 51, 0;
    y.row(5) << 0, 0, 0, 0, 0, 0, 52;
    return RecaptureModel(released, y);
}

RecaptureModel read_recapture_csv(const std::filesystem::path& path) {
    const Matrix m = read_matrix_csv(path, true);
    if (m.rows() != 6 || m.cols() != 7) throw InvalidInput(path.string() + ": expected 6 rows of 7 columns");
    Matrix y = Matrix::Zero(6, 7);
    y.rightCols(6) = m.rightCols(6);
    return RecaptureModel(m.col(0), y);
}

// ------------------------------------------------------------- factories

namespace {

using nlohmann::json;

Vector json_vector(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_array()) throw ConfigError("model manifest: '" + key + "' must be an array");
    const auto v = j[key].get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix json_matrix(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].empty())
        throw ConfigError("model manifest: '" + key + "' must be a nonempty array of rows");
    const auto rows = j[key].get<std::vector<std::vector<double>>>();
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ConfigError("model manifest: '" + key + "' is ragged");
        for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    return m;
}

ConjugateGaussianModel default_conjugate_gaussian() {
    // Ten-dimensional location problem: vague N(0, 100 I) prior and 40
    // unit-noise observations around (1, -1, 1, -1, ...). Annealing from the
    // prior to the posterior takes about 20 temperatures at rho = 0.5.
    const Index d = 10, n = 40;
    Rng rng(7);
    Matrix data(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < d; ++k) data(i, k) = (k % 2 == 0 ? 1.0 : -1.0) + rng.normal();
    return ConjugateGaussianModel(Vector::Zero(d), 100.0 * Matrix::Identity(d, d), Matrix::Identity(d, d), data);
}

}  // namespace

ModelPtr load_model(const std::string& name_or_path) {
    if (name_or_path == "gaussian" || name_or_path == "prior_only") {
        Vector mu(2);
        mu << 3.0, -1.0;
        Matrix s(2, 2);
        s << 4.0, 0.6, 0.6, 1.0;
        return std::make_shared<GaussianModel>(mu, s);
    }
    if (name_or_path == "conjugate_gaussian") return std::make_shared<ConjugateGaussianModel>(default_conjugate_gaussian());
    if (name_or_path == "logistic") return std::make_shared<LogisticModel>(synthetic_logistic_model());
    if (name_or_path == "recapture") return std::make_shared<RecaptureModel>(dipper_recapture_model());
    const std::filesystem::path path(name_or_path);
    if (path.extension() == ".json") return load_model_manifest(path);
    throw ConfigError("unknown model '" + name_or_path +
                      "' (expected gaussian, conjugate_gaussian, logistic, recapture or a .json manifest)");
}

ModelPtr load_model_manifest(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "gaussian") return std::make_shared<GaussianModel>(json_vector(j, "mean"), json_matrix(j, "cov"));
        if (kind == "conjugate_gaussian") {
            const Matrix data =
                j.contains("data_path") ? read_matrix_csv(resolve(j["data_path"].get<std::string>()), true)
                                        : json_matrix(j, "data");
            return std::make_shared<ConjugateGaussianModel>(json_vector(j, "prior_mean"), json_matrix(j, "prior_cov"),
                                                            json_matrix(j, "noise_cov"), data);
        }
        if (kind == "logistic") {
            if (j.contains("synthetic")) {
                const auto& s = j["synthetic"];
                return std::make_shared<LogisticModel>(synthetic_logistic_model(
                    s.value("n", 100), s.value("dim", 5), s.value("seed", std::uint64_t{20190101})));
            }
            const Matrix predictors = read_matrix_csv(resolve(j.at("design_path").get<std::string>()),
                                                      j.value("header", true));
            const Matrix response = read_matrix_csv(resolve(j.at("response_path").get<std::string>()),
                                                    j.value("header", true));
            if (response.cols() != 1) throw ConfigError("logistic response file must have one column");
            const Matrix x = prepare_logistic_design(predictors);
            Vector sds = default_logistic_prior_sds(x.cols());
            if (j.contains("prior_sd")) sds.tail(x.cols() - 1).setConstant(j["prior_sd"].get<double>());
            if (j.contains("intercept_prior_sd")) sds[0] = j["intercept_prior_sd"].get<double>();
            return std::make_shared<LogisticModel>(x, response.col(0), sds);
        }
        if (kind == "recapture") {
            if (j.contains("data_path"))
                return std::make_shared<RecaptureModel>(read_recapture_csv(resolve(j["data_path"].get<std::string>())));
            return std::make_shared<RecaptureModel>(dipper_recapture_model());
        }
        throw ConfigError("model manifest: unknown kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

EvaluatedParticles evaluate_all(const TargetModel& model, const Matrix& theta) {
    const Index n = theta.rows(), d = model.dim();
    if (theta.cols() != d) throw InvalidInput("particle dimension does not match the model");
    EvaluatedParticles out{Vector(n), Vector(n), Matrix(n, d), Matrix(n, d)};
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        const ModelEval e = model.evaluate(theta.row(i).transpose());
        out.log_like[i] = e.log_like;
        out.log_prior[i] = e.log_prior;
        out.grad_log_like.row(i) = e.grad_log_like.transpose();
        out.grad_log_prior.row(i) = e.grad_log_prior.transpose();
    }
    return out;
}

}  // namespace zvcv
