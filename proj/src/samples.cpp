#include "zvcv/samples.hpp"

#include "zvcv/errors.hpp"

#include <cmath>

namespace zvcv {

Vector uniform_weights(Index n) {
    return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

Vector normalise_weights(const Vector& w) {
    if (w.size() == 0) throw InvalidInput("empty weight vector");
    for (Index i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]) || w[i] < 0.0) throw InvalidInput("weights must be finite and nonnegative");
    }
    const double total = w.sum();
    if (!(total > 0.0)) throw InvalidInput("all weights are zero");
    return w / total;
}

SampleSet::SampleSet(Matrix theta, Matrix grad_log_target, Vector weights,
                     std::optional<Vector> log_like, std::optional<Vector> log_prior)
    : theta_(std::move(theta)),
      grad_(std::move(grad_log_target)),
      log_like_(std::move(log_like)),
      log_prior_(std::move(log_prior)) {
    const Index n = theta_.rows();
    if (grad_.rows() != n || grad_.cols() != theta_.cols())
        throw InvalidInput("gradient matrix shape does not match theta");
    if (weights.size() != n) throw InvalidInput("weight count does not match sample count");
    if (!theta_.allFinite()) throw InvalidInput("theta contains non-finite values");
    for (Index i = 0; i < grad_.size(); ++i) {
        // NaN marks an unavailable gradient component; infinities are errors.
        if (std::isinf(grad_.data()[i])) throw InvalidInput("gradient contains infinite values");
    }
    if (log_like_ && log_like_->size() != n) throw InvalidInput("log_like length mismatch");
    if (log_prior_ && log_prior_->size() != n) throw InvalidInput("log_prior length mismatch");
    weights_ = normalise_weights(weights);
}

SampleSet::SampleSet(Matrix theta, Matrix grad_log_target)
    : SampleSet(theta, std::move(grad_log_target), uniform_weights(theta.rows())) {}

SampleSet SampleSet::subset(const std::vector<Index>& idx) const {
    const Index m = static_cast<Index>(idx.size());
    Matrix th(m, dim()), gr(m, dim());
    Vector w(m);
    std::optional<Vector> ll, lp;
    if (log_like_) ll = Vector(m);
    if (log_prior_) lp = Vector(m);
    for (Index r = 0; r < m; ++r) {
        const Index i = idx[static_cast<std::size_t>(r)];
        th.row(r) = theta_.row(i);
        gr.row(r) = grad_.row(i);
        w[r] = weights_[i];
        if (ll) (*ll)[r] = (*log_like_)[i];
        if (lp) (*lp)[r] = (*log_prior_)[i];
    }
    return SampleSet(std::move(th), std::move(gr), std::move(w), std::move(ll), std::move(lp));
}

SampleSet SampleSet::with_weights(Vector weights) const {
    return SampleSet(theta_, grad_, std::move(weights), log_like_, log_prior_);
}

double weighted_mean(const Vector& a, const Vector& w) {
    return w.dot(a);
}

double weighted_sd(const Vector& a, const Vector& w) {
    const double m = w.dot(a);
    const double denom = 1.0 - w.squaredNorm();
    if (!(denom > 0.0)) return 0.0;
    const double ss = (w.array() * (a.array() - m).square()).sum();
    return std::sqrt(ss / denom);
}

StandardisedData standardise(const Matrix& x, const Vector& f, const Vector& w_in) {
    const Index n = x.rows();
    if (n < 2) throw InsufficientSamples("standardisation needs at least two samples");
    if (f.size() != n || w_in.size() != n) throw InvalidInput("standardise: length mismatch");
    if (!x.allFinite() || !f.allFinite()) throw InvalidInput("standardise: non-finite input");
    const Vector w = normalise_weights(w_in);

    StandardisedData out;
    auto& info = out.info;
    info.response_mean = weighted_mean(f, w);
    info.response_sd = weighted_sd(f, w);
    if (info.response_sd > 1e-300 * std::max(1.0, std::abs(info.response_mean)))
        out.f = (f.array() - info.response_mean) / info.response_sd;
    else {
        info.response_sd = 0.0;
        out.f = Vector::Zero(n);
    }

    const Index j = x.cols();
    info.covariate_means.resize(j);
    info.covariate_sds.resize(j);
    for (Index c = 0; c < j; ++c) {
        const Vector col = x.col(c);
        info.covariate_means[c] = weighted_mean(col, w);
        info.covariate_sds[c] = weighted_sd(col, w);
        if (info.covariate_sds[c] < 1e-12 * std::max(1.0, std::abs(info.covariate_means[c])))
            info.dropped.push_back(c);
        else
            info.retained.push_back(c);
    }
    out.x.resize(n, static_cast<Index>(info.retained.size()));
    for (std::size_t r = 0; r < info.retained.size(); ++r) {
        const Index c = info.retained[r];
        out.x.col(static_cast<Index>(r)) =
            (x.col(c).array() - info.covariate_means[c]) / info.covariate_sds[c];
    }
    return out;
}

Matrix weighted_covariance(const Matrix& theta, const Vector& w_in) {
    const Vector w = normalise_weights(w_in);
    const Eigen::RowVectorXd mean = w.transpose() * theta;
    const Matrix centred = theta.rowwise() - mean;
    const double denom = 1.0 - w.squaredNorm();
    Matrix cov = centred.transpose() * w.asDiagonal() * centred;
    if (denom > 0.0) cov /= denom;
    return cov;
}

namespace {

struct CoordMap {
    double psi;
    double theta;
    double dtheta_dpsi;
    double dlogjac_dpsi;
    double log_jac;
};

CoordMap from_theta(TransformKind kind, double th) {
    switch (kind) {
        case TransformKind::identity:
            return {th, th, 1.0, 0.0, 0.0};
        case TransformKind::log:
            if (!(th > 0.0)) throw DomainError("log transform applied to a nonpositive value");
            return {std::log(th), th, th, 1.0, std::log(th)};
        case TransformKind::logit:
            if (!(th > 0.0 && th < 1.0)) throw DomainError("logit transform applied to a value outside (0,1)");
            return {std::log(th) - std::log1p(-th), th, th * (1.0 - th), 1.0 - 2.0 * th,
                    std::log(th) + std::log1p(-th)};
    }
    throw InvalidInput("unknown transform");
}

CoordMap from_psi(TransformKind kind, double psi) {
    switch (kind) {
        case TransformKind::identity:
            return {psi, psi, 1.0, 0.0, 0.0};
        case TransformKind::log: {
            const double th = std::exp(psi);
            return {psi, th, th, 1.0, psi};
        }
        case TransformKind::logit: {
            const double th = 1.0 / (1.0 + std::exp(-psi));
            // log(th (1 - th)) = -|psi| - 2 log(1 + exp(-|psi|))
            const double log_jac = -std::abs(psi) - 2.0 * std::log1p(std::exp(-std::abs(psi)));
            return {psi, th, std::exp(log_jac), 1.0 - 2.0 * th, log_jac};
        }
    }
    throw InvalidInput("unknown transform");
}

void check_dim(const ParameterTransform& map, Index d) {
    if (static_cast<Index>(map.kinds.size()) != d)
        throw InvalidInput("transform dimension does not match sample dimension");
}

}  // namespace

ParameterTransform ParameterTransform::identity(Index d) {
    return uniform(d, TransformKind::identity);
}

ParameterTransform ParameterTransform::uniform(Index d, TransformKind kind) {
    return {std::vector<TransformKind>(static_cast<std::size_t>(d), kind)};
}

Vector ParameterTransform::forward(const Vector& theta) const {
    check_dim(*this, theta.size());
    Vector psi(theta.size());
    for (Index k = 0; k < theta.size(); ++k) psi[k] = from_theta(kinds[static_cast<std::size_t>(k)], theta[k]).psi;
    return psi;
}

Vector ParameterTransform::inverse(const Vector& psi) const {
    check_dim(*this, psi.size());
    Vector theta(psi.size());
    for (Index k = 0; k < psi.size(); ++k) theta[k] = from_psi(kinds[static_cast<std::size_t>(k)], psi[k]).theta;
    return theta;
}

double ParameterTransform::log_jacobian(const Vector& psi) const {
    check_dim(*this, psi.size());
    double total = 0.0;
    for (Index k = 0; k < psi.size(); ++k) total += from_psi(kinds[static_cast<std::size_t>(k)], psi[k]).log_jac;
    return total;
}

SampleSet transform_samples(const SampleSet& s, const ParameterTransform& map) {
    check_dim(map, s.dim());
    Matrix psi(s.count(), s.dim()), grad(s.count(), s.dim());
    std::optional<Vector> log_prior = s.log_prior();
    for (Index i = 0; i < s.count(); ++i) {
        double log_jac = 0.0;
        for (Index k = 0; k < s.dim(); ++k) {
            const CoordMap m = from_theta(map.kinds[static_cast<std::size_t>(k)], s.theta()(i, k));
            psi(i, k) = m.psi;
            grad(i, k) = m.dtheta_dpsi * s.grad_log_target()(i, k) + m.dlogjac_dpsi;
            log_jac += m.log_jac;
        }
        if (log_prior) (*log_prior)[i] += log_jac;
    }
    return SampleSet(std::move(psi), std::move(grad), s.weights(), s.log_like(), std::move(log_prior));
}

SampleSet inverse_transform_samples(const SampleSet& s, const ParameterTransform& map) {
    check_dim(map, s.dim());
    Matrix theta(s.count(), s.dim()), grad(s.count(), s.dim());
    std::optional<Vector> log_prior = s.log_prior();
    for (Index i = 0; i < s.count(); ++i) {
        double log_jac = 0.0;
        for (Index k = 0; k < s.dim(); ++k) {
            const CoordMap m = from_psi(map.kinds[static_cast<std::size_t>(k)], s.theta()(i, k));
            theta(i, k) = m.theta;
            grad(i, k) = (s.grad_log_target()(i, k) - m.dlogjac_dpsi) / m.dtheta_dpsi;
            log_jac += m.log_jac;
        }
        if (log_prior) (*log_prior)[i] -= log_jac;
    }
    return SampleSet(std::move(theta), std::move(grad), s.weights(), s.log_like(), std::move(log_prior));
}

}  // namespace zvcv
