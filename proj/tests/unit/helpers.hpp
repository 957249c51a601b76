#pragma once

#include "zvcv/rng.hpp"
#include "zvcv/samples.hpp"

#include <functional>

namespace zvcv::test {

inline Matrix normal_matrix(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline Vector normal_vector(Index n, std::uint64_t seed) { return normal_matrix(n, 1, seed).col(0); }

/// Draws from N(mu, sigma^2 I) with exact score -(theta - mu) / sigma^2.
inline SampleSet gaussian_samples(Index n, Index d, double mu, double sigma, std::uint64_t seed) {
    Matrix theta = (normal_matrix(n, d, seed) * sigma).array() + mu;
    Matrix grad = -(theta.array() - mu) / (sigma * sigma);
    return SampleSet(theta, grad);
}

/// Central-difference gradient of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5) {
    Vector g(x.size());
    for (Index k = 0; k < x.size(); ++k) {
        Vector a = x, b = x;
        a[k] += h;
        b[k] -= h;
        g[k] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

inline double rel_err(const Vector& a, const Vector& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace zvcv::test
