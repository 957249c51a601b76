#include "helpers.hpp"

#include "zvcv/errors.hpp"
#include "zvcv/polybasis.hpp"

#include <doctest.h>

#include <cmath>

using namespace zvcv;

namespace {

double monomial(const std::vector<int>& a, const Vector& theta) {
    double v = 1.0;
    for (std::size_t k = 0; k < a.size(); ++k) v *= std::pow(theta[static_cast<Index>(k)], a[k]);
    return v;
}

// Laplacian and gradient by central differences: L g = lap g + grad g . u.
double fd_stein(const std::vector<int>& a, const Vector& theta, const Vector& u) {
    const double h = 1e-4;
    double out = 0.0;
    for (Index k = 0; k < theta.size(); ++k) {
        Vector p = theta, m = theta;
        p[k] += h;
        m[k] -= h;
        const double gp = monomial(a, p), gm = monomial(a, m), g0 = monomial(a, theta);
        out += (gp - 2.0 * g0 + gm) / (h * h) + (gp - gm) / (2.0 * h) * u[k];
    }
    return out;
}

std::int64_t binomial(int n, int k) {
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

TEST_CASE("basis sizes") {
    // The published counts include the intercept.
    CHECK(enumerate_exponents(11, 3).rows() + 1 == 364);
    CHECK(enumerate_exponents(11, 4).rows() + 1 == 1365);
    CHECK(enumerate_exponents(61, 2).rows() + 1 == 1953);
    for (int d = 1; d <= 61; d += 6)
        for (int q = 1; q <= 4; ++q) {
            const auto expected = binomial(d + q, d) - 1;
            const auto n = basis_size(d, q);
            REQUIRE(n.has_value());
            CHECK(*n == expected);
        }
}

TEST_CASE("graded lexicographic order for d=2, Q=2") {
    const auto a = enumerate_exponents(2, 2);
    REQUIRE(a.rows() == 5);
    const std::vector<std::vector<int>> expected{{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (Index j = 0; j < 5; ++j) CHECK(a.row(j) == expected[static_cast<std::size_t>(j)]);
}

TEST_CASE("subset bases and the row cap") {
    const auto a = enumerate_exponents(5, 3, SubsetSpec({1, 3}, 5));
    CHECK(a.rows() == 9);  // C(2+3,2) - 1
    for (Index j = 0; j < a.rows(); ++j) {
        CHECK(a.row(j)[0] == 0);
        CHECK(a.row(j)[2] == 0);
        CHECK(a.row(j)[4] == 0);
    }
    CHECK_THROWS_AS(enumerate_exponents(61, 6, std::nullopt, 1000), BasisTooLarge);
    CHECK_THROWS_AS(SubsetSpec({2, 1}, 5), InvalidInput);
    CHECK_THROWS_AS(SubsetSpec({}, 5), InvalidInput);
    CHECK_THROWS_AS(SubsetSpec({5}, 5), InvalidInput);
}

TEST_CASE("first-order covariates are the gradient") {
    const auto a = enumerate_exponents(4, 1);
    Vector theta = zvcv::test::normal_vector(4, 1), grad = zvcv::test::normal_vector(4, 2);
    CHECK((stein_covariates(a, theta, grad) - grad).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hand examples of the Stein operator") {
    const auto a = enumerate_exponents(1, 2);
    Vector theta(1), grad(1);
    theta << 2.0;
    grad << -2.0;
    CHECK(stein_covariates(a, theta, grad)[1] == doctest::Approx(-6.0));

    const auto b = enumerate_exponents(3, 2);
    const Vector x = stein_covariates(b, Vector::Zero(3), zvcv::test::normal_vector(3, 3));
    CHECK(x[3] == doctest::Approx(2.0));  // theta_1^2
}

TEST_CASE("Stein covariates match a finite-difference oracle") {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const Index d = 1 + static_cast<Index>(rng.below(3));
        const int q = 1 + static_cast<int>(rng.below(4));
        const auto a = enumerate_exponents(d, q);
        Vector theta(d), u(d);
        for (Index k = 0; k < d; ++k) {
            theta[k] = 0.5 + rng.uniform();
            u[k] = rng.normal();
        }
        const Vector x = stein_covariates(a, theta, u);
        for (Index j = 0; j < a.rows(); ++j) {
            const double fd = fd_stein(a.row(j), theta, u);
            CHECK(std::abs(x[j] - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
        }
    }
}

TEST_CASE("design matrix for Gaussian samples") {
    const auto s = zvcv::test::gaussian_samples(30, 1, 3.0, 2.0, 4);
    const Matrix x = build_design_matrix(s, enumerate_exponents(1, 1));
    CHECK(((x.col(0).array() + (s.theta().col(0).array() - 3.0) / 4.0).abs()).maxCoeff() < 1e-14);
    const Matrix zero = build_design_matrix(SampleSet(s.theta(), Matrix::Zero(30, 1)), enumerate_exponents(1, 1));
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
    const auto one = s.subset({0});
    const auto basis = enumerate_exponents(1, 3);
    CHECK((build_design_matrix(one, basis).row(0).transpose() -
           stein_covariates(basis, one.theta().row(0).transpose(), one.grad_log_target().row(0).transpose()))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("Stein covariates have mean zero under the target") {
    const Index n = 100000;
    const auto s = zvcv::test::gaussian_samples(n, 2, 0.0, 1.0, 5);
    const Matrix x = build_design_matrix(s, enumerate_exponents(2, 2));
    for (Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double se = std::sqrt((x.col(j).array() - mean).square().sum() / (n - 1) / n);
        CHECK(std::abs(mean) < 4.0 * se);
    }
}

TEST_CASE("gradient columns outside the subset are never read") {
    auto s = zvcv::test::gaussian_samples(10, 3, 0.0, 1.0, 6);
    Matrix grad = s.grad_log_target();
    grad.col(2).setConstant(NAN);
    const SampleSet masked(s.theta(), grad);
    const auto a = enumerate_exponents(3, 2, SubsetSpec({0, 1}, 3));
    const Matrix x = build_design_matrix(masked, a);
    CHECK(x.allFinite());
}
