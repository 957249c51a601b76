#include "zvcv/polybasis.hpp"

#include "zvcv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zvcv {

SubsetSpec::SubsetSpec(std::vector<Index> indices, Index d) : indices_(std::move(indices)) {
    if (indices_.empty()) throw InvalidInput("subset must be nonempty");
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (indices_[i] < 0 || indices_[i] >= d) throw InvalidInput("subset index out of range");
        if (i > 0 && indices_[i] <= indices_[i - 1]) throw InvalidInput("subset must be sorted and unique");
    }
}

SubsetSpec SubsetSpec::all(Index d) {
    std::vector<Index> idx(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) idx[static_cast<std::size_t>(k)] = k;
    return SubsetSpec(std::move(idx), d);
}

bool SubsetSpec::contains(Index k) const {
    return std::binary_search(indices_.begin(), indices_.end(), k);
}

ExponentMatrix::ExponentMatrix(Index dim, int degree, std::vector<std::vector<int>> rows)
    : dim_(dim), degree_(degree), rows_(std::move(rows)) {
    terms_.reserve(rows_.size());
    for (const auto& r : rows_) {
        if (static_cast<Index>(r.size()) != dim_) throw InvalidInput("exponent row has wrong length");
        std::vector<Term> t;
        for (Index k = 0; k < dim_; ++k)
            if (r[static_cast<std::size_t>(k)] > 0) t.push_back({k, r[static_cast<std::size_t>(k)]});
        terms_.push_back(std::move(t));
    }
}

std::optional<std::int64_t> basis_size(Index n, int q, std::int64_t cap) {
    // C(n + q, q) built incrementally; every partial product is itself a
    // binomial coefficient so the division is exact.
    __int128 c = 1;
    for (int i = 1; i <= q; ++i) {
        c = c * (n + i) / i;
        if (c - 1 > cap) return std::nullopt;
    }
    return static_cast<std::int64_t>(c - 1);
}

namespace {

void compose(const std::vector<Index>& coords, std::size_t pos, int remaining, std::vector<int>& row,
             std::vector<std::vector<int>>& out) {
    const Index k = coords[pos];
    if (pos + 1 == coords.size()) {
        row[static_cast<std::size_t>(k)] = remaining;
        out.push_back(row);
        row[static_cast<std::size_t>(k)] = 0;
        return;
    }
    for (int p = remaining; p >= 0; --p) {
        row[static_cast<std::size_t>(k)] = p;
        compose(coords, pos + 1, remaining - p, row, out);
    }
    row[static_cast<std::size_t>(k)] = 0;
}

}  // namespace

ExponentMatrix enumerate_exponents(Index d, int q, const std::optional<SubsetSpec>& subset, std::int64_t cap) {
    if (d < 1 || q < 1) throw InvalidInput("enumerate_exponents requires d >= 1 and Q >= 1");
    const SubsetSpec s = subset ? *subset : SubsetSpec::all(d);
    if (!s.indices().empty() && s.indices().back() >= d) throw InvalidInput("subset exceeds dimension");
    const auto count = basis_size(s.size(), q, cap);
    if (!count)
        throw BasisTooLarge("basis with |S|=" + std::to_string(s.size()) + ", Q=" + std::to_string(q) +
                            " exceeds the cap of " + std::to_string(cap) + " rows");
    std::vector<std::vector<int>> rows;
    rows.reserve(static_cast<std::size_t>(*count));
    std::vector<int> row(static_cast<std::size_t>(d), 0);
    for (int total = 1; total <= q; ++total) compose(s.indices(), 0, total, row, rows);
    return ExponentMatrix(d, q, std::move(rows));
}

namespace {

// powers(k, p) = theta_k^p for p = 0..q
Matrix power_table(const Vector& theta, int q) {
    Matrix pw(theta.size(), q + 1);
    for (Index k = 0; k < theta.size(); ++k) {
        pw(k, 0) = 1.0;
        for (int p = 1; p <= q; ++p) pw(k, p) = pw(k, p - 1) * theta[k];
    }
    return pw;
}

void covariates_into(const ExponentMatrix& a, const Matrix& pw, const Vector& grad, double* out) {
    for (Index j = 0; j < a.rows(); ++j) {
        const auto& terms = a.terms(j);
        double x = 0.0;
        for (std::size_t t = 0; t < terms.size(); ++t) {
            double others = 1.0;
            for (std::size_t u = 0; u < terms.size(); ++u)
                if (u != t) others *= pw(terms[u].coord, terms[u].power);
            const Index k = terms[t].coord;
            const int p = terms[t].power;
            // p == 1: the Laplacian term carries a zero coefficient and the
            // theta^(p-2) factor is never formed.
            double inner = pw(k, p - 1) * grad[k];
            if (p >= 2) inner += (p - 1) * pw(k, p - 2);
            x += p * inner * others;
        }
        out[j] = x;
    }
}

}  // namespace

Vector stein_covariates(const ExponentMatrix& a, const Vector& theta, const Vector& grad) {
    if (theta.size() != a.dim() || grad.size() != a.dim()) throw InvalidInput("stein_covariates: dimension mismatch");
    if (!theta.allFinite()) throw InvalidInput("stein_covariates: non-finite theta");
    Vector x(a.rows());
    covariates_into(a, power_table(theta, a.degree()), grad, x.data());
    if (!x.allFinite()) throw InvalidInput("stein_covariates: non-finite gradient in a used coordinate");
    return x;
}

Matrix build_design_matrix(const SampleSet& s, const ExponentMatrix& a) {
    if (s.dim() != a.dim()) throw InvalidInput("design matrix: dimension mismatch");
    const Index n = s.count();
    const Index j = a.rows();
    // Row-major scratch so each sample writes a contiguous block.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(n, j);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        const Vector theta = s.theta().row(i).transpose();
        const Vector grad = s.grad_log_target().row(i).transpose();
        covariates_into(a, power_table(theta, a.degree()), grad, x.row(i).data());
    }
    if (!x.allFinite()) throw InvalidInput("design matrix: non-finite gradient in a used coordinate");
    return Matrix(x);
}

Vector monomial_values(const ExponentMatrix& a, const Vector& theta) {
    const Matrix pw = power_table(theta, a.degree());
    Vector v(a.rows());
    for (Index j = 0; j < a.rows(); ++j) {
        double p = 1.0;
        for (const auto& t : a.terms(j)) p *= pw(t.coord, t.power);
        v[j] = p;
    }
    return v;
}

}  // namespace zvcv
