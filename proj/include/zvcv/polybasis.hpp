#pragma once

#include "zvcv/samples.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace zvcv {

/// Sorted, 0-based coordinate subset used for a priori regularisation.
class SubsetSpec {
public:
    /// Throws InvalidInput if empty, unsorted, duplicated or out of [0, d).
    SubsetSpec(std::vector<Index> indices, Index d);
    static SubsetSpec all(Index d);

    const std::vector<Index>& indices() const { return indices_; }
    Index size() const { return static_cast<Index>(indices_.size()); }
    bool contains(Index k) const;

private:
    std::vector<Index> indices_;
};

/// Exponents of every monomial with total degree in [1, degree], one row per
/// monomial, graded-lexicographic order: ascending total degree, then
/// descending exponent of the first coordinate, then the next, ... so that
/// for d = 2, degree = 2 the rows are (1,0),(0,1),(2,0),(1,1),(0,2).
class ExponentMatrix {
public:
    ExponentMatrix(Index dim, int degree, std::vector<std::vector<int>> rows);

    Index rows() const { return static_cast<Index>(rows_.size()); }
    Index dim() const { return dim_; }
    int degree() const { return degree_; }
    const std::vector<int>& row(Index j) const { return rows_[static_cast<std::size_t>(j)]; }

    struct Term {
        Index coord;
        int power;
    };
    /// Nonzero entries of row j.
    const std::vector<Term>& terms(Index j) const { return terms_[static_cast<std::size_t>(j)]; }

private:
    Index dim_;
    int degree_;
    std::vector<std::vector<int>> rows_;
    std::vector<std::vector<Term>> terms_;
};

constexpr std::int64_t default_basis_cap = 1'000'000;

/// C(n + q, n) - 1, or nullopt when it exceeds `cap`.
std::optional<std::int64_t> basis_size(Index n, int q, std::int64_t cap = default_basis_cap);

/// All monomials of total degree 1..q in d variables, zero outside `subset`
/// when given. Throws BasisTooLarge when the count exceeds `cap`.
ExponentMatrix enumerate_exponents(Index d, int q, const std::optional<SubsetSpec>& subset = std::nullopt,
                                   std::int64_t cap = default_basis_cap);

/// Second-order Langevin Stein operator applied to each monomial:
/// x[j] = sum_k A[j,k] (theta_k^(A-1) grad_k + (A-1) theta_k^(A-2)) prod_{z!=k} theta_z^A[j,z].
/// Gradient components of coordinates absent from every monomial are never read.
Vector stein_covariates(const ExponentMatrix& a, const Vector& theta, const Vector& grad);

/// Row i is stein_covariates(a, theta_i, grad_i).
Matrix build_design_matrix(const SampleSet& s, const ExponentMatrix& a);

/// Monomial values P_j(theta) (used by the polynomial kernel).
Vector monomial_values(const ExponentMatrix& a, const Vector& theta);

}  // namespace zvcv
