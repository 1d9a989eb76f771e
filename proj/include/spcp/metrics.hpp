#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace spcp {

struct MetricsOptions {
    double rank_tol = 1e-10;       ///< numerical rank: sigma_i > rank_tol * sigma_1
    double nnz_threshold = 0.0;    ///< |s_ij| > threshold counts as non-zero
};

struct DegreesOfFreedom {
    double rank_part = 0.0;    ///< k (m + n - k)
    double sparse_part = 0.0;  ///< nnz(S)
    double resid_part = 0.0;   ///< (||L + S - X||^2 / ||X||^2) m n
    Index rank = 0;

    double total() const { return rank_part + sparse_part + resid_part; }
};

namespace detail {

inline void check_same_shape(const DenseMatrix& l, const DenseMatrix& s, const DenseMatrix& x) {
    if (l.rows() != x.rows() || l.cols() != x.cols() || s.rows() != x.rows() ||
        s.cols() != x.cols())
        throw DimensionError("metrics: L, S and X must have the same shape");
}

} // namespace detail

inline DegreesOfFreedom degrees_of_freedom(const DenseMatrix& l, const DenseMatrix& s,
                                           const DenseMatrix& x, const MetricsOptions& opts = {}) {
    detail::check_same_shape(l, s, x);
    const double x2 = x.squaredNorm();
    if (x2 == 0.0)
        throw ParameterError("degrees_of_freedom: X = 0 leaves the residual ratio undefined");
    const double m = static_cast<double>(x.rows());
    const double n = static_cast<double>(x.cols());
    DegreesOfFreedom dof;
    dof.rank = svd_small(l).numerical_rank(opts.rank_tol);
    const double k = static_cast<double>(dof.rank);
    dof.rank_part = k * (m + n - k);
    dof.sparse_part = static_cast<double>((s.array().abs() > opts.nnz_threshold).count());
    dof.resid_part = (l + s - x).squaredNorm() / x2 * m * n;
    return dof;
}

struct AiccReport {
    double p = 0.0;
    double loglik = 0.0;
    std::optional<double> aicc;  ///< empty when m n - p - 1 <= 0
    DegreesOfFreedom dof;
    double sigma2_hat = 0.0;     ///< ||X||^2 / (m n)
    double b_hat = 0.0;          ///< ||S||_1 / (m n)
    double bstar_hat = 0.0;      ///< ||L||_* / rank(L)
    bool sparse_terms_dropped = false;   ///< S = 0: Laplace terms on S omitted
    bool lowrank_terms_dropped = false;  ///< L = 0: Laplace terms on sigma(L) omitted
};

/// Corrected Akaike criterion of a decomposition X ~ L + S (lower is better):
/// Gaussian residual, Laplace entries of S and Laplace singular values of L,
/// with plug-in scale estimates.
inline AiccReport aicc(const DenseMatrix& l, const DenseMatrix& s, const DenseMatrix& x,
                       const MetricsOptions& opts = {}) {
    AiccReport rep;
    rep.dof = degrees_of_freedom(l, s, x, opts);
    rep.p = rep.dof.total();

    const double mn = static_cast<double>(x.size());
    rep.sigma2_hat = x.squaredNorm() / mn;
    const double l1 = s.array().abs().sum();
    rep.b_hat = l1 / mn;
    const SvdTriplet svd = svd_small(l);
    const double nuc = svd.sigma.head(rep.dof.rank).sum();
    const double rank = static_cast<double>(rep.dof.rank);
    rep.bstar_hat = rep.dof.rank > 0 ? nuc / rank : 0.0;

    double ll = -0.5 * mn * std::log(2.0 * std::numbers::pi * rep.sigma2_hat) -
                (l + s - x).squaredNorm() / (2.0 * rep.sigma2_hat);
    if (rep.b_hat > 0.0)
        ll += -mn * std::log(2.0 * rep.b_hat) - l1 / (2.0 * rep.b_hat);
    else
        rep.sparse_terms_dropped = true;
    if (rep.bstar_hat > 0.0)
        ll += -rank * std::log(2.0 * rep.bstar_hat) - nuc / (2.0 * rep.bstar_hat);
    else
        rep.lowrank_terms_dropped = true;
    rep.loglik = ll;

    const double denom = mn - rep.p - 1.0;
    if (denom > 0.0)
        rep.aicc = 2.0 * (rep.p - rep.loglik) + 2.0 * rep.p * (rep.p + 1.0) / denom;
    return rep;
}

} // namespace spcp
