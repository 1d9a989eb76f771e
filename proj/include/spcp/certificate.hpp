#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "errors.hpp"
#include "linalg.hpp"
#include "marginal.hpp"
#include "report.hpp"

namespace spcp {

/// Compact SVD of L = U V^T from the factors only:
/// U = Q_U R_U, V = Q_V R_V, svd(R_U R_V^T) = U_R S V_R^T, U_1 = Q_U U_R, V_1 = Q_V V_R.
/// Singular values <= rank_tol * sigma_1 are dropped. Cost O((m + n) k^2 + k^3).
inline SvdTriplet factor_svd(const FactorPair& fp, double rank_tol = 1e-10) {
    fp.validate();
    const QrFactors qu = thin_qr(fp.u);
    const QrFactors qv = thin_qr(fp.v);
    const SvdTriplet inner = svd_small(qu.r * qv.r.transpose());
    SvdTriplet out{qu.q * inner.u, inner.sigma, qv.q * inner.v};
    return out.truncated(out.numerical_rank(rank_tol));
}

/// lambda_l ||UV^T||_* + phi(UV^T), with the nuclear norm taken from factor_svd.
template <SeparableRegularizer Reg = L1Norm>
double convex_objective(const FactorPair& fp, const ProblemSpec& spec) {
    const SvdTriplet svd = factor_svd(fp);
    return spec.lambda_l * svd.sigma.sum() + phi_value_grad<Reg>(fp.product(), spec).value;
}

struct CertificateOptions {
    double rank_tol = 1e-10;
    /// Cancellation allowance for the subtraction form of the off-diagonal
    /// terms, relative to the subtracted magnitude.
    double cancellation_tol = 1e-9;
};

namespace detail {

/// ||A||^2 - ||C||^2 with a fallback to the explicit projected norm when
/// the subtraction cancels to a clearly negative value.
template <class Explicit>
double complement_term(double full, double inner, Explicit&& explicit_norm2, double tol) {
    double t = full - inner;
    if (t < -tol * std::max(1.0, full)) {
        t = explicit_norm2();
        if (t < 0.0)
            throw NumericalError("certificate: negative complement term");
    }
    return std::max(t, 0.0);
}

} // namespace detail

/// Optimality certificate for L = U V^T.
///
/// With D = -grad phi(L) / lambda_l and the compact SVD L = U1 S V1^T, the
/// squared distance from D to the nuclear-norm subdifferential at L splits as
///   t1 = ||I - U1^T D V1||^2
///   t2 = ||U1^T D||^2 - ||U1^T D V1||^2
///   t3 = ||D V1||^2 - ||U1^T D V1||^2
///   t4 = sum_i max(tau_i - 1, 0)^2,  tau = sv((I - U1 U1^T) D (I - V1 V1^T))
/// and e_norm = lambda_l sqrt(t1 + t2 + t3 + t4) is the Frobenius norm of a
/// subgradient of F = lambda_l ||.||_* + phi at L. Since ||L*||_* <= F* / lambda_l,
///   F(L) - F(L*) <= e_norm (||L||_F + f_bound / lambda_l) = gap_bound,
/// where f_bound = min(f_bound_hint, 1/2 ||P_mask(X)||^2) >= F*.
template <SeparableRegularizer Reg = L1Norm>
CertificateReport certificate(const FactorPair& fp, const ProblemSpec& spec,
                              std::optional<double> f_bound_hint = std::nullopt,
                              const CertificateOptions& opts = {}) {
    spec.validate();
    fp.validate();
    if (fp.u.rows() != spec.rows() || fp.v.rows() != spec.cols())
        throw DimensionError("certificate: factor shapes do not match the data");

    const double lambda = spec.lambda_l;
    const DenseMatrix l = fp.product();
    const DenseMatrix d = phi_value_grad<Reg>(l, spec).grad / (-lambda);
    const SvdTriplet svd = factor_svd(fp, opts.rank_tol);
    const Index r = svd.size();

    CertificateReport rep;
    rep.rank = r;
    DenseMatrix complement;
    if (r == 0) {
        complement = d;
    } else {
        const DenseMatrix& u1 = svd.u;
        const DenseMatrix& v1 = svd.v;
        const DenseMatrix a = u1.transpose() * d;  // r x n
        const DenseMatrix b = d * v1;              // m x r
        const DenseMatrix c = a * v1;              // r x r
        const double c2 = c.squaredNorm();
        rep.terms[0] = (DenseMatrix::Identity(r, r) - c).squaredNorm();
        rep.terms[1] = detail::complement_term(
            a.squaredNorm(), c2,
            [&] { return (a - c * v1.transpose()).squaredNorm(); }, opts.cancellation_tol);
        rep.terms[2] = detail::complement_term(
            b.squaredNorm(), c2,
            [&] { return (b - u1 * c).squaredNorm(); }, opts.cancellation_tol);
        complement = d - u1 * a - b * v1.transpose() + u1 * c * v1.transpose();
    }
    const Vector tau = svd_small(complement).sigma;
    double t4 = 0.0;
    for (Index i = 0; i < tau.size(); ++i) {
        const double excess = std::max(tau(i) - 1.0, 0.0);
        t4 += excess * excess;
    }
    rep.terms[3] = t4;

    const double sum = rep.terms[0] + rep.terms[1] + rep.terms[2] + rep.terms[3];
    rep.e_norm = lambda * std::sqrt(sum);
    const double trivial = 0.5 * spec.observed_data().squaredNorm();
    rep.f_bound = f_bound_hint ? std::min(*f_bound_hint, trivial) : trivial;
    rep.gap_bound = rep.e_norm * (l.norm() + rep.f_bound / lambda);
    return rep;
}

} // namespace spcp
