#pragma once

#include <cmath>
#include <concepts>
#include <optional>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"

namespace spcp {

/// Data and tuning of one Lagrangian SPCP instance:
///   min_{L,S} lambda_l ||L||_* + 1/2 ||P_mask(L + S - X)||_F^2 + lambda_s ||S||_1
/// Entries of x outside the mask are ignored.
struct ProblemSpec {
    DenseMatrix x;
    std::optional<Mask> mask;
    double lambda_l = 1.0;
    double lambda_s = 1.0;

    Index rows() const { return x.rows(); }
    Index cols() const { return x.cols(); }

    bool observed(Index i, Index j) const { return !mask || (*mask)(i, j); }

    void validate() const {
        if (!(lambda_l > 0.0) || !std::isfinite(lambda_l))
            throw ParameterError("lambda_l must be positive and finite");
        if (!(lambda_s > 0.0) || !std::isfinite(lambda_s))
            throw ParameterError("lambda_s must be positive and finite");
        if (x.size() == 0)
            throw DimensionError("data matrix is empty");
        if (mask && (mask->rows() != x.rows() || mask->cols() != x.cols()))
            throw DimensionError("mask shape does not match data shape");
        if (!observed_data().allFinite())
            throw ParameterError("observed data has non-finite entries");
    }

    /// P_mask(X): observed entries of x, zeros elsewhere.
    DenseMatrix observed_data() const {
        if (!mask)
            return x;
        return mask->select(x.array(), 0.0).matrix();
    }

    Index observed_count() const { return mask ? mask->count() : x.size(); }
};

/// Soft thresholding, the prox of tau * |.|.
inline double shrink(double z, double tau) {
    const double mag = std::abs(z) - tau;
    return mag > 0.0 ? std::copysign(mag, z) : 0.0;
}

/// Huber function with threshold tau; the kink |z| = tau takes the quadratic branch.
inline double huber(double z, double tau) {
    const double a = std::abs(z);
    return a <= tau ? 0.5 * z * z : tau * a - 0.5 * tau * tau;
}

/// Entrywise separable regularizer r(S) = sum_ij value(S_ij) with a closed-form prox.
template <class R>
concept SeparableRegularizer = requires(double z, double tau) {
    { R::prox(z, tau) } -> std::convertible_to<double>;
    { R::value(z) } -> std::convertible_to<double>;
};

struct L1Norm {
    static double prox(double z, double tau) { return shrink(z, tau); }
    static double value(double s) { return std::abs(s); }
};

struct MarginalEval {
    double value = 0.0;
    DenseMatrix grad;    ///< P_mask(L + S* - X)
    DenseMatrix s_star;  ///< minimizing S; zero off the mask
};

/// Marginal function phi(L) = min_S 1/2 ||P_mask(L + S - X)||^2 + lambda_s r(S),
/// its minimizer S* and its gradient.
template <SeparableRegularizer Reg = L1Norm>
MarginalEval phi_value_grad(const DenseMatrix& l, const ProblemSpec& spec) {
    if (l.rows() != spec.rows() || l.cols() != spec.cols())
        throw DimensionError("phi_value_grad: L is " + std::to_string(l.rows()) + "x" +
                             std::to_string(l.cols()) + ", data is " +
                             std::to_string(spec.rows()) + "x" + std::to_string(spec.cols()));
    const Index m = l.rows();
    const Index n = l.cols();
    MarginalEval out{0.0, DenseMatrix::Zero(m, n), DenseMatrix::Zero(m, n)};
    const double tau = spec.lambda_s;
    double value = 0.0;
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (!spec.observed(i, j))
                continue;
            const double z = spec.x(i, j) - l(i, j);
            const double s = Reg::prox(z, tau);
            const double resid = s - z;  // l + s - x
            out.s_star(i, j) = s;
            out.grad(i, j) = resid;
            value += 0.5 * resid * resid + tau * Reg::value(s);
        }
    }
    out.value = value;
    return out;
}

/// Convex Lagrangian objective lambda_l ||L||_* + phi(L). Needs a dense SVD.
template <SeparableRegularizer Reg = L1Norm>
double convex_objective(const DenseMatrix& l, const ProblemSpec& spec) {
    return spec.lambda_l * nuclear_norm(l) + phi_value_grad<Reg>(l, spec).value;
}

} // namespace spcp
