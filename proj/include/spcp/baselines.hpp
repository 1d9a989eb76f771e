#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>

#include "certificate.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "marginal.hpp"
#include "report.hpp"

namespace spcp {

/// Result of singular value thresholding with the surviving spectrum kept
/// around, so callers get ||Z||_* and a factorization for free.
struct SvtResult {
    DenseMatrix z;
    SvdTriplet kept;  ///< triples with sigma - tau > 0, sigma already shrunk
};

inline SvtResult svt_factored(const DenseMatrix& a, double tau) {
    if (!(tau > 0.0))
        throw ParameterError("svt: tau must be positive");
    const SvdTriplet svd = svd_small(a);
    Index r = 0;
    while (r < svd.size() && svd.sigma(r) > tau)
        ++r;
    SvdTriplet kept{svd.u.leftCols(r), (svd.sigma.head(r).array() - tau).matrix(),
                    svd.v.leftCols(r)};
    DenseMatrix z = r > 0 ? kept.reconstruct() : DenseMatrix::Zero(a.rows(), a.cols());
    return {std::move(z), std::move(kept)};
}

/// Prox of tau ||.||_*: U diag(max(sigma - tau, 0)) V^T.
inline DenseMatrix svt(const DenseMatrix& a, double tau) { return svt_factored(a, tau).z; }

/// Balanced factors U S^{1/2}, V S^{1/2} of a thin SVD; a single zero column
/// when the spectrum is empty.
inline FactorPair balanced_factors(const SvdTriplet& svd, Index m, Index n) {
    if (svd.size() == 0)
        return {DenseMatrix::Zero(m, 1), DenseMatrix::Zero(n, 1)};
    const Vector root = svd.sigma.cwiseSqrt();
    return {svd.u * root.asDiagonal(), svd.v * root.asDiagonal()};
}

struct ProxOptions {
    double step = 1.0;
    int max_iter = 5000;
    double tol = 1e-12;  ///< relative objective change
    bool accel = false;
};

/// Proximal gradient (optionally accelerated with function-value restart) on
/// lambda_l ||L||_* + phi(L), started from L = 0.
/// The trace grad_norm is the gradient-mapping norm ||Y - L_next|| / step.
template <SeparableRegularizer Reg = L1Norm>
SolveReport solve_convex_prox(const ProblemSpec& spec, const ProxOptions& opts = {},
                              const std::function<void(int, const DenseMatrix&, double)>&
                                  on_iterate = {}) {
    spec.validate();
    if (!(opts.step > 0.0 && opts.step <= 1.0))
        throw ParameterError("solve_convex_prox: step must lie in (0, 1]");
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    double excluded = 0.0;
    auto elapsed = [&] {
        return std::chrono::duration<double>(clock::now() - start).count() - excluded;
    };

    const Index m = spec.rows();
    const Index n = spec.cols();
    DenseMatrix l = DenseMatrix::Zero(m, n);
    DenseMatrix l_prev = l;
    SvdTriplet l_svd{DenseMatrix(m, 0), Vector(0), DenseMatrix(n, 0)};
    MarginalEval at_l = phi_value_grad<Reg>(l, spec);
    double f = at_l.value;
    double momentum = 1.0;

    SolveReport rep;
    rep.solver = "prox";
    rep.trace.push_back({0, f, 0.0, 0.0, std::nullopt});
    auto notify = [&](int iter) {
        if (!on_iterate)
            return;
        const auto t0 = clock::now();
        on_iterate(iter, l, f);
        excluded += std::chrono::duration<double>(clock::now() - t0).count();
    };
    notify(0);

    rep.termination = Termination::iteration_cap;
    for (int it = 1; it <= opts.max_iter; ++it) {
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = opts.accel ? (momentum - 1.0) / next_momentum : 0.0;
        DenseMatrix y;
        MarginalEval at_y;
        if (beta > 0.0) {
            y = l + beta * (l - l_prev);
            at_y = phi_value_grad<Reg>(y, spec);
        } else {
            y = l;
            at_y = at_l;
        }
        SvtResult prox = svt_factored(y - opts.step * at_y.grad, opts.step * spec.lambda_l);
        MarginalEval at_next = phi_value_grad<Reg>(prox.z, spec);
        double f_next = spec.lambda_l * prox.kept.sigma.sum() + at_next.value;

        if (opts.accel && f_next > f && beta > 0.0) {
            // Momentum overshoot: restart from a plain proximal step.
            momentum = 1.0;
            prox = svt_factored(l - opts.step * at_l.grad, opts.step * spec.lambda_l);
            y = l;
            at_next = phi_value_grad<Reg>(prox.z, spec);
            f_next = spec.lambda_l * prox.kept.sigma.sum() + at_next.value;
        } else {
            momentum = opts.accel ? next_momentum : 1.0;
        }

        const double mapping = (y - prox.z).norm() / opts.step;
        const double change = std::abs(f - f_next);
        l_prev = std::move(l);
        l = std::move(prox.z);
        l_svd = std::move(prox.kept);
        at_l = std::move(at_next);
        f = f_next;
        rep.iterations = it;
        rep.trace.push_back({it, f, mapping, elapsed(), std::nullopt});
        if (!std::isfinite(f)) {
            rep.termination = Termination::numerical_failure;
            break;
        }
        notify(it);
        if (change <= opts.tol * std::max(std::abs(f), std::numeric_limits<double>::min())) {
            rep.termination = Termination::converged;
            break;
        }
    }
    rep.objective = f;
    rep.factors = balanced_factors(l_svd, m, n);
    rep.s = std::move(at_l.s_star);
    rep.l = std::move(l);
    return rep;
}

/// Iterate of the marginalized Frank-Wolfe method on
/// min_{||L||_* <= t} lambda_l t + phi(L).
struct FwState {
    DenseMatrix l;
    double t = 0.0;        ///< nuclear-norm surrogate, t >= ||l||_*
    double u_bound = 0.0;  ///< current bound on t used to scale the atoms
};

enum class FwStepRule { exact, fixed };

struct FwOptions {
    int max_iter = 1000;
    double tol = 1e-6;  ///< on the Frank-Wolfe gap, relative to the first gap
    FwStepRule step_rule = FwStepRule::exact;
    /// The LMO only needs a good descent atom; clustered gradient spectra make
    /// 1e-9 power iteration needlessly slow.
    LeadingTripleOptions lmo{1e-6, 5000, 0};
};

/// Closed-form minimizer over [0, 1] of
///   1/2 ||G + eta * delta||^2 + lambda_l ((1 - eta) t + eta v_t)
/// given lin = <G, delta> + lambda_l (v_t - t) and quad = ||delta||^2.
inline double fw_exact_step(double lin, double quad) {
    if (quad > 0.0)
        return std::clamp(-lin / quad, 0.0, 1.0);
    return lin < 0.0 ? 1.0 : 0.0;
}

struct FwStepInfo {
    int iter = 0;
    double eta = 0.0;
    double lin = 0.0;
    double quad = 0.0;
    double offset = 0.0;  ///< model value at eta = 0
    bool toward_origin = false;
};

/// Frank-Wolfe with S marginalized out. Each iteration: S_k = shrink(X - L_k),
/// G = P_mask(L_k + S_k - X), atom from the leading singular pair of G, exact
/// line search on the quadratic model with S_k frozen, then
///   L <- (1 - eta) L + eta V,  t <- (1 - eta) t + eta V_t,
///   U <- ||G||^2 / (2 lambda_l) + t_k.
/// The trace objective is lambda_l t + phi(L); grad_norm holds the FW gap.
template <SeparableRegularizer Reg = L1Norm>
SolveReport solve_frank_wolfe(const ProblemSpec& spec, const FwOptions& opts = {},
                              const std::function<void(const FwState&, const FwStepInfo&)>&
                                  on_step = {}) {
    spec.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    double excluded = 0.0;
    auto elapsed = [&] {
        return std::chrono::duration<double>(clock::now() - start).count() - excluded;
    };

    const Index m = spec.rows();
    const Index n = spec.cols();
    const double lambda = spec.lambda_l;
    FwState st{DenseMatrix::Zero(m, n), 0.0, 0.0};
    MarginalEval ev = phi_value_grad<Reg>(st.l, spec);
    st.u_bound = 0.5 * ev.grad.squaredNorm() / lambda;

    SolveReport rep;
    rep.solver = "fw";
    rep.termination = Termination::iteration_cap;
    double gap0 = -1.0;
    Vector warm;
    for (int it = 0;; ++it) {
        const DenseMatrix& g = ev.grad;
        LeadingTripleOptions lmo = opts.lmo;
        lmo.seed = opts.lmo.seed + static_cast<std::uint64_t>(it);
        const LeadingTriple lt = leading_triple(g, lmo, warm.size() ? &warm : nullptr);
        warm = lt.v;
        const double inner = lt.u.dot(g * lt.v);  // -<G, Y> with Y = -u v^T
        const bool toward_origin = lambda >= inner;
        const double v_t = toward_origin ? 0.0 : st.u_bound;
        const double g_dot_l = (g.array() * st.l.array()).sum();
        const double g_dot_v = toward_origin ? 0.0 : -st.u_bound * inner;
        const double gap = lambda * st.t + g_dot_l - (lambda * v_t + g_dot_v);
        const double objective = lambda * st.t + ev.value;

        rep.trace.push_back({it, objective, gap, elapsed(), std::nullopt});
        rep.iterations = it;
        rep.objective = objective;
        if (gap0 < 0.0)
            gap0 = std::max(gap, 0.0);
        if (gap <= opts.tol * gap0) {
            rep.termination = Termination::converged;
            break;
        }
        if (it >= opts.max_iter)
            break;

        DenseMatrix delta = -st.l;
        if (!toward_origin)
            delta.noalias() -= st.u_bound * (lt.u * lt.v.transpose());
        if (spec.mask)
            delta = spec.mask->select(delta.array(), 0.0).matrix();
        FwStepInfo info;
        info.iter = it;
        info.lin = (g.array() * delta.array()).sum() + lambda * (v_t - st.t);
        info.quad = delta.squaredNorm();
        info.offset = 0.5 * g.squaredNorm() + lambda * st.t;
        info.toward_origin = toward_origin;
        info.eta = opts.step_rule == FwStepRule::exact ? fw_exact_step(info.lin, info.quad)
                                                       : 2.0 / (it + 2.0);

        const double next_bound = 0.5 * g.squaredNorm() / lambda + st.t;
        st.l *= 1.0 - info.eta;
        if (!toward_origin)
            st.l.noalias() -= (info.eta * st.u_bound) * (lt.u * lt.v.transpose());
        st.t = (1.0 - info.eta) * st.t + info.eta * v_t;
        st.u_bound = next_bound;
        ev = phi_value_grad<Reg>(st.l, spec);
        if (on_step) {
            const auto t0 = clock::now();
            on_step(st, info);
            excluded += std::chrono::duration<double>(clock::now() - t0).count();
        }
    }
    rep.l = st.l;
    rep.s = ev.s_star;
    return rep;
}

} // namespace spcp
