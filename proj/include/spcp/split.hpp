#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "certificate.hpp"
#include "errors.hpp"
#include "lbfgs.hpp"
#include "linalg.hpp"
#include "marginal.hpp"
#include "report.hpp"

namespace spcp {

struct SplitEval {
    double value = 0.0;
    DenseMatrix grad_u;
    DenseMatrix grad_v;
};

/// Factored objective (lambda_l / 2)(||U||^2 + ||V||^2) + phi(U V^T) and its
/// gradient G V + lambda_l U, G^T U + lambda_l V with G = grad phi(U V^T).
template <SeparableRegularizer Reg = L1Norm>
SplitEval split_objective(const FactorPair& fp, const ProblemSpec& spec) {
    fp.validate();
    if (fp.u.rows() != spec.rows() || fp.v.rows() != spec.cols())
        throw DimensionError("split_objective: factor shapes do not match the data");
    const MarginalEval phi = phi_value_grad<Reg>(fp.product(), spec);
    const double lambda = spec.lambda_l;
    SplitEval out;
    out.value = 0.5 * lambda * (fp.u.squaredNorm() + fp.v.squaredNorm()) + phi.value;
    out.grad_u = phi.grad * fp.v + lambda * fp.u;
    out.grad_v = phi.grad.transpose() * fp.u + lambda * fp.v;
    return out;
}

enum class InitStrategy { rsvd, full_svd, random };

inline std::string_view to_string(InitStrategy s) {
    switch (s) {
    case InitStrategy::rsvd: return "rsvd";
    case InitStrategy::full_svd: return "full_svd";
    case InitStrategy::random: return "random";
    }
    return "unknown";
}

inline InitStrategy parse_init_strategy(std::string_view s) {
    if (s == "rsvd") return InitStrategy::rsvd;
    if (s == "full_svd") return InitStrategy::full_svd;
    if (s == "random") return InitStrategy::random;
    throw ParameterError("unknown init strategy '" + std::string(s) + "'");
}

/// Starting factors. The SVD strategies use the rank-k SVD U_k S_k V_k^T of the
/// zero-filled observed data and return U_k S_k^{1/2}, V_k S_k^{1/2}; `random`
/// draws i.i.d. N(0, 1/k) entries (U first, row-major, then V).
inline FactorPair init_factors(const ProblemSpec& spec, Index k, InitStrategy strategy,
                               std::uint64_t seed, RandSvdOptions rsvd = {}) {
    const Index m = spec.rows();
    const Index n = spec.cols();
    if (k < 1 || k > std::min(m, n))
        throw DimensionError("init_factors: k = " + std::to_string(k) + " outside [1, " +
                             std::to_string(std::min(m, n)) + "]");
    if (strategy == InitStrategy::random) {
        Rng rng(seed);
        const double scale = 1.0 / std::sqrt(static_cast<double>(k));
        FactorPair fp{gaussian_matrix(m, k, rng) * scale, gaussian_matrix(n, k, rng) * scale};
        return fp;
    }
    const DenseMatrix b = spec.observed_data();
    SvdTriplet svd;
    if (strategy == InitStrategy::full_svd) {
        svd = svd_small(b).truncated(k);
    } else {
        rsvd.seed = seed;
        rsvd.oversample = std::min(rsvd.oversample, std::min(m, n) - k);
        svd = rand_svd(b, k, rsvd);
    }
    const Vector root = svd.sigma.cwiseSqrt();
    return {svd.u * root.asDiagonal(), svd.v * root.asDiagonal()};
}

struct RankGrowthOptions {
    bool enabled = false;
    Index max_k = 0;
    double min_rel_improvement = 1e-6;
    double column_scale = 1e-3;  ///< new column is sqrt(column_scale * sigma_1) (u_1, v_1)
};

/// When to evaluate the certificate during a solve.
struct CertificateSchedule {
    int every = 0;       ///< every n-th iterate; 0 disables
    bool final = false;  ///< once on the returned factors
};

struct SolverConfig {
    LbfgsOptions lbfgs{};
    RankGrowthOptions growth{};
    InitStrategy init = InitStrategy::rsvd;
    RandSvdOptions rsvd{};
    CertificateSchedule cert{};
    std::uint64_t seed = 0;

    void validate() const {
        lbfgs.validate();
        if (growth.enabled && growth.max_k < 1)
            throw ParameterError("rank growth needs max_k >= 1");
        if (cert.every < 0)
            throw ParameterError("certificate interval must be non-negative");
    }
};

namespace detail {

inline Vector flatten(const FactorPair& fp) {
    Vector x(fp.u.size() + fp.v.size());
    x.head(fp.u.size()) = Eigen::Map<const Vector>(fp.u.data(), fp.u.size());
    x.tail(fp.v.size()) = Eigen::Map<const Vector>(fp.v.data(), fp.v.size());
    return x;
}

inline FactorPair unflatten(const Vector& x, Index m, Index n, Index k) {
    FactorPair fp{DenseMatrix(m, k), DenseMatrix(n, k)};
    Eigen::Map<Vector>(fp.u.data(), m * k) = x.head(m * k);
    Eigen::Map<Vector>(fp.v.data(), n * k) = x.segment(m * k, n * k);
    return fp;
}

} // namespace detail

/// Hook invoked on every accepted iterate of the split solver (after the
/// certificate, if scheduled). Not timed.
using FactorObserver = std::function<void(int iter, const FactorPair& fp, double objective)>;

/// L-BFGS on the flattened factors from `start`. The trace objective is the
/// split objective; certificate values, when scheduled, use the best objective
/// seen so far as f_bound.
template <SeparableRegularizer Reg = L1Norm>
SolveReport minimize_split(const ProblemSpec& spec, FactorPair start, const SolverConfig& cfg,
                           const FactorObserver& on_iterate = {}) {
    const Index m = spec.rows();
    const Index n = spec.cols();
    const Index k = start.rank_bound();
    auto fg = [&](const Vector& x, Vector& g) {
        const SplitEval ev = split_objective<Reg>(detail::unflatten(x, m, n, k), spec);
        g.head(m * k) = Eigen::Map<const Vector>(ev.grad_u.data(), m * k);
        g.tail(n * k) = Eigen::Map<const Vector>(ev.grad_v.data(), n * k);
        return ev.value;
    };
    double best = std::numeric_limits<double>::infinity();
    IterateObserver observer;
    if (cfg.cert.every > 0 || on_iterate) {
        observer = [&](int iter, const Vector& x, double f) -> std::optional<double> {
            best = std::min(best, f);
            std::optional<double> cert;
            const FactorPair fp = detail::unflatten(x, m, n, k);
            if (cfg.cert.every > 0 && iter % cfg.cert.every == 0)
                cert = certificate<Reg>(fp, spec, best).gap_bound;
            if (on_iterate)
                on_iterate(iter, fp, f);
            return cert;
        };
    }
    LbfgsResult res = lbfgs_minimize(fg, detail::flatten(start), cfg.lbfgs, observer);

    SolveReport rep;
    rep.solver = "split";
    rep.trace = std::move(res.trace);
    rep.termination = res.termination;
    rep.iterations = res.iterations;
    rep.objective = res.f;
    FactorPair fp = detail::unflatten(res.x, m, n, k);
    rep.l = fp.product();
    rep.s = phi_value_grad<Reg>(rep.l, spec).s_star;
    rep.factors = std::move(fp);
    return rep;
}

/// Append one column (sqrt(eta) u_1, sqrt(eta) v_1) built from the leading
/// singular pair of -grad phi(U V^T), eta = scale * sigma_1.
template <SeparableRegularizer Reg = L1Norm>
FactorPair grow_rank(const FactorPair& fp, const ProblemSpec& spec, double scale,
                     std::uint64_t seed) {
    const DenseMatrix neg_grad = -phi_value_grad<Reg>(fp.product(), spec).grad;
    LeadingTriple lt;
    try {
        lt = leading_triple(neg_grad, LeadingTripleOptions{1e-9, 1000, seed});
    } catch (const ConvergenceError<LeadingTriple>& e) {
        lt = e.best();  // only a direction is needed here
    }
    const double root = std::sqrt(scale * lt.sigma);
    const Index k = fp.rank_bound();
    FactorPair out{DenseMatrix(fp.u.rows(), k + 1), DenseMatrix(fp.v.rows(), k + 1)};
    out.u << fp.u, root * lt.u;
    out.v << fp.v, root * lt.v;
    return out;
}

/// Split-SPCP: initialize, run L-BFGS over (U, V), and optionally grow the
/// rank bound one column at a time after each converged solve until the
/// relative objective improvement drops below the threshold or k = max_k.
/// A line-search failure at the precision floor still counts as a finished
/// phase; only the iteration cap and numerical failures stop growth.
template <SeparableRegularizer Reg = L1Norm>
SolveReport solve_split_spcp(const ProblemSpec& spec, Index k, const SolverConfig& cfg,
                             const FactorObserver& on_iterate = {}) {
    spec.validate();
    cfg.validate();
    FactorPair fp = init_factors(spec, k, cfg.init, cfg.seed, cfg.rsvd);
    SolveReport rep = minimize_split<Reg>(spec, std::move(fp), cfg, on_iterate);

    const Index k_cap = std::min({cfg.growth.max_k, spec.rows(), spec.cols()});
    auto phase_done = [](Termination t) {
        return t == Termination::converged || t == Termination::line_search_failed;
    };
    while (cfg.growth.enabled && phase_done(rep.termination) && rep.factors->rank_bound() < k_cap) {
        FactorPair grown = grow_rank<Reg>(*rep.factors, spec, cfg.growth.column_scale,
                                          cfg.seed + static_cast<std::uint64_t>(rep.factors->rank_bound()));
        SolveReport next = minimize_split<Reg>(spec, std::move(grown), cfg, on_iterate);
        const int offset = rep.trace.back().iter;
        const double t_offset = rep.trace.back().elapsed_s;
        for (IterationRecord r : next.trace) {
            if (r.iter == 0)
                continue;
            r.iter += offset;
            r.elapsed_s += t_offset;
            rep.trace.push_back(r);
        }
        const double improvement = rep.objective - next.objective;
        const double prev = rep.objective;
        const int total_iters = rep.iterations + next.iterations;
        if (next.objective <= rep.objective) {
            rep.l = std::move(next.l);
            rep.s = std::move(next.s);
            rep.factors = std::move(next.factors);
            rep.objective = next.objective;
            rep.termination = next.termination;
        }
        rep.iterations = total_iters;
        if (improvement < cfg.growth.min_rel_improvement * std::abs(prev))
            break;
    }
    if (cfg.cert.final)
        rep.certificate = certificate<Reg>(*rep.factors, spec, rep.objective);
    return rep;
}

} // namespace spcp
