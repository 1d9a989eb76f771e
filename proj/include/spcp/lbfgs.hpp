#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "report.hpp"

namespace spcp {

struct LbfgsOptions {
    int memory = 10;          ///< stored (s, y) pairs
    double grad_tol = 1e-6;   ///< relative to max(1, ||g_0||)
    int max_iter = 1000;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_linesearch = 40;  ///< function evaluations per line search

    void validate() const {
        if (memory < 1)
            throw ParameterError("lbfgs: memory must be >= 1");
        if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
            throw ParameterError("lbfgs: need 0 < c1 < c2 < 1");
        if (!(grad_tol >= 0.0))
            throw ParameterError("lbfgs: grad_tol must be non-negative");
        if (max_iter < 0 || max_linesearch < 1)
            throw ParameterError("lbfgs: iteration caps must be positive");
    }
};

struct LbfgsResult {
    Vector x;
    double f = 0.0;
    Vector g;
    std::vector<IterationRecord> trace;
    Termination termination = Termination::iteration_cap;
    int iterations = 0;
    int evaluations = 0;
};

/// Called after every accepted iterate (and once at the start with iter 0).
/// May return a certificate value for the trace; its run time is not counted
/// in elapsed_s.
using IterateObserver = std::function<std::optional<double>(int iter, const Vector& x, double f)>;

namespace detail {

/// Minimizer of the cubic matching (a, fa, da) and (b, fb, db); NaN when the
/// cubic has no real minimizer.
inline double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (!(disc >= 0.0))
        return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom == 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    return b - (b - a) * (db + d2 - d1) / denom;
}

struct TrialPoint {
    double alpha = 0.0;
    double f = 0.0;
    double d = 0.0;  ///< directional derivative g(alpha)^T dir
    Vector x;
    Vector g;
};

/// Strong Wolfe line search (bracketing + zoom with safeguarded cubic
/// interpolation). Returns nullopt when no acceptable step is found.
template <class Objective>
std::optional<TrialPoint> strong_wolfe(Objective& fg, const Vector& x0, double f0, double d0,
                                       const Vector& dir, double alpha_init,
                                       const LbfgsOptions& opt, int& evaluations) {
    int budget = opt.max_linesearch;
    auto evaluate = [&](double alpha) {
        TrialPoint p;
        p.alpha = alpha;
        p.x = x0 + alpha * dir;
        p.g.resize(x0.size());
        p.f = fg(p.x, p.g);
        p.d = p.g.dot(dir);
        ++evaluations;
        --budget;
        return p;
    };
    auto armijo_ok = [&](const TrialPoint& p) { return p.f <= f0 + opt.wolfe_c1 * p.alpha * d0; };
    auto curvature_ok = [&](const TrialPoint& p) { return std::abs(p.d) <= -opt.wolfe_c2 * d0; };

    auto zoom = [&](TrialPoint lo, TrialPoint hi) -> std::optional<TrialPoint> {
        while (budget > 0) {
            const double width = std::abs(hi.alpha - lo.alpha);
            if (width <= 1e-16 * std::max(1.0, std::abs(lo.alpha)))
                return std::nullopt;
            double a = cubic_minimizer(lo.alpha, lo.f, lo.d, hi.alpha, hi.f, hi.d);
            const double left = std::min(lo.alpha, hi.alpha) + 0.1 * width;
            const double right = std::max(lo.alpha, hi.alpha) - 0.1 * width;
            if (!std::isfinite(a) || a < left || a > right)
                a = 0.5 * (lo.alpha + hi.alpha);
            TrialPoint p = evaluate(a);
            if (!std::isfinite(p.f) || !armijo_ok(p) || p.f >= lo.f) {
                hi = std::move(p);
            } else {
                if (curvature_ok(p))
                    return p;
                if (p.d * (hi.alpha - lo.alpha) >= 0.0)
                    hi = lo;
                lo = std::move(p);
            }
        }
        return std::nullopt;
    };

    TrialPoint prev;
    prev.alpha = 0.0;
    prev.f = f0;
    prev.d = d0;
    prev.x = x0;
    double alpha = alpha_init;
    for (int i = 0; budget > 0; ++i) {
        TrialPoint p = evaluate(alpha);
        if (!std::isfinite(p.f)) {
            // Overshot into a non-finite region; pull back towards the last good point.
            alpha = prev.alpha + 0.25 * (alpha - prev.alpha);
            continue;
        }
        if (!armijo_ok(p) || (i > 0 && p.f >= prev.f))
            return zoom(std::move(prev), std::move(p));
        if (curvature_ok(p))
            return p;
        if (p.d >= 0.0)
            return zoom(std::move(p), std::move(prev));
        double next = cubic_minimizer(prev.alpha, prev.f, prev.d, p.alpha, p.f, p.d);
        const double lo = p.alpha + 1.1 * (p.alpha - prev.alpha);
        const double hi = p.alpha + 8.0 * (p.alpha - prev.alpha);
        if (!std::isfinite(next) || next < lo || next > hi)
            next = std::clamp(std::isfinite(next) ? next : hi, lo, hi);
        prev = std::move(p);
        alpha = next;
    }
    return std::nullopt;
}

} // namespace detail

/// Limited-memory BFGS (two-loop recursion) with a strong Wolfe line search.
///
/// `fg(x, g)` returns f(x) and writes the gradient into g (pre-sized).
/// Stops when ||g|| <= grad_tol * max(1, ||g_0||), at max_iter, or when the line
/// search cannot find an acceptable step; in the last case the best (last
/// accepted) iterate is returned.
template <class Objective>
LbfgsResult lbfgs_minimize(Objective&& fg, Vector x0, const LbfgsOptions& opt,
                           const IterateObserver& observer = {}) {
    opt.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    double excluded = 0.0;
    auto elapsed = [&] {
        return std::chrono::duration<double>(clock::now() - start).count() - excluded;
    };

    LbfgsResult res;
    res.x = std::move(x0);
    res.g.resize(res.x.size());
    res.f = fg(res.x, res.g);
    res.evaluations = 1;
    if (!std::isfinite(res.f) || !res.g.allFinite()) {
        res.termination = Termination::numerical_failure;
        return res;
    }

    auto record = [&](int iter) {
        IterationRecord rec;
        rec.iter = iter;
        rec.objective = res.f;
        rec.grad_norm = res.g.norm();
        rec.elapsed_s = elapsed();
        if (observer) {
            const auto t0 = clock::now();
            rec.cert = observer(iter, res.x, res.f);
            excluded += std::chrono::duration<double>(clock::now() - t0).count();
        }
        res.trace.push_back(rec);
    };

    const double threshold = opt.grad_tol * std::max(1.0, res.g.norm());
    record(0);
    if (res.g.norm() <= threshold) {
        res.termination = Termination::converged;
        return res;
    }

    std::deque<Vector> s_hist;
    std::deque<Vector> y_hist;
    std::deque<double> rho_hist;
    std::vector<double> alpha_buf;

    for (int k = 1; k <= opt.max_iter; ++k) {
        // Two-loop recursion: dir = -H g.
        Vector q = res.g;
        const std::size_t mem = s_hist.size();
        alpha_buf.assign(mem, 0.0);
        for (std::size_t i = mem; i-- > 0;) {
            alpha_buf[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha_buf[i] * y_hist[i];
        }
        double alpha_init = 1.0;
        if (mem > 0) {
            const Vector& s = s_hist.back();
            const Vector& y = y_hist.back();
            q *= s.dot(y) / y.squaredNorm();
        } else {
            alpha_init = 1.0 / res.g.norm();
        }
        for (std::size_t i = 0; i < mem; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha_buf[i] - beta) * s_hist[i];
        }
        Vector dir = -q;
        double d0 = res.g.dot(dir);
        if (!(d0 < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -res.g;
            d0 = -res.g.squaredNorm();
            alpha_init = 1.0 / res.g.norm();
        }

        auto step = detail::strong_wolfe(fg, res.x, res.f, d0, dir, alpha_init, opt,
                                         res.evaluations);
        if (!step && mem > 0) {
            // Stale curvature pairs; retry once along the steepest descent direction.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -res.g;
            step = detail::strong_wolfe(fg, res.x, res.f, -res.g.squaredNorm(), dir,
                                        1.0 / res.g.norm(), opt, res.evaluations);
        }
        if (!step) {
            res.termination = Termination::line_search_failed;
            res.iterations = k - 1;
            return res;
        }

        Vector s = step->x - res.x;
        Vector y = step->g - res.g;
        const double sy = s.dot(y);
        res.x = std::move(step->x);
        res.g = std::move(step->g);
        res.f = step->f;
        res.iterations = k;
        if (sy > std::numeric_limits<double>::epsilon() * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        record(k);
        if (res.g.norm() <= threshold) {
            res.termination = Termination::converged;
            return res;
        }
    }
    res.termination = Termination::iteration_cap;
    return res;
}

} // namespace spcp
