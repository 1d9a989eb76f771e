#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "errors.hpp"
#include "random.hpp"

namespace spcp {

using Index = Eigen::Index;

/// Row-major 64-bit real matrix. Holds X, L, S, U, V and every intermediate.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Observation pattern; true marks an observed entry.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Thin singular value decomposition a = u * diag(sigma) * v^T.
/// Columns of u and v are orthonormal, sigma is non-increasing and non-negative.
struct SvdTriplet {
    DenseMatrix u;
    Vector sigma;
    DenseMatrix v;

    Index size() const { return sigma.size(); }

    DenseMatrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }

    /// Number of singular values strictly above rel_tol * sigma_1.
    Index numerical_rank(double rel_tol = 1e-10) const {
        if (sigma.size() == 0 || sigma(0) <= 0.0)
            return 0;
        const double cut = rel_tol * sigma(0);
        return static_cast<Index>(std::count_if(sigma.begin(), sigma.end(),
                                                [cut](double s) { return s > cut; }));
    }

    /// Keep only the leading `r` triples.
    SvdTriplet truncated(Index r) const {
        r = std::min(r, size());
        return {u.leftCols(r), sigma.head(r), v.leftCols(r)};
    }
};

struct QrFactors {
    DenseMatrix q; ///< m x k, orthonormal columns
    DenseMatrix r; ///< k x k, upper triangular with non-negative diagonal
};

inline bool all_finite(const DenseMatrix& a) { return a.allFinite(); }

/// Householder thin QR. The diagonal of r is made non-negative so the
/// factorization is unique for full-rank input.
inline QrFactors thin_qr(const DenseMatrix& a) {
    const Index m = a.rows();
    const Index k = a.cols();
    if (m < k)
        throw DimensionError("thin_qr: needs rows >= cols, got " + std::to_string(m) + "x" +
                             std::to_string(k));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(a)};
    DenseMatrix q = qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
    DenseMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Index j = 0; j < k; ++j) {
        if (r(j, j) < 0.0) {
            r.row(j) *= -1.0;
            q.col(j) *= -1.0;
        }
    }
    return {std::move(q), std::move(r)};
}

/// Dense thin SVD of rank min(m, n). Throws NumericalError when the
/// underlying iteration fails or produces non-finite output.
inline SvdTriplet svd_small(const DenseMatrix& a) {
    if (!all_finite(a))
        throw NumericalError("svd_small: input has non-finite entries");
    const Index p = std::min(a.rows(), a.cols());
    if (p == 0)
        return {DenseMatrix(a.rows(), 0), Vector(0), DenseMatrix(a.cols(), 0)};
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a),
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("svd_small: SVD did not converge");
    SvdTriplet out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    if (!out.u.allFinite() || !out.v.allFinite() || !out.sigma.allFinite())
        throw NumericalError("svd_small: SVD produced non-finite values");
    return out;
}

/// Standard-normal matrix drawn row by row from `rng`.
inline DenseMatrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
    DenseMatrix g(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            g(i, j) = rng.normal();
    return g;
}

struct RandSvdOptions {
    Index oversample = 10;
    Index power_iters = 1;
    std::uint64_t seed = 0;
};

/// Randomized rank-k SVD: Gaussian range finder with re-orthonormalized power
/// iterations, then an exact SVD of the projected (k+p) x n matrix.
inline SvdTriplet rand_svd(const DenseMatrix& a, Index k, const RandSvdOptions& opts = {}) {
    const Index m = a.rows();
    const Index n = a.cols();
    const Index width = k + opts.oversample;
    if (k < 1 || opts.oversample < 0 || opts.power_iters < 0)
        throw DimensionError("rand_svd: k must be >= 1 and oversample, power_iters >= 0");
    if (width > std::min(m, n))
        throw DimensionError("rand_svd: sketch width " + std::to_string(width) +
                             " exceeds min(m, n) = " + std::to_string(std::min(m, n)));

    Rng rng(opts.seed);
    const DenseMatrix omega = gaussian_matrix(n, width, rng);
    DenseMatrix q = thin_qr(a * omega).q;
    for (Index it = 0; it < opts.power_iters; ++it) {
        const DenseMatrix z = thin_qr(a.transpose() * q).q;
        q = thin_qr(a * z).q;
    }
    const DenseMatrix b = q.transpose() * a;
    SvdTriplet small = svd_small(b);
    return {q * small.u.leftCols(k), small.sigma.head(k), small.v.leftCols(k)};
}

/// Leading singular triple (u, sigma_1, v) of an implicit operator.
struct LeadingTriple {
    Vector u;
    double sigma = 0.0;
    Vector v;
    int iterations = 0;
};

struct LeadingTripleOptions {
    double tol = 1e-9;  ///< relative change of the sigma estimate
    int max_iter = 1000;
    std::uint64_t seed = 0;
};

/// Power iteration on A^T A through `apply` (v -> A v, length m) and `adjoint`
/// (u -> A^T u, length n). `start` warm-starts the right vector; otherwise a
/// seeded Gaussian vector is used. Throws ConvergenceError<LeadingTriple> with
/// the last iterate when max_iter is exhausted.
template <class Apply, class Adjoint>
LeadingTriple leading_triple(Apply&& apply, Adjoint&& adjoint, Index m, Index n,
                             const LeadingTripleOptions& opts = {},
                             const Vector* start = nullptr) {
    if (m < 1 || n < 1)
        throw DimensionError("leading_triple: empty operator");
    Rng rng(opts.seed);
    auto random_unit = [&] {
        Vector v(n);
        for (Index i = 0; i < n; ++i)
            v(i) = rng.normal();
        return Vector(v / v.norm());
    };

    LeadingTriple cur;
    cur.v = (start != nullptr && start->size() == n && start->norm() > 0.0)
                ? Vector(*start / start->norm())
                : random_unit();

    Vector av = apply(cur.v);
    if (av.norm() == 0.0) {
        // Warm start in the null space, or A = 0.
        cur.v = random_unit();
        av = apply(cur.v);
    }
    if (av.norm() == 0.0) {
        cur.u = Vector::Unit(m, 0);
        cur.sigma = 0.0;
        return cur;
    }

    double prev = 0.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        cur.u = av / av.norm();
        Vector w = adjoint(cur.u);
        cur.sigma = w.norm();
        cur.iterations = it;
        if (cur.sigma == 0.0)
            return cur;
        cur.v = w / cur.sigma;
        if (std::abs(cur.sigma - prev) <= opts.tol * cur.sigma)
            return cur;
        prev = cur.sigma;
        av = apply(cur.v);
    }
    throw ConvergenceError<LeadingTriple>("leading_triple: no convergence after " +
                                              std::to_string(opts.max_iter) + " iterations",
                                          cur);
}

/// Leading singular triple of an explicit matrix.
inline LeadingTriple leading_triple(const DenseMatrix& a, const LeadingTripleOptions& opts = {},
                                    const Vector* start = nullptr) {
    return leading_triple([&](const Vector& x) -> Vector { return a * x; },
                          [&](const Vector& y) -> Vector { return a.transpose() * y; },
                          a.rows(), a.cols(), opts, start);
}

/// Sum of singular values.
inline double nuclear_norm(const DenseMatrix& a) { return svd_small(a).sigma.sum(); }

} // namespace spcp
