#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace spcp {

struct SyntheticProblem {
    DenseMatrix x;
    DenseMatrix l_ref;
    DenseMatrix s_ref;
};

/// X = A B^T + S + Z.
///
/// Draw order from a single Rng(seed): A (m x rank, row-major), B (n x rank),
/// the round(sparse_frac m n) support positions of S (without replacement),
/// their N(0, 1) values in the same order, then Z (m x n). Z is rescaled so
/// that ||Z||_F / ||X||_F = noise_rel.
inline SyntheticProblem gen_low_rank_plus_sparse(Index m, Index n, Index rank,
                                                 double sparse_frac, double noise_rel,
                                                 std::uint64_t seed) {
    if (m < 1 || n < 1)
        throw ParameterError("synth: m and n must be positive");
    if (rank < 0 || rank > std::min(m, n))
        throw ParameterError("synth: rank must lie in [0, min(m, n)]");
    if (!(sparse_frac >= 0.0 && sparse_frac <= 1.0))
        throw ParameterError("synth: sparse_frac must lie in [0, 1]");
    if (!(noise_rel >= 0.0 && noise_rel < 1.0))
        throw ParameterError("synth: noise_rel must lie in [0, 1)");

    Rng rng(seed);
    SyntheticProblem out;
    const DenseMatrix a = gaussian_matrix(m, rank, rng);
    const DenseMatrix b = gaussian_matrix(n, rank, rng);
    out.l_ref = a * b.transpose();

    const auto total = static_cast<std::size_t>(m * n);
    const auto count = static_cast<std::size_t>(std::llround(sparse_frac * static_cast<double>(total)));
    out.s_ref = DenseMatrix::Zero(m, n);
    const auto support = rng.sample_without_replacement(total, count);
    for (std::size_t idx : support)
        out.s_ref.data()[idx] = rng.normal();

    const DenseMatrix clean = out.l_ref + out.s_ref;
    out.x = clean;
    if (noise_rel > 0.0) {
        const DenseMatrix z = gaussian_matrix(m, n, rng);
        // Solve ||c z|| = rho ||clean + c z|| for c > 0.
        const double rho2 = noise_rel * noise_rel;
        const double zz = z.squaredNorm();
        const double mz = (clean.array() * z.array()).sum();
        const double mm = clean.squaredNorm();
        const double qa = zz * (1.0 - rho2);
        const double qb = -2.0 * rho2 * mz;
        const double qc = -rho2 * mm;
        const double c = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
        out.x += c * z;
    }
    return out;
}

/// Observation mask with exactly round(observe_frac m n) true entries chosen
/// uniformly without replacement.
inline Mask gen_mask(Index m, Index n, double observe_frac, std::uint64_t seed) {
    if (m < 1 || n < 1)
        throw ParameterError("gen_mask: m and n must be positive");
    if (!(observe_frac > 0.0 && observe_frac <= 1.0))
        throw ParameterError("gen_mask: observe_frac must lie in (0, 1]");
    Mask mask = Mask::Constant(m, n, false);
    const auto total = static_cast<std::size_t>(m * n);
    const auto count = static_cast<std::size_t>(std::llround(observe_frac * static_cast<double>(total)));
    Rng rng(seed);
    for (std::size_t idx : rng.sample_without_replacement(total, count))
        mask.data()[idx] = true;
    return mask;
}

} // namespace spcp
