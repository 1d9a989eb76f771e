#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace spcp {

/// Split iterate L = U V^T with rank bound k = U.cols() = V.cols().
struct FactorPair {
    DenseMatrix u;  ///< m x k
    DenseMatrix v;  ///< n x k

    Index rank_bound() const { return u.cols(); }

    void validate() const {
        if (u.cols() != v.cols() || u.cols() < 1)
            throw DimensionError("FactorPair: U and V need the same column count k >= 1");
    }

    DenseMatrix product() const { return u * v.transpose(); }
};

/// Distance-to-optimality report of a candidate L.
struct CertificateReport {
    double e_norm = 0.0;              ///< ||E||_F of the approximate zero subgradient
    std::array<double, 4> terms{};    ///< four summands of ||E||_F^2 / lambda_l^2
    double f_bound = 0.0;             ///< upper bound on the optimal objective
    double gap_bound = 0.0;           ///< bound on F(L) - F(L*)
    Index rank = 0;                   ///< numerical rank of L used for U1, V1
};

enum class Termination {
    converged,
    iteration_cap,
    line_search_failed,
    numerical_failure,
};

inline std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::iteration_cap: return "iteration_cap";
    case Termination::line_search_failed: return "line_search_failed";
    case Termination::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

struct IterationRecord {
    int iter = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double elapsed_s = 0.0;
    std::optional<double> cert;  ///< certificate gap_bound when evaluated at this iterate
};

/// Outcome of any of the solvers: trace, final decomposition and why it stopped.
struct SolveReport {
    std::string solver;
    std::vector<IterationRecord> trace;
    DenseMatrix l;
    DenseMatrix s;
    std::optional<FactorPair> factors;
    double objective = 0.0;
    Termination termination = Termination::iteration_cap;
    int iterations = 0;
    std::optional<CertificateReport> certificate;
};

} // namespace spcp
