/** @file spanning.hpp
 *  @brief Positive spanning tests and nonnegative representations.
 */
#pragma once

#include "qbsde/types.hpp"

#include <cstdint>
#include <optional>

namespace qbsde {

/// Columns are a_1..a_K in R^N.
struct SpanningSet {
    Mat vectors;

    explicit SpanningSet(Mat v);
    int N() const { return static_cast<int>(vectors.rows()); }
    int K() const { return static_cast<int>(vectors.cols()); }
};

/// Basic feasible solution of {A lam = b, lam >= 0} from a phase-1 simplex with Bland's rule.
std::optional<Vec> phase1_feasible(const Mat& A, const Vec& b, double tol = 1e-9);

int numeric_rank(const Mat& vectors);

bool positively_spans(const SpanningSet& set);

/// lam >= 0 with sum lam_k a_k = a, or nullopt when infeasible.
std::optional<Vec> positive_representation(const SpanningSet& set, const Vec& a);

/// Unit a with max_k a^T a_k <= 0 (deepest one found), or nullopt.
std::optional<Vec> strict_separation_witness(const SpanningSet& set, int n_dirs, std::uint64_t seed);

}  // namespace qbsde
