/** @file quadrature.hpp
 *  @brief Gauss-Hermite rules for Gaussian expectations.
 */
#pragma once

#include "qbsde/types.hpp"

#include <functional>
#include <vector>

namespace qbsde {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rule for the integral of f(x) exp(-x^2) over R (Golub-Welsch).
QuadratureRule gauss_hermite(int n);

/// E[fn(Z)] for Z ~ N(0, I_d) with a tensor Gauss-Hermite rule of n nodes per axis.
Vec gaussian_expectation(const std::function<Vec(const Vec&)>& fn, int d, int n = 128);

}  // namespace qbsde
