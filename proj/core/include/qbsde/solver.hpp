/** @file solver.hpp
 *  @brief Finite-difference and regression Monte-Carlo solvers for Markovian BSDE systems.
 */
#pragma once

#include "qbsde/diffusion.hpp"
#include "qbsde/field.hpp"
#include "qbsde/generator.hpp"

#include <cstdint>

namespace qbsde {

struct GridConfig {
    Vec lo, hi;          ///< spatial box
    double dx = 0.05;
    double dt = 0.0;     ///< 0 selects safety * dx^2 / (d Lambda)
    double safety = 0.4;
    int n_save = 101;    ///< stored time levels
};

struct RegressionConfig {
    int n_paths = 20000;
    int n_steps = 50;
    int degree = 4;
    double truncation = 10.0;  ///< m in Pi^m applied to Z inside the driver
    int picard_max = 50;
    double picard_tol = 1e-10;
    Vec x0;                    ///< start point (defaults to the origin)
    double init_spread = 0.0;  ///< half-width of a uniform start around x0
    double domain_quantile = 0.005;
};

SolutionField solve_pde_grid(const DiffusionSpec& spec, const Generator& gen, const TerminalData& term,
                             const GridConfig& cfg);

SolutionField solve_regression_mc(const DiffusionSpec& spec, const Generator& gen, const TerminalData& term,
                                  const RegressionConfig& cfg, std::uint64_t seed);

/// Weighted least squares of targets on features with ridge floor 1e-10 (relative to the Gram diagonal).
Mat least_squares(const Mat& gram, const Mat& rhs, double* condition = nullptr);

}  // namespace qbsde
