/** @file field.hpp
 *  @brief Markovian solution fields (v, w) with interpolation, comparison and persistence.
 */
#pragma once

#include "qbsde/grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace qbsde {

enum class SolveMethod { grid = 0, regression = 1 };

const char* to_string(SolveMethod m);

/// Monomials of total degree <= degree in standardised coordinates.
struct PolynomialBasis {
    int d = 1;
    int degree = 0;
    std::vector<std::vector<int>> exponents;

    PolynomialBasis() = default;
    PolynomialBasis(int dim, int deg);
    int size() const { return static_cast<int>(exponents.size()); }
    void eval(const Vec& xi, double* out) const;
};

/// Regression representation of v and w at one time level.
struct RegressionStep {
    Vec center;
    Vec scale;    ///< zero entries mean the coordinate was constant
    int degree = 0;
    Mat coef_v;   ///< basis x N
    Mat coef_w;   ///< basis x (N d), row-major z(i, j) at column i d + j
    Vec lo, hi;   ///< evaluation domain

    Vec features(const Vec& x) const;
};

struct ConvergenceInfo {
    double cfl_ratio = 0.0;
    int n_internal_steps = 0;
    std::vector<double> picard_residuals;  ///< final residual per step
    int max_picard_iterations = 0;
    double sup_z = 0.0;
};

struct SolutionField {
    SolveMethod method = SolveMethod::grid;
    int N = 1;
    int d = 1;
    std::uint64_t seed = 0;
    std::vector<double> times;
    // Grid representation.
    Grid grid;
    std::vector<GridFunction> v;  ///< per time, N components
    std::vector<GridFunction> w;  ///< per time, N d components
    // Regression representation.
    std::vector<RegressionStep> steps;
    ConvergenceInfo info;

    double T() const { return times.back(); }
    bool in_domain(double t, const Vec& x) const;
};

/// y = v(t, x), z = w(t, x) by multilinear interpolation in (t, x).
std::pair<Vec, Mat> evaluate_solution(const SolutionField& field, double t, const Vec& x);

/// Nearest point of the evaluation domain at time t (componentwise clamp).
Vec clamp_to_domain(const SolutionField& field, double t, const Vec& x);

struct Region {
    Vec lo, hi;
    double t_lo = 0.0;
    double t_hi = 0.0;
    int n_per_axis = 41;
    int n_times = 11;
};

struct DiscrepancyReport {
    double sup_v = 0.0;
    double l2_v = 0.0;
    double sup_w = 0.0;
    double l2_w = 0.0;
    int n_points = 0;
};

DiscrepancyReport cross_validate(const SolutionField& a, const SolutionField& b, const Region& region);

void write_field(const SolutionField& field, std::ostream& os);
SolutionField read_field(std::istream& is);
/// CSV rows t, x_1..x_d, v_1..v_N, w_11..w_Nd at the requested time indices (all when empty).
void write_field_csv(const SolutionField& field, std::ostream& os, const std::vector<int>& time_indices = {},
                     int n_per_axis = 41);

void write_grid_function(const GridFunction& fn, std::ostream& os);
GridFunction read_grid_function(std::istream& is);

}  // namespace qbsde
