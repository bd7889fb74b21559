/** @file grid.hpp
 *  @brief Uniform tensor grids and vector-valued grid functions.
 */
#pragma once

#include "qbsde/types.hpp"

#include <vector>

namespace qbsde {

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;  ///< number of nodes, including both ends

    double h() const { return (hi - lo) / (n - 1); }
    double at(int i) const { return lo + i * h(); }
};

/// Row-major tensor grid; axis 0 varies slowest.
struct Grid {
    std::vector<Axis> axes;

    int dim() const { return static_cast<int>(axes.size()); }
    long size() const;
    std::vector<int> index(long flat) const;
    long flat(const std::vector<int>& idx) const;
    long stride(int axis) const;
    Vec point(long flat) const;
    bool contains(const Vec& x, double slack = 1e-12) const;
};

struct GridFunction {
    Grid grid;
    int N = 1;
    std::vector<double> values;  ///< [node][N]

    GridFunction() = default;
    GridFunction(Grid g, int n_components);

    Vec at(long node) const;
    void set(long node, const Vec& v);
    /// Multilinear interpolation; points outside the grid are clamped to it.
    Vec eval(const Vec& x) const;
};

}  // namespace qbsde
