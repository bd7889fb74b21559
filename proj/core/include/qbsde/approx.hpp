/** @file approx.hpp
 *  @brief Partial truncation, compact-support mollifier and Lipschitz approximation families.
 */
#pragma once

#include "qbsde/generator.hpp"
#include "qbsde/grid.hpp"

#include <memory>
#include <vector>

namespace qbsde {

/// Pi^m(w) = (|w| ^ m) / |w| * w (Frobenius norm for matrices), Pi^m(0) = 0.
Vec truncate(const Vec& w, double m);
Mat truncate(const Mat& w, double m);

/// eta^m(x) = m^d C exp(1 / (|m x|^2 - 1)) on |x| < 1/m.
class MollifierKernel {
public:
    MollifierKernel(double m, int dim);

    double m() const { return m_; }
    int dim() const { return dim_; }
    double normalization() const { return C_; }
    double radius() const { return 1.0 / m_; }
    double operator()(const Vec& x) const;

private:
    double m_;
    int dim_;
    double C_;
};

/// Discrete convolution on the grid with clamped (constant) extension at the edges.
GridFunction mollify(const GridFunction& fn, const MollifierKernel& kernel);

/// Antithetic quasi-random nodes in the unit ball of R^dim with normalised kernel weights.
struct KernelNodes {
    int dim = 0;
    std::vector<Vec> u;
    std::vector<double> w;
};
KernelNodes kernel_nodes(int dim, int count = 1 << 13);

struct Approximation {
    double m = 1.0;
    double M = 4.0;  ///< declared universal growth factor
    Generator f;
    GeneratorBF bf;
    TerminalData g;
};

/**
 * @brief f^m(t, x, z) = (f * eta^m)(t, Pi^m x, Pi^m z) and g^m(x) = (g * eta^m)(Pi^m x).
 *
 * The returned BF decomposition sums to f^m exactly; the remainder of the quadratic-linear part is
 * carried in f_s with a linear-growth budget.
 */
Approximation build_approximation(const GeneratorBF& decomp, const TerminalData& g, double m);

/// Largest divided difference |F(p) - F(p')| / |p - p'| over sampled nearby pairs in (t, x, z).
double lipschitz_estimate(const Generator& f, int n_pairs, double radius, std::uint64_t seed);

}  // namespace qbsde
