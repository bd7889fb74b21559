/** @file diffusion.hpp
 *  @brief Forward diffusion coefficients and their sampled validation.
 */
#pragma once

#include "qbsde/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qbsde {

using DriftFn = std::function<Vec(double, const Vec&)>;
using DispersionFn = std::function<Mat(double, const Vec&)>;

/**
 * @brief Coefficients b, sigma of dX = b dt + sigma dW on [0, T].
 *
 * Time arguments outside [0, T] are clamped before the callables are invoked.
 */
struct DiffusionSpec {
    int d = 1;
    double T = 1.0;
    DriftFn b;
    DispersionFn sigma;
    double ellipticity = 1.0;   ///< Lambda
    double lipschitz = 1.0;     ///< L
    double drift_bound = 1.0;
    bool constant_coefficients = false;
    Vec box_lo;  ///< sampling box used by validation
    Vec box_hi;

    Vec drift(double t, const Vec& x) const;
    Mat dispersion(double t, const Vec& x) const;
    double clamp_time(double t) const;

    /// b = 0, sigma = I.
    static DiffusionSpec brownian(int d, double T);
    /// Constant b and sigma.
    static DiffusionSpec constant(const Vec& b, const Mat& sigma, double T);
};

struct CoefficientCheck {
    std::string name;
    bool pass = true;
    double worst = 0.0;  ///< worst sampled value of the checked quantity
    double t = 0.0;
    Vec x;
    Vec direction;  ///< z for ellipticity checks, pair offset for Lipschitz
};

struct ValidationReport {
    bool pass = true;
    std::vector<CoefficientCheck> checks;
    const CoefficientCheck& check(const std::string& name) const;
};

/**
 * @brief Sampled verification of symmetry, ellipticity, Lipschitz and drift bounds.
 *
 * Ellipticity is tested exactly at each sampled point through the spectrum of sigma sigma^T.
 */
ValidationReport validate_coefficients(const DiffusionSpec& spec, int n_samples, std::uint64_t seed);

}  // namespace qbsde
