/** @file paths.hpp
 *  @brief Euler-Maruyama path bundles and the Gaussian envelope check.
 */
#pragma once

#include "qbsde/diffusion.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qbsde {

struct PathBundle {
    int d = 1;
    double t0 = 0.0;
    Vec x0;
    double dt = 0.0;
    int n_steps = 0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    std::vector<double> X;   ///< [n_paths][n_steps + 1][d]
    std::vector<double> dW;  ///< [n_paths][n_steps][d]

    double x(int path, int step, int coord) const {
        return X[(static_cast<std::size_t>(path) * (n_steps + 1) + step) * d + coord];
    }
    double dw(int path, int step, int coord) const {
        return dW[(static_cast<std::size_t>(path) * n_steps + step) * d + coord];
    }
    Vec state(int path, int step) const;
    double time(int step) const { return t0 + step * dt; }
};

/// Standard normal increments for one path, drawn from its own stream.
void draw_increments(std::uint64_t seed, std::uint64_t path, int n_steps, int d, double dt,
                     double* out);

PathBundle simulate_paths(const DiffusionSpec& spec, double t0, const Vec& x0, double dt, int n_steps,
                          int n_paths, std::uint64_t seed);

void write_bundle(const PathBundle& bundle, std::ostream& os);
PathBundle read_bundle(std::istream& is);
void write_bundle_csv(const PathBundle& bundle, std::ostream& os);

struct EnvelopeConstants {
    double C_lower = 0.0;
    double C_upper = 0.0;
    double sigma_lower = 1.0;
    double sigma_upper = 1.0;
    double tol = 0.05;
    double n_se = 4.0;  ///< binomial standard errors allowed per bin

    /// Exact constants of the Gaussian kernel with dispersion s*I in dimension d.
    static EnvelopeConstants gaussian(int d, double s = 1.0);
};

struct EnvelopeBin {
    Vec center;
    double density = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool below = false;
    bool above = false;
};

struct EnvelopeReport {
    bool advisory = false;  ///< set when the diffusion does not have constant coefficients
    int n_bins = 0;
    int n_below = 0;
    int n_above = 0;
    std::vector<EnvelopeBin> bins;
    double flagged_fraction() const { return n_bins ? double(n_below + n_above) / n_bins : 0.0; }
};

/**
 * @brief Compare the empirical density of X_t with the two-sided Gaussian envelope.
 *
 * Bins are cubes of side bin_width. Each envelope is taken at its extreme over the bin, then
 * widened by the relative tolerance and n_se binomial standard errors.
 */
EnvelopeReport aronson_envelope_check(const PathBundle& bundle, double t, double bin_width,
                                      const EnvelopeConstants& constants, bool constant_coefficients = true);

}  // namespace qbsde
