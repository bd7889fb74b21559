/** @file lyapunov.hpp
 *  @brief Lyapunov pairs (h, k): the cosh recursion, the quadratic pair and a sampled verifier.
 */
#pragma once

#include "qbsde/diffusion.hpp"
#include "qbsde/generator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qbsde {

enum class LyapunovKind { cosh_recursive, quadratic };

/**
 * @brief h and k = k_const + C1 |f_k(t, x)|.
 *
 * For the cosh kind h(y) = scale * (H_1(y) - H_1(0)) with H_k = exp(cosh(alpha_k y_k) + H_{k+1}),
 * H_{N+1} = 0. For the quadratic kind h(y) = scale * |y|^2 / 2.
 */
struct LyapunovPair {
    LyapunovKind kind = LyapunovKind::quadratic;
    int N = 1;
    std::vector<double> alphas;
    double c = 1.0;
    double scale = 1.0;
    double k_const = 0.0;
    double C1 = 0.0;

    // Construction record.
    double C = 0.0;
    double C0 = 0.0;
    double eps0 = 0.0;
    double kappa_star = 0.0;

    double h(const Vec& y) const;
    Vec grad(const Vec& y) const;
    Mat hess(const Vec& y) const;
    double k(double fk_norm) const { return k_const + C1 * fk_norm; }
};

/// Recursion quantities at y for the unscaled H_1.
struct CoshTerms {
    Vec G, S, H, P, A, At;  ///< H has N+1 entries with H[N] = 0
};
CoshTerms cosh_terms(const std::vector<double>& alphas, const Vec& y);

/// Effective constant for the construction from f_l and f_q growth constants.
double lyapunov_constant(double C_l, double C_q, int N, double Lambda);

/**
 * @brief Build the cosh-recursive pair for drivers in BF with effective constant C.
 *
 * C bounds both |f_l| (after lyapunov_constant) and |f_q^i|; kappa bounds |f_s|; eps bounds |f_e|.
 */
LyapunovPair construct_bf_lyapunov(double C, const KappaFn& kappa, double c, int N, double Lambda, double eps);

/// Finalise a cosh pair for given exponents: margins, eps0, kappa*, scale and k.
LyapunovPair make_cosh_pair(const std::vector<double>& alphas, double C, const KappaFn& kappa, double c,
                            double Lambda, double eps);

LyapunovPair quadratic_lyapunov(double c, double Lambda, double eps, int N = 1);

struct VerifyOptions {
    StateFn f_k;  ///< z-independent part entering k; empty means zero
    double suffix_zero_probability = 0.25;
};

struct VerifyReport {
    bool pass = true;
    double min_margin = INFINITY;
    double t = 0.0;
    Vec x, y;
    Mat z;
    int n_samples = 0;
};

VerifyReport verify_lyapunov(const LyapunovPair& pair, const Generator& gen, const DiffusionSpec& spec, double c,
                             int n, int n_samples, double z_max, std::uint64_t seed, const VerifyOptions& opt = {});

/// Lyapunov-inequality margin scale*(D^2h:<z,z>_a / 2 - Dh f) - |z|^2 + k at one point.
double lyapunov_margin(const LyapunovPair& pair, const Vec& y, const Mat& z, const Mat& sigma, const Vec& f,
                       double fk_norm);

}  // namespace qbsde
