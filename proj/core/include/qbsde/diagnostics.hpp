/** @file diagnostics.hpp
 *  @brief Statistical checks on solved fields: Hoelder seminorms, bmo, submartingale and Nash tests.
 */
#pragma once

#include "qbsde/diffusion.hpp"
#include "qbsde/field.hpp"
#include "qbsde/generator.hpp"
#include "qbsde/lyapunov.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qbsde {

/// One pass/fail line. A rung passes when margin >= -3 se - tol.
struct Rung {
    std::string label;
    double value = 0.0;
    double margin = 0.0;
    double se = 0.0;
    bool pass = true;
};

struct DiagnosticReport {
    std::string name;
    bool pass = true;
    double margin = INFINITY;  ///< worst rung margin
    double se = 0.0;           ///< se of the worst rung
    std::string witness;
    std::string note;
    std::vector<Rung> rungs;

    void add(Rung r);
};

struct HolderEstimate {
    double alpha = 1.0;
    double value = 0.0;
    double t1 = 0.0, t2 = 0.0;
    Vec x1, x2;
    long n_pairs = 0;
    bool exhaustive = false;
};

/**
 * @brief max |v(t',x') - v(t,x)| / max(sqrt|t - t'|, |x - x'|)^alpha over node pairs in K.
 *
 * Grid fields use their own nodes, regression fields a lattice of K. Pairs are enumerated
 * exhaustively when n_pairs <= 0 or when n_pairs covers all pairs.
 */
HolderEstimate holder_seminorm(const SolutionField& field, double alpha, const Region& K, long n_pairs,
                               std::uint64_t seed);

struct BmoOptions {
    int n_steps_min = 10;          ///< Euler steps inside the shortest window
    double max_escape_fraction = 0.01;
};

struct BmoEstimate {
    double delta = 0.0;
    double value = 0.0;
    double se = 0.0;
    double t = 0.0;
    Vec x;
    double escape_fraction = 0.0;
};

/// sup over anchors (t, x) of E^{t,x} int_t^{t+delta} |w(u, X_u)|^2 du.
BmoEstimate bmo_norm(const DiffusionSpec& spec, const SolutionField& field, double delta, const Region& K,
                     int n_anchor, int n_paths, std::uint64_t seed, const BmoOptions& opt = {});

struct BmoLadder {
    std::vector<BmoEstimate> estimates;
    bool monotone = true;
};

/// Estimates over decreasing windows with common anchors in [0, T - max delta] and common paths.
BmoLadder bmo_ladder(const DiffusionSpec& spec, const SolutionField& field, const std::vector<double>& deltas,
                     const Region& K, int n_anchor, int n_paths, std::uint64_t seed, const BmoOptions& opt = {});

struct PathTestOptions {
    Vec x0;                      ///< start (origin when empty)
    std::vector<double> ladder;  ///< rung times; default {0, T/4, T/2, 3T/4, T}
    int n_steps = 100;
    double tol = 0.0;            ///< discretisation allowance per rung
    Mat transform;               ///< applied to v and w before testing (identity when empty)
};

/**
 * @brief E[h(Y_t')] - E[h(Y_t)] >= E[int_t^t' (|Z|^2 - k) du] along simulated paths.
 *
 * Throws a precondition error when |v| exceeds pair.c on the field.
 */
DiagnosticReport lyapunov_submartingale_test(const DiffusionSpec& spec, const SolutionField& field,
                                             const LyapunovPair& pair, const StateFn& f_k, int n_paths,
                                             std::uint64_t seed, const PathTestOptions& opt = {});

/**
 * @brief e_k = exp(a_k^T v - int_t^T l) is a submartingale along the ladder, for every direction.
 *
 * Weak certificates are tested under the tilted measure with drift sigma^{-1} L_k, by self-normalised
 * likelihood weights. Effective sample size below 5% raises a weight_degeneracy error.
 */
DiagnosticReport apriori_bound_test(const DiffusionSpec& spec, const SolutionField& field, const ABCertificate& cert,
                                    int n_paths, std::uint64_t seed, const PathTestOptions& opt = {});

/// Control-dependent two-player game in feedback form on sigma = I state dynamics dX = (b + mu + nu) dt + dW.
struct GameSpec {
    std::string name;
    int d = 1;
    double T = 1.0;
    std::function<Vec(const Vec&)> b;  ///< uncontrolled drift
    /// Equilibrium feedback from z = w(t, x): (mu, nu).
    std::function<std::pair<Vec, Vec>(double, const Vec&, const Mat&)> feedback;
    /// Projection of a control onto the admissible set (identity when empty).
    std::function<Vec(const Vec&)> project;
    /// Running cost of player i.
    std::function<double(int, double, const Vec&, const Vec&, const Vec&)> running;
    std::function<double(int, const Vec&)> terminal;
    bool exponential = false;  ///< J = E exp(int running + g) instead of E[int running + g]
};

struct Deviation {
    int player = 0;   ///< 0 or 1
    double delta = 0.0;
    Vec direction;    ///< added to the player's equilibrium control
};

struct NashOptions {
    Vec x0;
    int n_steps = 100;
    double tol = 0.0;
};

/// J^i(deviation) - J^i(equilibrium) per deviation, with common random numbers.
DiagnosticReport nash_deviation_test(const GameSpec& game, const SolutionField& field,
                                     const std::vector<Deviation>& deviations, int n_paths, std::uint64_t seed,
                                     const NashOptions& opt = {});

/// Effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(const std::vector<double>& w);

}  // namespace qbsde
