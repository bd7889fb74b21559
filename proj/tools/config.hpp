#pragma once

#include "qbsde/registry.hpp"
#include "qbsde/solver.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbsde::cli {

/// Malformed configuration or usage; maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegionConfig {
    std::vector<double> lo, hi;
    double t_lo = 0.0, t_hi = -1.0;  ///< t_hi < 0 means T
    int n_per_axis = 41;
    int n_times = 11;
};

struct DiagnosticConfig {
    std::string type;  ///< holder | bmo | submartingale | apriori | nash | level_set | oracle
    // holder
    double alpha = 0.5;
    long n_pairs = 0;
    std::vector<double> refinements;
    // bmo
    std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};
    int n_anchor = 20;
    // path tests
    int n_paths = 10000;
    int n_steps = 100;
    double tol = 0.0;
    std::string pair = "bf";       ///< bf | quadratic
    std::optional<double> c;       ///< Lyapunov radius (half the admissible radius when absent)
    double k_scale = 1.0;          ///< mutation: multiplies k
    std::vector<double> alpha_scale;  ///< mutation: multiplies the exponents
    std::optional<RegionConfig> region;
};

struct LyapunovConfig {
    std::optional<double> c;
    int n_samples = 100000;
    double z_max = 1e4;
    double k_scale = 1.0;
    std::vector<double> alpha_scale;
};

struct SimulateConfig {
    int n_paths = 1000;
    int n_steps = 100;
    std::vector<double> x0;
    bool aronson = false;
    double bin_width = 0.25;
};

struct ExperimentConfig {
    SystemOptions system;
    std::optional<std::uint64_t> seed;
    std::string method = "grid";
    std::optional<GridConfig> grid;
    RegressionConfig regression;
    std::vector<std::string> checks;
    int check_samples = 4000;
    LyapunovConfig lyapunov;
    std::vector<DiagnosticConfig> diagnostics;
    SimulateConfig simulate;
    std::optional<RegionConfig> compare_region;
    std::string out;
    std::string canonical;  ///< normalised JSON text of the config, for hashing
};

/// Strict parse: unknown keys and wrong types throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Grid box for the system when the config has none.
GridConfig default_grid(const SystemBundle& b);

}  // namespace qbsde::cli
