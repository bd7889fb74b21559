/** @file registry.hpp
 *  @brief Shipped instances of the example systems, addressable by name.
 */
#pragma once

#include "qbsde/diagnostics.hpp"
#include "qbsde/systems.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qbsde {

struct SystemOptions {
    std::string name = "scalar";
    double T = 1.0;
    int d = 1;
    double amplitude = 0.01;                  ///< size of h and g for games and equilibrium
    double theta = 0.25;                      ///< coop-game
    std::vector<double> alphas{0.5, 0.5};     ///< equilibrium
    double box = 1.0;                         ///< risk-game control box
    std::string chart = "hyperbolic";         ///< darling: flat | hyperbolic
    std::string coefficient = "constant";     ///< scalar: constant | linear (f(x) = x_1)
    double constant = -1.0;                   ///< scalar: c
    double drift = 0.0;                       ///< scalar: constant z-independent term added to f
    std::string terminal = "default";         ///< default | tanh (first component tanh(x_1)) | zero (scalar)
};

/// Throws an input error for unknown names or option values.
SystemBundle make_system(const SystemOptions& opt);

/// The chart of a darling system (nullopt for other systems).
std::optional<ManifoldChart> system_chart(const SystemOptions& opt);

/// The twelve deviations shipped with each game: three sizes, two signs, two players.
std::vector<Deviation> shipped_deviations(const SystemBundle& b);

}  // namespace qbsde
