/** @file serialize.hpp
 *  @brief JSON text for reports and Lyapunov pairs.
 */
#pragma once

#include "qbsde/diagnostics.hpp"
#include "qbsde/diffusion.hpp"
#include "qbsde/field.hpp"
#include "qbsde/generator.hpp"
#include "qbsde/lyapunov.hpp"

#include <string>

namespace qbsde {

/// {name, pass, margin, se, witness, note, rungs}
std::string to_json(const DiagnosticReport& r);
std::string to_json(const HolderEstimate& h);
std::string to_json(const BmoLadder& b);
std::string to_json(const GrowthReport& g);
std::string to_json(const ABReport& r);
std::string to_json(const VerifyReport& r);
std::string to_json(const ValidationReport& r);
std::string to_json(const DiscrepancyReport& r);
std::string to_json(const ConvergenceInfo& c);

/// {kind, N, alphas, c, scale, k_const, C1, C, C0, eps0, kappa_star}
std::string to_json(const LyapunovPair& p);
LyapunovPair lyapunov_pair_from_json(const std::string& text);

}  // namespace qbsde
