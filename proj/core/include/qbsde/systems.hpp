/** @file systems.hpp
 *  @brief The example systems: drivers, decompositions, certificates and oracles ready for solving.
 */
#pragma once

#include "qbsde/diagnostics.hpp"
#include "qbsde/diffusion.hpp"
#include "qbsde/generator.hpp"
#include "qbsde/lyapunov.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qbsde {

using OracleFn = std::function<Vec(double, const Vec&)>;

struct SystemBundle {
    std::string name;
    DiffusionSpec spec;
    Generator driver;            ///< raw driver, in the coordinates of the terminal data
    TerminalData terminal;
    /// BF form in coordinates y~ = S y (S = transform).
    std::optional<GeneratorBF> bf;
    Mat transform;
    std::optional<ABCertificate> certificate;  ///< for the raw driver
    OracleFn oracle;                           ///< empty when none is known
    bool guarantee = true;                     ///< parameters inside the proven range
    std::string note;
    // Growth data for the Lyapunov construction (BF coordinates).
    double C_l = 0.0;
    double C_q = 0.0;
    KappaFn kappa;
    double eps = 0.0;
    std::optional<GameSpec> game;
};

/// Operator norm of a linear map evaluated on the canonical basis of R^{n_in}.
double linear_map_norm(const std::function<Vec(const Vec&)>& fn, int n_in);
/// max |q(z)| / |z|^2 for a quadratic form q on R^n.
double quadratic_form_bound(const std::function<double(const Vec&)>& q, int n);

/// Effective constant for the cosh construction of this bundle.
double bundle_lyapunov_constant(const SystemBundle& b);
/// construct_bf_lyapunov applied to the bundle's BF data.
LyapunovPair bundle_lyapunov(const SystemBundle& b, double c);
/// Largest c < c_max for which the construction stays finite, by bisection on log c.
double max_lyapunov_radius(const SystemBundle& b, double c_max = 10.0);

/// Gate: BF growth and the AB certificate must pass their sampled checks.
struct CertifyReport {
    bool pass = true;
    std::vector<std::string> failures;
    GrowthReport growth;
    ABReport ab;
};
CertifyReport certify(const SystemBundle& b, int n_samples = 4000, std::uint64_t seed = 7);

/// X = W in dimension d on [0, T].
DiffusionSpec brownian_spec(int d, double T);

// Equilibrium -----------------------------------------------------------------------------------

/// d = 1 uses mu only; d = 2 uses (mu, nu) with sigma = I.
SystemBundle equilibrium_system(const std::vector<double>& alphas, const TerminalData& g, const DiffusionSpec& spec);

// Darling ---------------------------------------------------------------------------------------

struct ManifoldChart {
    int N = 2;
    /// Gamma^k_{ij}(y) stored at [k][i * N + j].
    std::function<std::vector<Mat>(const Vec&)> christoffel;  ///< N matrices Gamma^k
    std::function<double(const Vec&)> phi;
    std::function<Vec(const Vec&)> grad_phi;
    std::function<Mat(const Vec&)> hess_phi;
    Vec box_lo, box_hi;  ///< working box in which Gamma is Lipschitz
    bool flat = false;
};

ManifoldChart flat_chart(int N);
/// Upper half-plane with phi = d_hyp(y, center)^2 / 2 - r^2.
ManifoldChart hyperbolic_chart(const Vec& center, double r);
double hyperbolic_distance(const Vec& a, const Vec& b);
/// Covariant Hessian D^2 phi - sum_k D_k phi Gamma^k.
Mat covariant_hessian(const ManifoldChart& chart, const Vec& y);

struct GeodesicCheck {
    bool pass = true;
    double min_eigenvalue = INFINITY;
    Vec witness;
    bool symmetric = true;
};
/// Samples y in the working box with phi(y) <= slack and checks symmetry of Gamma and Hess phi >= -tol.
GeodesicCheck check_geodesic_convexity(const ManifoldChart& chart, int n_samples, std::uint64_t seed,
                                       double slack = 0.5, double tol = 1e-9);

/// Throws a precondition error when g leaves M_0 at sampled x in the spec box.
SystemBundle darling_system(const ManifoldChart& chart, const TerminalData& g, const DiffusionSpec& spec);

// Cooperation game ------------------------------------------------------------------------------

struct CoopGameData {
    double theta = 0.0;
    std::function<double(int, const Vec&)> h;  ///< running cost h^i(x), bounded by h_bound
    double h_bound = 0.0;
    TerminalData g;                            ///< N = 2
    std::function<Vec(const Vec&)> b;          ///< drift (zero when empty)
};

/// Equilibrium controls for p with rows p^1, p^2.
std::pair<Vec, Vec> coop_minimizers(double theta, const Mat& p);
double coop_lagrangian(int player, double theta, const Vec& mu, const Vec& nu, const Mat& p);
/// Whether theta lies in the proven range.
bool coop_in_range(double theta);

SystemBundle coop_game(const CoopGameData& data, const DiffusionSpec& spec);

// Risk-sensitive game ---------------------------------------------------------------------------

struct RiskGameData {
    std::function<double(int, double, const Vec&)> h;  ///< control-free running cost part
    double h_bound = 0.0;
    TerminalData g;
    double box = 1.0;  ///< U = V = [-box, box]^d
};

Vec clip_box(const Vec& u, double box);
/// H^i(t, x, z^i, mu, nu) = z^i (mu + nu) + h^i(t, x) + |own control|^2 / 2.
double risk_hamiltonian(const RiskGameData& data, int player, double t, const Vec& x, const Mat& z, const Vec& mu,
                        const Vec& nu);
std::pair<Vec, Vec> risk_minimizers(const RiskGameData& data, const Mat& z);

SystemBundle risk_sensitive_game(const RiskGameData& data, const DiffusionSpec& spec);

// Scalar ----------------------------------------------------------------------------------------

/// dY = -(f(x) |Z|^2 / 2) dt + Z dW. For constant f = c, the Cole-Hopf oracle is attached.
SystemBundle scalar_unbounded(const std::function<double(const Vec&)>& f_coeff, const TerminalData& g,
                              const DiffusionSpec& spec, std::optional<double> constant = std::nullopt,
                              double f_bound = INFINITY);

/// (1/c) log E[exp(c g(x + sqrt(T - t) xi))] for X = W, or E[g] when c = 0.
OracleFn cole_hopf_oracle(const TerminalData& g, double c, double T, int nodes = 128);

/// Names accepted by the CLI.
std::vector<std::string> system_names();

}  // namespace qbsde
