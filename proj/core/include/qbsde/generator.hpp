/** @file generator.hpp
 *  @brief Drivers, BF decompositions, terminal data and boundedness certificates.
 */
#pragma once

#include "qbsde/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qbsde {

/// f(t, x, y, z) with z stored as an N x d matrix whose rows are z^i.
using DriverFn = std::function<Vec(double, const Vec&, const Vec&, const Mat&)>;
using ZFn = std::function<Vec(double, const Vec&, const Mat&)>;
using LinearPartFn = std::function<Mat(double, const Vec&, const Mat&)>;  ///< d x N
using StateFn = std::function<Vec(double, const Vec&)>;
using KappaFn = std::function<double(double)>;

struct Generator {
    int N = 1;
    int d = 1;
    double T = 1.0;
    DriverFn f;
    bool depends_on_y = false;

    Vec operator()(double t, const Vec& x, const Vec& y, const Mat& z) const { return f(t, x, y, z); }
    Vec operator()(double t, const Vec& x, const Mat& z) const { return f(t, x, Vec::Zero(N), z); }
};

struct BFConstants {
    double C = 0.0;
    KappaFn kappa;  ///< empty means kappa = 0
    double q = 2.0;
    double eps = 0.0;
};

/**
 * @brief f = diag(z f_l) + f_q + f_s + f_e + f_k. Empty components are zero.
 */
struct GeneratorBF {
    int N = 1;
    int d = 1;
    double T = 1.0;
    LinearPartFn f_l;
    ZFn f_q;
    ZFn f_s;
    ZFn f_e;
    StateFn f_k;
    std::function<BFConstants(int)> constants;  ///< per locality index n

    BFConstants at(int n) const;
    /// Throws when some declared q_n fails q_n > 1 + d/2 for n in [1, n_max].
    void validate(int n_max = 4) const;

    Vec linear_part(double t, const Vec& x, const Mat& z) const;
    Vec value(double t, const Vec& x, const Mat& z) const;
};

Generator assemble(const GeneratorBF& decomp);

struct TerminalData {
    int N = 1;
    int d = 1;
    std::function<Vec(const Vec&)> g;
    double holder_alpha = 1.0;
    double holder_bound = 1.0;
    double sup_bound = 1.0;  ///< sup |g| when bounded
    bool bounded = true;
    bool subquadratic = true;
};

struct GrowthCondition {
    std::string name;
    bool pass = true;
    double worst_ratio = 0.0;
    SamplePoint witness;
};

struct GrowthReport {
    bool pass = true;
    std::vector<GrowthCondition> conditions;
    const GrowthCondition& condition(const std::string& name) const;
};

struct GrowthOptions {
    int lq_resolution = 64;
    double zero_prefix_probability = 0.25;
};

GrowthReport check_bf_growth(const GeneratorBF& decomp, int n, int n_samples, double z_max, std::uint64_t seed,
                             const GrowthOptions& options = {});

/// Columns of `directions` are a_1..a_K.
struct ABCertificate {
    Mat directions;
    std::function<double(double)> l;  ///< empty means l = 0
    bool weak = false;
    std::vector<ZFn> L;  ///< one per direction, values in R^d
    double C_L = 0.0;

    int K() const { return static_cast<int>(directions.cols()); }
    double l_at(double t) const { return l ? l(t) : 0.0; }
};

struct ABRow {
    int k = 0;
    double max_margin = -INFINITY;  ///< max over samples of lhs - rhs
    SamplePoint witness;
};

struct ABReport {
    bool pass = true;
    bool L_growth_ok = true;
    double L_growth_worst = 0.0;
    std::vector<ABRow> rows;
};

struct ABSample {
    double t = 0.0;
    Vec x;
    Mat z;
};

/// Standard sample set: z = 0 first, then uniform (t, x) and log-uniform |z|.
std::vector<ABSample> ab_samples(int N, int d, double T, int n_samples, double z_max, double x_radius,
                                 std::uint64_t seed);

ABReport check_ab(const Generator& gen, const ABCertificate& cert, int n_samples, double z_max, std::uint64_t seed,
                  double x_radius = 5.0);
ABReport check_ab_on(const Generator& gen, const ABCertificate& cert, const std::vector<ABSample>& samples);

/// f~(t, x, y~, z~) = S f(t, x, S^{-1} y~, S^{-1} z~).
Generator linear_transform(const Generator& gen, const Mat& S);
/// a_k -> S^{-T} a_k and L_k(t, x, z~) = L_k(t, x, S^{-1} z~).
ABCertificate transform_certificate(const ABCertificate& cert, const Mat& S);
TerminalData transform_terminal(const TerminalData& g, const Mat& S);

/// Throws a singular-transform error when S is not safely invertible.
Mat checked_inverse(const Mat& S);

}  // namespace qbsde
