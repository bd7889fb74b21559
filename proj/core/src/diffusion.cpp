#include "qbsde/diffusion.hpp"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qbsde {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string point_str(double t, const Vec& x) {
    std::ostringstream os;
    os << "(t=" << t << ", x=[";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << "])";
    return os.str();
}

}  // namespace

double DiffusionSpec::clamp_time(double t) const { return std::clamp(t, 0.0, T); }

Vec DiffusionSpec::drift(double t, const Vec& x) const {
    if (!b) return Vec::Zero(d);
    return b(clamp_time(t), x);
}

Mat DiffusionSpec::dispersion(double t, const Vec& x) const {
    if (!sigma) return Mat::Identity(d, d);
    return sigma(clamp_time(t), x);
}

DiffusionSpec DiffusionSpec::brownian(int d, double T) {
    DiffusionSpec s;
    s.d = d;
    s.T = T;
    s.b = [d](double, const Vec&) { return Vec::Zero(d); };
    s.sigma = [d](double, const Vec&) { return Mat::Identity(d, d); };
    s.ellipticity = 1.0;
    s.lipschitz = 1.0;
    s.drift_bound = 1.0;
    s.constant_coefficients = true;
    s.box_lo = Vec::Constant(d, -5.0);
    s.box_hi = Vec::Constant(d, 5.0);
    return s;
}

DiffusionSpec DiffusionSpec::constant(const Vec& b, const Mat& sigma, double T) {
    DiffusionSpec s;
    s.d = static_cast<int>(b.size());
    s.T = T;
    s.b = [b](double, const Vec&) { return b; };
    s.sigma = [sigma](double, const Vec&) { return sigma; };
    Eigen::SelfAdjointEigenSolver<Mat> es(sigma * sigma.transpose());
    double lmax = es.eigenvalues().maxCoeff();
    double lmin = es.eigenvalues().minCoeff();
    s.ellipticity = std::max({1.0, lmax, lmin > 0 ? 1.0 / lmin : 1.0});
    s.lipschitz = 1.0;
    s.drift_bound = std::max(1.0, b.norm());
    s.constant_coefficients = true;
    s.box_lo = Vec::Constant(s.d, -5.0);
    s.box_hi = Vec::Constant(s.d, 5.0);
    return s;
}

const CoefficientCheck& ValidationReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    fail(ErrorKind::input, "no check named " + name);
}

ValidationReport validate_coefficients(const DiffusionSpec& spec, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) fail(ErrorKind::input, "n_samples must be positive");
    const int d = spec.d;
    Vec lo = spec.box_lo.size() == d ? spec.box_lo : Vec::Constant(d, -5.0);
    Vec hi = spec.box_hi.size() == d ? spec.box_hi : Vec::Constant(d, 5.0);

    CoefficientCheck sym{"symmetry", true, 0.0, 0.0, Vec::Zero(d), Vec()};
    CoefficientCheck upper{"ellipticity_upper", true, -1.0, 0.0, Vec::Zero(d), Vec::Unit(d, 0)};
    CoefficientCheck lower{"ellipticity_lower", true, INFINITY, 0.0, Vec::Zero(d), Vec::Unit(d, 0)};
    CoefficientCheck lip{"lipschitz", true, 0.0, 0.0, Vec::Zero(d), Vec::Zero(d)};
    CoefficientCheck bound{"drift_bound", true, 0.0, 0.0, Vec::Zero(d), Vec()};

    auto rng = stream(seed, 0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01;
    const double Lam = spec.ellipticity;

    for (int s = 0; s < n_samples; ++s) {
        double t = u01(rng) * spec.T;
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * u01(rng);
        Vec bx = spec.drift(t, x);
        Mat sx = spec.dispersion(t, x);
        if (!all_finite(bx) || !all_finite(sx))
            fail(ErrorKind::coefficient, "non-finite coefficient at " + point_str(t, x));

        double asym = (sx - sx.transpose()).cwiseAbs().maxCoeff();
        if (asym > sym.worst) {
            sym.worst = asym;
            sym.t = t;
            sym.x = x;
        }

        Mat a = sx * sx.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        double lmin = es.eigenvalues()[0];
        double lmax = es.eigenvalues()[d - 1];
        if (lmax > upper.worst) {
            upper.worst = lmax;
            upper.t = t;
            upper.x = x;
            upper.direction = es.eigenvectors().col(d - 1);
        }
        if (lmin < lower.worst) {
            lower.worst = lmin;
            lower.t = t;
            lower.x = x;
            lower.direction = es.eigenvectors().col(0);
        }

        double bn = bx.norm();
        if (bn > bound.worst) {
            bound.worst = bn;
            bound.t = t;
            bound.x = x;
        }

        Vec dir(d);
        for (int i = 0; i < d; ++i) dir[i] = n01(rng);
        double scale = std::pow(10.0, -3.0 + 3.0 * u01(rng)) * (hi - lo).norm();
        Vec off = dir.normalized() * scale;
        Vec x2 = x + off;
        Vec b2 = spec.drift(t, x2);
        Mat s2 = spec.dispersion(t, x2);
        if (!all_finite(b2) || !all_finite(s2))
            fail(ErrorKind::coefficient, "non-finite coefficient at " + point_str(t, x2));
        double q = std::max((b2 - bx).norm(), (s2 - sx).norm()) / off.norm();
        if (q > lip.worst) {
            lip.worst = q;
            lip.t = t;
            lip.x = x;
            lip.direction = off;
        }
    }

    sym.pass = sym.worst <= 1e-12;
    upper.pass = upper.worst <= Lam;
    lower.pass = lower.worst * Lam >= 1.0;
    lip.pass = lip.worst <= spec.lipschitz;
    bound.pass = bound.worst <= spec.drift_bound;

    ValidationReport rep;
    rep.checks = {sym, upper, lower, lip, bound};
    for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
    return rep;
}

}  // namespace qbsde
