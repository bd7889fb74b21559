#include "qbsde/lyapunov.hpp"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qbsde {

namespace {

constexpr double kLogMax = 709.78;

struct LogTerms {
    std::vector<double> G, S, logH, logP;
};

// Recursion in log form: log H_k = G_k + H_{k+1}.
LogTerms log_terms(const std::vector<double>& alphas, const Vec& y) {
    const int N = static_cast<int>(alphas.size());
    LogTerms t;
    t.G.resize(N);
    t.S.resize(N);
    t.logH.assign(N + 1, -INFINITY);
    t.logP.resize(N);
    double Hnext = 0.0;
    for (int k = N - 1; k >= 0; --k) {
        t.G[k] = std::cosh(alphas[k] * y[k]);
        t.S[k] = std::sinh(alphas[k] * y[k]);
        t.logH[k] = t.G[k] + Hnext;
        Hnext = std::exp(t.logH[k]);
    }
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
        acc += t.logH[k];
        t.logP[k] = acc;
    }
    return t;
}

bool subquadratic(const KappaFn& kappa) {
    if (!kappa) return true;
    double first = 0.0, prev = -1.0;
    for (int j = 0; j <= 4; ++j) {
        double w = std::pow(10.0, j);
        double r = kappa(w) / (w * w);
        if (!(r >= 0) || !std::isfinite(r)) return false;
        if (j == 0) first = r;
        if (prev >= 0 && r > prev) return false;
        prev = r;
        if (j == 4) return first == 0.0 || r < first;
    }
    return true;
}

// min over the lattice of [0, c]^N of min_{i >= from} m_i / P_{from-1}, where
// m_i = Ã_i/2 - C sum_{j>=i} (P_j + |A_j|). Only alphas[from..] enter.
double box_margin_min(const std::vector<double>& alphas, double C, double c, int from = 0) {
    std::vector<double> tail(alphas.begin() + from, alphas.end());
    const int N = static_cast<int>(tail.size());
    const int n = N == 1 ? 400 : (N == 2 ? 60 : (N == 3 ? 16 : 8));
    std::vector<int> idx(N, 0);
    double best = INFINITY;
    Vec y(N);
    while (true) {
        for (int k = 0; k < N; ++k) y[k] = c * idx[k] / n;
        CoshTerms t = cosh_terms(tail, y);
        double acc = 0.0;
        for (int i = N - 1; i >= 0; --i) {
            acc += t.P[i] + std::abs(t.A[i]);
            double m = 0.5 * t.At[i] - C * acc;
            if (!(m == m)) return -INFINITY;
            best = std::min(best, m);
        }
        int k = 0;
        while (k < N && ++idx[k] > n) idx[k++] = 0;
        if (k == N) break;
    }
    return best;
}

void corner_guard(const std::vector<double>& alphas, double c) {
    const int N = static_cast<int>(alphas.size());
    LogTerms t = log_terms(alphas, Vec::Constant(N, c));
    for (int k = 0; k < N; ++k) {
        if (!(t.logH[k] < kLogMax) || !(t.logP[k] < kLogMax)) {
            std::ostringstream os;
            os << "exp(G_" << k + 1 << " + H_" << k + 2 << ") overflows at the corner y = (c,...,c), c = " << c;
            fail(ErrorKind::overflow, os.str());
        }
    }
}

double kappa_star(const KappaFn& kappa, double eps_prime) {
    if (!kappa) return 0.0;
    auto phi = [&](double w) { return kappa(w) - eps_prime * w * w; };
    double best = phi(0.0), arg = 0.0;
    const int n = 2000;
    double prev_w = 0.0;
    for (int s = 0; s <= n; ++s) {
        double w = std::pow(10.0, -6.0 + 14.0 * s / n);
        double v = phi(w);
        if (v > best) {
            best = v;
            arg = w;
        }
        (void)prev_w;
        prev_w = w;
    }
    double lo = arg * std::pow(10.0, -14.0 / n), hi = arg * std::pow(10.0, 14.0 / n);
    if (arg == 0.0) return best;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
        if (phi(m1) > phi(m2))
            hi = m2;
        else
            lo = m1;
    }
    return std::max(best, phi(0.5 * (lo + hi)));
}

}  // namespace

CoshTerms cosh_terms(const std::vector<double>& alphas, const Vec& y) {
    const int N = static_cast<int>(alphas.size());
    CoshTerms t;
    t.G.resize(N);
    t.S.resize(N);
    t.H.resize(N + 1);
    t.P.resize(N);
    t.A.resize(N);
    t.At.resize(N);
    t.H[N] = 0.0;
    for (int k = N - 1; k >= 0; --k) {
        t.G[k] = std::cosh(alphas[k] * y[k]);
        t.S[k] = std::sinh(alphas[k] * y[k]);
        t.H[k] = std::exp(t.G[k] + t.H[k + 1]);
    }
    double p = 1.0;
    for (int k = 0; k < N; ++k) {
        p *= t.H[k];
        t.P[k] = p;
        t.A[k] = alphas[k] * t.S[k] * p;
        t.At[k] = alphas[k] * alphas[k] * t.G[k] * p;
    }
    return t;
}

double LyapunovPair::h(const Vec& y) const {
    if (kind == LyapunovKind::quadratic) return scale * 0.5 * y.squaredNorm();
    return scale * (cosh_terms(alphas, y).H[0] - cosh_terms(alphas, Vec::Zero(N)).H[0]);
}

Vec LyapunovPair::grad(const Vec& y) const {
    if (kind == LyapunovKind::quadratic) return scale * y;
    return scale * cosh_terms(alphas, y).A;
}

Mat LyapunovPair::hess(const Vec& y) const {
    if (kind == LyapunovKind::quadratic) return scale * Mat::Identity(N, N);
    CoshTerms t = cosh_terms(alphas, y);
    Mat D(N, N);
    Vec cum(N);
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
        acc += 1.0 / t.P[k];
        cum[k] = acc;
    }
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) D(i, j) = t.A[i] * t.A[j] * cum[std::min(i, j)] + (i == j ? t.At[i] : 0.0);
    return scale * D;
}

double lyapunov_constant(double C_l, double C_q, int N, double Lambda) {
    return Lambda * std::max(4.0 * Lambda * N * C_l * C_l, C_q);
}

LyapunovPair make_cosh_pair(const std::vector<double>& alphas, double C, const KappaFn& kappa, double c,
                            double Lambda, double eps) {
    const int N = static_cast<int>(alphas.size());
    corner_guard(alphas, c);
    const double m0 = box_margin_min(alphas, C, c);
    if (!(m0 > 0) || !std::isfinite(m0))
        fail(ErrorKind::lyapunov_domain, "constructed margins are not positive on the box");
    const double C0 = m0 / Lambda;

    CoshTerms corner = cosh_terms(alphas, Vec::Constant(N, c));
    double A_sup = 0.0, PA = 0.0;
    for (int i = 0; i < N; ++i) {
        A_sup += std::abs(corner.A[i]);
        PA += corner.P[i] + std::abs(corner.A[i]);
    }
    const double eps0 = C0 / A_sup;
    if (!(eps < eps0)) fail(ErrorKind::lyapunov_domain, "error term too large for constructed pair");
    const double eps_prime = 0.5 * (eps0 - eps);
    const double ks = kappa_star(kappa, eps_prime);
    const double K0 = C / Lambda * PA;
    const double delta = C0 - A_sup * (eps_prime + eps);

    LyapunovPair p;
    p.kind = LyapunovKind::cosh_recursive;
    p.N = N;
    p.alphas = alphas;
    p.c = c;
    p.scale = 1.0 / delta;
    p.k_const = p.scale * (K0 + A_sup * (ks + eps));
    p.C1 = p.scale * A_sup;
    p.C = C;
    p.C0 = C0;
    p.eps0 = eps0;
    p.kappa_star = ks;
    return p;
}

LyapunovPair construct_bf_lyapunov(double C, const KappaFn& kappa, double c, int N, double Lambda, double eps) {
    if (!(C > 0) || !(c > 0) || !(Lambda > 0) || !(eps >= 0) || N < 1)
        fail(ErrorKind::input, "construct_bf_lyapunov needs C, c, Lambda > 0, eps >= 0, N >= 1");
    if (!subquadratic(kappa)) fail(ErrorKind::input, "kappa is not subquadratic on the probe grid");

    std::vector<double> alphas(N, 1.0);
    alphas[N - 1] = 2.0 * C + 1.0;
    corner_guard(std::vector<double>(alphas.begin() + (N - 1), alphas.end()), c);
    for (int i = N - 2; i >= 0; --i) {
        auto ok = [&](double a) {
            alphas[i] = a;
            return box_margin_min(alphas, C, c, i) >= 1.0;
        };
        auto fits = [&](double a) {
            alphas[i] = a;
            std::vector<double> tail(alphas.begin() + i, alphas.end());
            LogTerms t = log_terms(tail, Vec::Constant(N - i, c));
            return t.logH[0] < kLogMax && t.logP[N - i - 1] < kLogMax;
        };
        double hi = 1.0;
        while (!ok(hi)) {
            hi *= 2.0;
            if (!fits(hi)) {
                std::ostringstream os;
                os << "alpha_" << i + 1 << " search overflows: exp(G_" << i + 1 << " + H_" << i + 2
                   << ") is not representable at the corner, c = " << c;
                fail(ErrorKind::overflow, os.str());
            }
        }
        double lo = hi / 2.0;
        if (ok(lo)) lo = 0.0;
        while (hi - lo > 1e-6 * std::max(1.0, hi)) {
            double mid = 0.5 * (lo + hi);
            if (ok(mid))
                hi = mid;
            else
                lo = mid;
        }
        alphas[i] = hi;
    }
    return make_cosh_pair(alphas, C, kappa, c, Lambda, eps);
}

LyapunovPair quadratic_lyapunov(double c, double Lambda, double eps, int N) {
    if (!(c > 0) || !(Lambda > 0) || !(eps >= 0)) fail(ErrorKind::input, "quadratic_lyapunov needs c, Lambda > 0");
    if (!(eps < 1.0 / (4.0 * Lambda * c))) fail(ErrorKind::lyapunov_domain, "smallness violated: eps >= 1/(4 Lambda c)");
    LyapunovPair p;
    p.kind = LyapunovKind::quadratic;
    p.N = N;
    p.c = c;
    p.scale = 1.0 / (0.5 / Lambda - c * eps);
    p.k_const = p.scale * c * eps;
    p.C1 = p.scale * c;
    return p;
}

double lyapunov_margin(const LyapunovPair& pair, const Vec& y, const Mat& z, const Mat& sigma, const Vec& f,
                       double fk_norm) {
    Mat zs = z * sigma;
    Mat D2 = pair.hess(y);
    double quad = 0.5 * (D2.array() * (zs * zs.transpose()).array()).sum();
    return quad - pair.grad(y).dot(f) - z.squaredNorm() + pair.k(fk_norm);
}

VerifyReport verify_lyapunov(const LyapunovPair& pair, const Generator& gen, const DiffusionSpec& spec, double c,
                             int n, int n_samples, double z_max, std::uint64_t seed, const VerifyOptions& opt) {
    if (n_samples < 1 || !(z_max > 0) || !(c > 0)) fail(ErrorKind::input, "invalid verification parameters");
    if (gen.N != pair.N) fail(ErrorKind::input, "pair and generator dimensions differ");
    const int N = gen.N, d = gen.d;
    auto eng = stream(seed, 3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01;
    const double r_min = std::min(1e-3, z_max);

    VerifyReport rep;
    rep.n_samples = n_samples;
    for (int s = 0; s < n_samples; ++s) {
        double t = u01(eng) * gen.T;
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = n01(eng);
        if (x.norm() > 0) x *= n * std::pow(u01(eng), 1.0 / d) / x.norm();

        Vec y(N);
        for (int i = 0; i < N; ++i) y[i] = n01(eng);
        double mode = u01(eng);
        if (mode < 0.25) {
            int keep = static_cast<int>(u01(eng) * N);
            for (int i = 0; i < N; ++i)
                if (i != keep) y[i] = 0.0;
        }
        double ny = y.norm();
        if (s == 0 || ny == 0)
            y.setZero();
        else
            y *= c * (mode < 0.5 ? 1.0 : std::pow(u01(eng), 1.0 / N)) / ny;

        Mat z(N, d);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < d; ++j) z(i, j) = n01(eng);
        double zmode = u01(eng);
        if (zmode < opt.suffix_zero_probability) {
            int keep = 1 + static_cast<int>(u01(eng) * N);
            for (int i = keep; i < N; ++i) z.row(i).setZero();
        } else if (zmode < 2 * opt.suffix_zero_probability) {
            int drop = static_cast<int>(u01(eng) * N);
            for (int i = 0; i < drop; ++i) z.row(i).setZero();
        }
        double nz = z.norm();
        if (nz > 0) z *= r_min * std::pow(z_max / r_min, u01(eng)) / nz;

        Vec f = gen(t, x, y, z);
        Mat sg = spec.dispersion(t, x);
        double fk = opt.f_k ? opt.f_k(t, x).norm() : 0.0;
        double m = lyapunov_margin(pair, y, z, sg, f, fk);
        if (!std::isfinite(m)) {
            std::ostringstream os;
            os << "non-finite Lyapunov margin at t=" << t << ", |y|=" << y.norm() << ", |z|=" << z.norm();
            fail(ErrorKind::input, os.str());
        }
        if (m < rep.min_margin) {
            rep.min_margin = m;
            rep.t = t;
            rep.x = x;
            rep.y = y;
            rep.z = z;
        }
        if (m < -1e-9 * (1.0 + z.squaredNorm())) rep.pass = false;
    }
    return rep;
}

}  // namespace qbsde
