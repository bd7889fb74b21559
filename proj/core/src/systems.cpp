#include "qbsde/systems.hpp"

#include "qbsde/error.hpp"
#include "qbsde/quadrature.hpp"
#include "qbsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qbsde {

double linear_map_norm(const std::function<Vec(const Vec&)>& fn, int n_in) {
    Vec e = Vec::Zero(n_in);
    Vec first = fn(e);
    Mat M(first.size(), n_in);
    for (int k = 0; k < n_in; ++k) {
        e.setZero();
        e[k] = 1.0;
        M.col(k) = fn(e) - first;
    }
    Eigen::JacobiSVD<Mat> svd(M);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

double quadratic_form_bound(const std::function<double(const Vec&)>& q, int n) {
    Mat Q(n, n);
    Vec e = Vec::Zero(n);
    Vec diag(n);
    for (int i = 0; i < n; ++i) {
        e.setZero();
        e[i] = 1.0;
        diag[i] = q(e);
    }
    for (int i = 0; i < n; ++i) {
        Q(i, i) = diag[i];
        for (int j = i + 1; j < n; ++j) {
            e.setZero();
            e[i] = 1.0;
            e[j] = 1.0;
            Q(i, j) = Q(j, i) = 0.5 * (q(e) - diag[i] - diag[j]);
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

Vec flatten(const Mat& z) {
    Vec v(z.size());
    for (int i = 0; i < z.rows(); ++i)
        for (int j = 0; j < z.cols(); ++j) v[i * z.cols() + j] = z(i, j);
    return v;
}

Mat unflatten(const Vec& v, int N, int d) {
    Mat z(N, d);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < d; ++j) z(i, j) = v[i * d + j];
    return z;
}

bool is_brownian(const DiffusionSpec& spec) {
    if (!spec.constant_coefficients) return false;
    Vec x = Vec::Zero(spec.d);
    return spec.drift(0.0, x).norm() == 0.0 && (spec.dispersion(0.0, x) - Mat::Identity(spec.d, spec.d)).norm() == 0.0;
}

void require_terminal(const TerminalData& g, int N, int d) {
    if (!g.g) fail(ErrorKind::input, "terminal data has no function");
    if (g.N != N || g.d != d) fail(ErrorKind::input, "terminal data dimension mismatch");
}

KappaFn no_kappa() { return {}; }

}  // namespace

DiffusionSpec brownian_spec(int d, double T) {
    DiffusionSpec s = DiffusionSpec::brownian(d, T);
    s.box_lo = Vec::Constant(d, -3.0);
    s.box_hi = Vec::Constant(d, 3.0);
    return s;
}

double bundle_lyapunov_constant(const SystemBundle& b) {
    if (!b.bf) fail(ErrorKind::input, "system " + b.name + " has no BF decomposition");
    return lyapunov_constant(b.C_l, b.C_q, b.bf->N, b.spec.ellipticity);
}

LyapunovPair bundle_lyapunov(const SystemBundle& b, double c) {
    return construct_bf_lyapunov(bundle_lyapunov_constant(b), b.kappa, c, b.bf->N, b.spec.ellipticity, b.eps);
}

double max_lyapunov_radius(const SystemBundle& b, double c_max) {
    auto works = [&](double c) {
        try {
            bundle_lyapunov(b, c);
            return true;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::overflow || e.kind() == ErrorKind::lyapunov_domain) return false;
            throw;
        }
    };
    if (works(c_max)) return c_max;
    double lo = std::log(1e-8), hi = std::log(c_max);
    if (!works(std::exp(lo))) return 0.0;
    for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        if (works(std::exp(mid)))
            lo = mid;
        else
            hi = mid;
    }
    return std::exp(lo);
}

CertifyReport certify(const SystemBundle& b, int n_samples, std::uint64_t seed) {
    CertifyReport rep;
    if (b.bf) {
        rep.growth = check_bf_growth(*b.bf, 1, n_samples, 50.0, seed);
        for (const auto& c : rep.growth.conditions)
            if (!c.pass) rep.failures.push_back("BF " + c.name);
    }
    if (b.certificate) {
        rep.ab = check_ab(b.driver, *b.certificate, n_samples, 50.0, seed + 1);
        if (!rep.ab.pass) rep.failures.push_back("AB certificate");
    }
    rep.pass = rep.failures.empty();
    return rep;
}

OracleFn cole_hopf_oracle(const TerminalData& g, double c, double T, int nodes) {
    const int d = g.d;
    return [g, c, T, nodes, d](double t, const Vec& x) -> Vec {
        double tau = std::max(0.0, T - t);
        if (tau == 0.0) return g.g(x);
        double s = std::sqrt(tau);
        if (c == 0.0) return gaussian_expectation([&](const Vec& xi) { return g.g(x + s * xi); }, d, nodes);
        Vec m = gaussian_expectation(
            [&](const Vec& xi) {
                Vec v = g.g(x + s * xi);
                for (int i = 0; i < v.size(); ++i) v[i] = std::exp(c * v[i]);
                return v;
            },
            d, nodes);
        for (int i = 0; i < m.size(); ++i) m[i] = std::log(m[i]) / c;
        return m;
    };
}

// Equilibrium -----------------------------------------------------------------------------------

SystemBundle equilibrium_system(const std::vector<double>& alphas, const TerminalData& g, const DiffusionSpec& spec) {
    const int N = static_cast<int>(alphas.size());
    const int d = spec.d;
    if (N < 1) fail(ErrorKind::input, "equilibrium needs at least one agent");
    if (d != 1 && d != 2) fail(ErrorKind::input, "equilibrium is realised with d = 1 (B only) or d = 2 (B, B_perp)");
    double sum = 0.0;
    for (double a : alphas) {
        bool ok = N == 1 ? (a > 0.0 && a <= 1.0) : (a > 0.0 && a < 1.0);
        if (!ok) fail(ErrorKind::input, "equilibrium weights must lie in (0, 1)");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) fail(ErrorKind::input, "equilibrium weights must sum to 1");
    require_terminal(g, N, d);

    SystemBundle b;
    b.name = "equilibrium";
    b.spec = spec;
    b.terminal = g;
    const Vec al = Eigen::Map<const Vec>(alphas.data(), N);

    // f(z) with z = (mu, nu) already multiplied by sigma.
    auto raw = [al, N, d](const Mat& zs) -> Vec {
        Vec f(N);
        double A = al.dot(zs.col(0));
        for (int i = 0; i < N; ++i) {
            double mu = zs(i, 0);
            double nu = d == 2 ? zs(i, 1) : 0.0;
            f[i] = -0.5 * nu * nu + 0.5 * A * A - A * mu;
        }
        return f;
    };
    DiffusionSpec sp = spec;
    b.driver = Generator{N, d, spec.T,
                         [raw, sp](double t, const Vec& x, const Vec&, const Mat& z) -> Vec {
                             return raw(z * sp.dispersion(t, x));
                         },
                         false};

    ABCertificate cert;
    cert.directions = Mat::Zero(N, N + 1);
    for (int i = 0; i < N; ++i) cert.directions(i, i) = -1.0;
    cert.directions.col(N) = al;
    b.certificate = cert;

    Mat S = Mat::Identity(N, N);
    for (int i = 0; i + 1 < N; ++i) S(i, N - 1) = -1.0;
    b.transform = S;

    GeneratorBF bf;
    bf.N = N;
    bf.d = d;
    bf.T = spec.T;
    // In BF coordinates f_bar^i = z_bar^i . l_i for i < N and f_bar^N is quadratic.
    auto ell = [al, N, d](const Mat& zb, int i) -> Vec {
        double Abar = zb(N - 1, 0);
        for (int j = 0; j + 1 < N; ++j) Abar += al[j] * zb(j, 0);
        Vec l(d);
        l[0] = -Abar;
        if (d == 2) l[1] = -0.5 * (zb(i, 1) + 2.0 * zb(N - 1, 1));
        return l;
    };
    auto last = [al, N, d](const Mat& zb) -> double {
        double Abar = zb(N - 1, 0);
        for (int j = 0; j + 1 < N; ++j) Abar += al[j] * zb(j, 0);
        double nu = d == 2 ? zb(N - 1, 1) : 0.0;
        return -0.5 * nu * nu + 0.5 * Abar * Abar - zb(N - 1, 0) * Abar;
    };
    bf.f_l = [ell, sp, N, d](double t, const Vec& x, const Mat& z) -> Mat {
        Mat sig = sp.dispersion(t, x);
        Mat zb = z * sig;
        Mat out = Mat::Zero(d, N);
        for (int i = 0; i + 1 < N; ++i) out.col(i) = sig * ell(zb, i);
        return out;
    };
    bf.f_q = [last, sp, N](double t, const Vec& x, const Mat& z) -> Vec {
        Vec q = Vec::Zero(N);
        q[N - 1] = last(z * sp.dispersion(t, x));
        return q;
    };
    const double Lam = spec.ellipticity;
    b.C_l = N > 1 ? linear_map_norm([&](const Vec& v) { return flatten(bf.f_l(0.0, Vec::Zero(d), unflatten(v, N, d))); },
                                    N * d)
                  : 0.0;
    if (!spec.constant_coefficients) b.C_l *= Lam;
    b.C_q = quadratic_form_bound([&](const Vec& v) { return last(unflatten(v, N, d)); }, N * d) * Lam;
    const double C = std::max(b.C_l, b.C_q) * (1.0 + 1e-12);
    bf.constants = [C](int) { return BFConstants{C, {}, 2.0, 0.0}; };
    b.bf = bf;
    b.kappa = no_kappa();
    if (N == 1 && is_brownian(spec)) b.oracle = cole_hopf_oracle(g, -1.0, spec.T);
    return b;
}

// Darling ---------------------------------------------------------------------------------------

ManifoldChart flat_chart(int N) {
    ManifoldChart c;
    c.N = N;
    c.christoffel = [N](const Vec&) { return std::vector<Mat>(N, Mat::Zero(N, N)); };
    c.phi = [](const Vec&) { return -1.0; };
    c.grad_phi = [N](const Vec&) { return Vec(Vec::Zero(N)); };
    c.hess_phi = [N](const Vec&) { return Mat(Mat::Zero(N, N)); };
    c.box_lo = Vec::Constant(N, -10.0);
    c.box_hi = Vec::Constant(N, 10.0);
    c.flat = true;
    return c;
}

double hyperbolic_distance(const Vec& a, const Vec& b) {
    if (a.size() != 2 || b.size() != 2 || !(a[1] > 0) || !(b[1] > 0))
        fail(ErrorKind::domain, "hyperbolic distance needs points in the upper half-plane");
    return 2.0 * std::asinh((a - b).norm() / (2.0 * std::sqrt(a[1] * b[1])));
}

ManifoldChart hyperbolic_chart(const Vec& center, double r) {
    if (center.size() != 2 || !(center[1] > 0) || !(r > 0)) fail(ErrorKind::input, "bad hyperbolic chart data");
    ManifoldChart c;
    c.N = 2;
    c.christoffel = [](const Vec& y) {
        std::vector<Mat> G(2, Mat::Zero(2, 2));
        double inv = 1.0 / y[1];
        G[0](0, 1) = G[0](1, 0) = -inv;
        G[1](0, 0) = inv;
        G[1](1, 1) = -inv;
        return G;
    };
    c.phi = [center, r](const Vec& y) {
        double dd = hyperbolic_distance(y, center);
        return 0.5 * dd * dd - r * r;
    };
    auto phi = c.phi;
    c.grad_phi = [phi](const Vec& y) {
        const double h = 1e-6 * std::max(1.0, y.norm());
        Vec g(2);
        for (int i = 0; i < 2; ++i) {
            Vec a = y, b = y;
            a[i] += h;
            b[i] -= h;
            g[i] = (phi(a) - phi(b)) / (2.0 * h);
        }
        return g;
    };
    c.hess_phi = [phi](const Vec& y) {
        const double h = 1e-4 * std::max(1e-2, std::min(1.0, y[1]));
        Mat H(2, 2);
        double f0 = phi(y);
        for (int i = 0; i < 2; ++i) {
            Vec a = y, b = y;
            a[i] += h;
            b[i] -= h;
            H(i, i) = (phi(a) - 2.0 * f0 + phi(b)) / (h * h);
        }
        Vec pp = y, pm = y, mp = y, mm = y;
        pp[0] += h, pp[1] += h;
        pm[0] += h, pm[1] -= h;
        mp[0] -= h, mp[1] += h;
        mm[0] -= h, mm[1] -= h;
        H(0, 1) = H(1, 0) = (phi(pp) - phi(pm) - phi(mp) + phi(mm)) / (4.0 * h * h);
        return H;
    };
    c.box_lo = Vec(2);
    c.box_hi = Vec(2);
    c.box_lo << center[0] - 10.0, center[1] * 0.05;
    c.box_hi << center[0] + 10.0, center[1] * 20.0;
    return c;
}

Mat covariant_hessian(const ManifoldChart& chart, const Vec& y) {
    Mat H = chart.hess_phi(y);
    Vec g = chart.grad_phi(y);
    auto G = chart.christoffel(y);
    for (int k = 0; k < chart.N; ++k) H -= g[k] * G[k];
    return H;
}

GeodesicCheck check_geodesic_convexity(const ManifoldChart& chart, int n_samples, std::uint64_t seed, double slack,
                                       double tol) {
    GeodesicCheck rep;
    auto eng = stream(seed, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int found = 0;
    for (long tries = 0; found < n_samples && tries < 200L * n_samples; ++tries) {
        Vec y(chart.N);
        for (int i = 0; i < chart.N; ++i) y[i] = chart.box_lo[i] + (chart.box_hi[i] - chart.box_lo[i]) * u(eng);
        if (chart.phi(y) > slack) continue;
        ++found;
        auto G = chart.christoffel(y);
        for (const Mat& g : G)
            if ((g - g.transpose()).norm() > 1e-12 * (1.0 + g.norm())) rep.symmetric = false;
        Mat H = covariant_hessian(chart, y);
        Mat Hs = 0.5 * (H + H.transpose());
        double ev = Eigen::SelfAdjointEigenSolver<Mat>(Hs).eigenvalues().minCoeff();
        if (ev < rep.min_eigenvalue) {
            rep.min_eigenvalue = ev;
            rep.witness = y;
        }
    }
    if (found == 0) fail(ErrorKind::input, "no sample of the working box lies near M_0");
    rep.pass = rep.symmetric && rep.min_eigenvalue >= -tol;
    return rep;
}

SystemBundle darling_system(const ManifoldChart& chart, const TerminalData& g, const DiffusionSpec& spec) {
    const int N = chart.N, d = spec.d;
    require_terminal(g, N, d);
    // Image of g must lie in M_0.
    {
        auto eng = stream(0x0da7, 0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vec lo = spec.box_lo.size() == d ? spec.box_lo : Vec::Constant(d, -5.0);
        Vec hi = spec.box_hi.size() == d ? spec.box_hi : Vec::Constant(d, 5.0);
        for (int s = 0; s < 4000; ++s) {
            Vec x(d);
            for (int j = 0; j < d; ++j) x[j] = lo[j] + (hi[j] - lo[j]) * u(eng);
            if (chart.phi(g.g(x)) > 0.0) {
                std::ostringstream os;
                os << "terminal value leaves M_0 at x = [";
                for (int j = 0; j < d; ++j) os << (j ? ", " : "") << x[j];
                os << "]";
                fail(ErrorKind::precondition, os.str());
            }
        }
    }
    SystemBundle b;
    b.name = "darling";
    b.spec = spec;
    b.terminal = g;
    b.transform = Mat::Identity(N, N);
    DiffusionSpec sp = spec;
    auto christoffel = chart.christoffel;
    const bool flat = chart.flat;
    b.driver = Generator{N, d, spec.T,
                         [christoffel, sp, N, flat](double t, const Vec& x, const Vec& y, const Mat& z) -> Vec {
                             if (flat) return Vec::Zero(N);
                             Mat Z = z * sp.dispersion(t, x);
                             Mat gram = Z * Z.transpose();
                             auto G = christoffel(y);
                             Vec f(N);
                             for (int k = 0; k < N; ++k) f[k] = 0.5 * G[k].cwiseProduct(gram).sum();
                             return f;
                         },
                         !flat};
    if (flat && is_brownian(spec)) b.oracle = cole_hopf_oracle(g, 0.0, spec.T);
    b.note = flat ? "flat chart: the system decouples into linear filtering problems"
                  : "driver depends on y through the Christoffel symbols; Z is truncated by the solver";
    return b;
}

// Cooperation game ------------------------------------------------------------------------------

bool coop_in_range(double theta) { return (theta <= 0.5 && theta != -1.0) || theta > 1.0; }

std::pair<Vec, Vec> coop_minimizers(double theta, const Mat& p) {
    if (theta == 1.0 || theta == -1.0) fail(ErrorKind::input, "cooperation penalty must differ from +-1");
    const double a = theta / ((1.0 + theta) * (1.0 - theta)), b = 1.0 / (1.0 - theta);
    Vec p1 = p.row(0).transpose(), p2 = p.row(1).transpose();
    Vec mu = a * (p1 + p2) - b * p1;
    Vec nu = a * (p1 + p2) - b * p2;
    return {mu, nu};
}

double coop_lagrangian(int player, double theta, const Vec& mu, const Vec& nu, const Mat& p) {
    const Vec& own = player == 0 ? mu : nu;
    return 0.5 * own.squaredNorm() + theta * mu.dot(nu) + p.row(player).dot((mu + nu).transpose());
}

SystemBundle coop_game(const CoopGameData& data, const DiffusionSpec& spec) {
    const double th = data.theta;
    if (th == 1.0 || th == -1.0) fail(ErrorKind::input, "cooperation penalty must differ from +-1");
    if (!data.h) fail(ErrorKind::input, "cooperation game needs running costs h");
    const int d = spec.d, N = 2;
    require_terminal(data.g, N, d);
    SystemBundle b;
    b.name = "coop-game";
    b.spec = spec;
    b.terminal = data.g;
    b.guarantee = coop_in_range(th);
    if (!b.guarantee) b.note = "theta outside the proven range; system constructed without guarantee";
    auto h = data.h;
    b.driver = Generator{N, d, spec.T,
                         [th, h](double, const Vec& x, const Vec&, const Mat& z) -> Vec {
                             auto [mu, nu] = coop_minimizers(th, z);
                             Vec f(2);
                             f[0] = h(0, x) + coop_lagrangian(0, th, mu, nu, z);
                             f[1] = h(1, x) + coop_lagrangian(1, th, mu, nu, z);
                             return f;
                         },
                         false};

    Mat S(2, 2);
    S << 1.0, -1.0, 0.0, 1.0;
    b.transform = S;
    Mat Si = checked_inverse(S);
    const double k = (2.0 * th - 1.0) / (2.0 * (1.0 + th) * (1.0 - th));
    GeneratorBF bf;
    bf.N = N;
    bf.d = d;
    bf.T = spec.T;
    bf.f_l = [k, d](double, const Vec&, const Mat& z) -> Mat {
        Mat out = Mat::Zero(d, 2);
        out.col(0) = k * (z.row(0) + 2.0 * z.row(1)).transpose();
        return out;
    };
    auto L2 = [th, Si](const Mat& zt) {
        Mat p = Si * zt;
        auto [mu, nu] = coop_minimizers(th, p);
        return coop_lagrangian(1, th, mu, nu, p);
    };
    bf.f_q = [L2](double, const Vec&, const Mat& zt) -> Vec {
        Vec q(2);
        q << 0.0, L2(zt);
        return q;
    };
    bf.f_k = [h](double, const Vec& x) -> Vec {
        Vec v(2);
        v << h(0, x) - h(1, x), h(1, x);
        return v;
    };
    b.C_l = linear_map_norm([&](const Vec& v) { return flatten(bf.f_l(0.0, Vec::Zero(d), unflatten(v, N, d))); },
                            N * d);
    b.C_q = quadratic_form_bound([&](const Vec& v) { return L2(unflatten(v, N, d)); }, N * d);
    const double C = std::max(b.C_l, b.C_q) * (1.0 + 1e-12);
    const double q = 2.0 + d;
    bf.constants = [C, q](int) { return BFConstants{C, {}, q, 0.0}; };
    b.bf = bf;
    b.kappa = no_kappa();

    if (b.guarantee) {
        ABCertificate cert;
        if (th <= 0.5) {
            const double lam = std::max(1.0, (3.0 + 2.0 * th) / ((1.0 + th) * (1.0 + th)));
            cert.directions = Mat(2, 3);
            cert.directions << 1.0, 0.0, -lam, 0.0, 1.0, -lam;
            cert.weak = true;
            cert.L = {[th](double, const Vec&, const Mat& z) -> Vec { return coop_minimizers(th, z).second; },
                      [th](double, const Vec&, const Mat& z) -> Vec { return coop_minimizers(th, z).first; },
                      ZFn{}};
            const double hb = data.h_bound;
            cert.l = [hb, lam](double) { return std::max(hb, 2.0 * lam * hb); };
        } else {
            cert.directions = Mat(2, 4);
            cert.directions << 1.0, 0.0, -th, 1.0, 0.0, 1.0, 1.0, -th;
            cert.weak = true;
            cert.L = {[th](double, const Vec&, const Mat& z) -> Vec { return coop_minimizers(th, z).second; },
                      [th](double, const Vec&, const Mat& z) -> Vec { return coop_minimizers(th, z).first; },
                      ZFn{}, ZFn{}};
            const double hb = data.h_bound;
            cert.l = [hb, th](double) { return (1.0 + th) * hb; };
        }
        cert.C_L = linear_map_norm([th, N, d](const Vec& v) {
            auto [mu, nu] = coop_minimizers(th, unflatten(v, N, d));
            Vec out(2 * d);
            out << mu, nu;
            return out;
        }, N * d);
        b.certificate = cert;
    }

    GameSpec game;
    game.name = "coop-game";
    game.d = d;
    game.T = spec.T;
    game.b = data.b;
    game.feedback = [th](double, const Vec&, const Mat& z) { return coop_minimizers(th, z); };
    game.running = [h, th](int i, double, const Vec& x, const Vec& mu, const Vec& nu) {
        const Vec& own = i == 0 ? mu : nu;
        return h(i, x) + 0.5 * own.squaredNorm() + th * mu.dot(nu);
    };
    auto gg = data.g.g;
    game.terminal = [gg](int i, const Vec& x) { return gg(x)[i]; };
    b.game = game;
    return b;
}

// Risk-sensitive game ---------------------------------------------------------------------------

Vec clip_box(const Vec& u, double box) { return u.cwiseMax(-box).cwiseMin(box); }

std::pair<Vec, Vec> risk_minimizers(const RiskGameData& data, const Mat& z) {
    return {clip_box(-z.row(0).transpose(), data.box), clip_box(-z.row(1).transpose(), data.box)};
}

double risk_hamiltonian(const RiskGameData& data, int player, double t, const Vec& x, const Mat& z, const Vec& mu,
                        const Vec& nu) {
    const Vec& own = player == 0 ? mu : nu;
    return z.row(player).dot((mu + nu).transpose()) + data.h(player, t, x) + 0.5 * own.squaredNorm();
}

SystemBundle risk_sensitive_game(const RiskGameData& data, const DiffusionSpec& spec) {
    const int d = spec.d, N = 2;
    if (!data.h) fail(ErrorKind::input, "risk-sensitive game needs running costs h");
    if (!(data.box > 0)) fail(ErrorKind::input, "control box must have positive size");
    require_terminal(data.g, N, d);
    SystemBundle b;
    b.name = "risk-game";
    b.spec = spec;
    b.terminal = data.g;
    b.transform = Mat::Identity(N, N);
    b.note = "Hamiltonian instantiated with b = sigma (mu + nu) and quadratic control costs on a box";
    RiskGameData dd = data;
    b.driver = Generator{N, d, spec.T,
                         [dd](double t, const Vec& x, const Vec&, const Mat& z) -> Vec {
                             auto [mu, nu] = risk_minimizers(dd, z);
                             Vec f(2);
                             for (int i = 0; i < 2; ++i)
                                 f[i] = risk_hamiltonian(dd, i, t, x, z, mu, nu) + 0.5 * z.row(i).squaredNorm();
                             return f;
                         },
                         false};
    GeneratorBF bf;
    bf.N = N;
    bf.d = d;
    bf.T = spec.T;
    bf.f_q = [](double, const Vec&, const Mat& z) -> Vec {
        Vec q(2);
        q << 0.5 * z.row(0).squaredNorm(), 0.5 * z.row(1).squaredNorm();
        return q;
    };
    bf.f_s = [dd](double, const Vec&, const Mat& z) -> Vec {
        auto [mu, nu] = risk_minimizers(dd, z);
        Vec s(2);
        s << z.row(0).dot((mu + nu).transpose()) + 0.5 * mu.squaredNorm(),
            z.row(1).dot((mu + nu).transpose()) + 0.5 * nu.squaredNorm();
        return s;
    };
    bf.f_k = [dd](double t, const Vec& x) -> Vec {
        Vec v(2);
        v << dd.h(0, t, x), dd.h(1, t, x);
        return v;
    };
    const double box = data.box, sd = std::sqrt(double(d));
    KappaFn kappa = [box, sd](double w) { return 2.0 * std::sqrt(2.0) * box * sd * w + box * box * sd * sd; };
    b.C_l = 0.0;
    b.C_q = 0.5;
    const double q = 2.0 + d;
    bf.constants = [kappa, q](int) { return BFConstants{0.5, kappa, q, 0.0}; };
    b.bf = bf;
    b.kappa = kappa;

    ABCertificate cert;
    cert.directions = Mat(2, 4);
    cert.directions << 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
    cert.weak = true;
    ZFn drift = [dd](double, const Vec&, const Mat& z) -> Vec {
        auto [mu, nu] = risk_minimizers(dd, z);
        return mu + nu;
    };
    cert.L = {drift, drift, drift, drift};
    const double l = data.h_bound + 0.5 * box * box * d;
    cert.l = [l](double) { return l; };
    cert.C_L = 2.0 * box * sd;
    b.certificate = cert;

    GameSpec game;
    game.name = "risk-game";
    game.d = d;
    game.T = spec.T;
    game.exponential = true;
    game.feedback = [dd](double, const Vec&, const Mat& z) { return risk_minimizers(dd, z); };
    game.project = [box](const Vec& u) { return clip_box(u, box); };
    game.running = [dd](int i, double t, const Vec& x, const Vec& mu, const Vec& nu) {
        const Vec& own = i == 0 ? mu : nu;
        return dd.h(i, t, x) + 0.5 * own.squaredNorm();
    };
    auto gg = data.g.g;
    game.terminal = [gg](int i, const Vec& x) { return gg(x)[i]; };
    b.game = game;
    return b;
}

// Scalar ----------------------------------------------------------------------------------------

SystemBundle scalar_unbounded(const std::function<double(const Vec&)>& f_coeff, const TerminalData& g,
                              const DiffusionSpec& spec, std::optional<double> constant, double f_bound) {
    const int d = spec.d;
    require_terminal(g, 1, d);
    if (!f_coeff && !constant) fail(ErrorKind::input, "scalar system needs a coefficient");
    std::function<double(const Vec&)> fc = f_coeff;
    if (constant) {
        double c = *constant;
        fc = [c](const Vec&) { return c; };
        f_bound = std::abs(c);
    }
    SystemBundle b;
    b.name = "scalar";
    b.spec = spec;
    b.terminal = g;
    b.transform = Mat::Identity(1, 1);
    DiffusionSpec sp = spec;
    b.driver = Generator{1, d, spec.T,
                         [fc, sp](double t, const Vec& x, const Vec&, const Mat& z) -> Vec {
                             Mat zs = z * sp.dispersion(t, x);
                             Vec f(1);
                             f[0] = 0.5 * fc(x) * zs.squaredNorm();
                             return f;
                         },
                         false};
    GeneratorBF bf;
    bf.N = 1;
    bf.d = d;
    bf.T = spec.T;
    bf.f_q = [fc, sp](double t, const Vec& x, const Mat& z) -> Vec {
        Mat zs = z * sp.dispersion(t, x);
        Vec f(1);
        f[0] = 0.5 * fc(x) * zs.squaredNorm();
        return f;
    };
    const double Lam = spec.ellipticity;
    const double fb = f_bound;
    bf.constants = [fc, fb, Lam, d](int n) {
        double sup = fb;
        if (!std::isfinite(sup)) {
            // Sampled sup over the ball of radius n, padded by 5%.
            auto eng = stream(0x5ca1, static_cast<std::uint64_t>(n));
            std::normal_distribution<double> nd;
            std::uniform_real_distribution<double> u(0.0, 1.0);
            sup = std::abs(fc(Vec::Zero(d)));
            for (int s = 0; s < 2000; ++s) {
                Vec x(d);
                for (int j = 0; j < d; ++j) x[j] = nd(eng);
                double r = n * (s < 200 ? 1.0 : std::pow(u(eng), 1.0 / d));
                if (x.norm() > 0) x *= r / x.norm();
                sup = std::max(sup, std::abs(fc(x)));
            }
            sup *= 1.05;
        }
        return BFConstants{0.5 * sup * Lam * (1.0 + 1e-12), {}, 2.0, 0.0};
    };
    b.bf = bf;
    b.C_l = 0.0;
    b.C_q = bf.constants(1).C;
    b.kappa = no_kappa();
    if (std::isfinite(f_bound)) {
        const double lam = std::max(1.0, f_bound * Lam);
        ABCertificate cert;
        cert.directions = Mat(1, 2);
        cert.directions << lam, -lam;
        b.certificate = cert;
    } else {
        b.note = "coefficient unbounded: BF holds locally with constants growing in n; no global AB certificate";
    }
    if (constant && is_brownian(spec)) b.oracle = cole_hopf_oracle(g, *constant, spec.T);
    return b;
}

std::vector<std::string> system_names() { return {"equilibrium", "darling", "coop-game", "risk-game", "scalar"}; }

}  // namespace qbsde
