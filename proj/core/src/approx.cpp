#include "qbsde/approx.hpp"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace qbsde {

Vec truncate(const Vec& w, double m) {
    if (!(m > 0)) fail(ErrorKind::input, "truncation level must be positive");
    double n = w.norm();
    if (n <= m) return w;
    return w * (m / n);
}

Mat truncate(const Mat& w, double m) {
    if (!(m > 0)) fail(ErrorKind::input, "truncation level must be positive");
    double n = w.norm();
    if (n <= m) return w;
    return w * (m / n);
}

namespace {

double bump(double r2) { return r2 < 1.0 ? std::exp(1.0 / (r2 - 1.0)) : 0.0; }

double unit_ball_integral(int dim) {
    boost::math::quadrature::tanh_sinh<double> ts;
    double radial = ts.integrate([dim](double r) { return std::pow(r, dim - 1) * bump(r * r); }, 0.0, 1.0);
    double sphere = 2.0 * std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim);
    return sphere * radial;
}

}  // namespace

MollifierKernel::MollifierKernel(double m, int dim) : m_(m), dim_(dim) {
    if (!(m > 0) || dim < 1) fail(ErrorKind::input, "mollifier needs m > 0 and dim >= 1");
    C_ = 1.0 / unit_ball_integral(dim);
}

double MollifierKernel::operator()(const Vec& x) const {
    double r2 = (m_ * x).squaredNorm();
    return std::pow(m_, dim_) * C_ * bump(r2);
}

GridFunction mollify(const GridFunction& fn, const MollifierKernel& kernel) {
    const Grid& g = fn.grid;
    const int d = g.dim();
    if (d != kernel.dim()) fail(ErrorKind::input, "kernel and grid dimensions differ");
    std::vector<int> reach(d);
    for (int k = 0; k < d; ++k) {
        double h = g.axes[k].h();
        if (h > 0.25 * kernel.radius() * (1.0 + 1e-12))
            fail(ErrorKind::resolution, "grid spacing exceeds a quarter of the kernel radius");
        reach[k] = static_cast<int>(std::ceil(kernel.radius() / h));
    }

    std::vector<std::vector<int>> offsets;
    std::vector<double> weights;
    long total = 1;
    for (int k = 0; k < d; ++k) total *= 2 * reach[k] + 1;
    Vec y(d);
    for (long s = 0; s < total; ++s) {
        long rem = s;
        std::vector<int> off(d);
        for (int k = d - 1; k >= 0; --k) {
            off[k] = static_cast<int>(rem % (2 * reach[k] + 1)) - reach[k];
            rem /= 2 * reach[k] + 1;
            y[k] = off[k] * g.axes[k].h();
        }
        double w = kernel(y);
        if (w > 0) {
            offsets.push_back(off);
            weights.push_back(w);
        }
    }
    double sum = 0.0;
    for (double w : weights) sum += w;
    for (double& w : weights) w /= sum;

    GridFunction out(g, fn.N);
    std::vector<int> idx(d);
    for (long node = 0; node < g.size(); ++node) {
        auto base = g.index(node);
        Vec acc = Vec::Zero(fn.N);
        for (std::size_t j = 0; j < offsets.size(); ++j) {
            for (int k = 0; k < d; ++k) idx[k] = std::clamp(base[k] - offsets[j][k], 0, g.axes[k].n - 1);
            long f = g.flat(idx);
            for (int i = 0; i < fn.N; ++i) acc[i] += weights[j] * fn.values[f * fn.N + i];
        }
        out.set(node, acc);
    }
    return out;
}

KernelNodes kernel_nodes(int dim, int count) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, KernelNodes> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(dim, count);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    KernelNodes nodes;
    nodes.dim = dim;
    boost::random::sobol gen(dim);
    gen.discard(static_cast<std::uintmax_t>(dim));
    const double scale = 1.0 / (static_cast<double>(gen.max()) - gen.min() + 1.0);
    Vec u(dim);
    const int half = count / 2;
    while (static_cast<int>(nodes.u.size()) < 2 * half) {
        for (int k = 0; k < dim; ++k) u[k] = 2.0 * ((gen() - gen.min()) + 0.5) * scale - 1.0;
        if (u.squaredNorm() >= 1.0) continue;
        nodes.u.push_back(u);
        nodes.u.push_back(-u);
    }
    double sum = 0.0;
    for (const auto& p : nodes.u) {
        nodes.w.push_back(bump(p.squaredNorm()));
        sum += nodes.w.back();
    }
    for (double& w : nodes.w) w /= sum;
    cache.emplace(key, nodes);
    return nodes;
}

namespace {

struct Shift {
    double t;
    Vec x;
    Mat z;
};

struct ShiftTable {
    std::vector<Shift> s;
    std::vector<double> w;
};

std::shared_ptr<ShiftTable> make_shifts(int N, int d, double m) {
    const int D = 1 + d + N * d;
    KernelNodes nodes = kernel_nodes(D);
    auto tab = std::make_shared<ShiftTable>();
    tab->w = nodes.w;
    tab->s.reserve(nodes.u.size());
    for (const auto& u : nodes.u) {
        Shift sh;
        sh.t = u[0] / m;
        sh.x = u.segment(1, d) / m;
        sh.z.resize(N, d);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < d; ++j) sh.z(i, j) = u[1 + d + i * d + j] / m;
        tab->s.push_back(std::move(sh));
    }
    return tab;
}

double clamp_t(double t, double T) { return std::clamp(t, 0.0, T); }

}  // namespace

Approximation build_approximation(const GeneratorBF& bf, const TerminalData& g, double m) {
    if (!(m >= 1)) fail(ErrorKind::input, "approximation index must be at least 1");
    bf.validate();
    const int N = bf.N, d = bf.d;
    const double T = bf.T, M = 4.0;
    auto tab = make_shifts(N, d, m);

    auto conv_z = [tab, T, m](ZFn fn) -> ZFn {
        if (!fn) return {};
        return [tab, T, m, fn](double t, const Vec& x, const Mat& z) -> Vec {
            Vec xb = truncate(x, m);
            Mat zb = truncate(z, m);
            Vec acc;
            for (std::size_t j = 0; j < tab->s.size(); ++j) {
                const Shift& s = tab->s[j];
                Vec v = fn(clamp_t(t - s.t, T), xb - s.x, zb - s.z);
                if (j == 0)
                    acc = tab->w[j] * v;
                else
                    acc += tab->w[j] * v;
            }
            return acc;
        };
    };

    Approximation ap;
    ap.m = m;
    ap.M = M;
    GeneratorBF out;
    out.N = N;
    out.d = d;
    out.T = T;
    out.f_q = conv_z(bf.f_q);
    out.f_e = conv_z(bf.f_e);
    ZFn fs = conv_z(bf.f_s);

    if (bf.f_l) {
        LinearPartFn fl = bf.f_l;
        out.f_l = [tab, T, m, fl](double t, const Vec& x, const Mat& z) -> Mat {
            Vec xb = truncate(x, m);
            double nz = z.norm();
            double lam = nz > m ? m / nz : 1.0;
            Mat zb = lam * z;
            Mat acc;
            for (std::size_t j = 0; j < tab->s.size(); ++j) {
                const Shift& s = tab->s[j];
                Mat v = fl(clamp_t(t - s.t, T), xb - s.x, zb - s.z);
                if (j == 0)
                    acc = tab->w[j] * v;
                else
                    acc += tab->w[j] * v;
            }
            return lam * acc;
        };
        // Remainder of (diag(z f_l)) * eta minus diag(Pi z (f_l * eta)).
        ZFn rem = [tab, T, m, fl, N](double t, const Vec& x, const Mat& z) -> Vec {
            Vec xb = truncate(x, m);
            Mat zb = truncate(z, m);
            Vec acc = Vec::Zero(N);
            for (std::size_t j = 0; j < tab->s.size(); ++j) {
                const Shift& s = tab->s[j];
                Mat L = fl(clamp_t(t - s.t, T), xb - s.x, zb - s.z);
                for (int i = 0; i < N; ++i) acc[i] -= tab->w[j] * s.z.row(i).dot(L.col(i));
            }
            return acc;
        };
        if (fs)
            out.f_s = [fs, rem](double t, const Vec& x, const Mat& z) -> Vec { return fs(t, x, z) + rem(t, x, z); };
        else
            out.f_s = rem;
    } else {
        out.f_s = fs;
    }

    if (bf.f_k) {
        StateFn fk = bf.f_k;
        out.f_k = [tab, T, m, fk](double t, const Vec& x) -> Vec {
            Vec xb = truncate(x, m);
            Vec acc;
            for (std::size_t j = 0; j < tab->s.size(); ++j) {
                const Shift& s = tab->s[j];
                Vec v = fk(clamp_t(t - s.t, T), xb - s.x);
                if (j == 0)
                    acc = tab->w[j] * v;
                else
                    acc += tab->w[j] * v;
            }
            return acc;
        };
    }

    auto base = bf.constants;
    bool has_l = static_cast<bool>(bf.f_l);
    out.constants = [base, M, m, has_l](int n) {
        BFConstants c = base ? base(n) : BFConstants{};
        BFConstants o;
        o.C = M * c.C;
        o.q = c.q;
        o.eps = M * c.eps;
        KappaFn k = c.kappa;
        double C = c.C;
        if (k || has_l) {
            o.kappa = [k, C, M, m, has_l](double w) {
                double ks = 0.0;
                if (k)
                    for (int j = -10; j <= 10; ++j) ks = std::max(ks, k(std::max(0.0, w + j / (10.0 * m))));
                return M * (ks + (has_l ? C * (2.0 + w) / m : 0.0));
            };
        }
        return o;
    };
    ap.bf = out;
    ap.f = assemble(out);

    auto gtab = std::make_shared<KernelNodes>(kernel_nodes(d));
    auto gg = g.g;
    ap.g = g;
    ap.g.g = [gtab, gg, m](const Vec& x) -> Vec {
        Vec xb = truncate(x, m);
        Vec acc;
        for (std::size_t j = 0; j < gtab->u.size(); ++j) {
            Vec v = gg(xb - gtab->u[j] / m);
            if (j == 0)
                acc = gtab->w[j] * v;
            else
                acc += gtab->w[j] * v;
        }
        return acc;
    };
    return ap;
}

double lipschitz_estimate(const Generator& f, int n_pairs, double radius, std::uint64_t seed) {
    auto eng = stream(seed, 4);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);
    std::normal_distribution<double> n01;
    double worst = 0.0;
    const int N = f.N, d = f.d;
    for (int s = 0; s < n_pairs; ++s) {
        double t = 0.5 * (u01(eng) + 1.0) * f.T;
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = radius * u01(eng);
        Mat z(N, d);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < d; ++j) z(i, j) = radius * u01(eng);
        double h = 1e-3 * radius;
        Vec dx(d);
        Mat dz(N, d);
        for (int i = 0; i < d; ++i) dx[i] = h * n01(eng);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < d; ++j) dz(i, j) = h * n01(eng);
        double dist = std::sqrt(dx.squaredNorm() + dz.squaredNorm());
        Vec y = Vec::Zero(N);
        double q = (f(t, x + dx, y, z + dz) - f(t, x, y, z)).norm() / dist;
        worst = std::max(worst, q);
    }
    return worst;
}

}  // namespace qbsde
