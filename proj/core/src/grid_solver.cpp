#include "qbsde/error.hpp"
#include "qbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qbsde {

namespace {

// Value of component c at a possibly out-of-range index, extended linearly across the boundary.
double ghost(const Grid& g, const std::vector<double>& v, int N, int c, std::vector<int>& idx) {
    for (int k = 0; k < g.dim(); ++k) {
        int n = g.axes[k].n;
        if (idx[k] < 0 || idx[k] >= n) {
            int saved = idx[k];
            int edge = saved < 0 ? 0 : n - 1;
            int inner = saved < 0 ? 1 : n - 2;
            int reach = saved < 0 ? -saved : saved - (n - 1);
            idx[k] = edge;
            double e = ghost(g, v, N, c, idx);
            idx[k] = inner;
            double in = ghost(g, v, N, c, idx);
            idx[k] = saved;
            return e + reach * (e - in);
        }
    }
    return v[g.flat(idx) * N + c];
}

struct Stencil {
    const Grid& g;
    const std::vector<double>& v;
    int N;
    std::vector<int> idx;

    double at(int c, const std::vector<int>& base, int k1, int s1, int k2 = -1, int s2 = 0) {
        idx = base;
        if (k1 >= 0) idx[k1] += s1;
        if (k2 >= 0) idx[k2] += s2;
        return ghost(g, v, N, c, idx);
    }
};

void gradient_level(const Grid& g, const std::vector<double>& v, int N, GridFunction& w) {
    const int d = g.dim();
    Stencil st{g, v, N, {}};
    for (long node = 0; node < g.size(); ++node) {
        auto base = g.index(node);
        for (int c = 0; c < N; ++c)
            for (int k = 0; k < d; ++k) {
                double h = g.axes[k].h();
                w.values[(node * N + c) * d + k] = (st.at(c, base, k, 1) - st.at(c, base, k, -1)) / (2.0 * h);
            }
    }
}

}  // namespace

SolutionField solve_pde_grid(const DiffusionSpec& spec, const Generator& gen, const TerminalData& term,
                             const GridConfig& cfg) {
    const int d = spec.d, N = gen.N;
    if (d < 1 || d > 2) fail(ErrorKind::input, "grid solver supports d = 1 or 2");
    if (gen.d != d || term.d != d || term.N != N) fail(ErrorKind::input, "dimension mismatch between inputs");
    if (cfg.lo.size() != d || cfg.hi.size() != d) fail(ErrorKind::input, "grid box has wrong dimension");
    if (!(cfg.dx > 0)) fail(ErrorKind::config, "dx must be positive");

    Grid g;
    for (int k = 0; k < d; ++k) {
        int n = static_cast<int>(std::lround((cfg.hi[k] - cfg.lo[k]) / cfg.dx)) + 1;
        if (n < 3) fail(ErrorKind::config, "grid needs at least three nodes per axis");
        g.axes.push_back(Axis{cfg.lo[k], cfg.hi[k], n});
    }
    double hmin = INFINITY;
    for (const auto& a : g.axes) hmin = std::min(hmin, a.h());
    const double dt_max = cfg.safety * hmin * hmin / (d * spec.ellipticity);
    double dt = cfg.dt > 0 ? cfg.dt : dt_max;
    if (dt > dt_max * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "CFL violated: dt = " << dt << " exceeds " << dt_max;
        fail(ErrorKind::config, os.str());
    }
    const double T = spec.T;
    const int n_steps = std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9)));
    dt = T / n_steps;
    const int n_save = std::max(2, std::min(cfg.n_save, n_steps + 1));
    const int stride = std::max(1, static_cast<int>(std::ceil(double(n_steps) / (n_save - 1))));

    SolutionField field;
    field.method = SolveMethod::grid;
    field.N = N;
    field.d = d;
    field.grid = g;
    field.info.cfl_ratio = dt / (hmin * hmin / (d * spec.ellipticity));
    field.info.n_internal_steps = n_steps;

    const long nodes = g.size();
    std::vector<double> v(nodes * N), vn(nodes * N);
    std::vector<Vec> xs(nodes);
    for (long node = 0; node < nodes; ++node) {
        xs[node] = g.point(node);
        Vec gv = term.g(xs[node]);
        for (int c = 0; c < N; ++c) v[node * N + c] = gv[c];
    }

    std::vector<std::pair<double, std::vector<double>>> saved;
    auto save = [&](int k) { saved.emplace_back(k * dt, v); };
    save(n_steps);

    const bool frozen = spec.constant_coefficients;
    Vec b0;
    Mat a0;
    if (frozen) {
        b0 = spec.drift(0.0, xs[0]);
        Mat s = spec.dispersion(0.0, xs[0]);
        a0 = s * s.transpose();
    }

    Vec y(N);
    Mat z(N, d);
    Stencil st{g, v, N, {}};
    for (int k = n_steps - 1; k >= 0; --k) {
        const double t = (k + 1) * dt;
        for (long node = 0; node < nodes; ++node) {
            const Vec& x = xs[node];
            Vec b = frozen ? b0 : spec.drift(t, x);
            Mat a;
            if (frozen) {
                a = a0;
            } else {
                Mat s = spec.dispersion(t, x);
                a = s * s.transpose();
            }
            auto base = g.index(node);
            for (int c = 0; c < N; ++c) {
                y[c] = v[node * N + c];
                for (int j = 0; j < d; ++j)
                    z(c, j) = (st.at(c, base, j, 1) - st.at(c, base, j, -1)) / (2.0 * g.axes[j].h());
            }
            Vec f = gen(t, x, y, z);
            for (int c = 0; c < N; ++c) {
                double Lv = 0.0;
                const double vc = y[c];
                for (int i = 0; i < d; ++i) {
                    const double hi = g.axes[i].h();
                    const double up = st.at(c, base, i, 1), dn = st.at(c, base, i, -1);
                    Lv += 0.5 * a(i, i) * (up - 2.0 * vc + dn) / (hi * hi);
                    Lv += b[i] > 0 ? b[i] * (up - vc) / hi : b[i] * (vc - dn) / hi;
                    for (int j = i + 1; j < d; ++j) {
                        if (a(i, j) == 0.0) continue;
                        const double hj = g.axes[j].h();
                        double cross = (st.at(c, base, i, 1, j, 1) - st.at(c, base, i, 1, j, -1) -
                                        st.at(c, base, i, -1, j, 1) + st.at(c, base, i, -1, j, -1)) /
                                       (4.0 * hi * hj);
                        Lv += a(i, j) * cross;
                    }
                }
                double nv = vc + dt * (Lv + f[c]);
                if (!std::isfinite(nv)) {
                    std::ostringstream os;
                    os << "non-finite value at t=" << k * dt << ", x=[";
                    for (int i = 0; i < d; ++i) os << (i ? ", " : "") << x[i];
                    os << "]";
                    fail(ErrorKind::divergence, os.str());
                }
                vn[node * N + c] = nv;
            }
        }
        v.swap(vn);
        if (k % stride == 0) save(k);
    }

    std::reverse(saved.begin(), saved.end());
    for (auto& [t, vals] : saved) {
        field.times.push_back(t);
        GridFunction vf(g, N);
        vf.values = vals;
        GridFunction wf(g, N * d);
        gradient_level(g, vals, N, wf);
        field.v.push_back(std::move(vf));
        field.w.push_back(std::move(wf));
    }
    for (const auto& wf : field.w)
        for (double x : wf.values) field.info.sup_z = std::max(field.info.sup_z, std::abs(x));
    return field;
}

}  // namespace qbsde
