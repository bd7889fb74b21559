#include "qbsde/field.hpp"

#include "qbsde/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace qbsde {

const char* to_string(SolveMethod m) { return m == SolveMethod::grid ? "grid" : "regression"; }

PolynomialBasis::PolynomialBasis(int dim, int deg) : d(dim), degree(deg) {
    std::vector<int> e(dim, 0);
    for (int total = 0; total <= deg; ++total) {
        // All exponent tuples with the given total, in lexicographic order.
        std::function<void(int, int)> rec = [&](int k, int left) {
            if (k == dim - 1) {
                e[k] = left;
                exponents.push_back(e);
                return;
            }
            for (int a = left; a >= 0; --a) {
                e[k] = a;
                rec(k + 1, left - a);
            }
        };
        rec(0, total);
    }
}

void PolynomialBasis::eval(const Vec& xi, double* out) const {
    for (int b = 0; b < size(); ++b) {
        double v = 1.0;
        for (int k = 0; k < d; ++k)
            for (int p = 0; p < exponents[b][k]; ++p) v *= xi[k];
        out[b] = v;
    }
}

Vec RegressionStep::features(const Vec& x) const {
    const int d = static_cast<int>(center.size());
    int active = 0;
    for (int k = 0; k < d; ++k) active += scale[k] > 0;
    Vec xi(active);
    for (int k = 0, a = 0; k < d; ++k)
        if (scale[k] > 0) xi[a++] = (x[k] - center[k]) / scale[k];
    thread_local std::map<std::pair<int, int>, PolynomialBasis> cache;
    auto key = std::make_pair(std::max(active, 1), active ? degree : 0);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, PolynomialBasis(key.first, key.second)).first;
    const PolynomialBasis& basis = it->second;
    Vec f(basis.size());
    if (active)
        basis.eval(xi, f.data());
    else
        f[0] = 1.0;
    return f;
}

namespace {

int snap_floor(double s, int n_cells) {
    double r = std::round(s);
    if (std::abs(s - r) < 1e-9) s = r;
    int i = static_cast<int>(std::floor(s));
    return std::clamp(i, 0, n_cells - 1);
}

std::pair<int, double> time_slot(const std::vector<double>& times, double t) {
    if (times.size() == 1) return {0, 0.0};
    auto it = std::upper_bound(times.begin(), times.end(), t);
    int k = static_cast<int>(it - times.begin()) - 1;
    k = std::clamp(k, 0, static_cast<int>(times.size()) - 2);
    double frac = (t - times[k]) / (times[k + 1] - times[k]);
    if (std::abs(frac) < 1e-12) frac = 0.0;
    if (std::abs(frac - 1.0) < 1e-12) frac = 1.0;
    return {k, std::clamp(frac, 0.0, 1.0)};
}

Vec grid_eval(const GridFunction& fn, const Vec& x) {
    const Grid& g = fn.grid;
    const int d = g.dim();
    std::vector<int> base(d);
    std::vector<double> frac(d);
    for (int k = 0; k < d; ++k) {
        const Axis& a = g.axes[k];
        double s = (std::clamp(x[k], a.lo, a.hi) - a.lo) / a.h();
        int i = snap_floor(s, a.n - 1);
        base[k] = i;
        frac[k] = std::clamp(s - i, 0.0, 1.0);
        if (std::abs(frac[k]) < 1e-9) frac[k] = 0.0;
        if (std::abs(frac[k] - 1.0) < 1e-9) frac[k] = 1.0;
    }
    Vec out = Vec::Zero(fn.N);
    std::vector<int> idx(d);
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            int bit = (corner >> k) & 1;
            idx[k] = base[k] + bit;
            w *= bit ? frac[k] : 1.0 - frac[k];
        }
        if (w == 0.0) continue;
        long f = g.flat(idx);
        for (int i = 0; i < fn.N; ++i) out[i] += w * fn.values[f * fn.N + i];
    }
    return out;
}

bool step_contains(const RegressionStep& s, const Vec& x) {
    for (int k = 0; k < x.size(); ++k) {
        double slack = 1e-9 * std::max(1.0, s.hi[k] - s.lo[k]);
        if (x[k] < s.lo[k] - slack || x[k] > s.hi[k] + slack) return false;
    }
    return true;
}

}  // namespace

bool SolutionField::in_domain(double t, const Vec& x) const {
    double slack = 1e-12 * std::max(1.0, T());
    if (t < times.front() - slack || t > times.back() + slack || x.size() != d) return false;
    if (method == SolveMethod::grid) return grid.contains(x, 1e-9);
    auto [k, frac] = time_slot(times, t);
    if (frac < 1.0 && !step_contains(steps[k], x)) return false;
    if (frac > 0.0 && !step_contains(steps[k + 1], x)) return false;
    return true;
}

Vec clamp_to_domain(const SolutionField& f, double t, const Vec& x) {
    Vec out = x;
    if (f.method == SolveMethod::grid) {
        for (int k = 0; k < f.d; ++k) out[k] = std::clamp(x[k], f.grid.axes[k].lo, f.grid.axes[k].hi);
        return out;
    }
    auto [k, frac] = time_slot(f.times, t);
    for (int side = 0; side < 2; ++side) {
        if ((side == 0 && frac >= 1.0) || (side == 1 && frac <= 0.0)) continue;
        const RegressionStep& s = f.steps[k + side];
        for (int j = 0; j < f.d; ++j) out[j] = std::clamp(out[j], s.lo[j], s.hi[j]);
    }
    return out;
}

std::pair<Vec, Mat> evaluate_solution(const SolutionField& f, double t, const Vec& x) {
    if (!f.in_domain(t, x)) {
        std::ostringstream os;
        os << "point (t=" << t << ", x=[";
        for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
        os << "]) is outside the field domain";
        fail(ErrorKind::domain, os.str());
    }
    auto [k, frac] = time_slot(f.times, t);
    Vec y = Vec::Zero(f.N);
    Vec zf = Vec::Zero(f.N * f.d);
    for (int side = 0; side < 2; ++side) {
        double w = side ? frac : 1.0 - frac;
        if (w == 0.0) continue;
        int kk = std::min<int>(k + side, static_cast<int>(f.times.size()) - 1);
        if (f.method == SolveMethod::grid) {
            y += w * grid_eval(f.v[kk], x);
            zf += w * grid_eval(f.w[kk], x);
        } else {
            const RegressionStep& s = f.steps[kk];
            Vec phi = s.features(x);
            y += w * (s.coef_v.transpose() * phi);
            zf += w * (s.coef_w.transpose() * phi);
        }
    }
    Mat z(f.N, f.d);
    for (int i = 0; i < f.N; ++i)
        for (int j = 0; j < f.d; ++j) z(i, j) = zf[i * f.d + j];
    return {y, z};
}

DiscrepancyReport cross_validate(const SolutionField& a, const SolutionField& b, const Region& r) {
    if (a.N != b.N || a.d != b.d) fail(ErrorKind::input, "fields have different shapes");
    const int d = a.d;
    if (r.lo.size() != d || r.hi.size() != d) fail(ErrorKind::input, "region has wrong dimension");
    DiscrepancyReport rep;
    double sv = 0.0, sw = 0.0;
    long total = 1;
    for (int k = 0; k < d; ++k) total *= r.n_per_axis;
    Vec x(d);
    for (int it = 0; it < r.n_times; ++it) {
        double t = r.n_times == 1 ? r.t_lo : r.t_lo + (r.t_hi - r.t_lo) * it / (r.n_times - 1);
        for (long s = 0; s < total; ++s) {
            long rem = s;
            for (int k = 0; k < d; ++k) {
                int i = static_cast<int>(rem % r.n_per_axis);
                rem /= r.n_per_axis;
                x[k] = r.n_per_axis == 1 ? r.lo[k] : r.lo[k] + (r.hi[k] - r.lo[k]) * i / (r.n_per_axis - 1);
            }
            if (!a.in_domain(t, x) || !b.in_domain(t, x)) continue;
            auto [ya, za] = evaluate_solution(a, t, x);
            auto [yb, zb] = evaluate_solution(b, t, x);
            double dv = (ya - yb).norm(), dw = (za - zb).norm();
            rep.sup_v = std::max(rep.sup_v, dv);
            rep.sup_w = std::max(rep.sup_w, dw);
            sv += dv * dv;
            sw += dw * dw;
            ++rep.n_points;
        }
    }
    if (rep.n_points == 0) fail(ErrorKind::input, "fields do not overlap on the region");
    rep.l2_v = std::sqrt(sv / rep.n_points);
    rep.l2_w = std::sqrt(sw / rep.n_points);
    return rep;
}

namespace {

constexpr char kMagic[4] = {'Q', 'B', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail(ErrorKind::io, "truncated solution field");
    return v;
}

void put_vec(std::ostream& os, const Vec& v) {
    for (int i = 0; i < v.size(); ++i) put<double>(os, v[i]);
}

Vec get_vec(std::istream& is, int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = get<double>(is);
    return v;
}

void put_mat(std::ostream& os, const Mat& m) {
    put<std::uint64_t>(os, m.rows());
    put<std::uint64_t>(os, m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) put<double>(os, m(i, j));
}

Mat get_mat(std::istream& is) {
    auto r = get<std::uint64_t>(is), c = get<std::uint64_t>(is);
    if (r > (1u << 24) || c > (1u << 24)) fail(ErrorKind::io, "corrupt matrix header");
    Mat m(r, c);
    for (std::uint64_t i = 0; i < r; ++i)
        for (std::uint64_t j = 0; j < c; ++j) m(i, j) = get<double>(is);
    return m;
}

}  // namespace

void write_field(const SolutionField& f, std::ostream& os) {
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.method));
    put<std::uint64_t>(os, f.N);
    put<std::uint64_t>(os, f.d);
    put<std::uint64_t>(os, f.seed);
    put<std::uint64_t>(os, f.times.size());
    for (double t : f.times) put<double>(os, t);
    put<double>(os, f.info.cfl_ratio);
    put<std::uint64_t>(os, f.info.n_internal_steps);
    put<std::uint64_t>(os, f.info.max_picard_iterations);
    put<double>(os, f.info.sup_z);
    put<std::uint64_t>(os, f.info.picard_residuals.size());
    for (double r : f.info.picard_residuals) put<double>(os, r);
    if (f.method == SolveMethod::grid) {
        put<std::uint64_t>(os, f.grid.dim());
        for (const auto& a : f.grid.axes) {
            put<double>(os, a.lo);
            put<double>(os, a.hi);
            put<std::uint64_t>(os, a.n);
        }
        for (const auto& g : f.v)
            for (double v : g.values) put<double>(os, v);
        for (const auto& g : f.w)
            for (double v : g.values) put<double>(os, v);
    } else {
        for (const auto& s : f.steps) {
            put<std::uint64_t>(os, s.degree);
            put_vec(os, s.center);
            put_vec(os, s.scale);
            put_vec(os, s.lo);
            put_vec(os, s.hi);
            put_mat(os, s.coef_v);
            put_mat(os, s.coef_w);
        }
    }
}

SolutionField read_field(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) fail(ErrorKind::io, "not a solution field");
    if (get<std::uint32_t>(is) != kVersion) fail(ErrorKind::io, "unsupported solution field version");
    SolutionField f;
    auto method = get<std::uint32_t>(is);
    if (method > 1) fail(ErrorKind::io, "unknown method tag");
    f.method = static_cast<SolveMethod>(method);
    f.N = static_cast<int>(get<std::uint64_t>(is));
    f.d = static_cast<int>(get<std::uint64_t>(is));
    f.seed = get<std::uint64_t>(is);
    auto nt = get<std::uint64_t>(is);
    if (nt == 0 || nt > (1u << 24)) fail(ErrorKind::io, "corrupt time grid");
    f.times.resize(nt);
    for (auto& t : f.times) t = get<double>(is);
    f.info.cfl_ratio = get<double>(is);
    f.info.n_internal_steps = static_cast<int>(get<std::uint64_t>(is));
    f.info.max_picard_iterations = static_cast<int>(get<std::uint64_t>(is));
    f.info.sup_z = get<double>(is);
    auto nr = get<std::uint64_t>(is);
    if (nr > (1u << 24)) fail(ErrorKind::io, "corrupt residual trace");
    f.info.picard_residuals.resize(nr);
    for (auto& r : f.info.picard_residuals) r = get<double>(is);
    if (f.method == SolveMethod::grid) {
        auto dim = get<std::uint64_t>(is);
        if (dim != static_cast<std::uint64_t>(f.d)) fail(ErrorKind::io, "grid dimension mismatch");
        for (std::uint64_t k = 0; k < dim; ++k) {
            Axis a;
            a.lo = get<double>(is);
            a.hi = get<double>(is);
            a.n = static_cast<int>(get<std::uint64_t>(is));
            f.grid.axes.push_back(a);
        }
        for (std::uint64_t k = 0; k < nt; ++k) {
            GridFunction g(f.grid, f.N);
            for (double& v : g.values) v = get<double>(is);
            f.v.push_back(std::move(g));
        }
        for (std::uint64_t k = 0; k < nt; ++k) {
            GridFunction g(f.grid, f.N * f.d);
            for (double& v : g.values) v = get<double>(is);
            f.w.push_back(std::move(g));
        }
    } else {
        for (std::uint64_t k = 0; k < nt; ++k) {
            RegressionStep s;
            s.degree = static_cast<int>(get<std::uint64_t>(is));
            s.center = get_vec(is, f.d);
            s.scale = get_vec(is, f.d);
            s.lo = get_vec(is, f.d);
            s.hi = get_vec(is, f.d);
            s.coef_v = get_mat(is);
            s.coef_w = get_mat(is);
            f.steps.push_back(std::move(s));
        }
    }
    return f;
}

void write_field_csv(const SolutionField& f, std::ostream& os, const std::vector<int>& time_indices, int n_per_axis) {
    os << "t";
    for (int k = 0; k < f.d; ++k) os << ",x_" << k + 1;
    for (int i = 0; i < f.N; ++i) os << ",v_" << i + 1;
    for (int i = 0; i < f.N; ++i)
        for (int j = 0; j < f.d; ++j) os << ",w_" << i + 1 << j + 1;
    os << '\n';
    os.precision(17);
    std::vector<int> idx = time_indices;
    if (idx.empty())
        for (int k = 0; k < static_cast<int>(f.times.size()); ++k) idx.push_back(k);
    for (int k : idx) {
        if (k < 0 || k >= static_cast<int>(f.times.size())) fail(ErrorKind::input, "time index out of range");
        double t = f.times[k];
        Grid g;
        if (f.method == SolveMethod::grid) {
            g = f.grid;
        } else {
            for (int j = 0; j < f.d; ++j) g.axes.push_back(Axis{f.steps[k].lo[j], f.steps[k].hi[j], n_per_axis});
        }
        for (long node = 0; node < g.size(); ++node) {
            Vec x = g.point(node);
            Vec y;
            Mat z;
            if (f.method == SolveMethod::grid) {
                y = f.v[k].at(node);
                Vec zw = f.w[k].at(node);
                z = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                    zw.data(), f.N, f.d);
            } else {
                std::tie(y, z) = evaluate_solution(f, t, x);
            }
            os << t;
            for (int j = 0; j < f.d; ++j) os << ',' << x[j];
            for (int i = 0; i < f.N; ++i) os << ',' << y[i];
            for (int i = 0; i < f.N; ++i)
                for (int j = 0; j < f.d; ++j) os << ',' << z(i, j);
            os << '\n';
        }
    }
}

void write_grid_function(const GridFunction& fn, std::ostream& os) {
    SolutionField f;
    f.method = SolveMethod::grid;
    f.N = fn.N;
    f.d = fn.grid.dim();
    f.times = {0.0};
    f.grid = fn.grid;
    f.v = {fn};
    f.w = {GridFunction(fn.grid, fn.N * f.d)};
    write_field(f, os);
}

GridFunction read_grid_function(std::istream& is) {
    SolutionField f = read_field(is);
    if (f.method != SolveMethod::grid || f.v.empty()) fail(ErrorKind::io, "not a grid function");
    return f.v.front();
}

}  // namespace qbsde
