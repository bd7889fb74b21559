#include "qbsde/paths.hpp"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace qbsde {

Vec PathBundle::state(int path, int step) const {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = x(path, step, i);
    return v;
}

void draw_increments(std::uint64_t seed, std::uint64_t path, int n_steps, int d, double dt, double* out) {
    auto eng = stream(seed, path);
    std::normal_distribution<double> n01;
    const double s = std::sqrt(dt);
    for (int k = 0; k < n_steps * d; ++k) out[k] = s * n01(eng);
}

PathBundle simulate_paths(const DiffusionSpec& spec, double t0, const Vec& x0, double dt, int n_steps,
                          int n_paths, std::uint64_t seed) {
    if (!(dt > 0)) fail(ErrorKind::input, "dt must be positive");
    if (n_steps < 1 || n_paths < 1) fail(ErrorKind::input, "n_steps and n_paths must be positive");
    if (x0.size() != spec.d) fail(ErrorKind::input, "x0 has wrong dimension");
    if (t0 + n_steps * dt > spec.T * (1.0 + 1e-12) + 1e-12)
        fail(ErrorKind::input, "t0 + n_steps*dt exceeds the horizon");

    PathBundle pb;
    pb.d = spec.d;
    pb.t0 = t0;
    pb.x0 = x0;
    pb.dt = dt;
    pb.n_steps = n_steps;
    pb.n_paths = n_paths;
    pb.seed = seed;
    const int d = spec.d;
    pb.X.resize(static_cast<std::size_t>(n_paths) * (n_steps + 1) * d);
    pb.dW.resize(static_cast<std::size_t>(n_paths) * n_steps * d);

    Vec x(d), dw(d);
    for (int p = 0; p < n_paths; ++p) {
        double* w = &pb.dW[static_cast<std::size_t>(p) * n_steps * d];
        double* X = &pb.X[static_cast<std::size_t>(p) * (n_steps + 1) * d];
        draw_increments(seed, static_cast<std::uint64_t>(p), n_steps, d, dt, w);
        x = x0;
        for (int i = 0; i < d; ++i) X[i] = x[i];
        for (int k = 0; k < n_steps; ++k) {
            double t = t0 + k * dt;
            for (int i = 0; i < d; ++i) dw[i] = w[k * d + i];
            x += spec.drift(t, x) * dt + spec.dispersion(t, x) * dw;
            if (!x.allFinite()) {
                std::ostringstream os;
                os << "non-finite state on path " << p << " at step " << k + 1;
                fail(ErrorKind::divergence, os.str());
            }
            for (int i = 0; i < d; ++i) X[(k + 1) * d + i] = x[i];
        }
    }
    return pb;
}

namespace {

constexpr char kMagic[4] = {'Q', 'B', 'P', 'B'};
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
    if (!is) fail(ErrorKind::io, "truncated path bundle");
    return v;
}

}  // namespace

void write_bundle(const PathBundle& b, std::ostream& os) {
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(b.d));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(b.n_steps));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(b.n_paths));
    put<std::uint64_t>(os, b.seed);
    put<double>(os, b.t0);
    put<double>(os, b.dt);
    for (int i = 0; i < b.d; ++i) put<double>(os, b.x0[i]);
    for (double v : b.X) put<double>(os, v);
    for (double v : b.dW) put<double>(os, v);
}

PathBundle read_bundle(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) fail(ErrorKind::io, "not a path bundle");
    if (get<std::uint32_t>(is) != kVersion) fail(ErrorKind::io, "unsupported path bundle version");
    PathBundle b;
    b.d = static_cast<int>(get<std::uint64_t>(is));
    b.n_steps = static_cast<int>(get<std::uint64_t>(is));
    b.n_paths = static_cast<int>(get<std::uint64_t>(is));
    b.seed = get<std::uint64_t>(is);
    b.t0 = get<double>(is);
    b.dt = get<double>(is);
    b.x0.resize(b.d);
    for (int i = 0; i < b.d; ++i) b.x0[i] = get<double>(is);
    b.X.resize(static_cast<std::size_t>(b.n_paths) * (b.n_steps + 1) * b.d);
    b.dW.resize(static_cast<std::size_t>(b.n_paths) * b.n_steps * b.d);
    for (double& v : b.X) v = get<double>(is);
    for (double& v : b.dW) v = get<double>(is);
    return b;
}

void write_bundle_csv(const PathBundle& b, std::ostream& os) {
    os << "path,step,t";
    for (int i = 0; i < b.d; ++i) os << ",x_" << i + 1;
    for (int i = 0; i < b.d; ++i) os << ",dw_" << i + 1;
    os << '\n';
    os.precision(17);
    for (int p = 0; p < b.n_paths; ++p)
        for (int k = 0; k <= b.n_steps; ++k) {
            os << p << ',' << k << ',' << b.time(k);
            for (int i = 0; i < b.d; ++i) os << ',' << b.x(p, k, i);
            for (int i = 0; i < b.d; ++i) os << ',' << (k < b.n_steps ? b.dw(p, k, i) : 0.0);
            os << '\n';
        }
}

EnvelopeConstants EnvelopeConstants::gaussian(int d, double s) {
    EnvelopeConstants c;
    c.C_lower = c.C_upper = std::pow(2.0 * M_PI * s * s, -0.5 * d);
    c.sigma_lower = c.sigma_upper = s;
    return c;
}

EnvelopeReport aronson_envelope_check(const PathBundle& b, double t, double bin_width,
                                      const EnvelopeConstants& c, bool constant_coefficients) {
    if (b.n_paths == 0 || b.X.empty()) fail(ErrorKind::input, "empty path bundle");
    if (!(bin_width > 0)) fail(ErrorKind::input, "bin_width must be positive");
    double tau = t - b.t0;
    int step = static_cast<int>(std::lround(tau / b.dt));
    if (tau <= 0 || step < 1 || step > b.n_steps || std::abs(step * b.dt - tau) > 1e-9 * std::max(1.0, tau))
        fail(ErrorKind::input, "t is not a positive grid time of the bundle");
    tau = step * b.dt;
    const int d = b.d;

    std::map<std::vector<long>, long> counts;
    std::vector<long> key(d);
    for (int p = 0; p < b.n_paths; ++p) {
        for (int i = 0; i < d; ++i) key[i] = static_cast<long>(std::floor((b.x(p, step, i) - b.x0[i]) / bin_width));
        ++counts[key];
    }

    const double vol = std::pow(bin_width, d);
    const double n = b.n_paths;
    auto env = [&](double C, double s, double r2) {
        return C * std::pow(tau, -0.5 * d) * std::exp(-r2 / tau / (2.0 * s * s));
    };

    EnvelopeReport rep;
    rep.advisory = !constant_coefficients;
    for (const auto& [k, cnt] : counts) {
        EnvelopeBin bin;
        bin.center.resize(d);
        double rmin2 = 0.0, rmax2 = 0.0;
        for (int i = 0; i < d; ++i) {
            double a = k[i] * bin_width, e = a + bin_width;
            bin.center[i] = b.x0[i] + 0.5 * (a + e);
            double near = (a <= 0 && e >= 0) ? 0.0 : std::min(std::abs(a), std::abs(e));
            double far = std::max(std::abs(a), std::abs(e));
            rmin2 += near * near;
            rmax2 += far * far;
        }
        bin.density = cnt / (n * vol);
        bin.lower = env(c.C_lower, c.sigma_lower, rmax2);
        bin.upper = env(c.C_upper, c.sigma_upper, rmin2);
        double p_ref = std::min(1.0, bin.upper * vol);
        double se = std::sqrt(p_ref * (1.0 - p_ref) / n) / vol;
        bin.below = bin.density < bin.lower * (1.0 - c.tol) - c.n_se * se;
        bin.above = bin.density > bin.upper * (1.0 + c.tol) + c.n_se * se;
        rep.n_below += bin.below;
        rep.n_above += bin.above;
        rep.bins.push_back(std::move(bin));
    }
    rep.n_bins = static_cast<int>(rep.bins.size());
    return rep;
}

}  // namespace qbsde
