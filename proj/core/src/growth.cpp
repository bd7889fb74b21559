#include "qbsde/error.hpp"
#include "qbsde/generator.hpp"
#include "qbsde/rng.hpp"

#include <cmath>
#include <sstream>

namespace qbsde {

const GrowthCondition& GrowthReport::condition(const std::string& name) const {
    for (const auto& c : conditions)
        if (c.name == name) return c;
    fail(ErrorKind::input, "no growth condition named " + name);
}

namespace {

double ratio(double value, double bound) {
    if (value == 0.0) return 0.0;
    if (!(bound > 0)) return INFINITY;
    return value / bound;
}

void record(GrowthCondition& c, double r, double t, const Vec& x, const Mat& z) {
    if (!std::isfinite(r) && !std::isinf(r)) {
        std::ostringstream os;
        os << "component " << c.name << " evaluated to NaN at t=" << t;
        fail(ErrorKind::input, os.str());
    }
    if (r > c.worst_ratio) {
        c.worst_ratio = r;
        c.witness = SamplePoint{t, x, z};
    }
}

Vec sample_ball(std::mt19937_64& eng, int d, double radius) {
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = n01(eng);
    double nx = x.norm();
    if (nx == 0) return Vec::Zero(d);
    return x * (radius * std::pow(u01(eng), 1.0 / d) / nx);
}

}  // namespace

GrowthReport check_bf_growth(const GeneratorBF& bf, int n, int n_samples, double z_max, std::uint64_t seed,
                             const GrowthOptions& opt) {
    if (n_samples < 1 || !(z_max > 0)) fail(ErrorKind::input, "need n_samples >= 1 and z_max > 0");
    bf.validate(n);
    const BFConstants c = bf.at(n);
    const int N = bf.N, d = bf.d;

    auto named = [](const char* n) {
        GrowthCondition c;
        c.name = n;
        return c;
    };
    GrowthCondition ql = named("quadratic_linear"), qt = named("quadratic_triangular"), sq = named("subquadratic"),
                    decay = named("subquadratic_decay"), err = named("error_term"), lq = named("z_independent_Lq");

    auto eng = stream(seed, 2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01;
    const double r_min = std::min(1e-3, z_max);

    for (int s = 0; s < n_samples; ++s) {
        double t = u01(eng) * bf.T;
        Vec x = sample_ball(eng, d, n);
        Mat z = Mat::Zero(N, d);
        if (s > 0) {
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < d; ++j) z(i, j) = n01(eng);
            if (u01(eng) < opt.zero_prefix_probability) {
                int rows = static_cast<int>(u01(eng) * N);
                for (int i = 0; i < rows; ++i) z.row(i).setZero();
            }
            double nz = z.norm();
            if (nz > 0) z *= r_min * std::pow(z_max / r_min, u01(eng)) / nz;
        }
        const double zn = z.norm();

        if (bf.f_l) record(ql, ratio(bf.f_l(t, x, z).norm(), c.C * (1.0 + zn)), t, x, z);
        if (bf.f_q) {
            Vec q = bf.f_q(t, x, z);
            double acc = 0.0;
            for (int i = 0; i < N; ++i) {
                acc += z.row(i).squaredNorm();
                record(qt, ratio(std::abs(q[i]), c.C * (1.0 + acc)), t, x, z);
            }
        }
        if (bf.f_s) {
            double kap = c.kappa ? c.kappa(zn) : 0.0;
            record(sq, ratio(bf.f_s(t, x, z).norm(), kap), t, x, z);
        }
        if (bf.f_e) record(err, ratio(bf.f_e(t, x, z).norm(), c.eps * (1.0 + zn * zn)), t, x, z);
    }

    if (c.kappa) {
        double prev = -1.0, first = 0.0, last = 0.0;
        for (int j = 0; j <= 4; ++j) {
            double w = std::pow(10.0, j);
            double r = c.kappa(w) / (w * w);
            if (!(r >= 0)) fail(ErrorKind::input, "kappa must be nonnegative and finite");
            if (j == 0) first = r;
            last = r;
            if (prev >= 0) {
                double q = prev == 0.0 ? (r == 0.0 ? 0.0 : INFINITY) : r / prev;
                if (q > decay.worst_ratio) {
                    decay.worst_ratio = q;
                    decay.witness = SamplePoint{0.0, Vec::Zero(d), Mat::Constant(1, 1, w)};
                }
            }
            prev = r;
        }
        decay.pass = decay.worst_ratio <= 1.0 && (first == 0.0 || last < first);
    }

    if (bf.f_k) {
        int res = d <= 2 ? opt.lq_resolution
                         : std::max(4, static_cast<int>(std::pow(double(opt.lq_resolution), 2.0 / d)));
        const double ht = bf.T / res, hx = 2.0 * n / res;
        long cells = 1;
        for (int i = 0; i < d; ++i) cells *= res;
        double sum = 0.0;
        Vec x(d);
        for (int it = 0; it < res; ++it) {
            double t = (it + 0.5) * ht;
            for (long cell = 0; cell < cells; ++cell) {
                long rem = cell;
                for (int i = 0; i < d; ++i) {
                    x[i] = -n + (rem % res + 0.5) * hx;
                    rem /= res;
                }
                if (x.norm() > n) continue;
                double v = bf.f_k(t, x).norm();
                sum += std::pow(v, c.q);
            }
        }
        double norm = std::pow(sum * ht * std::pow(hx, d), 1.0 / c.q);
        lq.worst_ratio = norm;
        lq.pass = std::isfinite(norm);
    }

    for (GrowthCondition* g : {&ql, &qt, &sq, &err})
        g->pass = g->worst_ratio <= 1.0 + 1e-12;

    GrowthReport rep;
    rep.conditions = {ql, qt, sq, decay, err, lq};
    for (const auto& g : rep.conditions) rep.pass = rep.pass && g.pass;
    return rep;
}

}  // namespace qbsde
