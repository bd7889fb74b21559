#include "qbsde/generator.hpp"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/spanning.hpp"

#include <cmath>
#include <sstream>

namespace qbsde {

BFConstants GeneratorBF::at(int n) const {
    if (constants) return constants(n);
    return BFConstants{};
}

void GeneratorBF::validate(int n_max) const {
    for (int n = 1; n <= n_max; ++n) {
        BFConstants c = at(n);
        if (f_k && !(c.q > 1.0 + 0.5 * d)) {
            std::ostringstream os;
            os << "q_" << n << " = " << c.q << " must exceed 1 + d/2 = " << 1.0 + 0.5 * d;
            fail(ErrorKind::input, os.str());
        }
        if (c.eps < 0 || c.C < 0) fail(ErrorKind::input, "negative growth constant");
    }
}

Vec GeneratorBF::linear_part(double t, const Vec& x, const Mat& z) const {
    Vec out = Vec::Zero(N);
    if (!f_l) return out;
    Mat L = f_l(t, x, z);
    for (int i = 0; i < N; ++i) out[i] = z.row(i).dot(L.col(i));
    return out;
}

Vec GeneratorBF::value(double t, const Vec& x, const Mat& z) const {
    Vec out = linear_part(t, x, z);
    if (f_q) out += f_q(t, x, z);
    if (f_s) out += f_s(t, x, z);
    if (f_e) out += f_e(t, x, z);
    if (f_k) out += f_k(t, x);
    return out;
}

Generator assemble(const GeneratorBF& decomp) {
    decomp.validate();
    Generator g;
    g.N = decomp.N;
    g.d = decomp.d;
    g.T = decomp.T;
    g.depends_on_y = false;
    g.f = [decomp](double t, const Vec& x, const Vec&, const Mat& z) { return decomp.value(t, x, z); };
    return g;
}

std::vector<ABSample> ab_samples(int N, int d, double T, int n_samples, double z_max, double x_radius,
                                 std::uint64_t seed) {
    std::vector<ABSample> out;
    out.reserve(n_samples);
    auto eng = stream(seed, 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01;
    const double r_min = std::min(1e-3, z_max);
    for (int s = 0; s < n_samples; ++s) {
        ABSample p;
        p.t = u01(eng) * T;
        p.x.resize(d);
        for (int i = 0; i < d; ++i) p.x[i] = x_radius * (2.0 * u01(eng) - 1.0);
        p.z = Mat::Zero(N, d);
        if (s > 0) {
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < d; ++j) p.z(i, j) = n01(eng);
            if (u01(eng) < 0.25) {
                int rows = static_cast<int>(u01(eng) * N);
                for (int i = 0; i < rows; ++i) p.z.row(i).setZero();
            }
            double nz = p.z.norm();
            if (nz > 0) p.z *= r_min * std::pow(z_max / r_min, u01(eng)) / nz;
        }
        out.push_back(std::move(p));
    }
    return out;
}

ABReport check_ab_on(const Generator& gen, const ABCertificate& cert, const std::vector<ABSample>& samples) {
    if (cert.directions.rows() != gen.N) fail(ErrorKind::certificate, "certificate dimension mismatch");
    if (!positively_spans(SpanningSet(cert.directions)))
        fail(ErrorKind::certificate, "certificate directions do not positively span R^N");
    if (cert.weak && static_cast<int>(cert.L.size()) != cert.K())
        fail(ErrorKind::certificate, "weak certificate needs one L_k per direction");

    ABReport rep;
    rep.rows.resize(cert.K());
    for (int k = 0; k < cert.K(); ++k) rep.rows[k].k = k;
    for (const auto& s : samples) {
        Vec y = Vec::Zero(gen.N);
        Vec f = gen(s.t, s.x, y, s.z);
        double l = cert.l_at(s.t);
        double scale = 1.0 + s.z.squaredNorm();
        for (int k = 0; k < cert.K(); ++k) {
            Vec a = cert.directions.col(k);
            Eigen::RowVectorXd az = a.transpose() * s.z;
            double rhs = l + 0.5 * az.squaredNorm();
            if (cert.weak && cert.L[k]) {
                Vec Lk = cert.L[k](s.t, s.x, s.z);
                rhs += az.dot(Lk);
                double g = Lk.norm() / (1.0 + s.z.norm());
                if (g > rep.L_growth_worst) rep.L_growth_worst = g;
            }
            double margin = a.dot(f) - rhs;
            if (!std::isfinite(margin)) fail(ErrorKind::input, "non-finite driver value in AB check");
            if (margin > rep.rows[k].max_margin) {
                rep.rows[k].max_margin = margin;
                rep.rows[k].witness = SamplePoint{s.t, s.x, s.z};
            }
            if (margin > 1e-9 * scale) rep.pass = false;
        }
    }
    if (cert.weak) {
        rep.L_growth_ok = rep.L_growth_worst <= cert.C_L * (1.0 + 1e-12);
        rep.pass = rep.pass && rep.L_growth_ok;
    }
    return rep;
}

ABReport check_ab(const Generator& gen, const ABCertificate& cert, int n_samples, double z_max, std::uint64_t seed,
                  double x_radius) {
    if (n_samples < 1 || !(z_max > 0)) fail(ErrorKind::input, "need n_samples >= 1 and z_max > 0");
    return check_ab_on(gen, cert, ab_samples(gen.N, gen.d, gen.T, n_samples, z_max, x_radius, seed));
}

Mat checked_inverse(const Mat& S) {
    if (S.rows() != S.cols()) fail(ErrorKind::input, "transform must be square");
    Eigen::JacobiSVD<Mat> svd(S);
    const auto& sv = svd.singularValues();
    double smax = sv.maxCoeff(), smin = sv.minCoeff();
    if (!(smin > 0) || smax / smin > 1e12) fail(ErrorKind::input, "singular linear transform");
    return S.inverse();
}

Generator linear_transform(const Generator& gen, const Mat& S) {
    if (S.rows() != gen.N) fail(ErrorKind::input, "transform dimension mismatch");
    Mat Si = checked_inverse(S);
    Generator out = gen;
    DriverFn f = gen.f;
    out.f = [f, S, Si](double t, const Vec& x, const Vec& y, const Mat& z) -> Vec {
        Vec yy = Si * y;
        Mat zz = Si * z;
        return S * f(t, x, yy, zz);
    };
    return out;
}

ABCertificate transform_certificate(const ABCertificate& cert, const Mat& S) {
    Mat Si = checked_inverse(S);
    ABCertificate out = cert;
    out.directions = Si.transpose() * cert.directions;
    out.C_L = cert.C_L * std::max(1.0, Si.norm());
    for (auto& L : out.L) {
        if (!L) continue;
        ZFn inner = L;
        L = [inner, Si](double t, const Vec& x, const Mat& z) { return inner(t, x, Si * z); };
    }
    return out;
}

TerminalData transform_terminal(const TerminalData& g, const Mat& S) {
    TerminalData out = g;
    auto inner = g.g;
    out.g = [inner, S](const Vec& x) -> Vec { return S * inner(x); };
    double n = S.norm();
    out.sup_bound = g.sup_bound * n;
    out.holder_bound = g.holder_bound * n;
    return out;
}

}  // namespace qbsde
