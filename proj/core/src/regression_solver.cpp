#include "qbsde/approx.hpp"
#include "qbsde/error.hpp"
#include "qbsde/paths.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qbsde {

Mat least_squares(const Mat& gram, const Mat& rhs, double* condition) {
    const int n = static_cast<int>(gram.rows());
    Vec dg = gram.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Mat G = dg.asDiagonal() * gram * dg.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
    double emax = es.eigenvalues().maxCoeff(), emin = es.eigenvalues().minCoeff();
    double cond = emin > 0 ? emax / emin : INFINITY;
    if (condition) *condition = cond;
    if (!(cond < 1e13)) {
        std::ostringstream os;
        os << "regression Gram matrix is rank deficient (condition estimate " << cond << ")";
        fail(ErrorKind::basis, os.str());
    }
    Mat A = G + 1e-10 * Mat::Identity(n, n);
    Mat sol = A.ldlt().solve(dg.asDiagonal() * rhs);
    return dg.asDiagonal() * sol;
}

namespace {

struct StepBasis {
    Vec center, scale, lo, hi;
    int degree = 0;
    Mat Phi;  // paths x basis
};

StepBasis build_basis(const std::vector<double>& X, int n, int K1, int k, int d, int degree, double q) {
    StepBasis sb;
    sb.degree = degree;
    sb.center = Vec::Zero(d);
    sb.scale = Vec::Zero(d);
    sb.lo.resize(d);
    sb.hi.resize(d);
    std::vector<double> col(n);
    for (int j = 0; j < d; ++j) {
        double mean = 0.0, sq = 0.0;
        for (int p = 0; p < n; ++p) {
            double x = X[(static_cast<std::size_t>(p) * K1 + k) * d + j];
            col[p] = x;
            mean += x;
        }
        mean /= n;
        for (int p = 0; p < n; ++p) sq += (col[p] - mean) * (col[p] - mean);
        double sd = std::sqrt(sq / n);
        sb.center[j] = mean;
        sb.scale[j] = sd > 1e-12 * (1.0 + std::abs(mean)) ? sd : 0.0;
        std::size_t a = static_cast<std::size_t>(q * (n - 1)), b = static_cast<std::size_t>((1.0 - q) * (n - 1));
        std::nth_element(col.begin(), col.begin() + a, col.end());
        sb.lo[j] = col[a];
        std::nth_element(col.begin(), col.begin() + b, col.end());
        sb.hi[j] = col[b];
        if (sb.scale[j] == 0.0) sb.lo[j] = sb.hi[j] = mean;
    }
    RegressionStep probe;
    probe.center = sb.center;
    probe.scale = sb.scale;
    probe.degree = degree;
    int nb = static_cast<int>(probe.features(sb.center).size());
    sb.Phi.resize(n, nb);
    Vec x(d);
    for (int p = 0; p < n; ++p) {
        for (int j = 0; j < d; ++j) x[j] = X[(static_cast<std::size_t>(p) * K1 + k) * d + j];
        sb.Phi.row(p) = probe.features(x).transpose();
    }
    return sb;
}

Mat regress(const StepBasis& sb, const Mat& targets) {
    const double n = static_cast<double>(sb.Phi.rows());
    Mat gram = sb.Phi.transpose() * sb.Phi / n;
    Mat rhs = sb.Phi.transpose() * targets / n;
    return least_squares(gram, rhs);
}

}  // namespace

SolutionField solve_regression_mc(const DiffusionSpec& spec, const Generator& gen, const TerminalData& term,
                                  const RegressionConfig& cfg, std::uint64_t seed) {
    const int d = spec.d, N = gen.N, K = cfg.n_steps, n = cfg.n_paths;
    if (gen.d != d || term.d != d || term.N != N) fail(ErrorKind::input, "dimension mismatch between inputs");
    if (K < 1) fail(ErrorKind::config, "n_steps must be positive");
    if (!(cfg.truncation > 0)) fail(ErrorKind::config, "truncation level must be positive");
    const int nb_full = PolynomialBasis(d, cfg.degree).size();
    if (n < 10 * nb_full) fail(ErrorKind::config, "n_paths must be at least 10 times the basis size");
    const Vec x0 = cfg.x0.size() == d ? cfg.x0 : Vec::Zero(d);
    const double T = spec.T, dt = T / K;
    const int K1 = K + 1;

    std::vector<double> X(static_cast<std::size_t>(n) * K1 * d), dW(static_cast<std::size_t>(n) * K * d);
    {
        Vec x(d), w(d);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int p = 0; p < n; ++p) {
            double* inc = &dW[static_cast<std::size_t>(p) * K * d];
            draw_increments(seed, static_cast<std::uint64_t>(p), K, d, dt, inc);
            x = x0;
            if (cfg.init_spread > 0) {
                auto eng = stream(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(p));
                for (int j = 0; j < d; ++j) x[j] += cfg.init_spread * u(eng);
            }
            double* row = &X[static_cast<std::size_t>(p) * K1 * d];
            for (int j = 0; j < d; ++j) row[j] = x[j];
            for (int k = 0; k < K; ++k) {
                for (int j = 0; j < d; ++j) w[j] = inc[k * d + j];
                double t = k * dt;
                x += spec.drift(t, x) * dt + spec.dispersion(t, x) * w;
                if (!x.allFinite()) {
                    std::ostringstream os;
                    os << "non-finite state on path " << p << " at step " << k + 1;
                    fail(ErrorKind::divergence, os.str());
                }
                for (int j = 0; j < d; ++j) row[(k + 1) * d + j] = x[j];
            }
        }
    }
    auto state = [&](int p, int k) {
        Vec x(d);
        for (int j = 0; j < d; ++j) x[j] = X[(static_cast<std::size_t>(p) * K1 + k) * d + j];
        return x;
    };

    SolutionField field;
    field.method = SolveMethod::regression;
    field.N = N;
    field.d = d;
    field.seed = seed;
    field.steps.resize(K1);
    field.info.picard_residuals.assign(K1, 0.0);
    for (int k = 0; k <= K; ++k) field.times.push_back(k * dt);

    Mat Y(n, N);
    for (int p = 0; p < n; ++p) Y.row(p) = term.g(state(p, K)).transpose();
    Mat Zlast;

    {
        StepBasis sb = build_basis(X, n, K1, K, d, cfg.degree, cfg.domain_quantile);
        RegressionStep& s = field.steps[K];
        s.center = sb.center;
        s.scale = sb.scale;
        s.degree = sb.degree;
        s.lo = sb.lo;
        s.hi = sb.hi;
        s.coef_v = regress(sb, Y);
    }

    const bool constant_sigma = spec.constant_coefficients;
    Mat sigma_inv0;
    if (constant_sigma) sigma_inv0 = checked_inverse(spec.dispersion(0.0, x0));

    Mat Zs(n, N * d), Zflat(n, N * d), target(n, N);
    for (int k = K - 1; k >= 0; --k) {
        const double t = k * dt;
        StepBasis sb = build_basis(X, n, K1, k, d, cfg.degree, cfg.domain_quantile);
        Mat coef0 = regress(sb, Y);
        Mat Y0 = sb.Phi * coef0;

        for (int p = 0; p < n; ++p)
            for (int i = 0; i < N; ++i) {
                double r = (Y(p, i) - Y0(p, i)) / dt;
                for (int j = 0; j < d; ++j) Zs(p, i * d + j) = r * dW[(static_cast<std::size_t>(p) * K + k) * d + j];
            }
        Mat coef_zs = regress(sb, Zs);
        Mat fitted = sb.Phi * coef_zs;
        for (int p = 0; p < n; ++p) {
            Mat zs = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                fitted.row(p).data(), N, d);
            Mat si = constant_sigma ? sigma_inv0 : checked_inverse(spec.dispersion(t, state(p, k)));
            Mat z = zs * si;
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < d; ++j) Zflat(p, i * d + j) = z(i, j);
        }
        Mat coef_w = constant_sigma ? Mat(coef_zs) : regress(sb, Zflat);
        if (constant_sigma) {
            for (int b = 0; b < coef_zs.rows(); ++b) {
                Mat zs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                    coef_zs.row(b).data(), N, d);
                Mat z = zs * sigma_inv0;
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < d; ++j) coef_w(b, i * d + j) = z(i, j);
            }
        }

        Mat Yk = Y0;
        Mat coef_v = coef0;
        double prev_res = INFINITY, res = 0.0;
        int it = 0;
        std::vector<double> trace;
        Mat z(N, d);
        Vec y(N);
        for (it = 1;; ++it) {
            for (int p = 0; p < n; ++p) {
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < d; ++j) z(i, j) = Zflat(p, i * d + j);
                double nz = z.norm();
                field.info.sup_z = std::max(field.info.sup_z, nz);
                Mat zt = truncate(z, cfg.truncation);
                y = Yk.row(p).transpose();
                Vec f = gen(t, state(p, k), y, zt);
                target.row(p) = Y.row(p) + dt * f.transpose();
            }
            coef_v = regress(sb, target);
            Mat Ynew = sb.Phi * coef_v;
            res = std::sqrt((Ynew - Yk).squaredNorm() / n);
            if (res > prev_res) Ynew = 0.5 * (Ynew + Yk);
            trace.push_back(res);
            Yk = Ynew;
            if (!gen.depends_on_y || res <= cfg.picard_tol) break;
            prev_res = res;
            if (it >= cfg.picard_max) {
                std::ostringstream os;
                os << "Picard iteration did not converge at step " << k << "; residuals:";
                for (double r : trace) os << ' ' << r;
                fail(ErrorKind::no_convergence, os.str());
            }
        }
        if (!gen.depends_on_y) res = 0.0;
        field.info.picard_residuals[k] = res;
        field.info.max_picard_iterations = std::max(field.info.max_picard_iterations, it);
        if (!Yk.allFinite()) fail(ErrorKind::divergence, "non-finite regression values");

        Y = Yk;
        RegressionStep& s = field.steps[k];
        s.center = sb.center;
        s.scale = sb.scale;
        s.degree = sb.degree;
        s.lo = sb.lo;
        s.hi = sb.hi;
        s.coef_v = coef_v;
        s.coef_w = coef_w;
        if (k == K - 1) Zlast = Zflat;
    }

    {
        StepBasis sb = build_basis(X, n, K1, K, d, cfg.degree, cfg.domain_quantile);
        field.steps[K].coef_w = regress(sb, Zlast);
    }
    return field;
}

}  // namespace qbsde
