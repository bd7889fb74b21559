#include "qbsde/spanning.hpp"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"

#include <cmath>
#include <vector>

namespace qbsde {

SpanningSet::SpanningSet(Mat v) : vectors(std::move(v)) {
    if (vectors.cols() < 1 || vectors.rows() < 1) fail(ErrorKind::input, "spanning set is empty");
    for (int k = 0; k < vectors.cols(); ++k)
        if (!(vectors.col(k).norm() > 0)) fail(ErrorKind::input, "spanning set contains a zero vector");
}

std::optional<Vec> phase1_feasible(const Mat& A, const Vec& b, double tol) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    // Tableau columns: n structural, m artificial, rhs. Row m is the phase-1 objective.
    Mat T = Mat::Zero(m + 1, n + m + 1);
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) {
        double s = b[i] < 0 ? -1.0 : 1.0;
        T.block(i, 0, 1, n) = s * A.row(i);
        T(i, n + i) = 1.0;
        T(i, n + m) = s * b[i];
        basis[i] = n + i;
    }
    for (int i = 0; i < m; ++i) T.row(m) -= T.row(i);
    for (int i = 0; i < m; ++i) T(m, n + i) = 0.0;

    const double eps = 1e-12;
    for (int iter = 0; iter < 10000; ++iter) {
        int enter = -1;
        for (int j = 0; j < n + m; ++j)
            if (T(m, j) < -eps) {
                enter = j;
                break;
            }
        if (enter < 0) break;
        int leave = -1;
        double best = INFINITY;
        for (int i = 0; i < m; ++i) {
            if (T(i, enter) > eps) {
                double r = T(i, n + m) / T(i, enter);
                if (r < best - 1e-15 || (std::abs(r - best) <= 1e-15 && leave >= 0 && basis[i] < basis[leave])) {
                    best = r;
                    leave = i;
                }
            }
        }
        if (leave < 0) break;
        T.row(leave) /= T(leave, enter);
        for (int i = 0; i <= m; ++i)
            if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
        basis[leave] = enter;
    }
    double infeas = -T(m, n + m);
    if (infeas > tol * (1.0 + b.norm())) return std::nullopt;
    Vec lam = Vec::Zero(n);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) lam[basis[i]] = std::max(0.0, T(i, n + m));
    return lam;
}

int numeric_rank(const Mat& vectors) {
    Eigen::FullPivLU<Mat> lu(vectors);
    lu.setThreshold(1e-10);
    return static_cast<int>(lu.rank());
}

bool positively_spans(const SpanningSet& set) {
    if (numeric_rank(set.vectors) < set.N()) return false;
    Mat A(set.N() + 1, set.K());
    A.topRows(set.N()) = set.vectors;
    A.row(set.N()).setOnes();
    Vec b = Vec::Zero(set.N() + 1);
    b[set.N()] = 1.0;
    return phase1_feasible(A, b).has_value();
}

std::optional<Vec> positive_representation(const SpanningSet& set, const Vec& a) {
    if (a.size() != set.N()) fail(ErrorKind::input, "target has wrong dimension");
    auto lam = phase1_feasible(set.vectors, a);
    if (!lam) return std::nullopt;
    if ((set.vectors * *lam - a).norm() > 1e-8 * (1.0 + a.norm())) return std::nullopt;
    return lam;
}

std::optional<Vec> strict_separation_witness(const SpanningSet& set, int n_dirs, std::uint64_t seed) {
    if (n_dirs < 1) fail(ErrorKind::input, "n_dirs must be positive");
    Mat unit = set.vectors;
    for (int k = 0; k < unit.cols(); ++k) unit.col(k).normalize();
    auto eng = stream(seed, 0);
    std::normal_distribution<double> n01;
    std::optional<Vec> best;
    double best_score = INFINITY;
    Vec a(set.N());
    for (int s = 0; s < n_dirs; ++s) {
        for (int i = 0; i < a.size(); ++i) a[i] = n01(eng);
        if (!(a.norm() > 0)) continue;
        a.normalize();
        double score = (unit.transpose() * a).maxCoeff();
        if (score <= 0.0 && score < best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

}  // namespace qbsde
