#include "qbsde/quadrature.hpp"

#include "qbsde/error.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace qbsde {

QuadratureRule gauss_hermite(int n) {
    if (n < 1) fail(ErrorKind::input, "quadrature needs at least one node");
    static std::mutex mu;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    Mat J = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(0.5 * i);
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double mu0 = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = es.eigenvalues()[i];
        double v = es.eigenvectors()(0, i);
        r.weights[i] = mu0 * v * v;
    }
    cache.emplace(n, r);
    return r;
}

Vec gaussian_expectation(const std::function<Vec(const Vec&)>& fn, int d, int n) {
    QuadratureRule r = gauss_hermite(n);
    const double norm = std::pow(M_PI, -0.5 * d);
    long total = 1;
    for (int k = 0; k < d; ++k) total *= n;
    Vec acc;
    Vec z(d);
    for (long s = 0; s < total; ++s) {
        long rem = s;
        double w = norm;
        for (int k = 0; k < d; ++k) {
            int i = static_cast<int>(rem % n);
            rem /= n;
            z[k] = std::sqrt(2.0) * r.nodes[i];
            w *= r.weights[i];
        }
        if (w == 0.0) continue;
        Vec v = fn(z);
        if (acc.size() == 0)
            acc = w * v;
        else
            acc += w * v;
    }
    return acc;
}

}  // namespace qbsde
