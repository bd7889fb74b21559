#include "qbsde/grid.hpp"

#include "qbsde/error.hpp"

#include <algorithm>
#include <cmath>

namespace qbsde {

long Grid::size() const {
    long s = 1;
    for (const auto& a : axes) s *= a.n;
    return s;
}

long Grid::stride(int axis) const {
    long s = 1;
    for (int k = dim() - 1; k > axis; --k) s *= axes[k].n;
    return s;
}

std::vector<int> Grid::index(long flat) const {
    std::vector<int> idx(dim());
    for (int k = dim() - 1; k >= 0; --k) {
        idx[k] = static_cast<int>(flat % axes[k].n);
        flat /= axes[k].n;
    }
    return idx;
}

long Grid::flat(const std::vector<int>& idx) const {
    long f = 0;
    for (int k = 0; k < dim(); ++k) f = f * axes[k].n + idx[k];
    return f;
}

Vec Grid::point(long f) const {
    auto idx = index(f);
    Vec x(dim());
    for (int k = 0; k < dim(); ++k) x[k] = axes[k].at(idx[k]);
    return x;
}

bool Grid::contains(const Vec& x, double slack) const {
    for (int k = 0; k < dim(); ++k) {
        double s = slack * std::max(1.0, axes[k].hi - axes[k].lo);
        if (x[k] < axes[k].lo - s || x[k] > axes[k].hi + s) return false;
    }
    return true;
}

GridFunction::GridFunction(Grid g, int n_components)
    : grid(std::move(g)), N(n_components), values(static_cast<std::size_t>(grid.size()) * n_components, 0.0) {}

Vec GridFunction::at(long node) const {
    Vec v(N);
    for (int i = 0; i < N; ++i) v[i] = values[node * N + i];
    return v;
}

void GridFunction::set(long node, const Vec& v) {
    for (int i = 0; i < N; ++i) values[node * N + i] = v[i];
}

Vec GridFunction::eval(const Vec& x) const {
    const int d = grid.dim();
    std::vector<int> base(d);
    std::vector<double> frac(d);
    for (int k = 0; k < d; ++k) {
        const Axis& a = grid.axes[k];
        double s = (std::clamp(x[k], a.lo, a.hi) - a.lo) / a.h();
        int i = std::min(static_cast<int>(std::floor(s)), a.n - 2);
        i = std::max(i, 0);
        base[k] = i;
        frac[k] = s - i;
    }
    Vec out = Vec::Zero(N);
    std::vector<int> idx(d);
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            int bit = (corner >> k) & 1;
            idx[k] = base[k] + bit;
            w *= bit ? frac[k] : 1.0 - frac[k];
        }
        if (w == 0.0) continue;
        long f = grid.flat(idx);
        for (int i = 0; i < N; ++i) out[i] += w * values[f * N + i];
    }
    return out;
}

}  // namespace qbsde
