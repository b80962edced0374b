#pragma once

// Adaptive Gauss-Kronrod driver, runtime Gauss-Legendre nodes and
// finite-difference stencil weights shared by the transform modules.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace chh {

struct QuadOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_intervals = 4000;
    bool throw_on_failure = true;
};

template <class T>
struct QuadResult {
    T value{};
    double error = 0.0;
    bool converged = true;
};

namespace detail {

template <class T>
struct Panel {
    double a, b;
    T value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
auto gk21(F& f, double a, double b) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    double err = 0.0;
    auto v = GK::integrate(f, a, b, 0, 0.0, &err);
    // with max_depth 0 Boost reports |K - G| on the reference interval [-1, 1]
    return std::pair{v, err * 0.5 * (b - a)};
}

}  // namespace detail

/// Integrates f over [points.front(), points.back()], splitting first at
/// every interior point. Panels with the largest error estimate are bisected
/// until the summed estimate meets max(abs_tol, rel_tol*|I|).
template <class F>
auto integrate(F&& f, std::span<const double> points, const QuadOptions& opt = {})
    -> QuadResult<decltype(f(0.0))> {
    using T = decltype(f(0.0));
    QuadResult<T> out;
    if (points.size() < 2) return out;

    std::priority_queue<detail::Panel<T>> heap;
    T total{};
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        double a = points[i], b = points[i + 1];
        if (!(b > a)) continue;
        auto [v, e] = detail::gk21(f, a, b);
        heap.push({a, b, v, e});
        total += v;
        err += e;
    }
    int n = static_cast<int>(heap.size());
    auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
    while (!heap.empty() && err > target() && n < opt.max_intervals) {
        auto p = heap.top();
        heap.pop();
        double m = 0.5 * (p.a + p.b);
        if (!(m > p.a && m < p.b)) {
            // Panel cannot be split further in double precision.
            heap.push({p.a, p.b, p.value, 0.0});
            err -= p.error;
            continue;
        }
        auto [v1, e1] = detail::gk21(f, p.a, m);
        auto [v2, e2] = detail::gk21(f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push({p.a, m, v1, e1});
        heap.push({m, p.b, v2, e2});
        ++n;
    }
    // Re-sum to shed the drift accumulated by incremental updates.
    T resum{};
    double eresum = 0.0;
    while (!heap.empty()) {
        resum += heap.top().value;
        eresum += heap.top().error;
        heap.pop();
    }
    out.value = resum;
    out.error = eresum;
    out.converged = eresum <= std::max(opt.abs_tol, opt.rel_tol * std::abs(resum)) * 1.0000001;
    if (!out.converged && opt.throw_on_failure)
        throw AccuracyFailure("adaptive quadrature did not converge", eresum);
    return out;
}

template <class F>
auto integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
    const double pts[2] = {a, b};
    return integrate(std::forward<F>(f), std::span<const double>(pts, 2), opt);
}

/// Sorted, de-duplicated copy of `pts` restricted to [lo, hi], with lo and hi included.
inline std::vector<double> panel_points(double lo, double hi, std::span<const double> pts) {
    std::vector<double> v{lo, hi};
    for (double p : pts)
        if (p > lo && p < hi) v.push_back(p);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

/// Gauss-Legendre nodes and weights on [a, b] for runtime n.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n, double a, double b) {
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    const int m = (n + 1) / 2;
    const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        gl.nodes[i] = xm - xl * z;
        gl.nodes[n - 1 - i] = xm + xl * z;
        gl.weights[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        gl.weights[n - 1 - i] = gl.weights[i];
    }
    return gl;
}

/// Fornberg weights for the first derivative at x0 from stencil nodes xs.
inline std::vector<double> first_derivative_weights(double x0, std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
    double c1 = 1.0, c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t mn = std::min<std::size_t>(i, 1);
        double c2 = 1.0, c5 = c4;
        c4 = xs[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
    return w;
}

/// Trapezoid rule on a (possibly nonuniform) grid.
template <class T>
T trapezoid(std::span<const double> x, std::span<const T> y) {
    T s{};
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return s;
}

}  // namespace chh
