#pragma once

// Principal-value Hilbert transform
//
//     H[g](u) = (1/pi) PV \int g(p) / (p - u) dp
//
// for closed-form integrands (adaptive Gauss-Kronrod with local subtraction)
// and for sampled data (piecewise cubic Hermite with exact cell integrals).
// With this sign H[1/(1+p^2)](u) = -u/(1+u^2) and H[H[g]] = -g.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace chh {

/// Closed-form integrand on a finite window. tail_left/right are the masses of
/// g beyond the window; they enter as tail/(edge - u), which is exact to
/// leading order for rapidly decaying g (softened within 1% of the window of an edge).
struct RealFunction {
    std::function<double(double)> f;
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> breakpoints;
    double tail_left = 0.0;
    double tail_right = 0.0;
};

struct HilbertOptions {
    double tol = 1e-8;                // absolute target on H[g](u)
    std::optional<double> delta;      // excision half-width; default: distance to the nearer edge
    double delta_floor = 1e-6;        // relative to the local scale, for sampled data
    int max_intervals = 4000;
    bool check_accuracy = true;       // sampled data: compare against the half-resolution transform

    static HilbertOptions with_tol(double t) {
        HilbertOptions o;
        o.tol = t;
        return o;
    }
};

struct SampledRealFunction {
    std::vector<double> grid;
    std::vector<double> values;

    SampledRealFunction() = default;
    SampledRealFunction(std::vector<double> x, std::vector<double> y) : grid(std::move(x)), values(std::move(y)) {
        validate();
    }

    void validate() const {
        if (grid.size() != values.size()) throw ConfigError("grid and values have different lengths");
        for (std::size_t i = 0; i + 1 < grid.size(); ++i)
            if (!(grid[i + 1] > grid[i])) throw ConfigError("grid must be strictly increasing");
        for (double v : values)
            if (!std::isfinite(v)) throw ConfigError("sampled values must be finite");
    }
};

namespace detail {

/// Split points accumulating geometrically towards a near-singular point c
/// from the side of [a, b] facing it; helps the adaptive driver.
inline void geometric_points(std::vector<double>& pts, double a, double b, double c, double d0) {
    if (!(d0 > 0)) return;
    for (double d = d0; d < (b - a); d *= 2.0) {
        if (c <= a && a + d < b) pts.push_back(a + d);
        if (c >= b && b - d > a) pts.push_back(b - d);
        if (c > a && c < b) {
            if (c + d < b) pts.push_back(c + d);
            if (c - d > a) pts.push_back(c - d);
        }
    }
}

}  // namespace detail

/// PV \int_lo^hi g(p)/(p-u) dp plus the tail contribution, without the 1/pi.
inline double pv_cauchy(const RealFunction& g, double u, const HilbertOptions& opt = {}) {
    if (!std::isfinite(u)) throw DomainError("Hilbert transform evaluated at a non-finite point");
    const double lo = g.lo, hi = g.hi;
    QuadOptions q;
    q.abs_tol = 0.25 * opt.tol * std::numbers::pi;
    q.rel_tol = 0.0;
    q.max_intervals = opt.max_intervals;

    double total = 0.0;
    const double edge = std::min(u - lo, hi - u);
    if (edge > 0.0) {
        double delta = opt.delta ? std::min(*opt.delta, edge) : edge;
        const double gu = g.f(u);
        // symmetric excision: the singular part integrates to zero there
        std::vector<double> inner{u - delta, u, u + delta};
        for (double b : g.breakpoints)
            if (b > u - delta && b < u + delta) inner.push_back(b);
        std::sort(inner.begin(), inner.end());
        inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
        auto smooth = [&](double p) {
            double t = p - u;
            return t == 0.0 ? 0.0 : (g.f(p) - gu) / t;
        };
        total += integrate(smooth, std::span<const double>(inner), q).value;
        auto direct = [&](double p) { return g.f(p) / (p - u); };
        auto outer = [&](double a, double b) {
            if (!(b > a)) return 0.0;
            std::vector<double> pts{a, b};
            for (double bp : g.breakpoints)
                if (bp > a && bp < b) pts.push_back(bp);
            detail::geometric_points(pts, a, b, u, delta);
            std::sort(pts.begin(), pts.end());
            pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
            return integrate(direct, std::span<const double>(pts), q).value;
        };
        total += outer(lo, u - delta);
        total += outer(u + delta, hi);
    } else {
        // u on or outside the window edge
        std::vector<double> pts{lo, hi};
        for (double bp : g.breakpoints)
            if (bp > lo && bp < hi) pts.push_back(bp);
        double dist = std::max(lo - u, u - hi);
        if (dist > 0.0) {
            detail::geometric_points(pts, lo, hi, u, dist);
            auto direct = [&](double p) { return g.f(p) / (p - u); };
            std::sort(pts.begin(), pts.end());
            pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
            total += integrate(direct, std::span<const double>(pts), q).value;
        } else {
            // u exactly on an edge: subtract g(u) and keep the finite log term
            const double gu = g.f(u);
            auto smooth = [&](double p) {
                double t = p - u;
                return t == 0.0 ? 0.0 : (g.f(p) - gu) / t;
            };
            std::sort(pts.begin(), pts.end());
            pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
            total += integrate(smooth, std::span<const double>(pts), q).value;
            double far = (u == lo) ? hi - u : lo - u;
            total += gu * std::log(std::abs(far));
        }
    }
    // The point-mass tail model fails within its own spread of the edge;
    // t/(e-u) is softened to t(e-u)/((e-u)^2 + s^2) with s a fraction of the window.
    const double s2 = std::pow(1e-2 * (hi - lo), 2);
    auto tail = [&](double t, double e) { return t * (e - u) / ((e - u) * (e - u) + s2); };
    if (g.tail_right != 0.0) total += tail(g.tail_right, hi);
    if (g.tail_left != 0.0) total += tail(g.tail_left, lo);
    return total;
}

inline double hilbert_at(const RealFunction& g, double u, const HilbertOptions& opt = {}) {
    return pv_cauchy(g, u, opt) / std::numbers::pi;
}

inline std::vector<double> hilbert_on_grid(const RealFunction& g, std::span<const double> out,
                                           const HilbertOptions& opt = {}) {
    std::vector<double> r(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) r[i] = hilbert_at(g, out[i], opt);
    return r;
}

// ---------------------------------------------------------------------------
// Sampled data. The interpolant is C1 piecewise cubic Hermite with slopes
// from 5-point finite differences, zero outside the grid. H is linear in the
// samples, so everything is expressed as a weight row w with H[g](u) = w.y.

namespace detail {

/// Sparse first-derivative operator: m_i = sum_j D[i][j] y_{idx[i]+j}.
struct SlopeStencil {
    std::vector<int> first;
    std::vector<std::vector<double>> w;
};

inline SlopeStencil slope_stencil(std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    const int width = std::min(7, n);
    SlopeStencil s;
    s.first.resize(n);
    s.w.resize(n);
    for (int i = 0; i < n; ++i) {
        int f = std::clamp(i - width / 2, 0, n - width);
        s.first[i] = f;
        s.w[i] = first_derivative_weights(x[i], x.subspan(f, width));
    }
    return s;
}

/// Hermite basis on [a, b] as cubic polynomials in s = (p - a)/h, scaled so
/// that P(p) = y_a H0 + y_b H1 + m_a H2 + m_b H3.
inline std::array<std::array<double, 4>, 4> hermite_basis(double h) {
    return {{
        {1.0, 0.0, -3.0, 2.0},
        {0.0, 0.0, 3.0, -2.0},
        {0.0, h, -2.0 * h, h},
        {0.0, 0.0, -h, h},
    }};
}

/// \int_a^b phi(p)/(p-u) dp for the four Hermite basis cubics of the cell.
/// A log term with zero argument is dropped; it cancels against the
/// neighbouring cell because the interpolant is continuous.
inline std::array<double, 4> cell_cauchy(double a, double b, double u) {
    const double h = b - a;
    auto basis = hermite_basis(h);
    std::array<double, 4> out{};
    const double dist = std::max({a - u, u - b, 0.0});
    if (dist > 2.0 * h) {
        static const GaussLegendre gl = gauss_legendre(8, 0.0, 1.0);
        for (int q = 0; q < 8; ++q) {
            double s = gl.nodes[q];
            double p = a + h * s;
            double kern = gl.weights[q] * h / (p - u);
            double s2 = s * s, s3 = s2 * s;
            for (int k = 0; k < 4; ++k)
                out[k] += kern * (basis[k][0] + basis[k][1] * s + basis[k][2] * s2 + basis[k][3] * s3);
        }
        return out;
    }
    // Taylor coefficients of each cubic about u, in powers of t = p - u.
    const double su = (u - a) / h;
    const double ta = a - u, tb = b - u;
    double logterm = 0.0;
    if (ta != 0.0 && tb != 0.0) logterm = std::log(std::abs(tb / ta));
    else if (ta == 0.0) logterm = std::log(std::abs(tb));
    else logterm = -std::log(std::abs(ta));
    const double pw[4] = {0.0, tb - ta, (tb * tb - ta * ta) / 2.0, (tb * tb * tb - ta * ta * ta) / 3.0};
    for (int k = 0; k < 4; ++k) {
        const auto& c = basis[k];
        double d0 = c[0] + su * (c[1] + su * (c[2] + su * c[3]));
        double d1 = (c[1] + su * (2.0 * c[2] + 3.0 * su * c[3])) / h;
        double d2 = (c[2] + 3.0 * su * c[3]) / (h * h);  // phi''/2
        double d3 = c[3] / (h * h * h);                   // phi'''/6
        out[k] = d0 * logterm + d1 * pw[1] + d2 * pw[2] + d3 * pw[3];
    }
    return out;
}

inline std::vector<double> hilbert_row(std::span<const double> x, const SlopeStencil& st, double u) {
    const int n = static_cast<int>(x.size());
    std::vector<double> wy(n, 0.0), wm(n, 0.0);
    for (int i = 0; i + 1 < n; ++i) {
        auto c = cell_cauchy(x[i], x[i + 1], u);
        wy[i] += c[0];
        wy[i + 1] += c[1];
        wm[i] += c[2];
        wm[i + 1] += c[3];
    }
    // fold slope weights back onto the samples
    for (int i = 0; i < n; ++i) {
        if (wm[i] == 0.0) continue;
        for (std::size_t j = 0; j < st.w[i].size(); ++j) wy[st.first[i] + j] += wm[i] * st.w[i][j];
    }
    for (double& v : wy) v /= std::numbers::pi;
    return wy;
}

inline double hilbert_sampled_raw(std::span<const double> x, std::span<const double> y, double u) {
    auto st = slope_stencil(x);
    auto w = hilbert_row(x, st, u);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * y[i];
    return s;
}

}  // namespace detail

/// Dense matrix M with (M y)_i = H[y](out_i) for data on `grid`.
inline std::vector<std::vector<double>> hilbert_matrix(std::span<const double> grid, std::span<const double> out) {
    auto st = detail::slope_stencil(grid);
    std::vector<std::vector<double>> m(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) m[i] = detail::hilbert_row(grid, st, out[i]);
    return m;
}

inline double hilbert_at(const SampledRealFunction& g, double u, const HilbertOptions& opt = {}) {
    if (g.grid.size() < 2) return 0.0;
    if (!std::isfinite(u)) throw DomainError("Hilbert transform evaluated at a non-finite point");
    double full = detail::hilbert_sampled_raw(g.grid, g.values, u);
    if (opt.check_accuracy && g.grid.size() >= 11) {
        std::vector<double> xc, yc;
        for (std::size_t i = 0; i < g.grid.size(); i += 2) {
            xc.push_back(g.grid[i]);
            yc.push_back(g.values[i]);
        }
        if (xc.back() != g.grid.back()) {
            xc.push_back(g.grid.back());
            yc.push_back(g.values.back());
        }
        double coarse = detail::hilbert_sampled_raw(xc, yc, u);
        double est = std::abs(full - coarse) / 15.0;
        if (est > opt.tol) throw AccuracyFailure("sampled Hilbert transform not resolved by the grid", est);
    }
    return full;
}

inline SampledRealFunction hilbert_on_grid(const SampledRealFunction& g, std::span<const double> out,
                                           const HilbertOptions& opt = {}) {
    g.validate();
    std::vector<double> v(out.size());
    if (!opt.check_accuracy) {
        auto m = hilbert_matrix(g.grid, out);
        for (std::size_t i = 0; i < out.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.values.size(); ++j) s += m[i][j] * g.values[j];
            v[i] = s;
        }
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) v[i] = hilbert_at(g, out[i], opt);
    }
    return SampledRealFunction(std::vector<double>(out.begin(), out.end()), std::move(v));
}

}  // namespace chh
