#pragma once

// Homogeneous equilibria f0(p) and the derivative data every other module
// consumes. Analytic kinds (Gaussian mixtures, closed-form expressions) give
// f0' and f0'' in closed form; tabulated kinds go through shape-preserving
// (PCHIP) interpolation so that no spurious extrema are introduced.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

// Boost 1.74's pchip calls isnan unqualified; <math.h> puts it in the global namespace.
#include <math.h>
#include <boost/math/interpolators/pchip.hpp>

#include "errors.hpp"
#include "expression.hpp"

namespace chh {

/// f0'(p) and f0''(p) on a finite window, with the mass of f0' beyond it.
/// This is the object the dielectric, Hilbert and perturbation code works on,
/// so a perturbed derivative f0' + chi is just another SlopeFunction.
struct SlopeFunction {
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> breakpoints;  // kinks of d1 or jumps of d2
    double tail_left = 0.0;           // integral of f0' over (-inf, lo)
    double tail_right = 0.0;          // integral of f0' over (hi, inf)
};

struct GaussianComponent {
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;
};

enum class CriticalType { maximum, minimum, inflection_degenerate };

inline const char* to_string(CriticalType t) {
    switch (t) {
        case CriticalType::maximum: return "maximum";
        case CriticalType::minimum: return "minimum";
        case CriticalType::inflection_degenerate: return "inflection_degenerate";
    }
    return "?";
}

struct CriticalPoint {
    double location = 0.0;
    CriticalType type = CriticalType::maximum;
    double second_derivative = 0.0;
};

struct CriticalPointOptions {
    double tol_root = 1e-10;
    double degenerate = 1e-8;  // |f0''| below this marks inflection_degenerate
    int samples = 8001;
};

class EquilibriumProfile {
public:
    enum class Kind { maxwellian, bi_maxwellian, mixture, expression, tabulated };

    /// A e^{-(p-c)^2/w^2}
    static EquilibriumProfile maxwellian(double center, double width, double amplitude) {
        EquilibriumProfile e(Kind::maxwellian);
        e.components_ = {{center, width, amplitude}};
        e.finish_mixture();
        return e;
    }

    /// A (e^{-(p-c-p1)^2/w^2} + e^{-(p-c+p1)^2/w^2})
    static EquilibriumProfile bi_maxwellian(double separation, double width, double amplitude, double center = 0.0) {
        EquilibriumProfile e(Kind::bi_maxwellian);
        e.components_ = {{center + separation, width, amplitude}, {center - separation, width, amplitude}};
        e.finish_mixture();
        return e;
    }

    static EquilibriumProfile mixture(std::vector<GaussianComponent> comps) {
        if (comps.empty()) throw ConfigError("mixture profile needs at least one component");
        EquilibriumProfile e(Kind::mixture);
        e.components_ = std::move(comps);
        e.finish_mixture();
        return e;
    }

    /// Closed-form f0 in the expression grammar, truncated to [lo, hi].
    static EquilibriumProfile expression(const std::string& f, double lo, double hi) {
        if (!(hi > lo)) throw ConfigError("expression profile needs lo < hi");
        EquilibriumProfile e(Kind::expression);
        auto f0 = Expression::parse(f);
        auto f1 = f0.derivative();
        auto f2 = f1.derivative();
        e.source_ = f;
        e.expr_ = std::make_shared<const std::array<Expression, 3>>(std::array<Expression, 3>{f0, f1, f2});
        e.lo_ = lo;
        e.hi_ = hi;
        e.validate_samples();
        return e;
    }

    /// Sampled f0 with optional f0' and f0'' columns (same grid).
    static EquilibriumProfile tabulated(std::vector<double> p, std::vector<double> f,
                                        std::vector<double> df = {}, std::vector<double> d2f = {}) {
        if (p.size() < 4) throw ConfigError("tabulated profile needs at least four points");
        if (f.size() != p.size() || (!df.empty() && df.size() != p.size()) ||
            (!d2f.empty() && d2f.size() != p.size()))
            throw ConfigError("tabulated profile columns have unequal lengths");
        for (std::size_t i = 0; i + 1 < p.size(); ++i)
            if (!(p[i + 1] > p[i])) throw ConfigError("tabulated grid must be strictly increasing");
        for (double v : f)
            if (!std::isfinite(v) || v < 0.0) throw ConfigError("tabulated values must be finite and non-negative");
        EquilibriumProfile e(Kind::tabulated);
        auto t = std::make_shared<Table>();
        t->p = p;
        t->lo = p.front();
        t->hi = p.back();
        using P = boost::math::interpolators::pchip<std::vector<double>>;
        t->f0 = std::make_shared<P>(std::vector<double>(p), std::move(f));
        if (!df.empty()) t->f1 = std::make_shared<P>(std::vector<double>(p), std::move(df));
        if (!d2f.empty()) t->f2 = std::make_shared<P>(std::vector<double>(p), std::move(d2f));
        e.table_ = std::move(t);
        e.lo_ = e.table_->lo;
        e.hi_ = e.table_->hi;
        return e;
    }

    Kind kind() const { return kind_; }
    bool analytic() const { return kind_ != Kind::tabulated; }
    double lo() const { return lo_ + shift_; }
    double hi() const { return hi_ + shift_; }
    double shift() const { return shift_; }
    const std::vector<GaussianComponent>& components() const { return components_; }
    const std::string& source() const { return source_; }
    bool has_second_derivative() const { return analytic() || table_->f1 || table_->f2; }

    /// Galilean frame change: the returned profile is f0(p - v).
    EquilibriumProfile shifted(double v) const {
        EquilibriumProfile e = *this;
        e.shift_ += v;
        return e;
    }

    struct Value {
        double value;
        bool truncated;  // p was outside the domain and 0 was returned
    };

    Value evaluate_flagged(double p, int order) const {
        if (order < 0 || order > 2) throw DomainError("derivative order must be 0, 1 or 2");
        if (kind_ == Kind::tabulated && order == 2 && !has_second_derivative())
            throw UnsupportedOrder("order 2 requested on a tabulated profile without derivative data");
        if (p < lo() || p > hi()) return {0.0, true};
        return {raw(p - shift_, order), false};
    }

    double evaluate(double p, int order) const { return evaluate_flagged(p, order).value; }

    /// Closed-form (or interpolated) f0' and f0'' on the domain window.
    SlopeFunction slope() const {
        SlopeFunction s;
        auto self = std::make_shared<const EquilibriumProfile>(*this);
        s.d1 = [self](double p) { return self->evaluate(p, 1); };
        if (has_second_derivative()) s.d2 = [self](double p) { return self->evaluate(p, 2); };
        else s.d2 = [](double) { return std::nan(""); };
        s.lo = lo();
        s.hi = hi();
        if (analytic()) {
            // integral of f0' beyond the window is -f0(hi) on the right, f0(lo) on the left
            s.tail_left = raw(lo_, 0);
            s.tail_right = -raw(hi_, 0);
            for (const auto& c : components_) s.breakpoints.push_back(c.center + shift_);
        }
        return s;
    }

    /// Sampling grid used by the global scans (critical points, symmetry).
    std::vector<double> sample_grid(int n) const {
        std::vector<double> g(n);
        for (int i = 0; i < n; ++i) g[i] = lo() + (hi() - lo()) * i / (n - 1.0);
        return g;
    }

private:
    struct Table {
        using P = boost::math::interpolators::pchip<std::vector<double>>;
        std::vector<double> p;
        double lo = 0, hi = 0;
        std::shared_ptr<P> f0, f1, f2;
    };

    explicit EquilibriumProfile(Kind k) : kind_(k) {}

    double raw(double p, int order) const {
        switch (kind_) {
            case Kind::maxwellian:
            case Kind::bi_maxwellian:
            case Kind::mixture: {
                double s = 0.0;
                for (const auto& c : components_) {
                    double z = (p - c.center) / c.width;
                    double g = c.amplitude * std::exp(-z * z);
                    if (order == 0) s += g;
                    else if (order == 1) s += -2.0 * z / c.width * g;
                    else s += (4.0 * z * z - 2.0) / (c.width * c.width) * g;
                }
                return s;
            }
            case Kind::expression: return (*expr_)[order](p);
            case Kind::tabulated: {
                const auto& t = *table_;
                if (order == 0) return (*t.f0)(p);
                if (order == 1) return t.f1 ? (*t.f1)(p) : t.f0->prime(p);
                if (t.f2) return (*t.f2)(p);
                return t.f1->prime(p);
            }
        }
        return 0.0;
    }

    void finish_mixture() {
        double lo = 0, hi = 0;
        bool first = true;
        for (const auto& c : components_) {
            if (!(c.width > 0.0) || !(c.amplitude >= 0.0) || !std::isfinite(c.center))
                throw ConfigError("Gaussian components need width > 0 and amplitude >= 0");
            // Each side: A w sqrt(pi)/2 erfc(z) below 1e-12.
            double z = 3.0;
            while (z < 40.0 && c.amplitude * c.width * 0.5 * std::sqrt(std::numbers::pi) * std::erfc(z) > 1e-12)
                z += 0.05;
            double a = c.center - z * c.width, b = c.center + z * c.width;
            lo = first ? a : std::min(lo, a);
            hi = first ? b : std::max(hi, b);
            first = false;
        }
        lo_ = lo;
        hi_ = hi;
    }

    void validate_samples() const {
        for (int i = 0; i <= 400; ++i) {
            double p = lo_ + (hi_ - lo_) * i / 400.0;
            double v = raw(p, 0);
            if (!std::isfinite(v) || v < 0.0)
                throw ConfigError("profile values must be finite and non-negative (fails at p=" + std::to_string(p) +
                                  ")");
        }
    }

    Kind kind_;
    double lo_ = -1.0, hi_ = 1.0, shift_ = 0.0;
    std::vector<GaussianComponent> components_;
    std::string source_;
    std::shared_ptr<const std::array<Expression, 3>> expr_;
    std::shared_ptr<const Table> table_;
};

namespace detail {

inline double bisect_zero(const std::function<double(double)>& f, double a, double b, double fa, double tol) {
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Direction of the sign change of f0' at an isolated zero: +1 for - to +,
/// -1 for + to -, 0 for a touching zero.
inline int sign_change(const SlopeFunction& s, double z, double left_gap, double right_gap) {
    double scale = std::max(1.0, std::abs(z));
    double hl = std::min(1e-7 * scale, 0.25 * left_gap);
    double hr = std::min(1e-7 * scale, 0.25 * right_gap);
    double a = s.d1(z - hl), b = s.d1(z + hr);
    for (int it = 0; it < 6 && (a == 0.0 || b == 0.0); ++it) {
        hl *= 2;
        hr *= 2;
        a = s.d1(z - hl);
        b = s.d1(z + hr);
    }
    if (a < 0 && b > 0) return 1;
    if (a > 0 && b < 0) return -1;
    return 0;
}

}  // namespace detail

/// Zeros of s.d1 bracketed on grid x (plus breakpoints), located to tol_root.
/// Closely spaced pairs inside one cell are split at the interior extremum of d1.
inline std::vector<double> slope_zeros_on_grid(const SlopeFunction& s, std::vector<double> x,
                                               const CriticalPointOptions& opt = {}) {
    for (double b : s.breakpoints)
        if (b > s.lo && b < s.hi) x.push_back(b);
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    std::vector<double> v(x.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        v[i] = s.d1(x[i]);
        scale = std::max(scale, std::abs(v[i]));
    }
    std::vector<double> zeros;
    if (scale == 0.0) return zeros;
    const bool have_d2 = static_cast<bool>(s.d2) && std::isfinite(s.d2(0.5 * (s.lo + s.hi)));
    auto push = [&](double z) {
        if (zeros.empty() || z - zeros.back() > opt.tol_root) zeros.push_back(z);
    };
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        double a = x[i], b = x[i + 1], fa = v[i], fb = v[i + 1];
        if (fa == 0.0) {
            // run of exact zeros on nodes: one critical point at its middle if f0'
            // changes sign across it or it is a single touching node; flat
            // stretches and runs reaching the window edge are not critical points
            std::size_t j = i;
            while (j + 1 < x.size() && v[j + 1] == 0.0) ++j;
            if (i > 0 && j + 1 < x.size()) {
                bool change = (v[i - 1] < 0) != (v[j + 1] < 0);
                if (change || j == i) push(0.5 * (x[i] + x[j]));
            }
            i = j;
            continue;
        }
        if (fb == 0.0) continue;
        if ((fa < 0) != (fb < 0)) {
            push(detail::bisect_zero(s.d1, a, b, fa, opt.tol_root));
            continue;
        }
        if (!have_d2) continue;
        // same sign at both ends: look for an interior extremum of d1 that dips through zero
        double ga = s.d2(a), gb = s.d2(b);
        if (!((ga < 0) != (gb < 0))) continue;
        if (std::min(std::abs(fa), std::abs(fb)) > 1e-3 * scale) continue;
        double m = detail::bisect_zero(s.d2, a, b, ga, 1e-15 * std::max(1.0, std::abs(a)));
        double fm = s.d1(m);
        if ((fm < 0) != (fa < 0)) {
            push(detail::bisect_zero(s.d1, a, m, fa, opt.tol_root));
            push(detail::bisect_zero(s.d1, m, b, fm, opt.tol_root));
        } else if (std::abs(fm) <= 1e-12 * scale) {
            push(m);  // tangency of f0' with zero
        }
    }
    return zeros;
}

inline std::vector<double> slope_zeros(const SlopeFunction& s, const CriticalPointOptions& opt = {}) {
    std::vector<double> x;
    const int n = std::max(opt.samples, 16);
    for (int i = 0; i < n; ++i) x.push_back(s.lo + (s.hi - s.lo) * i / (n - 1.0));
    return slope_zeros_on_grid(s, std::move(x), opt);
}

inline std::vector<CriticalPoint> critical_points(const SlopeFunction& s, const CriticalPointOptions& opt = {}) {
    std::vector<CriticalPoint> out;
    auto zeros = slope_zeros(s, opt);
    for (std::size_t i = 0; i < zeros.size(); ++i) {
        CriticalPoint c;
        c.location = zeros[i];
        c.second_derivative = s.d2 ? s.d2(c.location) : std::nan("");
        if (std::isfinite(c.second_derivative)) {
            if (std::abs(c.second_derivative) < opt.degenerate) c.type = CriticalType::inflection_degenerate;
            else c.type = c.second_derivative < 0 ? CriticalType::maximum : CriticalType::minimum;
        } else {
            // no f0'' data: classify by the direction in which f0' changes sign
            double lg = i > 0 ? zeros[i] - zeros[i - 1] : 1.0;
            double rg = i + 1 < zeros.size() ? zeros[i + 1] - zeros[i] : 1.0;
            int dir = detail::sign_change(s, c.location, lg, rg);
            c.type = dir < 0 ? CriticalType::maximum
                             : (dir > 0 ? CriticalType::minimum : CriticalType::inflection_degenerate);
        }
        out.push_back(c);
    }
    return out;
}

inline std::vector<CriticalPoint> critical_points(const EquilibriumProfile& f, const CriticalPointOptions& opt = {}) {
    return critical_points(f.slope(), opt);
}

/// sup over a symmetric sample grid of |f0(p) - f0(-p)| < tol.
inline bool is_reflection_symmetric(const EquilibriumProfile& f, double tol, int samples = 4001) {
    double L = std::max(std::abs(f.lo()), std::abs(f.hi()));
    for (int i = 0; i < samples; ++i) {
        double p = L * i / (samples - 1.0);
        if (std::abs(f.evaluate(p, 0) - f.evaluate(-p, 0)) >= tol) return false;
    }
    return true;
}

}  // namespace chh
