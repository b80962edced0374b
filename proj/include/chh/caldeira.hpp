#pragma once

// A single oscillator of frequency Omega and energy sign s coupled to a
// continuum of positive-energy bath oscillators (q(x), p(x)), x > 0:
//
//     H = s (Omega/2)(Q^2 + P^2) + (1/2) \int x (q^2 + p^2) dx + Q \int f q dx.
//
// Normal modes e^{-i omega t} satisfy D(omega) = 0 with
//
//     D = omega^2 - Omega^2 - s Omega \int_0^inf x f^2 / (omega^2 - x^2) dx
//       = omega^2 - Omega^2 - s (Omega/2) \int_R F(x) / (omega - x) dx,
//
// F(x) = sgn(x) f(|x|)^2. The Nyquist function D / (omega^2 + Omega^2) tends
// to 1 at infinity and has one pole, at i Omega, above the real axis.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dispersion.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "hilbert.hpp"
#include "quadrature.hpp"

namespace chh {

struct BathModel {
    double omega = 1.0;       // Omega > 0
    int oscillator_sign = -1;  // -1: negative-energy oscillator
    std::function<double(double)> coupling2;  // f(x)^2 for x >= 0
    double x_max = 0.0;       // coupling window (0, x_max]
    std::vector<double> breakpoints;
    bool uncoupled = false;
    std::string source;       // expression text or "table"

    /// f_-^2: the antisymmetric extension on the real line.
    double antisymmetric(double x) const {
        if (uncoupled || x == 0.0) return 0.0;
        const double a = std::abs(x);
        if (a > x_max) return 0.0;
        return x > 0 ? coupling2(a) : -coupling2(a);
    }

    double coupling_at(double x) const { return (uncoupled || x < 0 || x > x_max) ? 0.0 : coupling2(x); }

    void validate() const {
        if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("oscillator frequency must be positive");
        if (oscillator_sign != 1 && oscillator_sign != -1) throw ConfigError("oscillator sign must be +1 or -1");
        if (uncoupled) return;
        if (!coupling2) throw ConfigError("coupling function missing");
        if (!(x_max > 0.0)) throw ConfigError("coupling window must be positive");
        for (int i = 0; i <= 2000; ++i) {
            double x = x_max * i / 2000.0;
            double v = coupling2(x);
            if (!std::isfinite(v)) throw ConfigError("coupling f(x)^2 is not finite at x = " + std::to_string(x));
            if (v < -1e-14) throw ConfigError("coupling f(x)^2 must be non-negative; negative at x = " + std::to_string(x));
        }
    }

    BathModel with_sign(int s) const {
        BathModel m = *this;
        m.oscillator_sign = s;
        return m;
    }

    /// Same model with f^2 multiplied by a >= 0.
    BathModel scaled(double a) const {
        if (!(a >= 0.0)) throw ConfigError("coupling scale must be non-negative");
        BathModel m = *this;
        if (a == 0.0) {
            m.uncoupled = true;
            return m;
        }
        auto c = coupling2;
        m.coupling2 = [c, a](double x) { return a * c(x); };
        return m;
    }

    static BathModel make_uncoupled(double omega, int sign) {
        BathModel m;
        m.omega = omega;
        m.oscillator_sign = sign;
        m.uncoupled = true;
        m.source = "0";
        m.validate();
        return m;
    }

    /// Closed-form f^2. Without an explicit window the coupling is scanned
    /// until the remaining mass of f^2 is below 1e-12.
    static BathModel closed_form(double omega, int sign, std::function<double(double)> f2,
                                 std::optional<double> x_max = std::nullopt) {
        BathModel m;
        m.omega = omega;
        m.oscillator_sign = sign;
        m.coupling2 = std::move(f2);
        bool zero = true;  // f^2 == 0 on a scan is the uncoupled limit, with its lifted contour
        for (int i = 0; i <= 4000 && zero; ++i) zero = m.coupling2(0.01 * i) == 0.0;
        if (zero) return make_uncoupled(omega, sign);
        m.x_max = x_max ? *x_max : support_window(m.coupling2);
        m.source = "closed form";
        m.validate();
        return m;
    }

    static BathModel expression(double omega, int sign, const std::string& text,
                                std::optional<double> x_max = std::nullopt) {
        auto e = std::make_shared<Expression>(Expression::parse(text));
        auto m = closed_form(omega, sign, [e](double x) { return (*e)(x); }, x_max);
        m.source = text;
        return m;
    }

    /// Sampled f^2 on x >= 0, shape-preserving cubic between nodes.
    static BathModel tabulated(double omega, int sign, std::vector<double> x, std::vector<double> f2) {
        if (x.size() < 4 || x.size() != f2.size()) throw ConfigError("coupling table needs at least four (x, f^2) rows");
        if (x.front() < 0.0) throw ConfigError("coupling table must start at x >= 0");
        for (std::size_t i = 0; i + 1 < x.size(); ++i)
            if (!(x[i + 1] > x[i])) throw ConfigError("coupling table grid must be strictly increasing");
        for (double v : f2)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("coupling table values must be finite and non-negative");
        const double lo = x.front(), hi = x.back();
        BathModel m;
        // nodes are kinks of the interpolant's second derivative: panel edges for quadrature
        m.breakpoints.assign(x.begin() + (lo > 0.0 ? 0 : 1), x.end() - 1);
        using P = boost::math::interpolators::pchip<std::vector<double>>;
        auto ip = std::make_shared<P>(std::move(x), std::move(f2));
        m.omega = omega;
        m.oscillator_sign = sign;
        m.coupling2 = [ip, lo, hi](double t) { return (t < lo || t > hi) ? 0.0 : std::max(0.0, (*ip)(t)); };
        m.x_max = hi;
        m.source = "table";
        m.validate();
        return m;
    }

    static double support_window(const std::function<double(double)>& f2) {
        const double step = 0.01, end = 400.0;
        const int n = static_cast<int>(end / step);
        std::vector<double> tail(n + 1, 0.0);
        std::vector<double> v(n + 1);
        for (int i = 0; i <= n; ++i) v[i] = f2(i * step);
        for (int i = n - 1; i >= 0; --i) tail[i] = tail[i + 1] + 0.5 * step * (std::abs(v[i]) + std::abs(v[i + 1]));
        if (std::abs(v[n]) > 1e-12 || tail[n - n / 10] > 1e-12) throw ConfigError("coupling f(x)^2 does not decay on x < 400");
        int i = n;
        while (i > 0 && tail[i - 1] < 1e-12) --i;
        return std::max(1.0, i * step);
    }
};

struct CaldeiraOptions {
    HilbertOptions hilbert = HilbertOptions::with_tol(1e-11);
    DispersionOptions dispersion;
};

/// Nyquist function on the real axis, the limit from above.
inline cplx cl_epsilon_real(const BathModel& m, double w, const CaldeiraOptions& opt = {}) {
    if (!std::isfinite(w)) throw DomainError("frequency must be finite");
    const double W2 = m.omega * m.omega, den = w * w + W2;
    const double base = (w * w - W2) / den;
    if (m.uncoupled) return base;
    RealFunction F{[&m](double x) { return m.antisymmetric(x); }, -m.x_max, m.x_max, {0.0}};
    for (double b : m.breakpoints) {
        F.breakpoints.push_back(b);
        F.breakpoints.push_back(-b);
    }
    const double hf = hilbert_at(F, w, opt.hilbert);
    const double s = m.oscillator_sign;
    return base + s * m.omega * (std::numbers::pi / 2) * cplx(hf, m.antisymmetric(w)) / den;
}

namespace detail {

inline SlopeFunction cl_antisymmetric_slope(const BathModel& m) {
    SlopeFunction s;
    s.d1 = [m](double x) { return m.antisymmetric(x); };
    s.lo = -m.x_max;
    s.hi = m.x_max;
    s.breakpoints = {0.0};
    for (double b : m.breakpoints) {
        s.breakpoints.push_back(b);
        s.breakpoints.push_back(-b);
    }
    std::sort(s.breakpoints.begin(), s.breakpoints.end());
    return s;
}

}  // namespace detail

/// D(omega) through the Cauchy integral of F; Im(omega) > 0.
inline cplx cl_dispersion(const BathModel& m, cplx w, const CaldeiraOptions& opt = {}) {
    if (!(w.imag() > 0.0)) throw DomainError("cl_dispersion requires Im(omega) > 0");
    const cplx base = w * w - m.omega * m.omega;
    if (m.uncoupled) return base;
    // epsilon_complex with k = 1 is 1 + \int F/(omega - x) dx
    cplx cauchy = epsilon_complex(detail::cl_antisymmetric_slope(m), 1.0, w, opt.dispersion) - 1.0;
    return base - m.oscillator_sign * m.omega * 0.5 * cauchy;
}

/// D(omega) from the half-line integral \int_0^inf x f^2/(omega^2 - x^2) dx
/// directly, without the partial-fraction rewriting.
inline cplx cl_dispersion_direct(const BathModel& m, cplx w, const CaldeiraOptions& opt = {}) {
    if (!(w.imag() > 0.0)) throw DomainError("cl_dispersion_direct requires Im(omega) > 0");
    const cplx base = w * w - m.omega * m.omega;
    if (m.uncoupled) return base;
    const cplx w2 = w * w;
    auto g = [&](double x) { return x * m.coupling2(x) / (w2 - x * x); };
    QuadOptions q;
    q.abs_tol = opt.dispersion.eps_tol;
    q.rel_tol = 0.0;
    q.max_intervals = opt.dispersion.max_intervals;
    std::vector<double> pts{0.0, m.x_max};
    for (double b : m.breakpoints) pts.push_back(b);
    const double wr = std::abs(w.real());
    if (wr > 0.0 && wr < m.x_max) {
        pts.push_back(wr);
        ::chh::detail::geometric_points(pts, 0.0, m.x_max, wr, std::max(w.imag(), 1e-14));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return base - m.oscillator_sign * m.omega * integrate(g, std::span<const double>(pts), q).value;
}

/// D / (omega^2 + Omega^2) off the axis; tends to cl_epsilon_real as Im -> 0+.
inline cplx cl_epsilon_complex(const BathModel& m, cplx w, const CaldeiraOptions& opt = {}) {
    return cl_dispersion(m, w, opt) / (w * w + m.omega * m.omega);
}

// ---------------------------------------------------------------------------
// Nyquist contour

struct NyquistOptions {
    int samples = 2001;
    std::optional<double> half_width;  // default max(4 x_max, 10 Omega)
    double lift = 0.0;                  // contour Im(omega) = lift
    double uncoupled_lift = 1e-3;       // used when f = 0 puts the zeros on the axis
    double arg_step = std::numbers::pi / 8;
    int max_depth = 30;
    double origin_tol = 1e-10;
    CaldeiraOptions caldeira;
};

struct NyquistReport {
    std::vector<double> omega;  // real parts along the contour
    std::vector<cplx> eps;
    double lift = 0.0;
    int winding = 0;
    int poles = 1;
    int zeros_upper = 0;
    double min_abs = 0.0;
};

/// Argument winding of the image of the real line (traversed left to right,
/// closed through eps -> 1 at infinity), and zeros = winding + poles.
inline NyquistReport cl_nyquist(const BathModel& m, const NyquistOptions& opt = {}) {
    m.validate();
    NyquistReport r;
    r.lift = opt.lift;
    if (m.uncoupled && r.lift == 0.0) r.lift = opt.uncoupled_lift * m.omega;
    if (!(r.lift >= 0.0)) throw ConfigError("contour lift must be non-negative");
    const double W = opt.half_width.value_or(std::max(4.0 * m.x_max, 10.0 * m.omega));
    auto eval = [&](double x) -> cplx {
        cplx e = r.lift > 0.0 ? cl_epsilon_complex(m, cplx(x, r.lift), opt.caldeira) : cl_epsilon_real(m, x, opt.caldeira);
        if (std::abs(e) < opt.origin_tol)
            throw CriticalityError("Nyquist contour passes through the origin near omega = " + std::to_string(x));
        return e;
    };
    std::vector<double> xs(opt.samples);
    for (int i = 0; i < opt.samples; ++i) xs[i] = -W + 2.0 * W * i / (opt.samples - 1.0);
    for (double b : {m.omega, -m.omega})
        if (b > -W && b < W) xs.push_back(b);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    double total = 0.0;
    std::function<void(double, cplx, double, cplx, int)> seg = [&](double a, cplx ea, double b, cplx eb, int depth) {
        double d = std::arg(eb / ea);
        if (std::abs(d) > opt.arg_step) {
            if (depth >= opt.max_depth)
                throw CriticalityError("Nyquist contour not resolved near omega = " + std::to_string(a) +
                                       "; it passes too close to the origin");
            double c = 0.5 * (a + b);
            cplx ec = eval(c);
            seg(a, ea, c, ec, depth + 1);
            seg(c, ec, b, eb, depth + 1);
            return;
        }
        total += d;
        r.omega.push_back(b);
        r.eps.push_back(eb);
    };
    cplx prev = eval(xs[0]);
    r.omega.push_back(xs[0]);
    r.eps.push_back(prev);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        cplx cur = eval(xs[i]);
        seg(xs[i - 1], prev, xs[i], cur, 0);
        prev = cur;
    }
    // close through the arc at infinity, where eps stays near 1
    total += std::arg(r.eps.front() / r.eps.back());
    const double wr = total / (2 * std::numbers::pi);
    r.winding = static_cast<int>(std::lround(wr));
    if (std::abs(wr - r.winding) > 1e-6) throw AccuracyFailure("Nyquist argument change is not an integer", std::abs(wr - r.winding));
    r.poles = r.lift < m.omega ? 1 : 0;
    r.zeros_upper = r.winding + r.poles;
    r.min_abs = std::abs(r.eps.front());
    for (auto e : r.eps) r.min_abs = std::min(r.min_abs, std::abs(e));
    return r;
}

// ---------------------------------------------------------------------------
// Roots of D in the upper half plane

/// Every zero of D with Im(omega) >= bottom lies in the returned rectangle:
/// |I| <= M / (2 dist), M = \int |F|, rules out |omega| beyond it.
inline Rect cl_search_rectangle(const BathModel& m, double bottom = 1e-4) {
    double M = 0.0;
    if (!m.uncoupled) {
        auto mass = integrate([&](double x) { return m.coupling2(x); }, 0.0, m.x_max, QuadOptions{1e-12, 1e-10, 4000, false});
        M = 2.0 * mass.value;
    }
    const double R = m.x_max + std::sqrt(m.omega * m.omega + 0.5 * m.omega * M) + 1.0;
    return {-R, R, bottom, R};
}

inline std::vector<DispersionRoot> cl_roots(const BathModel& m, const CaldeiraOptions& opt = {}) {
    m.validate();
    auto fn = [&m, opt](cplx w) { return cl_dispersion(m, w, opt); };
    auto r = find_zeros(fn, cl_search_rectangle(m, opt.dispersion.bottom_margin), opt.dispersion);
    return r;
}

inline int cl_count_upper(const BathModel& m, const CaldeiraOptions& opt = {}) {
    auto fn = [&m, opt](cplx w) { return cl_dispersion(m, w, opt); };
    const auto& d = opt.dispersion;
    return count_zeros_jittered(fn, cl_search_rectangle(m, d.bottom_margin), d.count, d.jitter, d.jitter_attempts,
                                0.5 * d.bottom_margin)
        .count;
}

// ---------------------------------------------------------------------------
// Discretized bath

struct DiscreteBath {
    std::vector<double> x;       // Gauss-Legendre nodes on (0, x_max)
    std::vector<double> weight;
    std::vector<double> f;       // sqrt of f^2 at the nodes
};

inline DiscreteBath discretize_bath(const BathModel& m, int n) {
    if (n < 1) throw ConfigError("bath needs at least one node");
    DiscreteBath b;
    auto gl = gauss_legendre(n, 0.0, m.uncoupled ? 1.0 : m.x_max);
    b.x = gl.nodes;
    b.weight = gl.weights;
    b.f.resize(n);
    for (int j = 0; j < n; ++j) b.f[j] = std::sqrt(std::max(0.0, m.coupling_at(b.x[j])));
    return b;
}

/// d/dt (Q, P, q_1..q_N, p_1..p_N) = A (...) for the bath integral replaced
/// by the quadrature sum.
inline Eigen::MatrixXd cl_system_matrix(const BathModel& m, const DiscreteBath& b) {
    const int n = static_cast<int>(b.x.size());
    const int dim = 2 * n + 2;
    const double s = m.oscillator_sign;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    A(0, 1) = s * m.omega;   // dQ/dt = s Omega P
    A(1, 0) = -s * m.omega;  // dP/dt = -s Omega Q - sum w f q
    for (int j = 0; j < n; ++j) {
        const int qj = 2 + j, pj = 2 + n + j;
        A(1, qj) = -b.weight[j] * b.f[j];
        A(qj, pj) = b.x[j];   // dq/dt = x p
        A(pj, qj) = -b.x[j];  // dp/dt = -x q - Q f
        A(pj, 0) = -b.f[j];
    }
    return A;
}

struct MatrixOracle {
    int n = 0;
    std::vector<cplx> eigenvalues;  // as frequencies omega = i lambda
    std::vector<cplx> unstable;     // Im(omega) > threshold, sorted by Re
    double threshold = 0.0;
};

inline MatrixOracle cl_matrix_oracle(const BathModel& m, int n, double threshold = 1e-6) {
    m.validate();
    if (n < 1) throw ConfigError("bath needs at least one node");
    auto b = discretize_bath(m, n);
    Eigen::EigenSolver<Eigen::MatrixXd> es(cl_system_matrix(m, b), false);
    if (es.info() != Eigen::Success) throw NoConvergence("dense eigensolver failed");
    MatrixOracle o;
    o.n = n;
    o.threshold = threshold;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        cplx w = cplx(0.0, 1.0) * es.eigenvalues()[i];
        o.eigenvalues.push_back(w);
        if (w.imag() > threshold) o.unstable.push_back(w);
    }
    std::sort(o.unstable.begin(), o.unstable.end(), [](cplx a, cplx c) { return a.real() < c.real(); });
    return o;
}

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> norm;  // Euclidean norm of the state
};

/// RK4 integration of the discretized equations of motion from Q = 1.
inline TimeSeries cl_integrate(const BathModel& m, int n, double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end > 0.0)) throw ConfigError("time step and horizon must be positive");
    auto b = discretize_bath(m, n);
    const double s = m.oscillator_sign;
    using V = Eigen::VectorXd;
    Eigen::Map<const V> x(b.x.data(), n), f(b.f.data(), n), w(b.weight.data(), n);
    V wf = w.cwiseProduct(f);
    auto rhs = [&](const V& y) {
        V d(y.size());
        auto q = y.segment(2, n);
        auto p = y.segment(2 + n, n);
        d[0] = s * m.omega * y[1];
        d[1] = -s * m.omega * y[0] - wf.dot(q);
        d.segment(2, n) = x.cwiseProduct(p);
        d.segment(2 + n, n) = -x.cwiseProduct(q) - y[0] * f;
        return d;
    };
    V y = V::Zero(2 * n + 2);
    y[0] = 1.0;
    TimeSeries ts;
    const long steps = std::lround(t_end / dt);
    ts.t.push_back(0.0);
    ts.norm.push_back(y.norm());
    for (long i = 1; i <= steps; ++i) {
        V k1 = rhs(y), k2 = rhs(y + 0.5 * dt * k1), k3 = rhs(y + 0.5 * dt * k2), k4 = rhs(y + dt * k3);
        y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        ts.t.push_back(i * dt);
        ts.norm.push_back(y.norm());
    }
    return ts;
}

/// Growth rate of the state norm through its local maxima in [t_lo, t_hi]
/// (the unstable pair beats at twice its real frequency).
inline double cl_growth_rate(const TimeSeries& ts, double t_lo, double t_hi) {
    std::vector<double> pt, pl;
    for (std::size_t i = 1; i + 1 < ts.t.size(); ++i) {
        if (ts.t[i] < t_lo || ts.t[i] > t_hi) continue;
        if (ts.norm[i] > ts.norm[i - 1] && ts.norm[i] >= ts.norm[i + 1]) {
            pt.push_back(ts.t[i]);
            pl.push_back(std::log(ts.norm[i]));
        }
    }
    if (pt.size() < 2) {
        // monotone growth: endpoint slope
        std::size_t a = 0, c = 0;
        for (std::size_t i = 0; i < ts.t.size(); ++i) {
            if (ts.t[i] <= t_lo) a = i;
            if (ts.t[i] <= t_hi) c = i;
        }
        if (c <= a) throw NotFound("growth-rate window holds no samples");
        return (std::log(ts.norm[c]) - std::log(ts.norm[a])) / (ts.t[c] - ts.t[a]);
    }
    double n = static_cast<double>(pt.size()), st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < pt.size(); ++i) {
        st += pt[i];
        sl += pl[i];
        stt += pt[i] * pt[i];
        stl += pt[i] * pl[i];
    }
    return (n * stl - st * sl) / (n * stt - st * st);
}

}  // namespace chh
