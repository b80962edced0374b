#pragma once

// Real-axis dielectric function of a homogeneous equilibrium,
//
//     eps_I(u) = -(pi/k^2) f0'(u),     eps_R(u) = 1 + H[eps_I](u),
//
// its Penrose contour, winding number, continuous-spectrum signature
// sigma(u) = sgn(u eps_I(u)) and critical states of one-parameter families.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "equilibria.hpp"
#include "errors.hpp"
#include "hilbert.hpp"

namespace chh {

struct PenroseOptions {
    HilbertOptions hilbert;
    CriticalPointOptions roots;
    double critical_tol = 1e-8;  // |eps(u_c)| below this: the contour touches the origin
    double arg_step = std::numbers::pi / 4;  // argument winding refines until every step is below this
    int max_refine_depth = 40;
};

inline RealFunction as_real_function(const SlopeFunction& s) {
    RealFunction r;
    r.f = s.d1;
    r.lo = s.lo;
    r.hi = s.hi;
    r.breakpoints = s.breakpoints;
    r.tail_left = s.tail_left;
    r.tail_right = s.tail_right;
    return r;
}

/// PV \int f0'(p)/(p-u) dp. eps_R = 1 - pv_slope/k^2.
inline double pv_slope(const SlopeFunction& s, double u, const HilbertOptions& opt = {}) {
    return pv_cauchy(as_real_function(s), u, opt);
}

inline double slope_at(const SlopeFunction& s, double u) { return (u < s.lo || u > s.hi) ? 0.0 : s.d1(u); }

inline double eps_I_at(const SlopeFunction& s, double k, double u) {
    return -std::numbers::pi / (k * k) * slope_at(s, u);
}

inline double eps_R_at(const SlopeFunction& s, double k, double u, const HilbertOptions& opt = {}) {
    return 1.0 - pv_slope(s, u, opt) / (k * k);
}

struct DielectricSamples {
    double k = 1.0;
    std::vector<double> u;
    std::vector<double> eps_I;
    std::vector<double> eps_R;
    SlopeFunction slope;

    std::vector<double> abs2() const {
        std::vector<double> a(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) a[i] = eps_R[i] * eps_R[i] + eps_I[i] * eps_I[i];
        return a;
    }
};

/// n points strictly inside the slope window.
inline std::vector<double> default_u_grid(const SlopeFunction& s, int n = 2001) {
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = s.lo + (s.hi - s.lo) * (i + 1.0) / (n + 1.0);
    return u;
}

inline DielectricSamples dielectric(const SlopeFunction& s, double k, std::span<const double> u,
                                    const PenroseOptions& opt = {}) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("wavenumber must be positive");
    DielectricSamples d;
    d.k = k;
    d.slope = s;
    d.u.assign(u.begin(), u.end());
    d.eps_I.resize(u.size());
    d.eps_R.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        d.eps_I[i] = eps_I_at(s, k, u[i]);
        d.eps_R[i] = eps_R_at(s, k, u[i], opt.hilbert);
    }
    return d;
}

inline DielectricSamples dielectric(const EquilibriumProfile& f, double k, std::span<const double> u,
                                    const PenroseOptions& opt = {}) {
    return dielectric(f.slope(), k, u, opt);
}

inline DielectricSamples dielectric(const EquilibriumProfile& f, double k, const PenroseOptions& opt = {}) {
    auto s = f.slope();
    auto u = default_u_grid(s);
    return dielectric(s, k, u, opt);
}

// ---------------------------------------------------------------------------
// Winding number

enum class CrossingKind { transverse_up, transverse_down, tangency };

inline const char* to_string(CrossingKind k) {
    switch (k) {
        case CrossingKind::transverse_up: return "transverse_up";
        case CrossingKind::transverse_down: return "transverse_down";
        case CrossingKind::tangency: return "tangency";
    }
    return "?";
}

struct CrossingEvent {
    double u_c = 0.0;
    CrossingKind kind = CrossingKind::tangency;
    double eps_R_at = 0.0;  // k^2 eps_R when evaluated in the k -> 0 limit
    int contributes = 0;
    int direction = 0;   // +1: f0' goes - to +, -1: + to -, 0: touching zero
    double pv = 0.0;     // PV \int f0'/(p-u_c); eps_R(u_c) = 1 - pv/k^2
    double second_derivative = 0.0;
};

struct WindingReport {
    int winding = 0;
    std::vector<CrossingEvent> crossings;
    bool stable = true;
    bool critical = false;  // contour touches the origin; winding is not an integer invariant
    std::optional<int> argument_winding;  // independent total-argument count, when computed
    bool argument_tail_ambiguous = false;  // contour ends off the positive real axis
};

/// Ray-rule winding: zeros u_c of eps_I with eps_R(u_c) < 0, +1 where f0'
/// goes from - to + (the contour crosses the negative real axis downward,
/// counterclockwise), -1 for the opposite direction, 0 for tangencies.
/// k2 = k^2 may be 0, meaning the k -> 0+ limit where sgn eps_R = -sgn PV.
inline WindingReport ray_winding(const SlopeFunction& s, double k2, std::vector<double> grid,
                                 const PenroseOptions& opt = {}) {
    WindingReport r;
    auto zeros = slope_zeros_on_grid(s, std::move(grid), opt.roots);
    for (std::size_t i = 0; i < zeros.size(); ++i) {
        double z = zeros[i];
        double lg = i > 0 ? z - zeros[i - 1] : 1.0;
        double rg = i + 1 < zeros.size() ? zeros[i + 1] - z : 1.0;
        CrossingEvent c;
        c.u_c = z;
        c.second_derivative = s.d2 ? s.d2(z) : std::nan("");
        int dir = detail::sign_change(s, z, lg, rg);
        c.kind = dir > 0 ? CrossingKind::transverse_up
                         : (dir < 0 ? CrossingKind::transverse_down : CrossingKind::tangency);
        double pv = pv_slope(s, z, opt.hilbert);
        c.direction = dir;
        c.pv = pv;
        c.eps_R_at = k2 > 0.0 ? 1.0 - pv / k2 : -pv;
        double closeness = k2 > 0.0 ? std::abs(c.eps_R_at) : std::abs(pv) / std::max(1.0, std::abs(pv));
        if (closeness < opt.critical_tol) r.critical = true;
        if (c.eps_R_at < 0.0) c.contributes = dir;
        r.winding += c.contributes;
        r.crossings.push_back(c);
    }
    r.stable = !r.critical && r.winding == 0;
    return r;
}

/// Ray-rule winding at wavenumber k on a uniform scan of the slope window.
inline WindingReport ray_winding_at(const SlopeFunction& s, double k, const PenroseOptions& opt = {}) {
    std::vector<double> grid;
    const int n = std::max(opt.roots.samples, 16);
    for (int i = 0; i < n; ++i) grid.push_back(s.lo + (s.hi - s.lo) * i / (n - 1.0));
    return ray_winding(s, k * k, std::move(grid), opt);
}

struct ArgumentWinding {
    int winding = 0;
    double total_argument = 0.0;
    bool tail_ambiguous = false;
    std::vector<double> u;  // refined sample points
    std::vector<std::complex<double>> eps;
};

/// Total change of arg eps along the sampled contour, refined wherever a step
/// turns by more than opt.arg_step, closed through the far field eps -> 1.
inline ArgumentWinding argument_winding(const DielectricSamples& d, const PenroseOptions& opt = {}) {
    ArgumentWinding a;
    auto eval = [&](double u) { return std::complex<double>(eps_R_at(d.slope, d.k, u, opt.hilbert), eps_I_at(d.slope, d.k, u)); };
    auto wrap = [](double x) {
        while (x > std::numbers::pi) x -= 2 * std::numbers::pi;
        while (x <= -std::numbers::pi) x += 2 * std::numbers::pi;
        return x;
    };
    if (d.u.empty()) return a;
    std::function<void(double, std::complex<double>, double, std::complex<double>, int)> seg;
    seg = [&](double u0, std::complex<double> e0, double u1, std::complex<double> e1, int depth) {
        double step = wrap(std::arg(e1) - std::arg(e0));
        if (std::abs(step) <= opt.arg_step || depth >= opt.max_refine_depth || u1 - u0 < 1e-13 * std::max(1.0, std::abs(u0))) {
            if (std::abs(step) > std::numbers::pi * 0.9) throw CriticalityError("contour passes through the origin");
            a.total_argument += step;
            a.u.push_back(u1);
            a.eps.push_back(e1);
            return;
        }
        double um = 0.5 * (u0 + u1);
        auto em = eval(um);
        if (std::abs(em) < opt.critical_tol) throw CriticalityError("contour passes through the origin");
        seg(u0, e0, um, em, depth + 1);
        seg(um, em, u1, e1, depth + 1);
    };
    std::complex<double> e0(d.eps_R[0], d.eps_I[0]);
    a.u.push_back(d.u[0]);
    a.eps.push_back(e0);
    for (std::size_t i = 0; i + 1 < d.u.size(); ++i) {
        std::complex<double> e1(d.eps_R[i + 1], d.eps_I[i + 1]);
        if (std::abs(e1) < opt.critical_tol) throw CriticalityError("contour passes through the origin");
        seg(d.u[i], {d.eps_R[i], d.eps_I[i]}, d.u[i + 1], e1, 0);
    }
    const auto first = a.eps.front(), last = a.eps.back();
    a.tail_ambiguous = first.real() <= 0.0 || last.real() <= 0.0;
    // close: last -> far field (1) -> first, through the right half plane
    a.total_argument += wrap(std::arg(std::complex<double>(1.0, 0.0)) - std::arg(last));
    a.total_argument += wrap(std::arg(first) - 0.0);
    a.winding = static_cast<int>(std::lround(a.total_argument / (2 * std::numbers::pi)));
    return a;
}

/// Ray-rule winding on the samples' grid, cross-checked by the total argument.
inline WindingReport winding_number(const DielectricSamples& d, const PenroseOptions& opt = {}) {
    auto r = ray_winding(d.slope, d.k * d.k, d.u, opt);
    if (!r.critical) {
        try {
            auto a = argument_winding(d, opt);
            r.argument_winding = a.winding;
            r.argument_tail_ambiguous = a.tail_ambiguous;
        } catch (const CriticalityError&) {
            r.critical = true;
            r.stable = false;
        }
    }
    return r;
}

inline WindingReport winding_number(const EquilibriumProfile& f, double k, const PenroseOptions& opt = {}) {
    return winding_number(dielectric(f, k, opt), opt);
}

/// Integer winding or CriticalityError.
inline int require_winding(const WindingReport& r) {
    if (r.critical) throw CriticalityError("Penrose contour touches the origin; winding number is ill-defined");
    return r.winding;
}

// ---------------------------------------------------------------------------
// Signature of the continuous spectrum

struct SignatureInterval {
    double u_lo = 0.0;
    double u_hi = 0.0;
    int sigma = 0;
};

struct SignatureProfile {
    std::vector<SignatureInterval> intervals;  // in the frame u' = u - frame_shift
    std::vector<double> neutral;               // zeros of u' eps_I, same frame
    double frame_shift = 0.0;
    int changes() const { return intervals.empty() ? 0 : static_cast<int>(intervals.size()) - 1; }
};

/// sigma(u) = sgn(u eps_I) is frame dependent; it is evaluated in a frame
/// where f0'(0) = 0. If the input frame is not one, it is moved to the
/// critical point nearest 0 and the shift is recorded.
inline SignatureProfile signature_profile(const DielectricSamples& d, const PenroseOptions& opt = {}) {
    SignatureProfile sp;
    const auto& s = d.slope;
    auto zeros = slope_zeros_on_grid(s, d.u, opt.roots);
    double scale = 0.0;
    for (double v : d.eps_I) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return sp;
    bool zero_ok = 0.0 > s.lo && 0.0 < s.hi &&
                   std::abs(eps_I_at(s, d.k, 0.0)) <= 1e-10 * scale;
    if (!zero_ok && !zeros.empty()) {
        double best = zeros.front();
        for (double z : zeros)
            if (std::abs(z) < std::abs(best)) best = z;
        sp.frame_shift = best;
    }
    const double c = sp.frame_shift;
    std::vector<double> cuts{s.lo};
    for (double z : zeros) cuts.push_back(z);
    if (c > s.lo && c < s.hi) cuts.push_back(c);
    cuts.push_back(s.hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               cuts.end());
    for (std::size_t i = 1; i + 1 < cuts.size(); ++i) sp.neutral.push_back(cuts[i] - c);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double m = 0.5 * (cuts[i] + cuts[i + 1]);
        double v = (m - c) * eps_I_at(s, d.k, m);
        int sigma = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (sigma == 0) continue;
        if (!sp.intervals.empty() && sp.intervals.back().sigma == sigma) {
            sp.intervals.back().u_hi = cuts[i + 1] - c;
        } else {
            sp.intervals.push_back({cuts[i] - c, cuts[i + 1] - c, sigma});
        }
    }
    return sp;
}

// ---------------------------------------------------------------------------
// Critical states of one-parameter families

struct ProfileFamily {
    std::string parameter;
    double eta_lo = 0.0;
    double eta_hi = 1.0;
    std::function<EquilibriumProfile(double)> make;
};

enum class CriticalKind { k_nonzero_inflection, k_zero_valley };

inline const char* to_string(CriticalKind k) {
    return k == CriticalKind::k_nonzero_inflection ? "k_nonzero_inflection" : "k_zero_valley";
}

struct CriticalState {
    CriticalKind kind = CriticalKind::k_zero_valley;
    double eta = 0.0;
    double u_c = 0.0;
    double k_c = 0.0;
    int embedded_mode_signature = 0;
    double deps_R_du = 0.0;  // at (u_c, k_c); k^2 eps_R when k_c = 0
    double second_derivative = 0.0;
};

struct CriticalSearchOptions {
    PenroseOptions penrose;
    double eta_tol = 1e-10;
    double snap = 1e-8;  // |u_c| below this is reported as 0
    int max_iter = 200;
};

/// d/du of k^2 eps_R(u) = k^2 - PV(u), Richardson-extrapolated central differences.
inline double deps_R_du_scaled(const SlopeFunction& s, double u, const HilbertOptions& opt = {}) {
    auto f = [&](double x) { return -pv_slope(s, x, opt); };
    double h = 1e-3 * std::max(1.0, std::abs(u));
    auto D = [&](double hh) { return (f(u + hh) - f(u - hh)) / (2 * hh); };
    double d1 = D(h), d2 = D(h / 2), d3 = D(h / 4);
    double r1 = (4 * d2 - d1) / 3, r2 = (4 * d3 - d2) / 3;
    return (16 * r2 - r1) / 15;
}

namespace detail {

/// Ray-rule winding as a function of k^2 from the k-independent crossing data.
inline int winding_for_k2(const std::vector<CrossingEvent>& cs, double k2) {
    int w = 0;
    for (const auto& c : cs)
        if (c.pv > k2) w += c.direction;
    return w;
}

/// True if some k in [k_lo, k_hi] gives a nonzero winding. The winding is
/// constant between consecutive crossing values pv, so finitely many probes
/// decide it.
inline bool unstable_in_band(const std::vector<CrossingEvent>& cs, double k2_lo, double k2_hi) {
    std::vector<double> cuts{k2_lo, k2_hi};
    for (const auto& c : cs)
        if (c.pv > k2_lo && c.pv < k2_hi) cuts.push_back(c.pv);
    std::sort(cuts.begin(), cuts.end());
    if (winding_for_k2(cs, k2_lo) != 0 || winding_for_k2(cs, k2_hi) != 0) return true;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (winding_for_k2(cs, 0.5 * (cuts[i] + cuts[i + 1])) != 0) return true;
    return false;
}

}  // namespace detail

/// Bisects the family parameter between an end that is stable for every k in
/// [k_lo, k_hi] and an end unstable for some k in it, then classifies the
/// state where the Penrose contour reaches the origin. k_lo = 0 includes the
/// k -> 0+ limit; k_lo = k_hi fixes the wavenumber.
inline CriticalState find_critical_state(const ProfileFamily& fam, double k_lo, double k_hi,
                                         const CriticalSearchOptions& opt = {}) {
    if (!fam.make) throw ConfigError("family has no constructor");
    if (!(k_lo >= 0.0) || !(k_hi >= k_lo)) throw DomainError("wavenumber range must satisfy 0 <= k_lo <= k_hi");
    const double k2_lo = k_lo * k_lo, k2_hi = k_hi * k_hi;
    struct Probe {
        WindingReport r;
        SlopeFunction s;
        bool unstable;
    };
    auto probe = [&](double eta) {
        auto s = fam.make(eta).slope();
        std::vector<double> grid;
        const int n = std::max(opt.penrose.roots.samples, 16);
        for (int i = 0; i < n; ++i) grid.push_back(s.lo + (s.hi - s.lo) * i / (n - 1.0));
        auto r = ray_winding(s, k2_hi, std::move(grid), opt.penrose);
        bool u = detail::unstable_in_band(r.crossings, k2_lo, k2_hi);
        return Probe{std::move(r), std::move(s), u};
    };
    double a = fam.eta_lo, b = fam.eta_hi;
    Probe pa = probe(a), pb = probe(b);
    if (pa.unstable == pb.unstable)
        throw NotFound("no stability change between " + fam.parameter + "=" + std::to_string(a) + " and " +
                       std::to_string(b));
    const bool a_stable = !pa.unstable;
    for (int it = 0; it < opt.max_iter && std::abs(b - a) > opt.eta_tol; ++it) {
        double m = 0.5 * (a + b);
        Probe pm = probe(m);
        if (pm.unstable == pa.unstable) {
            a = m;
            pa = std::move(pm);
        } else {
            b = m;
            pb = std::move(pm);
        }
    }
    CriticalState st;
    st.eta = 0.5 * (a + b);
    const Probe& un = a_stable ? pb : pa;
    const Probe& stb = a_stable ? pa : pb;
    const auto& cs = un.r.crossings;
    if (cs.empty()) throw NotFound("no crossing found at the critical parameter");
    // the crossing whose eps_R reaches zero: pv closest to the band
    auto band_distance = [&](double pv) {
        if (pv < k2_lo) return k2_lo - pv;
        if (pv > k2_hi) return pv - k2_hi;
        return 0.0;
    };
    double uc = 0.0, pv_c = 0.0;
    if (cs.size() != stb.r.crossings.size()) {
        // a zero pair of f0' is born at the transition: inflection-point mode
        st.kind = CriticalKind::k_nonzero_inflection;
        std::size_t best = 0;
        double gap = INFINITY;
        for (std::size_t i = 0; i + 1 < cs.size(); ++i)
            if (cs[i + 1].u_c - cs[i].u_c < gap) {
                gap = cs[i + 1].u_c - cs[i].u_c;
                best = i;
            }
        uc = 0.5 * (cs[best].u_c + cs[best + 1].u_c);
        pv_c = pv_slope(un.s, uc, opt.penrose.hilbert);
    } else {
        st.kind = CriticalKind::k_zero_valley;
        const CrossingEvent* best = nullptr;
        for (const auto& c : cs)
            if (c.direction != 0 && (!best || band_distance(c.pv) < band_distance(best->pv))) best = &c;
        if (!best) best = &cs.front();
        uc = best->u_c;
        pv_c = best->pv;
    }
    st.k_c = std::sqrt(std::clamp(pv_c, k2_lo, k2_hi));
    if (std::abs(uc) < opt.snap) uc = 0.0;
    st.u_c = uc;
    st.second_derivative = un.s.d2 ? un.s.d2(uc) : std::nan("");
    double dscaled = deps_R_du_scaled(un.s, uc, opt.penrose.hilbert);
    st.deps_R_du = st.k_c > 0 ? dscaled / (st.k_c * st.k_c) : dscaled;
    double v = uc * st.deps_R_du;
    st.embedded_mode_signature = (uc == 0.0 || v == 0.0) ? 0 : (v > 0 ? 1 : -1);
    return st;
}

inline CriticalState find_critical_state(const ProfileFamily& fam, double k, const CriticalSearchOptions& opt = {}) {
    return find_critical_state(fam, k, k, opt);
}

}  // namespace chh
