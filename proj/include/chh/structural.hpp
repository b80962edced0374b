#pragma once

// The localized perturbation chi of f0' with small W^{1,1} norm and an O(1)
// principal value at its center, the destabilization test built on it and the
// critical-point gate standing in for dynamical accessibility.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "equilibria.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "penrose.hpp"
#include "quadrature.hpp"

namespace chh {

/// chi(p - center) scaled by amplitude. Odd about the center: a steep ramp
/// of slope h/eps on |q| < eps, plateau +-h up to d + eps, then ramps of
/// slope -1/2 down to zero at 2h + d + eps.
struct ChiPerturbation {
    double h = 0.1;
    double d = 0.1;
    double eps = std::exp(-10.0);
    double center = 0.0;
    double amplitude = 1.0;

    /// h = d, eps = exp(-1/h).
    static ChiPerturbation scaled(double h, double center = 0.0, double amplitude = 1.0) {
        return {h, h, std::exp(-1.0 / h), center, amplitude};
    }

    double support() const { return 2 * h + d + eps; }

    void validate() const {
        if (!(h > 0) || !(d > 0) || !(eps > 0) || !std::isfinite(h + d + eps + center + amplitude))
            throw ConfigError("chi needs positive finite h, d, eps");
    }

    double operator()(double p) const {
        const double q = p - center, a = std::abs(q);
        double v;
        if (a < eps) v = h * q / eps;
        else if (a <= d + eps) v = h;
        else if (a < support()) v = h + d / 2 + eps / 2 - a / 2;
        else v = 0.0;
        if (a >= eps && q < 0) v = -v;
        return amplitude * v;
    }

    /// Piecewise constant, right-continuous at the kinks.
    double derivative(double p) const {
        const double q = p - center, S = support();
        if (q < -S || q >= S) return 0.0;
        if (q < -(d + eps) || q >= d + eps) return -0.5 * amplitude;
        if (q >= -eps && q < eps) return amplitude * h / eps;
        return 0.0;
    }

    std::vector<double> breakpoints() const {
        const double s[] = {-support(), -(d + eps), -eps, eps, d + eps, support()};
        std::vector<double> b;
        for (double x : s) b.push_back(center + x);
        return b;
    }
};

inline double chi_evaluate(const ChiPerturbation& chi, double p) { return chi(p); }

struct ChiNorms {
    double w11_norm = 0.0;     // closed form, A (2h^2 + 2hd + h eps + 4h)
    double sup_norm = 0.0;     // A h: plateau height, also the ramp peak
    double w11_quadrature = 0.0;
};

inline ChiNorms chi_norms(const ChiPerturbation& chi) {
    chi.validate();
    const double A = std::abs(chi.amplitude), h = chi.h, d = chi.d, e = chi.eps;
    ChiNorms n;
    n.w11_norm = A * (2 * h * h + 2 * h * d + h * e + 4 * h);
    n.sup_norm = A * h;
    // |chi| + |chi'| integrated piece by piece; chi' is evaluated strictly inside
    // each piece so its jumps at the kinks never enter a node
    auto b = chi.breakpoints();
    QuadOptions q{1e-15, 1e-13, 2000, true};
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
        const double lo = b[i], hi = b[i + 1];
        const double slope = chi.derivative(0.5 * (lo + hi));
        total += integrate([&](double p) { return std::abs(chi(p)); }, lo, hi, q).value + std::abs(slope) * (hi - lo);
    }
    n.w11_quadrature = total;
    return n;
}

inline RealFunction chi_real_function(const ChiPerturbation& chi) {
    RealFunction r;
    r.f = [chi](double p) { return chi(p); };
    r.lo = chi.center - chi.support();
    r.hi = chi.center + chi.support();
    auto b = chi.breakpoints();
    r.breakpoints.assign(b.begin() + 1, b.end() - 1);
    return r;
}

struct ChiCenterValue {
    double value = 0.0;      // PV \int chi(p) / (p - center) dp
    double deviation = 0.0;  // value - 2 A
    double bound = 0.0;      // C A h |log h|
    bool regime = true;      // h = d and eps = exp(-1/h)
    bool within_bound = true;
};

/// C in |PV - 2A| <= C A h |log h|. The deviation tends to 2 h log h + 3 h log 3
/// as h -> 0, so 2.5 covers the whole regime h <= 0.2.
inline constexpr double kChiCenterConstant = 2.5;

inline ChiCenterValue chi_hilbert_center(const ChiPerturbation& chi, const HilbertOptions& opt = HilbertOptions::with_tol(1e-11)) {
    chi.validate();
    ChiCenterValue c;
    auto at0 = chi;
    at0.center = 0.0;  // translation invariant; eps may be far below ulp(center)
    c.value = pv_cauchy(chi_real_function(at0), 0.0, opt);
    c.deviation = c.value - 2 * chi.amplitude;
    c.bound = kChiCenterConstant * std::abs(chi.amplitude) * chi.h * std::abs(std::log(chi.h));
    c.regime = std::abs(chi.h - chi.d) <= 1e-12 * chi.h && std::abs(chi.eps - std::exp(-1.0 / chi.h)) <= 1e-9 * chi.eps;
    c.within_bound = std::abs(c.deviation) <= c.bound;
    return c;
}

/// s seen from a frame moving with v: p -> s(p + v).
inline SlopeFunction translated_slope(const SlopeFunction& s, double v) {
    if (v == 0.0) return s;
    SlopeFunction r = s;
    r.d1 = [f = s.d1, v](double p) { return f(p + v); };
    if (s.d2) r.d2 = [f = s.d2, v](double p) { return f(p + v); };
    r.lo = s.lo - v;
    r.hi = s.hi - v;
    for (double& b : r.breakpoints) b -= v;
    return r;
}

/// f0' + chi as a slope function; the window grows to cover chi's support.
/// For eps far below ulp(center), call this in chi's own frame (see
/// translated_slope), where the central ramp is representable.
inline SlopeFunction perturbed_slope(const SlopeFunction& s, const ChiPerturbation& chi) {
    chi.validate();
    SlopeFunction r = s;
    const double lo = s.lo, hi = s.hi;
    r.d1 = [s, chi, lo, hi](double p) { return ((p < lo || p > hi) ? 0.0 : s.d1(p)) + chi(p); };
    if (s.d2) r.d2 = [s, chi, lo, hi](double p) { return ((p < lo || p > hi) ? 0.0 : s.d2(p)) + chi.derivative(p); };
    r.lo = std::min(lo, chi.center - chi.support() - 1e-3);
    r.hi = std::max(hi, chi.center + chi.support() + 1e-3);
    for (double b : chi.breakpoints()) r.breakpoints.push_back(b);
    std::sort(r.breakpoints.begin(), r.breakpoints.end());
    return r;
}

// ---------------------------------------------------------------------------

enum class PerturbationVerdict { destabilized, still_stable, rejected_inaccessible };

inline const char* to_string(PerturbationVerdict v) {
    switch (v) {
    case PerturbationVerdict::destabilized: return "destabilized";
    case PerturbationVerdict::still_stable: return "still_stable";
    case PerturbationVerdict::rejected_inaccessible: return "rejected_inaccessible";
    }
    return "?";
}

struct PerturbationReport {
    ChiPerturbation chi;
    double k = 0.0;
    double w11_norm = 0.0;
    double sup_norm = 0.0;
    double hilbert_at_center = 0.0;  // PV \int chi/(p - p_c)
    int winding_before = 0;
    int winding_after = 0;
    bool accessible = false;
    PerturbationVerdict verdict = PerturbationVerdict::still_stable;
    std::vector<CrossingEvent> crossings_after;
};

struct StructuralOptions {
    PenroseOptions penrose;
    int support_samples = 400;          // extra u samples across chi's support
    bool require_accessible = false;    // reject perturbations failing the gate
};

namespace detail {

inline std::vector<double> perturbed_grid(const SlopeFunction& s, const ChiPerturbation& chi, int extra) {
    auto g = default_u_grid(s);
    const double a = chi.center - 1.5 * chi.support(), b = chi.center + 1.5 * chi.support();
    for (int i = 0; i <= extra; ++i) g.push_back(a + (b - a) * i / extra);
    for (double x : chi.breakpoints()) g.push_back(x);
    // H[chi] varies like log|u - center| between eps and d: geometric samples
    for (double r = chi.eps; r < chi.support(); r *= 2) {
        g.push_back(chi.center + r);
        g.push_back(chi.center - r);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    g.erase(std::remove_if(g.begin(), g.end(), [&](double x) { return x <= s.lo || x >= s.hi; }), g.end());
    return g;
}

inline std::vector<CriticalType> type_sequence(const std::vector<CriticalPoint>& c) {
    std::vector<CriticalType> t;
    for (const auto& x : c) t.push_back(x.type);
    return t;
}

}  // namespace detail

/// True iff f0' + chi has the same critical-point count and type sequence as
/// f0'. Monotone rearrangements of p preserve both, so failing this rules out
/// dynamical accessibility.
inline bool accessibility_gate(const SlopeFunction& s, const ChiPerturbation& chi, const CriticalPointOptions& opt = {}) {
    if (chi.amplitude == 0.0) return true;
    auto before = critical_points(s, opt);
    auto chi0 = chi;
    chi0.center = 0.0;
    auto ps = perturbed_slope(translated_slope(s, chi.center), chi0);
    auto after = critical_points(ps, opt);
    return detail::type_sequence(before) == detail::type_sequence(after);
}

inline bool accessibility_gate(const EquilibriumProfile& f, const ChiPerturbation& chi, const CriticalPointOptions& opt = {}) {
    return accessibility_gate(f.slope(), chi, opt);
}

/// Winding at k before and after adding chi to f0'.
inline PerturbationReport destabilize(const SlopeFunction& s, double k, const ChiPerturbation& chi,
                                      const StructuralOptions& opt = {}) {
    chi.validate();
    PerturbationReport rep;
    rep.chi = chi;
    rep.k = k;
    auto before = winding_number(dielectric(s, k, default_u_grid(s), opt.penrose), opt.penrose);
    if (before.critical || before.winding != 0) throw DomainError("destabilize needs a Penrose-stable profile at this k");
    rep.winding_before = before.winding;
    auto n = chi_norms(chi);
    rep.w11_norm = n.w11_norm;
    rep.sup_norm = n.sup_norm;
    rep.hilbert_at_center = chi_hilbert_center(chi).value;
    // chi's own frame; winding and critical structure are translation invariant
    const auto sf = translated_slope(s, chi.center);
    auto chi0 = chi;
    chi0.center = 0.0;
    rep.accessible = accessibility_gate(sf, chi0, opt.penrose.roots);

    auto ps = perturbed_slope(sf, chi0);
    auto grid = detail::perturbed_grid(ps, chi0, opt.support_samples);
    auto d = dielectric(ps, k, grid, opt.penrose);
    auto after = winding_number(d, opt.penrose);
    int w = require_winding(after);
    if (after.argument_winding && !after.argument_tail_ambiguous && *after.argument_winding != w)
        throw RefinementRequired("ray rule and argument winding disagree on the perturbed profile; refine the u grid");
    rep.winding_after = w;
    rep.crossings_after = after.crossings;
    for (auto& c : rep.crossings_after) c.u_c += chi.center;
    if (opt.require_accessible && !rep.accessible) rep.verdict = PerturbationVerdict::rejected_inaccessible;
    else rep.verdict = w >= 1 ? PerturbationVerdict::destabilized : PerturbationVerdict::still_stable;
    return rep;
}

inline PerturbationReport destabilize(const EquilibriumProfile& f, double k, const ChiPerturbation& chi,
                                      const StructuralOptions& opt = {}) {
    return destabilize(f.slope(), k, chi, opt);
}

/// Smallest-norm chi on the ladder h = d, eps = exp(-1/h) that destabilizes at
/// p_c. The amplitude is raised above 1 only when the center PV of a unit chi
/// cannot push eps_R(p_c) below zero.
inline std::optional<PerturbationReport> find_destabilizer(const SlopeFunction& s, double k, double pc,
                                                           const std::vector<double>& ladder = {0.1, 0.05, 0.02},
                                                           const StructuralOptions& opt = {}, bool accessible_only = false) {
    const double pv0 = pv_slope(s, pc, opt.penrose.hilbert);
    std::optional<PerturbationReport> best;
    for (double h : ladder) {
        auto unit = ChiPerturbation::scaled(h, pc, 1.0);
        const double P = chi_hilbert_center(unit).value;
        const double need = (k * k - pv0) / P;
        auto chi = ChiPerturbation::scaled(h, pc, std::max(1.0, 1.25 * need));
        if (accessible_only && !accessibility_gate(s, chi, opt.penrose.roots)) continue;
        auto r = destabilize(s, k, chi, opt);
        if (r.verdict == PerturbationVerdict::destabilized && (!best || r.w11_norm < best->w11_norm)) best = r;
    }
    return best;
}

// ---------------------------------------------------------------------------

enum class KreinVerdict { structurally_stable_DA, structurally_unstable_DA };

inline const char* to_string(KreinVerdict v) {
    return v == KreinVerdict::structurally_stable_DA ? "structurally_stable_DA" : "structurally_unstable_DA";
}

struct DestabilizableExtremum {
    CriticalPoint point;
    PerturbationReport report;
};

struct KreinReport {
    KreinVerdict verdict = KreinVerdict::structurally_stable_DA;
    std::vector<CriticalPoint> critical_points;
    // accessible destabilizers found, one entry per critical point admitting one
    std::vector<DestabilizableExtremum> destabilizable;
    bool maxima_admit = false;
    bool minima_admit = false;
};

/// Single zero of f0': stable under accessible perturbations. Several: unstable,
/// and every critical point (maxima and minima alike) is searched for an
/// accessible chi that raises the winding.
inline KreinReport krein_like_verdict(const SlopeFunction& s, double k, const StructuralOptions& opt = {},
                                      const std::vector<double>& ladder = {0.1, 0.05, 0.02}) {
    auto before = winding_number(dielectric(s, k, default_u_grid(s), opt.penrose), opt.penrose);
    if (before.critical || before.winding != 0) throw DomainError("krein_like_verdict needs a Penrose-stable profile");
    KreinReport rep;
    rep.critical_points = critical_points(s, opt.penrose.roots);
    if (rep.critical_points.size() <= 1) {
        rep.verdict = KreinVerdict::structurally_stable_DA;
        return rep;
    }
    rep.verdict = KreinVerdict::structurally_unstable_DA;
    for (const auto& c : rep.critical_points) {
        auto r = find_destabilizer(s, k, c.location, ladder, opt, true);
        if (!r) continue;
        rep.destabilizable.push_back({c, *r});
        if (c.type == CriticalType::maximum) rep.maxima_admit = true;
        if (c.type == CriticalType::minimum) rep.minima_admit = true;
    }
    return rep;
}

inline KreinReport krein_like_verdict(const EquilibriumProfile& f, double k, const StructuralOptions& opt = {}) {
    return krein_like_verdict(f.slope(), k, opt);
}

}  // namespace chh
