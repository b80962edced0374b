#pragma once

// Dielectric function continued into Im(omega) > 0,
//
//     eps(k, omega) = 1 + (1/k^2) \int f0'(p) / (u - p) dp,    u = omega/k,
//
// root counting by the argument principle, root location and refinement,
// multiplet classification and the marginal (weak-growth) estimate.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "equilibria.hpp"
#include "errors.hpp"
#include "penrose.hpp"
#include "quadrature.hpp"

namespace chh {

using cplx = std::complex<double>;
using ComplexFn = std::function<cplx(cplx)>;

struct Rect {
    double re_lo = -1, re_hi = 1, im_lo = 1e-4, im_hi = 1;
    double width() const { return re_hi - re_lo; }
    double height() const { return im_hi - im_lo; }
    double diameter() const { return std::hypot(width(), height()); }
    cplx center() const { return {0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)}; }
    bool contains(cplx z, double pad = 0.0) const {
        return z.real() >= re_lo - pad && z.real() <= re_hi + pad && z.imag() >= im_lo - pad && z.imag() <= im_hi + pad;
    }
};

struct CountOptions {
    double boundary_tol = 1e-8;              // |fn| below this on the contour: degenerate region
    double arg_step = std::numbers::pi / 6;  // max argument change between boundary samples
    int per_side = 64;
    int min_depth = 2;  // every initial segment is bisected at least this often
    int max_depth = 40;
    double integer_slack = 0.05;
};

struct RootCountRegion {
    Rect region;
    int count = 0;
    double winding_real = 0.0;  // accumulated argument / 2pi
};

/// Signed zero-minus-pole count of fn inside r, from the argument change
/// along the positively oriented boundary.
inline RootCountRegion count_zeros(const ComplexFn& fn, const Rect& r, const CountOptions& opt = {}) {
    if (!(r.re_hi > r.re_lo) || !(r.im_hi > r.im_lo)) throw DomainError("empty counting rectangle");
    const cplx corners[5] = {{r.re_lo, r.im_lo}, {r.re_hi, r.im_lo}, {r.re_hi, r.im_hi}, {r.re_lo, r.im_hi}, {r.re_lo, r.im_lo}};
    auto eval = [&](cplx z) {
        cplx v = fn(z);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw AnalysisError("non-finite value on counting contour");
        if (std::abs(v) < opt.boundary_tol) {
            std::ostringstream os;
            os << "contour passes within |f| = " << std::abs(v) << " of a zero at " << z;
            throw RegionDegenerate(os.str());
        }
        return v;
    };
    double total = 0.0;
    // recursive refinement of one boundary segment
    std::function<void(cplx, cplx, cplx, cplx, int)> seg = [&](cplx a, cplx b, cplx fa, cplx fb, int depth) {
        double d = std::arg(fb / fa);
        double mag = std::abs(std::log(std::abs(fb) / std::abs(fa)));
        if ((depth >= opt.min_depth && std::abs(d) <= opt.arg_step && mag <= 1.0) || depth >= opt.max_depth) {
            if (depth >= opt.max_depth && std::abs(d) > opt.arg_step)
                throw RegionDegenerate("boundary refinement exhausted near a zero");
            total += d;
            return;
        }
        cplx m = 0.5 * (a + b);
        cplx fm = eval(m);
        seg(a, m, fa, fm, depth + 1);
        seg(m, b, fm, fb, depth + 1);
    };
    cplx z0 = corners[0], f0 = eval(z0);
    cplx fprev = f0;
    for (int side = 0; side < 4; ++side) {
        cplx a = corners[side], b = corners[side + 1];
        for (int i = 1; i <= opt.per_side; ++i) {
            cplx zb = a + (b - a) * (double(i) / opt.per_side);
            cplx fb = (side == 3 && i == opt.per_side) ? f0 : eval(zb);
            seg(a + (b - a) * (double(i - 1) / opt.per_side), zb, fprev, fb, 0);
            fprev = fb;
        }
    }
    RootCountRegion out;
    out.region = r;
    out.winding_real = total / (2 * std::numbers::pi);
    out.count = static_cast<int>(std::lround(out.winding_real));
    if (std::abs(out.winding_real - out.count) > opt.integer_slack)
        throw AccuracyFailure("argument change is not an integer multiple of 2pi", std::abs(out.winding_real - out.count));
    return out;
}

/// Retries with the rectangle enlarged by up to `jitter` of its size when the
/// boundary comes too close to a zero. The bottom edge stays above min_im.
inline RootCountRegion count_zeros_jittered(const ComplexFn& fn, Rect r, const CountOptions& opt, double jitter = 0.1,
                                            int attempts = 6, double min_im = 0.0) {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int a = 0;; ++a) {
        try {
            return count_zeros(fn, r, opt);
        } catch (const RegionDegenerate&) {
            if (a + 1 >= attempts) throw;
            const double w = r.width() * jitter, h = r.height() * jitter;
            r.re_lo -= w * U(rng);
            r.re_hi += w * U(rng);
            r.im_hi += h * U(rng);
            double lo = r.im_lo - h * U(rng);
            r.im_lo = lo > min_im ? lo : 0.5 * (r.im_lo + min_im) + (r.im_lo - min_im) * 0.5 * U(rng);
        }
    }
}

// ---------------------------------------------------------------------------
// eps off the real axis

struct DispersionOptions {
    double eps_tol = 1e-13;  // absolute accuracy of eps
    int max_intervals = 20000;
    CountOptions count;
    double bottom_margin = 1e-4;
    double jitter = 0.1;
    int jitter_attempts = 6;
    double tol_root_residual = 1e-10;
    int newton_max_iter = 80;
    double min_box = 1e-7;  // quadtree boxes below this diameter are not split further
};

/// eps(k, omega) for Im(omega) > 0, either sign of k.
inline cplx epsilon_complex(const SlopeFunction& s, double k, cplx omega, const DispersionOptions& opt = {}) {
    if (!(k != 0.0) || !std::isfinite(k)) throw DomainError("wavenumber must be nonzero and finite");
    if (!(omega.imag() > 0.0)) throw DomainError("epsilon_complex requires Im(omega) > 0");
    const cplx u = omega / k;
    const double ur = u.real(), ui = std::abs(u.imag());
    const double lo = s.lo, hi = s.hi;
    QuadOptions q;
    q.abs_tol = opt.eps_tol * k * k;
    q.rel_tol = 0.0;
    q.max_intervals = opt.max_intervals;
    auto direct = [&](double p) { return slope_at(s, p) / (u - p); };
    auto points = [&](double a, double b, double c, double d0) {
        std::vector<double> pts{a, b};
        for (double bp : s.breakpoints)
            if (bp > a && bp < b) pts.push_back(bp);
        detail::geometric_points(pts, a, b, c, d0);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    };
    cplx I = 0.0;
    const double edge = std::min(ur - lo, hi - ur);
    if (edge > 0.0) {
        // subtract f0'(u_R) near the resonance; its integral is a logarithm
        const double delta = std::min(edge, 1.0);
        const double a = ur - delta, b = ur + delta;
        const double g = s.d1(ur);
        auto smooth = [&](double p) { return (s.d1(p) - g) / (u - p); };
        auto pin = points(a, b, ur, std::max(ui, 1e-14));
        if (std::find(pin.begin(), pin.end(), ur) == pin.end()) {
            pin.push_back(ur);
            std::sort(pin.begin(), pin.end());
        }
        I += integrate(smooth, std::span<const double>(pin), q).value;
        I += g * (std::log(u - a) - std::log(u - b));
        if (a > lo) {
            auto p1 = points(lo, a, ur, delta);
            I += integrate(direct, std::span<const double>(p1), q).value;
        }
        if (b < hi) {
            auto p2 = points(b, hi, ur, delta);
            I += integrate(direct, std::span<const double>(p2), q).value;
        }
    } else {
        const double dist = std::max(lo - ur, ur - hi);
        auto pts = points(lo, hi, ur, std::max(dist, std::max(ui, 1e-14)));
        I += integrate(direct, std::span<const double>(pts), q).value;
    }
    I += s.tail_left / (u - lo) + s.tail_right / (u - hi);
    return 1.0 + I / (k * k);
}

inline cplx epsilon_complex(const EquilibriumProfile& f, double k, cplx omega, const DispersionOptions& opt = {}) {
    return epsilon_complex(f.slope(), k, omega, opt);
}

inline ComplexFn dispersion_function(const SlopeFunction& s, double k, const DispersionOptions& opt = {}) {
    return [s, k, opt](cplx w) { return epsilon_complex(s, k, w, opt); };
}

/// Total variation of f0' including the tails.
inline double slope_variation(const SlopeFunction& s) {
    auto r = integrate([&](double p) { return std::abs(s.d1(p)); },
                       std::span<const double>(panel_points(s.lo, s.hi, s.breakpoints)), QuadOptions{1e-10, 1e-8, 4000, false});
    return r.value + std::abs(s.tail_left) + std::abs(s.tail_right);
}

/// A rectangle guaranteed to hold every upper-half-plane root:
/// |eps - 1| <= V/(k^2 dist(u, supp)) < 1 outside it, V the variation of f0'.
inline Rect tall_rectangle(const SlopeFunction& s, double k, const DispersionOptions& opt = {}) {
    const double ak = std::abs(k);
    const double R = 1.1 * slope_variation(s) / ak + 0.1;
    const double a = k * s.lo, b = k * s.hi;
    return {std::min(a, b) - R, std::max(a, b) + R, opt.bottom_margin, R};
}

/// Number of roots of eps in r. The rectangle must stay off the real axis.
inline RootCountRegion count_roots(const SlopeFunction& s, double k, const Rect& r, const DispersionOptions& opt = {}) {
    if (!(r.im_lo > 0.0)) throw DomainError("counting rectangle must lie strictly above the real axis");
    auto fn = dispersion_function(s, k, opt);
    auto c = count_zeros_jittered(fn, r, opt.count, opt.jitter, opt.jitter_attempts, 0.5 * r.im_lo);
    if (c.count < 0) throw AnalysisError("negative zero count for an analytic function: quadrature inconsistency");
    return c;
}

inline RootCountRegion count_roots(const EquilibriumProfile& f, double k, const Rect& r, const DispersionOptions& opt = {}) {
    return count_roots(f.slope(), k, r, opt);
}

inline RootCountRegion count_roots(const EquilibriumProfile& f, double k, const DispersionOptions& opt = {}) {
    auto s = f.slope();
    return count_roots(s, k, tall_rectangle(s, k, opt), opt);
}

// ---------------------------------------------------------------------------
// Roots

enum class SymmetryClass { quartet_member, octet_member, css_pair_member, real_embedded };

inline const char* to_string(SymmetryClass c) {
    switch (c) {
    case SymmetryClass::quartet_member: return "quartet_member";
    case SymmetryClass::octet_member: return "octet_member";
    case SymmetryClass::css_pair_member: return "css_pair_member";
    case SymmetryClass::real_embedded: return "real_embedded";
    }
    return "?";
}

struct DispersionRoot {
    cplx omega;
    double k = 0.0;
    double residual = 0.0;
    int multiplicity = 1;
    SymmetryClass symmetry_class = SymmetryClass::quartet_member;
};

namespace detail {

inline cplx central_derivative(const ComplexFn& fn, cplx z) {
    const double h = 1e-6 * std::max(1.0, std::abs(z));
    return (fn(z + h) - fn(z - h)) / (2.0 * h);
}

/// Damped Newton that never leaves the upper half plane.
inline std::optional<cplx> newton(const ComplexFn& fn, cplx z, const DispersionOptions& opt, std::string* trace = nullptr) {
    std::ostringstream tr;
    for (int it = 0; it < opt.newton_max_iter; ++it) {
        cplx f = fn(z);
        tr << it << ": " << z << " |eps|=" << std::abs(f) << "\n";
        if (std::abs(f) < opt.tol_root_residual) {
            // one more step polishes the last digits when it helps
            cplx d = central_derivative(fn, z);
            cplx zn = z - f / d;
            if (zn.imag() > 0 && std::abs(fn(zn)) < std::abs(f)) z = zn;
            return z;
        }
        cplx d = central_derivative(fn, z);
        if (d == 0.0) break;
        cplx step = f / d;
        cplx zn = z - step;
        int halvings = 0;
        while (!(zn.imag() > 0) && halvings < 40) {
            step *= 0.5;
            zn = z - step;
            ++halvings;
        }
        if (!(zn.imag() > 0)) break;
        z = zn;
    }
    if (trace) *trace = tr.str();
    return std::nullopt;
}

}  // namespace detail

inline int root_multiplicity(const ComplexFn& fn, cplx z, const DispersionOptions& opt) {
    int m = 0;
    for (double rho : {1e-3, 1e-4}) {
        double r = std::min(rho * std::max(1.0, std::abs(z)), 0.5 * z.imag());
        Rect box{z.real() - r, z.real() + r, z.imag() - r, z.imag() + r};
        CountOptions co = opt.count;
        co.boundary_tol = std::min(co.boundary_tol, 1e-3 * r);
        m = count_zeros_jittered(fn, box, co, opt.jitter, opt.jitter_attempts, 0.25 * z.imag()).count;
    }
    return m;
}

/// Newton refinement of a seed in Im(omega) > 0.
inline DispersionRoot refine_root(const SlopeFunction& s, double k, cplx seed, const DispersionOptions& opt = {}) {
    if (!(seed.imag() > 0)) throw DomainError("root seed must lie in the upper half plane");
    auto fn = dispersion_function(s, k, opt);
    std::string trace;
    auto z = detail::newton(fn, seed, opt, &trace);
    if (!z) throw NoConvergence("Newton iteration on eps did not converge:\n" + trace);
    DispersionRoot r;
    r.omega = *z;
    r.k = k;
    r.residual = std::abs(fn(*z));
    r.multiplicity = root_multiplicity(fn, *z, opt);
    if (r.multiplicity < 1) throw NoConvergence("refined point carries no zero in a surrounding box");
    return r;
}

inline DispersionRoot refine_root(const EquilibriumProfile& f, double k, cplx seed, const DispersionOptions& opt = {}) {
    return refine_root(f.slope(), k, seed, opt);
}

/// Locates the single root in r by repeated halving of counting rectangles.
inline cplx locate_root_bisection(const SlopeFunction& s, double k, Rect r, const DispersionOptions& opt = {},
                                  double size_tol = 1e-10) {
    auto fn = dispersion_function(s, k, opt);
    auto count = [&](const Rect& b) {
        CountOptions co = opt.count;
        co.boundary_tol = std::min(co.boundary_tol, 1e-4 * b.diameter());
        co.per_side = std::max(8, co.per_side / 2);
        return count_zeros(fn, b, co).count;
    };
    if (count_zeros(fn, r, opt.count).count != 1) throw DomainError("bisection needs a rectangle holding exactly one root");
    const double fracs[] = {0.5, 0.46, 0.54, 0.41, 0.59};
    while (std::max(r.width(), r.height()) > size_tol * std::max(1.0, std::abs(r.center()))) {
        bool done = false;
        for (double t : fracs) {
            Rect a = r, b = r;
            if (r.width() >= r.height()) {
                double m = r.re_lo + t * r.width();
                a.re_hi = m;
                b.re_lo = m;
            } else {
                double m = r.im_lo + t * r.height();
                a.im_hi = m;
                b.im_lo = m;
            }
            try {
                int ca = count(a);
                if (ca == 1) r = a;
                else if (ca == 0) r = b;
                else throw AccuracyFailure("bisection half holds more than one root", ca);
                done = true;
                break;
            } catch (const RegionDegenerate&) {
            }
        }
        if (!done) break;  // the root sits on every trial cut: the box is as small as the data allows
    }
    return r.center();
}

/// All zeros of an analytic fn in r: quadtree of counting rectangles until a
/// box holds at most one zero, then Newton refinement inside it. Roots carry
/// k = 0; callers that have a wavenumber set it.
inline std::vector<DispersionRoot> find_zeros(const ComplexFn& fn, const Rect& region, const DispersionOptions& opt = {},
                                              double k = 0.0) {
    if (!(region.im_lo > 0.0)) throw DomainError("search rectangle must lie strictly above the real axis");
    std::vector<DispersionRoot> out;
    auto accept = [&](cplx z, int mult) {
        for (auto& r : out)
            if (std::abs(r.omega - z) < 1e-7 * std::max(1.0, std::abs(z))) return;
        DispersionRoot r;
        r.omega = z;
        r.k = k;
        r.residual = std::abs(fn(z));
        r.multiplicity = mult;
        out.push_back(r);
    };
    // keep the boundary sampling density of the top rectangle in the children
    const double top_extent = region.width() + region.height();
    auto child_opt = [&](const Rect& b) {
        CountOptions co = opt.count;
        co.per_side = std::max(8, int(std::ceil(opt.count.per_side * (b.width() + b.height()) / top_extent)));
        return co;
    };
    std::function<void(const Rect&, int, int)> rec = [&](const Rect& r, int n, int depth) {
        if (n == 0) return;
        if (n == 1 || r.diameter() < opt.min_box) {
            auto z = detail::newton(fn, r.center(), opt);
            if (z && r.contains(*z, 1e-9 * std::max(1.0, std::abs(*z)))) {
                accept(*z, n == 1 ? 1 : root_multiplicity(fn, *z, opt));
                return;
            }
            if (r.diameter() < opt.min_box || depth > 60) throw NoConvergence("quadtree box did not yield a converged root");
        }
        const double tries[][2] = {{0.5, 0.5}, {0.47, 0.53}, {0.55, 0.44}, {0.42, 0.58}};
        for (auto& t : tries) {
            const double xm = r.re_lo + t[0] * r.width(), ym = r.im_lo + t[1] * r.height();
            Rect kids[4] = {{r.re_lo, xm, r.im_lo, ym}, {xm, r.re_hi, r.im_lo, ym}, {r.re_lo, xm, ym, r.im_hi}, {xm, r.re_hi, ym, r.im_hi}};
            int c[4];
            try {
                int sum = 0;
                for (int i = 0; i < 4; ++i) sum += (c[i] = count_zeros(fn, kids[i], child_opt(kids[i])).count);
                if (sum != n) continue;
            } catch (const RegionDegenerate&) {
                continue;
            }
            for (int i = 0; i < 4; ++i) rec(kids[i], c[i], depth + 1);
            return;
        }
        throw AccuracyFailure("quadtree children do not reproduce the parent count", n);
    };
    auto top = count_zeros_jittered(fn, region, opt.count, opt.jitter, opt.jitter_attempts, 0.5 * region.im_lo);
    if (top.count < 0) throw AnalysisError("negative zero count for an analytic function: quadrature inconsistency");
    rec(top.region, top.count, 0);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.omega.real() < b.omega.real(); });
    return out;
}

inline std::vector<DispersionRoot> find_roots(const SlopeFunction& s, double k, const Rect& region,
                                              const DispersionOptions& opt = {}) {
    return find_zeros(dispersion_function(s, k, opt), region, opt, k);
}

inline std::vector<DispersionRoot> find_roots(const SlopeFunction& s, double k, const DispersionOptions& opt = {}) {
    return find_roots(s, k, tall_rectangle(s, k, opt), opt);
}

inline std::vector<DispersionRoot> find_roots(const EquilibriumProfile& f, double k, const DispersionOptions& opt = {}) {
    return find_roots(f.slope(), k, opt);
}

/// Upper-half roots plus their complex conjugates (same k): the decaying
/// partners implied by the Hamiltonian reflection symmetry.
inline std::vector<DispersionRoot> with_conjugates(const std::vector<DispersionRoot>& upper) {
    std::vector<DispersionRoot> all = upper;
    for (const auto& r : upper)
        if (r.omega.imag() != 0.0) {
            auto c = r;
            c.omega = std::conj(r.omega);
            all.push_back(c);
        }
    return all;
}

/// Tags each root. The set must be closed under omega -> conj(omega) at each
/// k, under (k, omega) -> (-k, -conj(omega)) whenever both signs of k occur,
/// and, for symmetric f0, under omega -> -conj(omega) at fixed k.
inline std::vector<SymmetryClass> classify_multiplet(const std::vector<DispersionRoot>& roots, bool symmetric,
                                                     double tol = 1e-6) {
    auto close = [&](cplx a, cplx b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); };
    auto has = [&](double k, cplx w) {
        for (const auto& r : roots)
            if (std::abs(r.k - k) <= tol * std::max(1.0, std::abs(k)) && close(r.omega, w)) return true;
        return false;
    };
    bool both_signs = false;
    for (const auto& a : roots)
        for (const auto& b : roots)
            if (a.k * b.k < 0) both_signs = true;
    std::vector<SymmetryClass> out;
    for (const auto& r : roots) {
        const cplx w = r.omega;
        const double scale = tol * std::max(1.0, std::abs(w));
        std::ostringstream os;
        if (!has(r.k, std::conj(w))) {
            os << "root " << w << " at k=" << r.k << " has no conjugate partner";
            throw SymmetryViolation(os.str());
        }
        if (both_signs && !has(-r.k, -std::conj(w))) {
            os << "root " << w << " at k=" << r.k << " has no partner -conj(omega) at -k";
            throw SymmetryViolation(os.str());
        }
        const bool mirrored = has(r.k, -std::conj(w));
        if (symmetric && !mirrored) {
            os << "symmetric profile but root " << w << " lacks its mirror -conj(omega)";
            throw SymmetryViolation(os.str());
        }
        if (std::abs(w.imag()) <= scale) out.push_back(SymmetryClass::real_embedded);
        else if (std::abs(w.real()) <= scale) out.push_back(SymmetryClass::css_pair_member);
        else if (mirrored) out.push_back(SymmetryClass::octet_member);
        else out.push_back(SymmetryClass::quartet_member);
    }
    return out;
}

inline void apply_classes(std::vector<DispersionRoot>& roots, bool symmetric, double tol = 1e-6) {
    auto c = classify_multiplet(roots, symmetric, tol);
    for (std::size_t i = 0; i < roots.size(); ++i) roots[i].symmetry_class = c[i];
}

// ---------------------------------------------------------------------------
// Marginality relations

struct MarginalOptions {
    HilbertOptions hilbert = HilbertOptions::with_tol(1e-11);
    double numerator_tol = 1e-7;    // on k^2 eps_I = -pi f0'(u)
    double denominator_tol = 1e-6;  // on d(k^2 eps_R)/du
    double eps_R_tol = 1e-6;        // precondition |k^2 eps_R| at omega_R
};

struct MarginalEstimate {
    bool indeterminate = false;
    double gamma = 0.0;
    double u = 0.0;
    double numerator = 0.0;    // k^2 eps_I
    double denominator = 0.0;  // d(k^2 eps_R)/du
};

/// gamma = -eps_I / (d eps_R/d omega_R) at a zero of eps_R. In the scaled
/// quantities N = k^2 eps_I and D = d(k^2 eps_R)/du this is gamma = -k N / D,
/// which stays meaningful in the k -> 0 limit at u = omega_R/k held fixed
/// (pass k = 0 and omega_R = u there).
inline MarginalEstimate marginal_growth_rate(const SlopeFunction& s, double k, double omega_R,
                                             const MarginalOptions& opt = {}) {
    MarginalEstimate m;
    m.u = k != 0.0 ? omega_R / k : omega_R;
    const double k2eR = k * k - pv_slope(s, m.u, opt.hilbert);
    if (std::abs(k2eR) > opt.eps_R_tol)
        throw DomainError("marginal estimate needs eps_R(k, omega_R) = 0; k^2 eps_R = " + std::to_string(k2eR));
    m.numerator = -std::numbers::pi * slope_at(s, m.u);
    m.denominator = deps_R_du_scaled(s, m.u, opt.hilbert);
    const bool small_n = std::abs(m.numerator) < opt.numerator_tol;
    const bool small_d = std::abs(m.denominator) < opt.denominator_tol;
    if (small_n && small_d) {
        m.indeterminate = true;
        m.gamma = std::nan("");
        return m;
    }
    if (small_d) throw PoleLikeError("d eps_R/d omega vanishes where eps_I does not");
    m.gamma = -k * m.numerator / m.denominator;
    return m;
}

/// Zero of eps_R(k, u) in [u_lo, u_hi], returned as omega_R = k u.
inline double marginal_frequency(const SlopeFunction& s, double k, double u_lo, double u_hi,
                                 const HilbertOptions& hopt = HilbertOptions::with_tol(1e-11)) {
    auto g = [&](double u) { return k * k - pv_slope(s, u, hopt); };
    double ga = g(u_lo), gb = g(u_hi);
    if (ga * gb > 0) throw NotFound("eps_R has no sign change in the bracket");
    std::uintmax_t it = 100;
    auto r = boost::math::tools::toms748_solve(g, u_lo, u_hi, ga, gb, boost::math::tools::eps_tolerance<double>(50), it);
    return k * 0.5 * (r.first + r.second);
}

// ---------------------------------------------------------------------------
// Symmetric profiles: Im eps = -(2 u_I u_R / k^2) S with
// S = \int p f0' / ([(u_R-p)^2+u_I^2][(u_R+p)^2+u_I^2]) dp.

struct SymmetryDiagnostic {
    double integral = 0.0;         // S
    double omega2_imag_rel = 0.0;  // |Im(omega^2)| / |omega^2|
    bool integral_vanishes = false;
};

inline SymmetryDiagnostic symmetry_integral(const SlopeFunction& s, double k, cplx omega, double tol = 1e-8) {
    const cplx u = omega / k;
    const double ur = u.real(), ui = u.imag();
    auto den = [&](double p) { return ((ur - p) * (ur - p) + ui * ui) * ((ur + p) * (ur + p) + ui * ui); };
    auto g = [&](double p) { return p * slope_at(s, p) / den(p); };
    std::vector<double> pts = panel_points(s.lo, s.hi, s.breakpoints);
    for (double c : {ur, -ur})
        if (c > s.lo && c < s.hi) detail::geometric_points(pts, s.lo, s.hi, c, std::max(std::abs(ui), 1e-12));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    SymmetryDiagnostic d;
    d.integral = integrate(g, std::span<const double>(pts), QuadOptions{1e-13, 1e-11, 20000, false}).value;
    d.integral += s.tail_left * s.lo / den(s.lo) + s.tail_right * s.hi / den(s.hi);
    cplx w2 = omega * omega;
    d.omega2_imag_rel = std::abs(w2) > 0 ? std::abs(w2.imag()) / std::abs(w2) : 0.0;
    d.integral_vanishes = std::abs(d.integral) < tol;
    return d;
}

}  // namespace chh
