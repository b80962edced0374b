#pragma once

// G-transform pair for a stable equilibrium without discrete modes,
//
//     G[g]  = eps_R g + eps_I H[g]
//     G^[f] = (eps_R f - eps_I H[f]) / |eps|^2,
//
// and the exact free-streaming evolution it induces: if zeta solves the
// linearized dynamics at wavenumber k then g = G^[zeta] obeys
// g_t + i k u g = 0, so zeta(t) = G[e^{-iku t} G^[zeta(0)]].
//
// Everything lives on one uniform grid that serves as both p and u. The
// Hilbert transform of sampled data is a dense matrix built once per context.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "equilibria.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "penrose.hpp"

namespace chh {

using cplx = std::complex<double>;

struct TransformOptions {
    double spacing = 0.01;
    std::optional<double> lo;  // default: slope window minus pad
    std::optional<double> hi;
    double pad = 2.0;
    double abs2_floor = 1e-10;  // relative to the median of |eps|^2
    bool require_stable = true;
    PenroseOptions penrose;
};

struct ComplexSampledFunction {
    std::vector<double> grid;
    std::vector<cplx> values;

    void validate() const {
        if (grid.size() != values.size()) throw ConfigError("grid and values have different lengths");
        for (auto v : values)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw ConfigError("sampled values must be finite");
    }
};

class TransformContext {
public:
    TransformContext(const SlopeFunction& s, double k, const TransformOptions& opt = {}) : opt_(opt) {
        if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("wavenumber must be positive");
        if (!(opt.spacing > 0.0)) throw ConfigError("grid spacing must be positive");
        const double h = opt.spacing;
        // snap the ends to multiples of h so that u = 0 is a node when it is inside
        double lo = std::floor(opt.lo.value_or(s.lo - opt.pad) / h) * h;
        double hi = std::ceil(opt.hi.value_or(s.hi + opt.pad) / h) * h;
        if (!(hi > lo)) throw ConfigError("empty transform grid");
        const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h)) + 1;
        if (n < 16) throw ConfigError("transform grid needs at least 16 nodes");
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = lo + h * static_cast<double>(i);
        d_ = dielectric(s, k, u, opt.penrose);
        abs2_ = d_.abs2();

        std::vector<double> sorted = abs2_;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        for (std::size_t i = 0; i < n; ++i)
            if (!(abs2_[i] >= opt.abs2_floor * median))
                throw EmbeddedModeError("|eps|^2 vanishes on the real line near u = " + std::to_string(u[i]) +
                                        "; the G-transform is not invertible");
        if (opt.require_stable) {
            auto w = winding_number(d_, opt.penrose);
            if (w.winding != 0)
                throw DomainError("equilibrium has discrete modes at this k; the G-transform needs a stable one");
        }

        auto rows = hilbert_matrix(d_.u, d_.u);
        H_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) H_(i, j) = rows[i][j];

        auto sp = signature_profile(d_, opt.penrose);
        frame_shift_ = sp.frame_shift;
        sigma_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double v = (u[i] - frame_shift_) * d_.eps_I[i];
            sigma_[i] = v > 0 ? 1 : (v < 0 ? -1 : 0);
        }
    }

    TransformContext(const EquilibriumProfile& f, double k, const TransformOptions& opt = {})
        : TransformContext(f.slope(), k, opt) {}

    double k() const { return d_.k; }
    const std::vector<double>& grid() const { return d_.u; }
    std::size_t size() const { return d_.u.size(); }
    double spacing() const { return opt_.spacing; }
    const DielectricSamples& samples() const { return d_; }
    const std::vector<double>& abs2() const { return abs2_; }
    const std::vector<int>& sigma() const { return sigma_; }
    double frame_shift() const { return frame_shift_; }

    /// H applied to real and imaginary parts separately.
    Eigen::VectorXcd hilbert(const Eigen::VectorXcd& v) const {
        Eigen::VectorXd re = H_ * v.real(), im = H_ * v.imag();
        Eigen::VectorXcd out(v.size());
        out.real() = re;
        out.imag() = im;
        return out;
    }

    ComplexSampledFunction wrap(Eigen::VectorXcd v) const {
        ComplexSampledFunction f;
        f.grid = d_.u;
        f.values.assign(v.data(), v.data() + v.size());
        return f;
    }

    Eigen::VectorXcd unwrap(const ComplexSampledFunction& f) const {
        f.validate();
        if (f.grid.size() != size()) throw ConfigError("sampled function is not on the transform grid");
        for (std::size_t i = 0; i < size(); ++i)
            if (std::abs(f.grid[i] - d_.u[i]) > 1e-9 * opt_.spacing) throw ConfigError("sampled function is not on the transform grid");
        return Eigen::Map<const Eigen::VectorXcd>(f.values.data(), static_cast<Eigen::Index>(size()));
    }

    /// Samples a callable on the grid.
    template <class F>
    ComplexSampledFunction sample(F&& fn) const {
        ComplexSampledFunction f;
        f.grid = d_.u;
        f.values.resize(size());
        for (std::size_t i = 0; i < size(); ++i) f.values[i] = cplx(fn(d_.u[i]));
        return f;
    }

private:
    TransformOptions opt_;
    DielectricSamples d_;
    std::vector<double> abs2_;
    std::vector<int> sigma_;
    double frame_shift_ = 0.0;
    Eigen::MatrixXd H_;
};

namespace detail {

inline Eigen::VectorXcd g_forward_raw(const TransformContext& ctx, const Eigen::VectorXcd& g) {
    const auto& d = ctx.samples();
    Eigen::VectorXcd hg = ctx.hilbert(g);
    Eigen::VectorXcd f(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) f[i] = d.eps_R[i] * g[i] + d.eps_I[i] * hg[i];
    return f;
}

inline Eigen::VectorXcd g_inverse_raw(const TransformContext& ctx, const Eigen::VectorXcd& f) {
    const auto& d = ctx.samples();
    const auto& a2 = ctx.abs2();
    Eigen::VectorXcd hf = ctx.hilbert(f);
    Eigen::VectorXcd g(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) g[i] = (d.eps_R[i] * f[i] - d.eps_I[i] * hf[i]) / a2[i];
    return g;
}

inline Eigen::VectorXcd free_stream(const TransformContext& ctx, const Eigen::VectorXcd& g0, double t) {
    Eigen::VectorXcd g(g0.size());
    const auto& u = ctx.grid();
    for (Eigen::Index i = 0; i < g0.size(); ++i) g[i] = g0[i] * std::exp(cplx(0.0, -ctx.k() * u[i] * t));
    return g;
}

inline cplx trapezoid(const Eigen::VectorXcd& v, double h) {
    cplx s = 0.5 * (v[0] + v[v.size() - 1]);
    for (Eigen::Index i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * h;
}

}  // namespace detail

inline ComplexSampledFunction g_forward(const TransformContext& ctx, const ComplexSampledFunction& g) {
    return ctx.wrap(detail::g_forward_raw(ctx, ctx.unwrap(g)));
}

inline ComplexSampledFunction g_inverse(const TransformContext& ctx, const ComplexSampledFunction& f) {
    return ctx.wrap(detail::g_inverse_raw(ctx, ctx.unwrap(f)));
}

/// Exact in t; the only error is the spatial discretization of H.
inline ComplexSampledFunction evolve(const TransformContext& ctx, const ComplexSampledFunction& zeta0, double t) {
    if (!std::isfinite(t)) throw DomainError("evolution time must be finite");
    if (t == 0.0) return zeta0;
    auto g0 = detail::g_inverse_raw(ctx, ctx.unwrap(zeta0));
    return ctx.wrap(detail::g_forward_raw(ctx, detail::free_stream(ctx, g0, t)));
}

/// \int zeta dp over the grid. Poisson gives i k E = -\int zeta dp, so this
/// is the field up to the constant -1/(ik).
inline cplx field_moment(const TransformContext& ctx, const ComplexSampledFunction& zeta) {
    return detail::trapezoid(ctx.unwrap(zeta), ctx.spacing());
}

struct FieldSeries {
    std::vector<double> t;
    std::vector<cplx> moment;  // \int zeta_t dp
    std::vector<double> magnitude() const {
        std::vector<double> m(moment.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(moment[i]);
        return m;
    }
};

/// Field moment along a time series; G^[zeta0] is computed once.
inline FieldSeries field_series(const TransformContext& ctx, const ComplexSampledFunction& zeta0,
                                std::span<const double> times) {
    auto g0 = detail::g_inverse_raw(ctx, ctx.unwrap(zeta0));
    FieldSeries s;
    for (double t : times) {
        if (!std::isfinite(t)) throw DomainError("evolution time must be finite");
        auto z = detail::g_forward_raw(ctx, detail::free_stream(ctx, g0, t));
        s.t.push_back(t);
        s.moment.push_back(detail::trapezoid(z, ctx.spacing()));
    }
    return s;
}

struct DampingFit {
    double rate = 0.0;  // d log|E| / dt through the peaks
    std::vector<double> peak_t;
    std::vector<double> peak_log;
    double max_residual = 0.0;  // of the linear fit, in log units
};

/// Least-squares slope of log|E| through its local maxima in [t_lo, t_hi].
/// Each peak is refined by a parabola through the neighbouring log samples.
inline DampingFit fit_damping(const FieldSeries& s, double t_lo, double t_hi) {
    auto m = s.magnitude();
    DampingFit fit;
    for (std::size_t i = 1; i + 1 < m.size(); ++i) {
        if (s.t[i] < t_lo || s.t[i] > t_hi) continue;
        if (!(m[i] > m[i - 1] && m[i] >= m[i + 1]) || m[i - 1] <= 0.0 || m[i + 1] <= 0.0) continue;
        double a = std::log(m[i - 1]), b = std::log(m[i]), c = std::log(m[i + 1]);
        double h = s.t[i + 1] - s.t[i];
        double den = a - 2 * b + c;
        double off = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
        off = std::clamp(off, -1.0, 1.0);
        fit.peak_t.push_back(s.t[i] + off * h);
        fit.peak_log.push_back(b - 0.25 * (a - c) * off);
    }
    const std::size_t n = fit.peak_t.size();
    if (n < 2) throw NotFound("fewer than two peaks of |E| in the fit window");
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < n; ++i) {
        st += fit.peak_t[i];
        sl += fit.peak_log[i];
        stt += fit.peak_t[i] * fit.peak_t[i];
        stl += fit.peak_t[i] * fit.peak_log[i];
    }
    double dn = static_cast<double>(n);
    fit.rate = (dn * stl - st * sl) / (dn * stt - st * st);
    double icpt = (sl - fit.rate * st) / dn;
    for (std::size_t i = 0; i < n; ++i)
        fit.max_residual = std::max(fit.max_residual, std::abs(fit.peak_log[i] - icpt - fit.rate * fit.peak_t[i]));
    return fit;
}

struct DiagonalVariables {
    std::vector<double> Q;
    std::vector<double> P;
};

/// (Q, P) = (Re, Im) of G^[zeta]; free streaming rotates each pair at rate k u.
inline DiagonalVariables diagonal_variables(const TransformContext& ctx, const ComplexSampledFunction& zeta) {
    auto g = detail::g_inverse_raw(ctx, ctx.unwrap(zeta));
    DiagonalVariables v;
    v.Q.resize(g.size());
    v.P.resize(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        v.Q[i] = g[i].real();
        v.P[i] = g[i].imag();
    }
    return v;
}

/// (1/2) \int sigma(u) |k u| (Q^2 + P^2) du with u measured in the frame
/// where f0'(0) = 0.
inline double diagonal_energy(const TransformContext& ctx, std::span<const double> Q, std::span<const double> P) {
    if (Q.size() != ctx.size() || P.size() != ctx.size()) throw ConfigError("Q and P must live on the transform grid");
    const auto& u = ctx.grid();
    const auto& sg = ctx.sigma();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double w = (i == 0 || i + 1 == u.size()) ? 0.5 : 1.0;
        s += w * sg[i] * std::abs(ctx.k() * (u[i] - ctx.frame_shift())) * (Q[i] * Q[i] + P[i] * P[i]);
    }
    return 0.5 * s * ctx.spacing();
}

inline double diagonal_energy(const TransformContext& ctx, const DiagonalVariables& v) {
    return diagonal_energy(ctx, v.Q, v.P);
}

}  // namespace chh
