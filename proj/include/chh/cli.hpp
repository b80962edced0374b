#pragma once

// Command-line orchestration: one analysis per invocation, a VERDICT line on
// stdout for stability questions, byte-stable CSV/JSON artifacts under --out.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "caldeira.hpp"
#include "dispersion.hpp"
#include "gtransform.hpp"
#include "io.hpp"
#include "penrose.hpp"
#include "structural.hpp"

namespace chh {

enum class Command { penrose, signature, roots, critical, perturb, verdict, evolve, caldeira, hilbert };

inline const char* to_string(Command c) {
    switch (c) {
    case Command::penrose: return "penrose";
    case Command::signature: return "signature";
    case Command::roots: return "roots";
    case Command::critical: return "critical";
    case Command::perturb: return "perturb";
    case Command::verdict: return "verdict";
    case Command::evolve: return "evolve";
    case Command::caldeira: return "caldeira";
    case Command::hilbert: return "hilbert";
    }
    return "?";
}

enum ExitCode { exit_ok = 0, exit_config = 1, exit_analysis = 2 };

struct RunConfig {
    Command command = Command::penrose;

    std::string profile;  // profile descriptor (JSON file)
    std::string bath;     // bath descriptor (JSON file); else the inline fields below
    double omega = 1.0;
    int sign = -1;
    std::string coupling;  // f(x)^2
    double coupling_scale = 1.0;

    std::optional<double> k;
    std::optional<double> k_lo, k_hi;
    int k_steps = 0;  // > 0: penrose sweep over [k_lo, k_hi]

    std::string parameter = "/separation";  // JSON pointer into the profile descriptor
    std::optional<double> eta_lo, eta_hi;

    // chi
    double h = 0.1;
    double d = 0.1;
    double eps_exp = -10.0;
    double center = 0.0;
    double amplitude = 1.0;

    // evolve
    std::string initial = "exp(-p^2)";
    double t_end = 70.0;
    double dt = 0.1;
    double spacing = 0.01;
    std::optional<double> fit_lo, fit_hi;

    // caldeira
    int oracle_n = 0;  // > 0: also diagonalize the discretized bath
    int nyquist_samples = 2001;

    // hilbert
    std::string expr;
    double lo = -1.0, hi = 1.0;
    std::optional<double> u_lo, u_hi;

    int samples = 2001;  // contour samples
    std::optional<double> hilbert_tol;
    std::optional<double> eps_tol;

    std::string out;  // artifact directory; empty: stdout only

    void validate() const {
        auto positive = [](std::optional<double> v, const char* what) {
            if (v && !(*v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
        };
        auto need_profile = [&] {
            if (profile.empty()) throw ConfigError("--profile is required");
            if (!fs::exists(profile)) throw ConfigError("profile file does not exist: " + profile);
        };
        auto need_k = [&] {
            if (!k) throw ConfigError("--k is required");
            if (!(*k > 0.0) || !std::isfinite(*k)) throw ConfigError("--k must be positive");
        };
        positive(hilbert_tol, "--hilbert-tol");
        positive(eps_tol, "--eps-tol");
        if (samples < 16) throw ConfigError("--samples must be at least 16");
        switch (command) {
        case Command::penrose:
            need_profile();
            if (k_steps > 0) {
                if (!k_lo || !k_hi || !(*k_lo > 0.0) || !(*k_hi > *k_lo))
                    throw ConfigError("a k sweep needs 0 < --k-lo < --k-hi");
            } else {
                need_k();
            }
            break;
        case Command::signature:
        case Command::roots:
        case Command::verdict: need_profile(); need_k(); break;
        case Command::perturb:
            need_profile();
            need_k();
            if (!(h > 0.0) || !(d > 0.0)) throw ConfigError("--h and --d must be positive");
            if (!(amplitude > 0.0)) throw ConfigError("--amplitude must be positive");
            break;
        case Command::critical:
            need_profile();
            if (!eta_lo || !eta_hi || !(*eta_hi != *eta_lo)) throw ConfigError("--eta-lo and --eta-hi must differ");
            if (k) {
                if (!(*k >= 0.0)) throw ConfigError("--k must be non-negative");
            } else if (!k_lo || !k_hi || !(*k_lo >= 0.0) || !(*k_hi >= *k_lo)) {
                throw ConfigError("critical needs --k or 0 <= --k-lo <= --k-hi");
            }
            break;
        case Command::evolve:
            need_profile();
            need_k();
            if (!(t_end > 0.0) || !(dt > 0.0) || dt > t_end) throw ConfigError("need 0 < --dt <= --t-end");
            if (!(spacing > 0.0)) throw ConfigError("--spacing must be positive");
            if (fit_lo.has_value() != fit_hi.has_value() || (fit_lo && !(*fit_hi > *fit_lo)))
                throw ConfigError("--fit-lo and --fit-hi go together with fit-lo < fit-hi");
            break;
        case Command::caldeira:
            if (bath.empty() && coupling.empty()) throw ConfigError("caldeira needs --bath or --coupling");
            if (!bath.empty() && !fs::exists(bath)) throw ConfigError("bath file does not exist: " + bath);
            if (!(omega > 0.0)) throw ConfigError("--omega must be positive");
            if (sign != 1 && sign != -1) throw ConfigError("--sign must be +1 or -1");
            if (!(coupling_scale >= 0.0)) throw ConfigError("--scale must be non-negative");
            if (oracle_n < 0) throw ConfigError("--oracle-n must be non-negative");
            if (nyquist_samples < 16) throw ConfigError("--nyquist-samples must be at least 16");
            break;
        case Command::hilbert:
            if (expr.empty()) throw ConfigError("hilbert needs --expr");
            if (!(hi > lo)) throw ConfigError("hilbert needs --lo < --hi");
            if ((u_lo && u_hi && !(*u_hi > *u_lo))) throw ConfigError("hilbert needs --u-lo < --u-hi");
            break;
        }
    }

    PenroseOptions penrose_options() const {
        PenroseOptions o;
        if (hilbert_tol) o.hilbert.tol = *hilbert_tol;
        return o;
    }

    DispersionOptions dispersion_options() const {
        DispersionOptions o;
        if (eps_tol) o.eps_tol = *eps_tol;
        return o;
    }

    json to_json() const {
        json j;
        j["command"] = to_string(command);
        if (!profile.empty()) j["profile"] = fs::path(profile).filename().string();
        if (k) j["k"] = *k;
        if (k_lo) j["k_lo"] = *k_lo;
        if (k_hi) j["k_hi"] = *k_hi;
        if (hilbert_tol) j["hilbert_tol"] = *hilbert_tol;
        if (eps_tol) j["eps_tol"] = *eps_tol;
        return j;
    }
};

/// Fills cfg from argv. Returns an exit code when the process should stop
/// (help requested or a parse error), nullopt to proceed.
inline std::optional<int> parse_args(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out = std::cout,
                                     std::ostream& err = std::cerr) {
    CLI::App app{"Linear stability of Vlasov equilibria and continuum-coupled oscillators"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto common = [&](CLI::App* s) {
        s->add_option("--out", cfg.out, "artifact directory");
        s->add_option("--hilbert-tol", cfg.hilbert_tol, "absolute tolerance for principal values");
        s->add_option("--eps-tol", cfg.eps_tol, "absolute tolerance for the complex dielectric");
    };
    auto profile_opt = [&](CLI::App* s) { s->add_option("--profile", cfg.profile, "profile descriptor (JSON)")->required(); };
    auto k_opt = [&](CLI::App* s) { s->add_option("--k", cfg.k, "wavenumber"); };

    auto* pen = app.add_subcommand("penrose", "Penrose contour and winding number");
    profile_opt(pen);
    k_opt(pen);
    pen->add_option("--k-lo", cfg.k_lo);
    pen->add_option("--k-hi", cfg.k_hi);
    pen->add_option("--k-steps", cfg.k_steps, "sweep the winding over k in [k-lo, k-hi]");
    pen->add_option("--samples", cfg.samples, "contour samples");
    common(pen);

    auto* sig = app.add_subcommand("signature", "signature of the continuous spectrum");
    profile_opt(sig);
    k_opt(sig);
    sig->add_option("--samples", cfg.samples);
    common(sig);

    auto* roo = app.add_subcommand("roots", "dispersion roots in the upper half plane");
    profile_opt(roo);
    k_opt(roo);
    common(roo);

    auto* cri = app.add_subcommand("critical", "critical state of a one-parameter family");
    profile_opt(cri);
    cri->add_option("--param", cfg.parameter, "JSON pointer of the varied field (default /separation)");
    cri->add_option("--eta-lo", cfg.eta_lo, "stable end of the family")->required();
    cri->add_option("--eta-hi", cfg.eta_hi, "unstable end of the family")->required();
    k_opt(cri);
    cri->add_option("--k-lo", cfg.k_lo);
    cri->add_option("--k-hi", cfg.k_hi);
    common(cri);

    auto* per = app.add_subcommand("perturb", "winding after adding the chi perturbation to f0'");
    per->set_help_flag("--help", "Print this help message and exit");  // -h would shadow --h
    profile_opt(per);
    k_opt(per);
    per->add_option("--h", cfg.h);
    per->add_option("--d", cfg.d);
    per->add_option("--eps-exp", cfg.eps_exp, "chi ramp half-width is exp(eps-exp)");
    per->add_option("--center", cfg.center);
    per->add_option("--amplitude", cfg.amplitude);
    common(per);

    auto* ver = app.add_subcommand("verdict", "structural stability under accessible perturbations");
    profile_opt(ver);
    k_opt(ver);
    common(ver);

    auto* evo = app.add_subcommand("evolve", "field moment from the G-transform solution");
    profile_opt(evo);
    k_opt(evo);
    evo->add_option("--initial", cfg.initial, "initial perturbation zeta0(p), expression grammar");
    evo->add_option("--t-end", cfg.t_end);
    evo->add_option("--dt", cfg.dt);
    evo->add_option("--spacing", cfg.spacing, "velocity grid spacing");
    evo->add_option("--fit-lo", cfg.fit_lo);
    evo->add_option("--fit-hi", cfg.fit_hi);
    common(evo);

    auto* cal = app.add_subcommand("caldeira", "oscillator coupled to a continuous bath");
    cal->add_option("--bath", cfg.bath, "bath descriptor (JSON)");
    cal->add_option("--omega", cfg.omega);
    cal->add_option("--sign", cfg.sign, "-1 negative-energy oscillator, +1 positive");
    cal->add_option("--coupling", cfg.coupling, "f(x)^2 in the expression grammar");
    cal->add_option("--scale", cfg.coupling_scale, "multiplies f(x)^2");
    cal->add_option("--oracle-n", cfg.oracle_n, "bath oscillators for the matrix cross-check");
    cal->add_option("--nyquist-samples", cfg.nyquist_samples);
    common(cal);

    auto* hil = app.add_subcommand("hilbert", "Hilbert transform of a closed-form function");
    hil->add_option("--expr", cfg.expr)->required();
    hil->add_option("--lo", cfg.lo);
    hil->add_option("--hi", cfg.hi);
    hil->add_option("--u-lo", cfg.u_lo);
    hil->add_option("--u-hi", cfg.u_hi);
    hil->add_option("--samples", cfg.samples);
    common(hil);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }
    const std::pair<CLI::App*, Command> table[] = {
        {pen, Command::penrose}, {sig, Command::signature}, {roo, Command::roots},   {cri, Command::critical},
        {per, Command::perturb}, {ver, Command::verdict},   {evo, Command::evolve},  {cal, Command::caldeira},
        {hil, Command::hilbert}};
    for (auto [s, c] : table)
        if (s->parsed()) cfg.command = c;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace detail {

struct Artifacts {
    fs::path dir;
    void write(const std::string& name, const std::string& text) const {
        if (!dir.empty()) write_text(dir / name, text);
    }
};

inline void verdict_line(std::ostream& out, const std::string& v) { out << "VERDICT: " << v << "\n"; }

inline CsvTable contour_csv(const DielectricSamples& d) {
    CsvTable t{{"u", "eps_R", "eps_I"}, {}};
    for (std::size_t i = 0; i < d.u.size(); ++i) t.add({d.u[i], d.eps_R[i], d.eps_I[i]});
    return t;
}

inline json crossings_json(const std::vector<CrossingEvent>& cs) {
    json a = json::array();
    for (const auto& c : cs)
        a.push_back({{"u_c", c.u_c},
                     {"kind", to_string(c.kind)},
                     {"eps_R", c.eps_R_at},
                     {"contributes", c.contributes},
                     {"direction", c.direction}});
    return a;
}

inline json winding_json(const WindingReport& r) {
    json j{{"winding", r.winding}, {"critical", r.critical}, {"crossings", crossings_json(r.crossings)}};
    if (r.argument_winding) j["argument_winding"] = *r.argument_winding;
    return j;
}

inline std::string stability(const WindingReport& r) {
    if (r.critical) return "critical";
    return r.winding == 0 ? "stable" : "unstable";
}

inline json roots_json(const std::vector<DispersionRoot>& rs, bool classified = true) {
    json a = json::array();
    for (const auto& r : rs) {
        json e{{"re", r.omega.real()}, {"im", r.omega.imag()}, {"residual", r.residual}, {"multiplicity", r.multiplicity}};
        if (classified) e["class"] = to_string(r.symmetry_class);
        a.push_back(e);
    }
    return a;
}

inline CsvTable roots_csv(const std::vector<DispersionRoot>& rs) {
    CsvTable t{{"re", "im", "residual", "multiplicity"}, {}};
    for (const auto& r : rs) t.add({r.omega.real(), r.omega.imag(), r.residual, double(r.multiplicity)});
    return t;
}

inline int run_penrose(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto f = load_profile(c.profile);
    auto s = f.slope();
    auto po = c.penrose_options();
    json rep = c.to_json();
    if (c.k_steps > 0) {
        std::vector<double> ks;
        for (int i = 0; i <= c.k_steps; ++i) ks.push_back(*c.k_lo + (*c.k_hi - *c.k_lo) * i / c.k_steps);
        auto rs = parallel_map(ks, [&](double k) {
            return winding_number(dielectric(s, k, default_u_grid(s, c.samples), po), po);
        });
        CsvTable t{{"k", "winding", "critical"}, {}};
        bool any_unstable = false, any_critical = false;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            t.add({ks[i], double(rs[i].winding), rs[i].critical ? 1.0 : 0.0});
            any_unstable |= !rs[i].critical && rs[i].winding != 0;
            any_critical |= rs[i].critical;
        }
        art.write("penrose_sweep.csv", t.str());
        std::string v = any_unstable ? "unstable" : (any_critical ? "critical" : "stable");
        rep["verdict"] = v;
        rep["k_steps"] = c.k_steps;
        art.write("report.json", dump_json(rep));
        for (std::size_t i = 0; i < ks.size(); ++i)
            out << "k " << format_number(ks[i]) << " winding " << rs[i].winding << (rs[i].critical ? " critical" : "") << "\n";
        verdict_line(out, v);
        return v == "critical" ? exit_analysis : exit_ok;
    }
    auto d = dielectric(s, *c.k, default_u_grid(s, c.samples), po);
    auto r = winding_number(d, po);
    art.write("penrose_contour.csv", contour_csv(d).str());
    rep.update(winding_json(r));
    rep["verdict"] = stability(r);
    art.write("report.json", dump_json(rep));
    out << "winding: " << r.winding << "\n";
    if (r.argument_winding) out << "argument_winding: " << *r.argument_winding << "\n";
    out << "crossings: " << r.crossings.size() << "\n";
    verdict_line(out, stability(r));
    return r.critical ? exit_analysis : exit_ok;
}

inline int run_signature(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto f = load_profile(c.profile);
    auto s = f.slope();
    auto po = c.penrose_options();
    auto d = dielectric(s, *c.k, default_u_grid(s, c.samples), po);
    auto sp = signature_profile(d, po);
    json rep = c.to_json();
    json iv = json::array();
    for (const auto& i : sp.intervals) iv.push_back({{"u_lo", i.u_lo}, {"u_hi", i.u_hi}, {"sigma", i.sigma}});
    rep["intervals"] = iv;
    rep["neutral"] = sp.neutral;
    rep["frame_shift"] = sp.frame_shift;
    rep["changes"] = sp.changes();
    CsvTable t{{"u", "sigma"}, {}};
    for (double u : d.u) {
        double v = (u - sp.frame_shift) * eps_I_at(s, d.k, u);
        t.add({u - sp.frame_shift, double(v > 0 ? 1 : (v < 0 ? -1 : 0))});
    }
    art.write("signature.csv", t.str());
    art.write("report.json", dump_json(rep));
    out << "signature_changes: " << sp.changes() << "\n";
    out << "frame_shift: " << format_number(sp.frame_shift) << "\n";
    for (const auto& i : sp.intervals)
        out << "interval " << format_number(i.u_lo) << " " << format_number(i.u_hi) << " sigma " << i.sigma << "\n";
    return exit_ok;
}

inline int run_roots(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto f = load_profile(c.profile);
    auto s = f.slope();
    auto o = c.dispersion_options();
    auto upper = find_roots(s, *c.k, o);
    auto all = with_conjugates(upper);
    apply_classes(all, is_reflection_symmetric(f, 1e-12));
    json rep = c.to_json();
    rep["roots"] = roots_json(all);
    rep["unstable"] = upper.size();
    const std::string v = upper.empty() ? "stable" : "unstable";
    rep["verdict"] = v;
    art.write("roots.csv", roots_csv(all).str());
    art.write("report.json", dump_json(rep));
    out << "roots_upper: " << upper.size() << "\n";
    for (const auto& r : all)
        out << "root " << format_number(r.omega.real()) << " " << format_number(r.omega.imag()) << " "
            << to_string(r.symmetry_class) << "\n";
    verdict_line(out, v);
    return exit_ok;
}

inline int run_critical(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    const fs::path path(c.profile);
    const json base = read_json(path);
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    json::json_pointer ptr;
    try {
        ptr = json::json_pointer(c.parameter);
    } catch (const json::exception& e) {
        throw ConfigError("--param is not a JSON pointer: " + c.parameter);
    }
    if (!base.contains(ptr) || !base.at(ptr).is_number())
        throw ConfigError("--param " + c.parameter + " does not name a number in the profile");
    ProfileFamily fam;
    fam.parameter = c.parameter;
    fam.eta_lo = *c.eta_lo;
    fam.eta_hi = *c.eta_hi;
    fam.make = [base, ptr, dir](double eta) {
        json j = base;
        j[ptr] = eta;
        return profile_from_json(j, dir);
    };
    CriticalSearchOptions o;
    o.penrose = c.penrose_options();
    auto st = c.k ? find_critical_state(fam, *c.k, o) : find_critical_state(fam, *c.k_lo, *c.k_hi, o);
    json rep = c.to_json();
    rep["parameter"] = c.parameter;
    rep["kind"] = to_string(st.kind);
    rep["eta"] = st.eta;
    rep["u_c"] = st.u_c;
    rep["k_c"] = st.k_c;
    rep["embedded_mode_signature"] = st.embedded_mode_signature;
    rep["deps_R_du"] = st.deps_R_du;
    rep["second_derivative"] = st.second_derivative;
    art.write("report.json", dump_json(rep));
    out << "kind: " << to_string(st.kind) << "\n";
    out << "eta: " << format_number(st.eta) << "\n";
    out << "u_c: " << format_number(st.u_c) << "\n";
    out << "k_c: " << format_number(st.k_c) << "\n";
    verdict_line(out, "critical");
    return exit_ok;
}

inline ChiPerturbation chi_from(const RunConfig& c) {
    ChiPerturbation chi{c.h, c.d, std::exp(c.eps_exp), c.center, c.amplitude};
    chi.validate();
    return chi;
}

inline int run_perturb(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto f = load_profile(c.profile);
    auto s = f.slope();
    auto chi = chi_from(c);
    StructuralOptions so;
    so.penrose = c.penrose_options();
    auto r = destabilize(s, *c.k, chi, so);
    auto ps = perturbed_slope(s, chi);
    auto d = dielectric(ps, *c.k, detail::perturbed_grid(s, chi, so.support_samples), so.penrose);
    json rep = c.to_json();
    rep["chi"] = {{"h", chi.h}, {"d", chi.d}, {"eps", chi.eps}, {"center", chi.center}, {"amplitude", chi.amplitude}};
    rep["w11_norm"] = r.w11_norm;
    rep["sup_norm"] = r.sup_norm;
    rep["hilbert_at_center"] = r.hilbert_at_center;
    rep["winding_before"] = r.winding_before;
    rep["winding_after"] = r.winding_after;
    rep["accessible"] = r.accessible;
    rep["result"] = to_string(r.verdict);
    rep["crossings_after"] = crossings_json(r.crossings_after);
    const std::string v = r.winding_after != 0 ? "unstable" : "stable";
    rep["verdict"] = v;
    art.write("perturbed_contour.csv", contour_csv(d).str());
    art.write("report.json", dump_json(rep));
    out << "winding_before: " << r.winding_before << "\n";
    out << "winding_after: " << r.winding_after << "\n";
    out << "w11_norm: " << format_number(r.w11_norm) << "\n";
    out << "accessible: " << (r.accessible ? "true" : "false") << "\n";
    verdict_line(out, v);
    return exit_ok;
}

inline int run_verdict(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto f = load_profile(c.profile);
    auto s = f.slope();
    StructuralOptions so;
    so.penrose = c.penrose_options();
    auto w = winding_number(dielectric(s, *c.k, default_u_grid(s, c.samples), so.penrose), so.penrose);
    json rep = c.to_json();
    rep["winding"] = w.winding;
    if (w.critical) {
        verdict_line(out, "critical");
        throw CriticalityError("Penrose contour touches the origin; structural verdict is undefined");
    }
    std::string v;
    if (w.winding != 0) {
        v = "unstable";
    } else {
        auto kr = krein_like_verdict(s, *c.k, so);
        v = to_string(kr.verdict);
        json cps = json::array();
        for (const auto& p : kr.critical_points) cps.push_back({{"location", p.location}, {"type", to_string(p.type)}});
        json ds = json::array();
        for (const auto& e : kr.destabilizable)
            ds.push_back({{"location", e.point.location},
                          {"type", to_string(e.point.type)},
                          {"w11_norm", e.report.w11_norm},
                          {"amplitude", e.report.chi.amplitude},
                          {"h", e.report.chi.h}});
        rep["critical_points"] = cps;
        rep["destabilizable"] = ds;
        rep["maxima_admit"] = kr.maxima_admit;
        rep["minima_admit"] = kr.minima_admit;
        out << "critical_points: " << kr.critical_points.size() << "\n";
        for (const auto& e : kr.destabilizable)
            out << "destabilizable " << to_string(e.point.type) << " at " << format_number(e.point.location) << "\n";
    }
    rep["verdict"] = v;
    art.write("report.json", dump_json(rep));
    out << "winding: " << w.winding << "\n";
    verdict_line(out, v);
    return exit_ok;
}

inline int run_evolve(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto f = load_profile(c.profile);
    TransformOptions to;
    to.spacing = c.spacing;
    to.penrose = c.penrose_options();
    TransformContext ctx(f, *c.k, to);
    auto e = Expression::parse(c.initial);
    auto z0 = ctx.sample([&](double p) { return e(p); });
    std::vector<double> ts;
    const int n = static_cast<int>(std::floor(c.t_end / c.dt + 1e-9));
    for (int i = 0; i <= n; ++i) ts.push_back(c.dt * i);
    auto series = field_series(ctx, z0, ts);
    auto mag = series.magnitude();
    CsvTable t{{"t", "re_E", "im_E", "abs_E"}, {}};
    for (std::size_t i = 0; i < ts.size(); ++i)
        t.add({ts[i], series.moment[i].real(), series.moment[i].imag(), mag[i]});
    art.write("field.csv", t.str());
    json rep = c.to_json();
    rep["initial"] = c.initial;
    rep["t_end"] = c.t_end;
    rep["dt"] = c.dt;
    rep["spacing"] = ctx.spacing();
    rep["grid_points"] = ctx.size();
    const double e0 = diagonal_energy(ctx, diagonal_variables(ctx, z0));
    rep["diagonal_energy"] = e0;
    out << "grid_points: " << ctx.size() << "\n";
    out << "diagonal_energy: " << format_number(e0) << "\n";
    if (c.fit_lo) {
        auto fit = fit_damping(series, *c.fit_lo, *c.fit_hi);
        rep["fit"] = {{"rate", fit.rate},
                      {"peaks", fit.peak_t.size()},
                      {"max_residual", fit.max_residual},
                      {"t_lo", *c.fit_lo},
                      {"t_hi", *c.fit_hi}};
        out << "damping_rate: " << format_number(fit.rate) << "\n";
        out << "peaks: " << fit.peak_t.size() << "\n";
    }
    art.write("report.json", dump_json(rep));
    return exit_ok;
}

inline BathModel bath_from(const RunConfig& c) {
    if (!c.bath.empty()) {
        auto m = load_bath(c.bath);
        return c.coupling_scale == 1.0 ? m : m.scaled(c.coupling_scale);
    }
    auto m = BathModel::expression(c.omega, c.sign, c.coupling);
    return c.coupling_scale == 1.0 ? m : m.scaled(c.coupling_scale);
}

inline int run_caldeira(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto m = bath_from(c);
    NyquistOptions no;
    no.samples = c.nyquist_samples;
    auto ny = cl_nyquist(m, no);
    CaldeiraOptions co;
    if (c.hilbert_tol) co.hilbert.tol = *c.hilbert_tol;
    co.dispersion = c.dispersion_options();
    auto roots = m.uncoupled ? std::vector<DispersionRoot>{} : cl_roots(m, co);
    CsvTable t{{"omega", "re_eps", "im_eps"}, {}};
    for (std::size_t i = 0; i < ny.omega.size(); ++i) t.add({ny.omega[i], ny.eps[i].real(), ny.eps[i].imag()});
    art.write("nyquist.csv", t.str());
    art.write("roots.csv", roots_csv(roots).str());
    json rep = c.to_json();
    rep["omega"] = m.omega;
    rep["sign"] = m.oscillator_sign;
    rep["coupling"] = m.source;
    rep["x_max"] = m.x_max;
    rep["lift"] = ny.lift;
    rep["winding"] = ny.winding;
    rep["poles"] = ny.poles;
    rep["zeros_upper"] = ny.zeros_upper;
    rep["min_abs"] = ny.min_abs;
    rep["roots"] = roots_json(roots, false);
    out << "winding: " << ny.winding << "\n";
    out << "poles: " << ny.poles << "\n";
    out << "zeros_upper: " << ny.zeros_upper << "\n";
    for (const auto& r : roots) out << "root " << format_number(r.omega.real()) << " " << format_number(r.omega.imag()) << "\n";
    if (c.oracle_n > 0) {
        auto o = cl_matrix_oracle(m, c.oracle_n);
        json ev = json::array();
        for (auto w : o.unstable) ev.push_back({{"re", w.real()}, {"im", w.imag()}});
        rep["oracle"] = {{"n", o.n}, {"unstable", ev}, {"threshold", o.threshold}};
        out << "oracle_unstable: " << o.unstable.size() << "\n";
    }
    const std::string v = ny.zeros_upper > 0 ? "unstable" : "stable";
    rep["verdict"] = v;
    art.write("report.json", dump_json(rep));
    verdict_line(out, v);
    return exit_ok;
}

inline int run_hilbert(const RunConfig& c, std::ostream& out, const Artifacts& art) {
    auto e = std::make_shared<Expression>(Expression::parse(c.expr));
    RealFunction g{[e](double x) { return (*e)(x); }, c.lo, c.hi, {}, 0.0, 0.0};
    HilbertOptions ho;
    if (c.hilbert_tol) ho.tol = *c.hilbert_tol;
    const double a = c.u_lo.value_or(c.lo), b = c.u_hi.value_or(c.hi);
    std::vector<double> u;
    for (int i = 0; i < c.samples; ++i) u.push_back(a + (b - a) * i / (c.samples - 1.0));
    auto hs = parallel_map(u, [&](double x) { return hilbert_at(g, x, ho); });
    CsvTable t{{"u", "g", "H"}, {}};
    for (std::size_t i = 0; i < u.size(); ++i) t.add({u[i], (u[i] < c.lo || u[i] > c.hi) ? 0.0 : (*e)(u[i]), hs[i]});
    art.write("hilbert.csv", t.str());
    out << "points: " << u.size() << "\n";
    if (c.out.empty()) out << t.str();
    return exit_ok;
}

}  // namespace detail

/// Runs one analysis. Exit 0 on success, 1 on configuration errors, 2 when
/// the analysis itself fails (criticality, degeneracy, no convergence).
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        cfg.validate();
        detail::Artifacts art{cfg.out};
        if (!cfg.out.empty()) fs::create_directories(cfg.out);
        switch (cfg.command) {
        case Command::penrose: return detail::run_penrose(cfg, out, art);
        case Command::signature: return detail::run_signature(cfg, out, art);
        case Command::roots: return detail::run_roots(cfg, out, art);
        case Command::critical: return detail::run_critical(cfg, out, art);
        case Command::perturb: return detail::run_perturb(cfg, out, art);
        case Command::verdict: return detail::run_verdict(cfg, out, art);
        case Command::evolve: return detail::run_evolve(cfg, out, art);
        case Command::caldeira: return detail::run_caldeira(cfg, out, art);
        case Command::hilbert: return detail::run_hilbert(cfg, out, art);
        }
    } catch (const CriticalityError& e) {
        err << "analysis error: " << e.what() << "\n";
        return exit_analysis;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const fs::filesystem_error& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "analysis error: " << e.what() << "\n";
        return exit_analysis;
    }
    return exit_analysis;
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig cfg;
    if (auto stop = parse_args(argc, argv, cfg, out, err)) return *stop;
    return run(cfg, out, err);
}

}  // namespace chh
