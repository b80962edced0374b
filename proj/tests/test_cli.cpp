#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "chh/cli.hpp"

using namespace chh;

namespace {

const fs::path kConfigs = fs::path(CHH_SOURCE_DIR) / "configs";

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "chh");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string cfg(const char* name) { return (kConfigs / name).string(); }

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("chh_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int verdict_lines(const std::string& s) {
    int n = 0;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);)
        if (line.rfind("VERDICT: ", 0) == 0) ++n;
    return n;
}

}  // namespace

TEST(Cli, PenroseMaxwellianIsStable) {
    auto r = invoke({"penrose", "--profile", cfg("maxwellian.json"), "--k", "1.0"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("winding: 0\n"), std::string::npos);
    EXPECT_NE(r.out.find("VERDICT: stable\n"), std::string::npos);
    EXPECT_EQ(verdict_lines(r.out), 1);
}

TEST(Cli, PerturbedMaxwellianIsUnstable) {
    auto r = invoke({"perturb", "--profile", cfg("maxwellian.json"), "--k", "1.0", "--h", "0.1", "--d", "0.1",
                     "--eps-exp", "-10", "--center", "0"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("winding_after: 1\n"), std::string::npos);
    EXPECT_NE(r.out.find("VERDICT: unstable\n"), std::string::npos);
}

TEST(Cli, CaldeiraReferenceModel) {
    auto r = invoke({"caldeira", "--omega", "1.0", "--coupling", "0.4*x*exp(-0.25*x^2)"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("zeros_upper: 2\n"), std::string::npos);
    EXPECT_NE(r.out.find("VERDICT: unstable\n"), std::string::npos);
    auto pos = invoke({"caldeira", "--omega", "1.0", "--sign", "1", "--coupling", "0.4*x*exp(-0.25*x^2)"});
    EXPECT_NE(pos.out.find("zeros_upper: 0\n"), std::string::npos);
    EXPECT_NE(pos.out.find("VERDICT: stable\n"), std::string::npos);
}

TEST(Cli, StructuralVerdicts) {
    auto a = invoke({"verdict", "--profile", cfg("maxwellian.json"), "--k", "1.0"});
    EXPECT_NE(a.out.find("VERDICT: structurally_stable_DA\n"), std::string::npos) << a.err;
    auto b = invoke({"verdict", "--profile", cfg("bi_maxwellian_stable.json"), "--k", "1.0"});
    EXPECT_NE(b.out.find("VERDICT: structurally_unstable_DA\n"), std::string::npos) << b.err;
    auto c = invoke({"verdict", "--profile", cfg("bi_maxwellian.json"), "--k", "0.5"});
    EXPECT_NE(c.out.find("VERDICT: unstable\n"), std::string::npos) << c.err;
}

TEST(Cli, RootsAndSignature) {
    auto r = invoke({"roots", "--profile", cfg("bi_maxwellian.json"), "--k", "0.5"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("roots_upper: 1\n"), std::string::npos);
    EXPECT_NE(r.out.find("css_pair_member"), std::string::npos);
    auto s = invoke({"signature", "--profile", cfg("bi_maxwellian_stable.json"), "--k", "1.3"});
    EXPECT_NE(s.out.find("signature_changes: 2\n"), std::string::npos);
    EXPECT_EQ(verdict_lines(s.out), 0);
}

TEST(Cli, CriticalSeparationAtLongWavelength) {
    auto r = invoke({"critical", "--profile", cfg("bi_maxwellian.json"), "--eta-lo", "0.5", "--eta-hi", "2", "--k-lo",
                     "0", "--k-hi", "0"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("kind: k_zero_valley\n"), std::string::npos);
    EXPECT_NE(r.out.find("eta: 0.92413887"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(invoke({}).code, 1);
    EXPECT_EQ(invoke({"bogus"}).code, 1);
    EXPECT_EQ(invoke({"penrose", "--profile", cfg("maxwellian.json")}).code, 1);           // no k
    EXPECT_EQ(invoke({"penrose", "--profile", "missing.json", "--k", "1"}).code, 1);
    EXPECT_EQ(invoke({"penrose", "--profile", cfg("maxwellian.json"), "--k", "-1"}).code, 1);
    EXPECT_EQ(invoke({"caldeira", "--coupling", "x*("}).code, 1);                          // parse error
    EXPECT_EQ(invoke({"penrose", "--profile", cfg("maxwellian.json"), "--k", "1", "--hilbert-tol", "0"}).code, 1);
    EXPECT_EQ(invoke({"penrose", "--help"}).code, 0);
    // evolve refuses an unstable equilibrium: analysis error
    EXPECT_EQ(invoke({"evolve", "--profile", cfg("bi_maxwellian.json"), "--k", "0.5", "--t-end", "1"}).code, 2);
}

TEST(Cli, CriticalContourExitsWithAnalysisError) {
    auto dir = scratch("critical");
    write_text(dir / "crit.json", R"({"kind": "bi_maxwellian", "separation": 0.9577874169314229})");
    auto r = invoke({"penrose", "--profile", (dir / "crit.json").string(), "--k", "0.5"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("VERDICT: critical\n"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, ArtifactsAreByteIdentical) {
    auto a = scratch("det_a"), b = scratch("det_b");
    const std::vector<std::vector<std::string>> recipes = {
        {"penrose", "--profile", cfg("maxwellian.json"), "--k", "1.0"},
        {"perturb", "--profile", cfg("maxwellian.json"), "--k", "1.0"},
        {"caldeira", "--bath", cfg("caldeira.json")},
        {"evolve", "--profile", cfg("maxwellian_unit_mass.json"), "--k", "1.0", "--t-end", "5", "--dt", "0.5"},
        {"penrose", "--profile", cfg("bi_maxwellian.json"), "--k-lo", "0.2", "--k-hi", "2", "--k-steps", "4"},
    };
    int i = 0;
    for (auto args : recipes) {
        std::string name = std::to_string(i++);
        auto ra = args, rb = args;
        ra.insert(ra.end(), {"--out", (a / name).string()});
        rb.insert(rb.end(), {"--out", (b / name).string()});
        ASSERT_EQ(invoke(ra).code, 0);
        ::setenv("CHH_THREADS", "3", 1);
        ASSERT_EQ(invoke(rb).code, 0);
        ::unsetenv("CHH_THREADS");
        int files = 0;
        for (auto& e : fs::directory_iterator(a / name)) {
            ++files;
            auto other = b / name / e.path().filename();
            ASSERT_TRUE(fs::exists(other)) << other;
            EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path();
        }
        EXPECT_GE(files, 2) << name;
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, EvolveSeriesLayout) {
    auto dir = scratch("evolve");
    auto r = invoke({"evolve", "--profile", cfg("maxwellian_unit_mass.json"), "--k", "1.0", "--t-end", "1", "--dt",
                     "0.25", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto t = read_csv(dir / "field.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"t", "re_E", "im_E", "abs_E"}));
    ASSERT_EQ(t.rows.size(), 5u);
    for (auto& row : t.rows) EXPECT_NEAR(std::hypot(row[1], row[2]), row[3], 1e-15 * std::max(1.0, row[3]));
    auto rep = read_json(dir / "report.json");
    EXPECT_EQ(rep["command"], "evolve");
    EXPECT_GT(rep["diagonal_energy"].get<double>(), 0.0);
    fs::remove_all(dir);
}

TEST(Io, NumberFormatRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0}) EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
}

TEST(Io, JsonKeysAreSorted) {
    json j;
    j["zeta"] = 1;
    j["alpha"] = 2.5;
    j["mid"] = {{"b", 1}, {"a", std::nan("")}};
    EXPECT_EQ(dump_json(j), "{\n  \"alpha\": 2.5,\n  \"mid\": {\n    \"a\": null,\n    \"b\": 1\n  },\n  \"zeta\": 1\n}\n");
}

TEST(Io, ProfileDescriptors) {
    auto dir = scratch("profiles");
    {
        std::ofstream t(dir / "tab.csv");
        t << "p,f\n";
        for (int i = 0; i <= 240; ++i) {
            double p = -6 + 0.05 * i;
            t << format_number(p) << "," << format_number(std::exp(-p * p)) << "\n";
        }
    }
    write_text(dir / "tab.json", R"({"kind": "tabulated", "file": "tab.csv"})");
    auto tab = load_profile(dir / "tab.json");
    EXPECT_NEAR(tab.evaluate(0.3, 0), std::exp(-0.09), 1e-5);

    auto ex = profile_from_json(json{{"kind", "expression"}, {"f", "exp(-p^2)"}, {"lo", -6}, {"hi", 6}});
    auto mx = profile_from_json(json{{"kind", "maxwellian"}});
    EXPECT_NEAR(ex.evaluate(0.7, 1), mx.evaluate(0.7, 1), 1e-14);

    auto mix = profile_from_json(json::parse(slurp(kConfigs / "bump_on_tail.json")));
    EXPECT_NEAR(mix.evaluate(5.2, 0), 0.02 + std::exp(-5.2 * 5.2), 1e-15);

    auto sh = profile_from_json(json{{"kind", "bi_maxwellian"}, {"separation", 1.5}, {"shift", 0.5}});
    EXPECT_NEAR(sh.evaluate(2.0, 0), profile_from_json(json{{"kind", "bi_maxwellian"}, {"separation", 1.5}}).evaluate(1.5, 0),
                1e-15);

    EXPECT_THROW(profile_from_json(json{{"kind", "lorentzian"}}), ConfigError);
    EXPECT_THROW(profile_from_json(json{{"kind", "bi_maxwellian"}}), ConfigError);
    EXPECT_THROW(profile_from_json(json{{"kind", "maxwellian"}, {"width", "wide"}}), ConfigError);
    EXPECT_THROW(profile_from_json(json{{"kind", "tabulated"}, {"file", "nowhere.csv"}}, dir), ConfigError);
    fs::remove_all(dir);
}

TEST(Io, BathDescriptors) {
    auto m = load_bath(kConfigs / "caldeira.json");
    EXPECT_EQ(m.oscillator_sign, -1);
    EXPECT_NEAR(m.coupling_at(2.0), 0.8 * std::exp(-1.0), 1e-15);
    EXPECT_TRUE(bath_from_json(json{{"uncoupled", true}}).uncoupled);
    EXPECT_THROW(bath_from_json(json{{"sign", 0}, {"coupling", "x*exp(-x^2)"}}), ConfigError);
    EXPECT_THROW(bath_from_json(json{{"coupling", "x*exp(-x^2)"}, {"uncoupled", true}}), ConfigError);
    EXPECT_NEAR(bath_from_json(json{{"coupling", "x*exp(-x^2)"}, {"scale", 0.5}}).coupling_at(1.0), 0.5 * std::exp(-1.0),
                1e-15);
}

TEST(Io, ParallelMapPreservesOrder) {
    std::vector<int> in(100);
    for (int i = 0; i < 100; ++i) in[i] = i;
    for (unsigned threads : {1u, 4u, 200u}) {
        auto out = parallel_map(in, [](int x) { return x * x; }, threads);
        ASSERT_EQ(out.size(), in.size());
        for (int i = 0; i < 100; ++i) EXPECT_EQ(out[i], i * i);
    }
    EXPECT_THROW(parallel_map(in, [](int x) { if (x == 37) throw NotFound("x"); return x; }, 4u), NotFound);
}

TEST(Io, ThreadCountHonoursEnvironment) {
    ::setenv("CHH_THREADS", "2", 1);
    EXPECT_EQ(thread_count(), 2u);
    ::setenv("CHH_THREADS", "zero", 1);
    EXPECT_GE(thread_count(), 1u);
    ::unsetenv("CHH_THREADS");
}
