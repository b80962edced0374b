#pragma once

// Config loading and deterministic artifact writers for the command line.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "caldeira.hpp"
#include "equilibria.hpp"
#include "errors.hpp"

namespace chh {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Number formatting

/// 17 significant digits: every double round-trips.
inline std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        if (row.size() != header.size()) throw Error("CSV row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
        out += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_number(r[i]);
            out += '\n';
        }
        return out;
    }
};

/// Numeric CSV with one header row. Blank lines and lines starting with '#' are skipped.
inline CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!have_header) {
            for (auto& h : cells) {
                h.erase(0, h.find_first_not_of(" \t"));
                h.erase(h.find_last_not_of(" \t") + 1);
            }
            t.header = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " columns");
        std::vector<double> row;
        for (const auto& s : cells) {
            char* end = nullptr;
            double v = std::strtod(s.c_str(), &end);
            while (end && (*end == ' ' || *end == '\t')) ++end;
            if (end == s.c_str() || (end && *end != '\0'))
                throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a number: " + s);
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw ConfigError(path.string() + " has no header row");
    return t;
}

inline std::vector<double> csv_column(const CsvTable& t, std::size_t j) {
    std::vector<double> c;
    for (const auto& r : t.rows) c.push_back(r[j]);
    return c;
}

// ---------------------------------------------------------------------------
// JSON

/// nlohmann's default object is a sorted map, so keys come out in a fixed
/// order; doubles print as the shortest text that round-trips. Non-finite
/// values become null rather than invalid JSON.
inline json canonical(const json& j) {
    if (j.is_number_float()) {
        double v = j.get<double>();
        if (!std::isfinite(v)) return nullptr;
        return v == 0.0 ? json(0.0) : j;
    }
    if (j.is_array()) {
        json a = json::array();
        for (const auto& e : j) a.push_back(canonical(e));
        return a;
    }
    if (j.is_object()) {
        json o = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) o[it.key()] = canonical(it.value());
        return o;
    }
    return j;
}

inline std::string dump_json(const json& j) { return canonical(j).dump(2) + "\n"; }

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Descriptors

namespace detail {

inline double number_field(const json& j, const char* key, std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(std::string("missing numeric field '") + key + "'");
    }
    if (!j[key].is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    double v = j[key].get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string("field '") + key + "' must be finite");
    return v;
}

inline std::string string_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw ConfigError(std::string("missing string field '") + key + "'");
    return j[key].get<std::string>();
}

inline fs::path resolve(const fs::path& base, const std::string& file) {
    fs::path p(file);
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) throw ConfigError("referenced file does not exist: " + p.string());
    return p;
}

inline GaussianComponent component(const json& j) {
    GaussianComponent c;
    c.center = number_field(j, "center", 0.0);
    c.width = number_field(j, "width", 1.0);
    c.amplitude = number_field(j, "amplitude", 1.0);
    return c;
}

}  // namespace detail

/// Profile descriptor:
///   {"kind": "maxwellian", "center", "width", "amplitude"}
///   {"kind": "bi_maxwellian", "separation", "width", "amplitude", "center"}
///   {"kind": "mixture", "components": [{"center", "width", "amplitude"}, ...]}
///   {"kind": "expression", "f": "exp(-p^2)", "lo", "hi"}
///   {"kind": "tabulated", "file": "table.csv"}  columns p, f [, df [, d2f]]
/// plus an optional "shift" (Galilean boost of the whole profile).
/// Relative file names resolve against base.
inline EquilibriumProfile profile_from_json(const json& j, const fs::path& base = ".") {
    using detail::number_field;
    if (!j.is_object()) throw ConfigError("profile descriptor must be a JSON object");
    const std::string kind = detail::string_field(j, "kind");
    auto mk = [&]() -> EquilibriumProfile {
        if (kind == "maxwellian") {
            auto c = detail::component(j);
            return EquilibriumProfile::maxwellian(c.center, c.width, c.amplitude);
        }
        if (kind == "bi_maxwellian")
            return EquilibriumProfile::bi_maxwellian(number_field(j, "separation"), number_field(j, "width", 1.0),
                                                     number_field(j, "amplitude", 1.0), number_field(j, "center", 0.0));
        if (kind == "mixture") {
            if (!j.contains("components") || !j["components"].is_array())
                throw ConfigError("mixture profile needs a 'components' array");
            std::vector<GaussianComponent> cs;
            for (const auto& c : j["components"]) cs.push_back(detail::component(c));
            return EquilibriumProfile::mixture(std::move(cs));
        }
        if (kind == "expression")
            return EquilibriumProfile::expression(detail::string_field(j, "f"), number_field(j, "lo"), number_field(j, "hi"));
        if (kind == "tabulated") {
            auto t = read_csv(detail::resolve(base, detail::string_field(j, "file")));
            if (t.header.size() < 2 || t.header.size() > 4)
                throw ConfigError("tabulated profile needs 2 to 4 columns: p, f [, df [, d2f]]");
            std::vector<double> df, d2f;
            if (t.header.size() > 2) df = csv_column(t, 2);
            if (t.header.size() > 3) d2f = csv_column(t, 3);
            return EquilibriumProfile::tabulated(csv_column(t, 0), csv_column(t, 1), df, d2f);
        }
        throw ConfigError("unknown profile kind '" + kind + "'");
    };
    auto f = mk();
    if (j.contains("shift")) f = f.shifted(number_field(j, "shift"));
    return f;
}

inline EquilibriumProfile load_profile(const fs::path& path) {
    return profile_from_json(read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

/// Bath descriptor:
///   {"omega": 1, "sign": -1, "coupling": "0.4*x*exp(-0.25*x^2)", "x_max": optional}
///   {"omega": 1, "sign": -1, "file": "coupling.csv"}   columns x, f2
///   {"omega": 1, "sign": -1, "uncoupled": true}
/// "coupling" is f(x)^2 on x >= 0; "scale" multiplies it.
inline BathModel bath_from_json(const json& j, const fs::path& base = ".") {
    using detail::number_field;
    if (!j.is_object()) throw ConfigError("bath descriptor must be a JSON object");
    const double omega = number_field(j, "omega", 1.0);
    const double s = number_field(j, "sign", -1.0);
    if (s != 1.0 && s != -1.0) throw ConfigError("bath 'sign' must be +1 or -1");
    const int sign = static_cast<int>(s);
    BathModel m;
    const int given = int(j.contains("coupling")) + int(j.contains("file")) + int(j.value("uncoupled", false));
    if (given != 1) throw ConfigError("bath needs exactly one of 'coupling', 'file', 'uncoupled'");
    if (j.value("uncoupled", false)) {
        m = BathModel::make_uncoupled(omega, sign);
    } else if (j.contains("file")) {
        auto t = read_csv(detail::resolve(base, detail::string_field(j, "file")));
        if (t.header.size() != 2) throw ConfigError("coupling table needs two columns: x, f2");
        m = BathModel::tabulated(omega, sign, csv_column(t, 0), csv_column(t, 1));
    } else {
        std::optional<double> xm;
        if (j.contains("x_max")) xm = number_field(j, "x_max");
        m = BathModel::expression(omega, sign, detail::string_field(j, "coupling"), xm);
    }
    if (j.contains("scale")) m = m.scaled(number_field(j, "scale"));
    return m;
}

inline BathModel load_bath(const fs::path& path) {
    return bath_from_json(read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// ---------------------------------------------------------------------------
// Parallel sweeps

/// Worker cap: CHH_THREADS if set to a positive integer, else the hardware count.
inline unsigned thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* e = std::getenv("CHH_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(e, &end, 10);
        if (end != e && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
    }
    return n;
}

/// out[i] = fn(in[i]); the result order never depends on scheduling. The
/// first exception (by index) is rethrown after all workers finish.
template <class T, class F>
auto parallel_map(const std::vector<T>& in, F fn, unsigned threads = thread_count()) {
    using R = decltype(fn(in.front()));
    std::vector<std::optional<R>> slots(in.size());
    std::vector<std::exception_ptr> errors(in.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(in.size())));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < in.size(); i += workers) {
            try {
                slots[i].emplace(fn(in[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(in.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace chh
