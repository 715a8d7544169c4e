#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcvi/mc_cavi.hpp"
#include "mcvi/models/nmr.hpp"

namespace mcvi::io {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(what + ": bad number '" + s + "'");
    }
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// two-column whitespace-separated text, '#' comments; intensities are
// renormalized to sum 1 on load
inline nmr::Spectrum load_spectrum(std::istream& in, const std::string& name = "spectrum") {
    nmr::Spectrum s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ls(t);
        double ppm = 0.0, y = 0.0;
        std::string rest;
        if (!(ls >> ppm >> y) || (ls >> rest))
            throw std::runtime_error(name + " line " + std::to_string(lineno) +
                                     ": expected two columns");
        s.ppm.push_back(ppm);
        s.y.push_back(y);
    }
    if (s.ppm.size() < 2) throw std::runtime_error(name + ": needs at least two points");
    double total = 0.0;
    for (double v : s.y) total += v;
    if (!(total > 0.0)) throw std::runtime_error(name + ": intensities must have positive sum");
    for (auto& v : s.y) v /= total;
    return s;
}

inline nmr::Spectrum load_spectrum_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spectrum file: " + path);
    return load_spectrum(in, path);
}

inline void save_spectrum(std::ostream& out, const nmr::Spectrum& s) {
    out << "# ppm intensity\n";
    for (std::size_t i = 0; i < s.ppm.size(); ++i)
        out << format_double(s.ppm[i]) << ' ' << format_double(s.y[i]) << '\n';
}

inline void save_spectrum_file(const std::string& path, const nmr::Spectrum& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write spectrum file: " + path);
    save_spectrum(out, s);
}

// catalog format, one record per line:
//   metabolite <name>
//   multiplet center=<ppm> protons=<z>
//   peak offset=<ppm> weight=<w>
inline nmr::Catalog load_catalog(std::istream& in, const std::string& name = "catalog") {
    nmr::Catalog cat;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> std::runtime_error {
        return std::runtime_error(name + " line " + std::to_string(lineno) + ": " + msg);
    };
    auto kv_pairs = [&](std::istringstream& ls) {
        std::map<std::string, std::string> kv;
        std::string tok;
        while (ls >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size())
                throw fail("expected key=value, got '" + tok + "'");
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        return kv;
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ls(t);
        std::string record;
        ls >> record;
        if (record == "metabolite") {
            std::string met_name;
            std::getline(ls, met_name);
            met_name = trim(met_name);
            if (met_name.empty()) throw fail("metabolite needs a name");
            cat.push_back(nmr::Metabolite{met_name, {}});
        } else if (record == "multiplet") {
            if (cat.empty()) throw fail("multiplet before any metabolite");
            auto kv = kv_pairs(ls);
            if (!kv.count("center") || !kv.count("protons"))
                throw fail("multiplet needs center= and protons=");
            nmr::Multiplet mu;
            mu.center = parse_double(kv["center"], name);
            mu.protons = parse_double(kv["protons"], name);
            if (!(mu.protons > 0.0)) throw fail("protons must be positive");
            cat.back().multiplets.push_back(mu);
        } else if (record == "peak") {
            if (cat.empty() || cat.back().multiplets.empty())
                throw fail("peak before any multiplet");
            auto kv = kv_pairs(ls);
            if (!kv.count("offset") || !kv.count("weight"))
                throw fail("peak needs offset= and weight=");
            nmr::Component comp{parse_double(kv["offset"], name),
                                parse_double(kv["weight"], name)};
            if (!(comp.weight > 0.0)) throw fail("weight must be positive");
            cat.back().multiplets.back().comps.push_back(comp);
        } else {
            throw fail("unknown record '" + record + "'");
        }
    }
    if (cat.empty()) throw std::runtime_error(name + ": empty catalog");
    for (const auto& met : cat) {
        if (met.multiplets.empty())
            throw std::runtime_error(name + ": metabolite '" + met.name + "' has no multiplets");
        for (const auto& mu : met.multiplets)
            if (mu.comps.empty())
                throw std::runtime_error(name + ": a multiplet of '" + met.name +
                                         "' has no peaks");
    }
    return cat;
}

inline nmr::Catalog load_catalog_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open catalog file: " + path);
    return load_catalog(in, path);
}

inline void save_catalog(std::ostream& out, const nmr::Catalog& cat) {
    out << "# metabolite catalog\n";
    for (const auto& met : cat) {
        out << "metabolite " << met.name << '\n';
        for (const auto& mu : met.multiplets) {
            out << "multiplet center=" << format_double(mu.center)
                << " protons=" << format_double(mu.protons) << '\n';
            for (const auto& comp : mu.comps)
                out << "peak offset=" << format_double(comp.offset)
                    << " weight=" << format_double(comp.weight) << '\n';
        }
    }
}

inline void save_catalog_file(const std::string& path, const nmr::Catalog& cat) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write catalog file: " + path);
    save_catalog(out, cat);
}

// flat key = value text with [section] headers; keys outside any section
// live in the "" section
class ConfigFile {
  public:
    ConfigFile() = default;

    static ConfigFile parse(std::istream& in, const std::string& name = "config") {
        ConfigFile cfg;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw std::runtime_error(name + " line " + std::to_string(lineno) +
                                             ": unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                cfg.sections_[section];
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(name + " line " + std::to_string(lineno) +
                                         ": expected key = value");
            std::string key = trim(t.substr(0, eq));
            std::string val = trim(t.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error(name + " line " + std::to_string(lineno) +
                                         ": empty key");
            cfg.sections_[section][key] = val;
        }
        return cfg;
    }

    static ConfigFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        return parse(in, path);
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    double get_double(const std::string& section, const std::string& key,
                      double fallback) const {
        if (!has(section, key)) return fallback;
        return parse_double(get_str(section, key, ""), "config " + section + "." + key);
    }

    int get_int(const std::string& section, const std::string& key, int fallback) const {
        double v = get_double(section, key, fallback);
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw std::runtime_error("config " + section + "." + key + ": expected integer");
        return i;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = get_str(section, key, "");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::runtime_error("config " + section + "." + key + ": expected boolean");
    }

    McSchedule get_schedule(const std::string& section, const std::string& key,
                            McSchedule fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = get_str(section, key, "");
        std::istringstream ls(v);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
            throw std::runtime_error("config " + section + "." + key + ": expected A,B,C");
        const std::string what = "config " + section + "." + key;
        double A = parse_double(trim(a), what), B = parse_double(trim(b), what),
               C = parse_double(trim(c), what);
        return McSchedule(static_cast<int>(A), static_cast<int>(B), static_cast<int>(C));
    }

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

inline void write_manifest(std::ostream& out,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

inline std::map<std::string, std::string> read_manifest(std::istream& in) {
    std::map<std::string, std::string> m;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw std::runtime_error("manifest: expected key = value");
        m[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return m;
}

}  // namespace mcvi::io
