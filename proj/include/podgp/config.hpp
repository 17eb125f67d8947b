#pragma once

#include "podgp/errors.hpp"
#include "podgp/galerkin.hpp"
#include "podgp/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

// Flat key/value run configuration:
//   key = value            # trailing comments allowed
// Keys are fixed words or dotted families (material.<tag>, bc.<surface>,
// model.<id>, instance.<k>, prediction.<d>). Unknown keys and duplicates
// are rejected so typos fail loudly instead of silently using defaults.

namespace podgp {

class Config {
  public:
    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config: " + path);
        return parse_stream(in, path);
    }

    static Config parse_string(const std::string& text, const std::string& name = "<string>") {
        std::istringstream in(text);
        return parse_stream(in, name);
    }

    bool has(const std::string& key) const { return lookup_.count(key) != 0; }

    const std::string& raw(const std::string& key) const {
        const auto it = lookup_.find(key);
        if (it == lookup_.end()) throw config_error("missing config key '" + key + "'");
        return entries_[it->second].value;
    }

    std::string get_string(const std::string& key) const { return raw(key); }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? raw(key) : fallback;
    }

    double get_double(const std::string& key) const {
        return parse_double(raw(key), key);
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long get_int(const std::string& key) const {
        const std::string& v = raw(key);
        std::size_t pos = 0;
        long out = 0;
        try {
            out = std::stol(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size())
            throw config_error("key '" + key + "': expected an integer, got '" + v + "'");
        return out;
    }

    long get_int(const std::string& key, long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    /// Keys of a dotted family, e.g. family "material" yields the suffixes
    /// of every material.<tag> entry, in file order.
    std::vector<std::string> family(const std::string& prefix) const {
        std::vector<std::string> suffixes;
        for (const Entry& e : entries_)
            if (e.key.size() > prefix.size() + 1 && e.key.compare(0, prefix.size(), prefix) == 0 &&
                e.key[prefix.size()] == '.')
                suffixes.push_back(e.key.substr(prefix.size() + 1));
        return suffixes;
    }

    /// Normalized re-emission; parses back to the same entries.
    void print(std::ostream& out) const {
        for (const Entry& e : entries_) out << e.key << " = " << e.value << '\n';
    }

    MaterialField materials() const {
        MaterialField mat;
        for (const std::string& tag_str : family("material")) {
            const std::string key = "material." + tag_str;
            int tag = 0;
            try {
                std::size_t pos = 0;
                tag = std::stoi(tag_str, &pos);
                if (pos != tag_str.size()) throw config_error("");
            } catch (const std::exception&) {
                throw config_error("key '" + key + "': material tag must be an integer");
            }
            std::istringstream v(raw(key));
            Material m;
            if (!(v >> m.kappa >> m.rho >> m.c_s) || !v.eof())
                throw config_error("key '" + key + "': expected '<kappa> <rho> <cs>'");
            if (!(m.kappa > 0.0) || !(m.rho > 0.0) || !(m.c_s > 0.0))
                throw config_error("key '" + key + "': properties must be positive");
            mat.regions[tag] = m;
        }
        if (mat.regions.empty()) throw config_error("no material.<tag> entries");
        return mat;
    }

    BoundaryCondition boundary() const {
        BoundaryCondition bc;
        for (const std::string& name : family("bc")) {
            const std::string key = "bc." + name;
            Surface s;
            try {
                s = surface_from_name(name);
            } catch (const validation_error&) {
                throw config_error("key '" + key + "': unknown surface name '" + name + "'");
            }
            std::istringstream v(raw(key));
            std::string kind;
            v >> kind;
            SurfaceBC sbc;
            if (kind == "adiabatic") {
                if (!v.eof() && (v >> std::ws, !v.eof()))
                    throw config_error("key '" + key + "': adiabatic takes no parameters");
            } else if (kind == "robin") {
                sbc.kind = SurfaceBC::Kind::robin;
                if (!(v >> sbc.h >> sbc.t_ref) || !v.eof())
                    throw config_error("key '" + key + "': expected 'robin <h> <t_ref>'");
                if (sbc.h < 0.0) throw config_error("key '" + key + "': h must be >= 0");
            } else {
                throw config_error("key '" + key + "': kind must be adiabatic or robin");
            }
            bc.by_tag[static_cast<int>(s)] = sbc;
        }
        return bc;
    }

  private:
    struct Entry {
        std::string key, value;
    };

    static double parse_double(const std::string& v, const std::string& key) {
        std::size_t pos = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size())
            throw config_error("key '" + key + "': expected a number, got '" + v + "'");
        return out;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static bool key_known(const std::string& key) {
        static const char* fixed[] = {
            "mesh",       "snapshots",     "powermap",       "modes",       "quad_degree",
            "t0",         "t1",            "dt",             "t_amb",       "region",
            "basis",      "system",        "trajectory",     "prediction",  "basis_out",
            "system_out", "trajectory_out", "prediction_out", "report_out", "dns_out",
            "bench_out",  "dns_steps",     "dns_dt",         "dns_keep_every", "bench_reps",
        };
        for (const char* k : fixed)
            if (key == k) return true;
        static const char* families[] = {"material.", "bc.", "model.", "instance.",
                                         "prediction."};
        for (const char* f : families)
            if (key.size() > std::string(f).size() && key.rfind(f, 0) == 0) return true;
        return false;
    }

    static Config parse_stream(std::istream& in, const std::string& name) {
        Config cfg;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string stripped = trim(line);
            if (stripped.empty()) continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw config_error(name + ":" + std::to_string(line_no) +
                                   ": expected 'key = value'");
            Entry e{trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1))};
            if (e.key.empty() || e.value.empty())
                throw config_error(name + ":" + std::to_string(line_no) +
                                   ": empty key or value");
            if (!key_known(e.key))
                throw config_error(name + ":" + std::to_string(line_no) + ": unknown key '" +
                                   e.key + "'");
            if (cfg.lookup_.count(e.key))
                throw config_error(name + ":" + std::to_string(line_no) + ": duplicate key '" +
                                   e.key + "'");
            cfg.lookup_[e.key] = cfg.entries_.size();
            cfg.entries_.push_back(std::move(e));
        }
        return cfg;
    }

    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> lookup_;
};

} // namespace podgp
