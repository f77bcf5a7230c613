#pragma once

// Run configuration: flat INI sections, every key typed and defaulted.
// Resolution order is defaults, then the config file, then command-line
// overrides; all three go through Config::set so validation is shared.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ldlab/error.hpp"

namespace ldlab {

/// Configuration failure naming the offending key; the CLI maps it to exit 2.
class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : Error(ErrorCode::Format, key.empty() ? what : key + ": " + what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ConfigKey {
    std::string name; ///< section.key
    std::string type; ///< int, real, uint, string
    std::string fallback;
    std::string unit;
    std::string help;
};

/// Every accepted key with its default.
inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"kernel.n", "int", "3", "-", "space dimension (2 or 3 on grids)"},
        {"kernel.alpha", "real", "1", "-", "Riesz exponent, 0 < alpha < n"},
        {"grid.h", "real", "0.0416666666666667", "length", "lattice spacing"},
        {"grid.pad", "int", "3", "cells", "empty cells around generated shapes"},
        {"grid.perimeter", "string", "surface_mesh", "-", "facet | surface_mesh | crofton"},
        {"grid.nonlocal", "string", "convolution", "-", "convolution | direct"},
        {"anneal.mass", "real", "0.5", "mass", "target mass (cell count = round(mass / h^n))"},
        {"anneal.init", "string", "blob", "-", "initial set: blob | union | ball"},
        {"anneal.budget", "uint", "100000", "moves", "proposed moves"},
        {"anneal.initial_temperature", "real", "-1", "energy", "< 0: 0.5 h^(n-1)"},
        {"anneal.decay", "real", "0.999", "-", "temperature factor per sweep, in (0, 1)"},
        {"anneal.sweep_moves", "uint", "100", "moves", "moves per sweep"},
        {"anneal.far_weight", "real", "0.05", "-", "probability of a far swap, in [0, 1]"},
        {"anneal.box_factor", "real", "2", "-", "box half-width in equal-mass ball radii"},
        {"anneal.seed", "uint", "1", "-", "RNG seed (mt19937_64)"},
        {"anneal.snapshot_period", "uint", "100", "sweeps", "sweeps between trace rows"},
        {"sweep.mass_min", "real", "0.001", "mass", "smallest mass of a sweep"},
        {"sweep.mass_max", "real", "1756", "mass", "largest mass of a sweep"},
        {"sweep.per_decade", "int", "4", "-", "masses per decade"},
        {"sweep.spacing_factor", "real", "10", "diameters", "chain / split separation R"},
        {"sweep.eps", "real", "0.05", "-", "non-optimality mass gate"},
        {"sweep.beta", "real", "0", "-", "equipartition bound E <= beta m; 0: 2 e(1)"},
        {"sweep.samples", "uint", "100", "-", "random sets or shapes per check"},
        {"sweep.seed", "uint", "1", "-", "RNG seed for random families"},
        {"competitor.variant", "string", "ball", "-", "ball | ball_chain | rescaled | split_translate | truncated_ball"},
        {"competitor.mass", "real", "1", "mass", "competitor mass"},
        {"competitor.balls", "int", "0", "-", "chain count; 0: ceil(mass)"},
        {"competitor.scale", "real", "1", "-", "rescaling factor l"},
        {"competitor.axis", "int", "0", "-", "cut axis"},
        {"competitor.t", "real", "0", "length", "cut position from the bounding-box minimum"},
        {"competitor.separation", "real", "0", "length", "translation R of the upper piece; 0: 10 diameters"},
        {"competitor.radius", "real", "1", "length", "support radius for truncated_ball"},
        {"star.degree", "int", "4", "-", "maximal harmonic degree"},
        {"star.eps", "real", "0.01", "-", "weight of the nonlocal term"},
        {"star.steps", "int", "200", "-", "descent steps"},
        {"star.step_size", "real", "0.05", "-", "initial descent step"},
        {"star.amplitude", "real", "0.2", "-", "W^{1,inf} size of the random initial shape"},
        {"star.h", "real", "0.0833333333333333", "length", "grid spacing for the nonlocal term"},
    };
    return keys;
}

class Config {
public:
    Config() {
        for (const auto& k : config_keys()) values_[k.name] = k.fallback;
        validate();
    }

    /// Sets one key from text; rejects unknown keys and type errors.
    void set(const std::string& name, const std::string& value) {
        const ConfigKey& key = find(name);
        check_type(key, value);
        values_[name] = value;
    }

    const std::string& text(const std::string& name) const {
        find(name);
        return values_.at(name);
    }
    double real(const std::string& name) const { return std::stod(text(name)); }
    long integer(const std::string& name) const { return std::stol(text(name)); }
    std::uint64_t uinteger(const std::string& name) const { return std::stoull(text(name)); }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Cross-key constraints; call after all sets.
    void validate() const {
        const long n = integer("kernel.n");
        const double alpha = real("kernel.alpha");
        if (n < 2) throw ConfigError("kernel.n", "n must be at least 2");
        if (!(alpha > 0.0 && alpha < static_cast<double>(n))) throw ConfigError("kernel.alpha", "alpha must lie in (0, n)");
        if (!(real("grid.h") > 0.0)) throw ConfigError("grid.h", "h must be positive");
        if (integer("grid.pad") < 1) throw ConfigError("grid.pad", "pad must be at least 1");
        const double decay = real("anneal.decay");
        if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("anneal.decay", "decay must lie in (0, 1)");
        const double fw = real("anneal.far_weight");
        if (!(fw >= 0.0 && fw <= 1.0)) throw ConfigError("anneal.far_weight", "far_weight must lie in [0, 1]");
        if (!(real("anneal.mass") > 0.0)) throw ConfigError("anneal.mass", "mass must be positive");
        if (!(real("anneal.box_factor") >= 1.0)) throw ConfigError("anneal.box_factor", "box_factor must be at least 1");
        one_of("grid.perimeter", {"facet", "surface_mesh", "crofton"});
        one_of("grid.nonlocal", {"convolution", "direct"});
        one_of("anneal.init", {"blob", "union", "ball"});
        one_of("competitor.variant", {"ball", "ball_chain", "rescaled", "split_translate", "truncated_ball"});
        if (!(real("sweep.mass_min") > 0.0 && real("sweep.mass_max") > real("sweep.mass_min")))
            throw ConfigError("sweep.mass_max", "need 0 < mass_min < mass_max");
        if (integer("sweep.per_decade") < 1) throw ConfigError("sweep.per_decade", "per_decade must be positive");
        if (!(real("sweep.spacing_factor") > 0.5)) throw ConfigError("sweep.spacing_factor", "spacing must exceed one diameter");
        if (!(real("competitor.mass") > 0.0)) throw ConfigError("competitor.mass", "mass must be positive");
        if (!(real("competitor.scale") > 0.0)) throw ConfigError("competitor.scale", "scale must be positive");
        if (integer("star.degree") < 0) throw ConfigError("star.degree", "degree must be non-negative");
        if (!(real("star.h") > 0.0)) throw ConfigError("star.h", "h must be positive");
        if (!(real("star.step_size") > 0.0)) throw ConfigError("star.step_size", "step_size must be positive");
    }

    /// Reads an INI file: [section] headers and key = value lines.
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::read_ini(in, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            // duplicate keys and malformed lines land here
            throw ConfigError("", path + ":" + std::to_string(e.line()) + ": " + e.message());
        }
        for (const auto& [section, body] : tree) {
            if (body.empty() && !body.data().empty())
                throw ConfigError(section, "key outside a section");
            for (const auto& [key, value] : body) set(section + "." + key, value.data());
        }
    }

    /// One `section.key = value  # unit: help` line per key.
    static std::string describe() {
        std::ostringstream out;
        for (const auto& k : config_keys())
            out << "  " << k.name << " = " << k.fallback << "  (" << k.type << ", " << k.unit << ") " << k.help << "\n";
        return out.str();
    }

private:
    static const ConfigKey& find(const std::string& name) {
        for (const auto& k : config_keys())
            if (k.name == name) return k;
        throw ConfigError(name, "unknown config key");
    }

    static void check_type(const ConfigKey& key, const std::string& value) {
        std::size_t used = 0;
        bool ok = !value.empty();
        try {
            if (key.type == "int") {
                (void)std::stol(value, &used);
            } else if (key.type == "uint") {
                ok = ok && value[0] != '-';
                (void)std::stoull(value, &used);
            } else if (key.type == "real") {
                const double v = std::stod(value, &used);
                ok = ok && std::isfinite(v);
            } else {
                used = value.size();
            }
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok || used != value.size()) throw ConfigError(key.name, "expected " + key.type + ", got '" + value + "'");
    }

    void one_of(const std::string& name, const std::vector<std::string>& allowed) const {
        const std::string& v = text(name);
        for (const auto& a : allowed)
            if (v == a) return;
        throw ConfigError(name, "unsupported value '" + v + "'");
    }

    std::map<std::string, std::string> values_;
};

/// Defaults overlaid with the file at `path`, validated.
inline Config load_config(const std::string& path) {
    Config c;
    c.load_file(path);
    c.validate();
    return c;
}

} // namespace ldlab
