#pragma once

// Flat `key = value` run configuration. `#` starts a comment, lists are
// comma-separated, unknown keys are rejected.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cimsim/couplings.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/scheme_feedback.hpp"
#include "cimsim/sweep.hpp"

namespace cim {

enum class OutputFormat { Csv, Json };

struct RunConfig {
    Scheme scheme = Scheme::B;
    Index n_modes = 0;
    long rounds = 1000;
    long record_every = 1;
    double eta = 1.0;
    double t_bs = 0.5;
    double loss_tot = 0.0;
    std::optional<std::vector<int>> couplings;
    int s_star = 1;
    std::uint64_t coupling_seed = 0;
    double gmps_s = 10.0;
    double gmps_r = 5.0;
    double epr_squeeze = 1e6;
    bool track_means = false;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    OutputFormat format = OutputFormat::Csv;
    PairOrder pair_order = PairOrder::Pipelined;
    double feedback_gain = 1.0;
    /// Scheme A only: steady K is requested by analytic-a.
    bool steady = true;
    /// Scheme A only: number of rounds of sampled transient curves (0 = none).
    long curve_rounds = 0;
    /// Scheme A sweeps: simulate instead of using the closed form.
    bool simulate_a = false;
    std::optional<std::string> sigma_x_file;
    std::optional<std::string> sigma_p_file;
    SweepSpec sweep;

    CouplingRing ring() const {
        if (couplings) {
            if (static_cast<Index>(couplings->size()) != n_modes) {
                throw ConfigError("couplings", "has " + std::to_string(couplings->size()) + " entries, n_modes is " +
                                                   std::to_string(n_modes));
            }
            return CouplingRing(*couplings);
        }
        if (s_star == 1 && coupling_seed == 0) return CouplingRing::ferromagnetic(n_modes);
        return random_ring(n_modes, s_star, coupling_seed);
    }

    friend bool operator==(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

    static std::string serialize(const RunConfig& c);
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
        throw ConfigError(key, "expected a number, got '" + v + "'");
    }
    return x;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline Axis parse_axis(const std::string& key, const std::string& v) {
    const auto parts = split_list(v);
    if (parts.size() != 4 && parts.size() != 5) {
        throw ConfigError(key, "expected 'name, min, max, count[, linear|log]'");
    }
    Axis a;
    a.name = parts[0];
    a.min = parse_double(key, parts[1]);
    a.max = parse_double(key, parts[2]);
    a.count = parse_int<int>(key, parts[3]);
    if (parts.size() == 5) {
        if (parts[4] == "log") a.log_spacing = true;
        else if (parts[4] != "linear") throw ConfigError(key, "spacing must be linear or log");
    }
    return a;
}

}  // namespace detail

/// Parses configuration text. Domain checks that depend on the command run
/// later, in validate_config.
inline RunConfig parse_config(std::string_view text) {
    RunConfig c;
    std::map<std::string, std::string> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key = detail::trim(std::string_view(t).substr(0, eq));
        const std::string val = detail::trim(std::string_view(t).substr(eq + 1));
        if (seen.count(key)) throw ConfigError(key, "given more than once");
        seen[key] = val;

        using namespace detail;
        if (key == "scheme") {
            if (val == "A") c.scheme = Scheme::A;
            else if (val == "B") c.scheme = Scheme::B;
            else if (val == "GMPS") c.scheme = Scheme::Gmps;
            else throw ConfigError(key, "must be A, B or GMPS");
        } else if (key == "n_modes") c.n_modes = parse_int<Index>(key, val);
        else if (key == "rounds") c.rounds = parse_int<long>(key, val);
        else if (key == "record_every") c.record_every = parse_int<long>(key, val);
        else if (key == "eta") c.eta = parse_double(key, val);
        else if (key == "t_bs") c.t_bs = parse_double(key, val);
        else if (key == "loss_tot") c.loss_tot = parse_double(key, val);
        else if (key == "couplings") {
            std::vector<int> signs;
            for (const auto& s : split_list(val)) signs.push_back(parse_int<int>(key, s));
            c.couplings = std::move(signs);
        } else if (key == "s_star") c.s_star = parse_int<int>(key, val);
        else if (key == "coupling_seed") c.coupling_seed = parse_int<std::uint64_t>(key, val);
        else if (key == "gmps_s") c.gmps_s = parse_double(key, val);
        else if (key == "gmps_r") c.gmps_r = parse_double(key, val);
        else if (key == "epr_squeeze") c.epr_squeeze = parse_double(key, val);
        else if (key == "track_means") c.track_means = parse_bool(key, val);
        else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, val);
        else if (key == "output_dir") c.output_dir = val;
        else if (key == "format") {
            if (val == "csv") c.format = OutputFormat::Csv;
            else if (val == "json") c.format = OutputFormat::Json;
            else throw ConfigError(key, "must be csv or json");
        } else if (key == "pair_order") {
            try {
                c.pair_order = parse_pair_order(val);
            } catch (const InvalidParameter& e) {
                throw ConfigError(key, e.what());
            }
        } else if (key == "feedback_gain") c.feedback_gain = parse_double(key, val);
        else if (key == "steady") c.steady = parse_bool(key, val);
        else if (key == "curve_rounds") c.curve_rounds = parse_int<long>(key, val);
        else if (key == "simulate_a") c.simulate_a = parse_bool(key, val);
        else if (key == "sigma_x_file") c.sigma_x_file = val;
        else if (key == "sigma_p_file") c.sigma_p_file = val;
        else if (key == "axis1" || key == "axis2") {
            const std::size_t slot = key == "axis1" ? 0 : 1;
            if (c.sweep.axes.size() < slot + 1) c.sweep.axes.resize(slot + 1);
            c.sweep.axes[slot] = parse_axis(key, val);
        } else if (key == "eta_max") c.sweep.eta_max = parse_double(key, val);
        else throw ConfigError(key, "unknown key");
    }
    if (c.sweep.axes.size() == 2 && c.sweep.axes[0].name.empty()) throw ConfigError("axis1", "axis2 given without axis1");
    if (!seen.count("scheme")) throw ConfigError("scheme", "is required");
    if (!seen.count("n_modes")) throw ConfigError("n_modes", "is required");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string RunConfig::serialize(const RunConfig& c) {
    using detail::fmt_double;
    std::ostringstream o;
    o << "scheme = " << to_string(c.scheme) << "\n";
    o << "n_modes = " << c.n_modes << "\n";
    o << "rounds = " << c.rounds << "\n";
    o << "record_every = " << c.record_every << "\n";
    o << "eta = " << fmt_double(c.eta) << "\n";
    o << "t_bs = " << fmt_double(c.t_bs) << "\n";
    o << "loss_tot = " << fmt_double(c.loss_tot) << "\n";
    if (c.couplings) {
        o << "couplings = ";
        for (std::size_t i = 0; i < c.couplings->size(); ++i) o << (i ? ", " : "") << (*c.couplings)[i];
        o << "\n";
    }
    o << "s_star = " << c.s_star << "\n";
    o << "coupling_seed = " << c.coupling_seed << "\n";
    o << "gmps_s = " << fmt_double(c.gmps_s) << "\n";
    o << "gmps_r = " << fmt_double(c.gmps_r) << "\n";
    o << "epr_squeeze = " << fmt_double(c.epr_squeeze) << "\n";
    o << "track_means = " << (c.track_means ? "true" : "false") << "\n";
    o << "seed = " << c.seed << "\n";
    o << "output_dir = " << c.output_dir << "\n";
    o << "format = " << (c.format == OutputFormat::Csv ? "csv" : "json") << "\n";
    o << "pair_order = " << to_string(c.pair_order) << "\n";
    o << "feedback_gain = " << fmt_double(c.feedback_gain) << "\n";
    o << "steady = " << (c.steady ? "true" : "false") << "\n";
    o << "curve_rounds = " << c.curve_rounds << "\n";
    o << "simulate_a = " << (c.simulate_a ? "true" : "false") << "\n";
    if (c.sigma_x_file) o << "sigma_x_file = " << *c.sigma_x_file << "\n";
    if (c.sigma_p_file) o << "sigma_p_file = " << *c.sigma_p_file << "\n";
    for (std::size_t i = 0; i < c.sweep.axes.size(); ++i) {
        const Axis& a = c.sweep.axes[i];
        o << "axis" << i + 1 << " = " << a.name << ", " << fmt_double(a.min) << ", " << fmt_double(a.max) << ", "
          << a.count << ", " << (a.log_spacing ? "log" : "linear") << "\n";
    }
    if (c.sweep.eta_max) o << "eta_max = " << fmt_double(*c.sweep.eta_max) << "\n";
    return o.str();
}

inline std::string serialize_config(const RunConfig& c) { return RunConfig::serialize(c); }

/// Domain checks for the fields a scheme actually uses. `swept` names the
/// parameters that a sweep overrides and so need no valid base value.
inline void validate_config(const RunConfig& c, const std::vector<std::string>& swept = {}) {
    auto is_swept = [&](const char* name) {
        for (const auto& s : swept) {
            if (s == name) return true;
        }
        return false;
    };
    if (c.n_modes < 2) throw ConfigError("n_modes", "must be >= 2");
    if (c.rounds < 1) throw ConfigError("rounds", "must be >= 1");
    if (c.record_every < 1) throw ConfigError("record_every", "must be >= 1");
    if (c.scheme == Scheme::Gmps) {
        if (c.n_modes < 4 || c.n_modes % 2 != 0) throw ConfigError("n_modes", "GMPS needs an even n_modes >= 4");
        if (!(c.epr_squeeze >= 1.0)) throw ConfigError("epr_squeeze", "must be >= 1");
        return;
    }
    if (!is_swept("eta") && !(c.eta > 0.0)) throw ConfigError("eta", "must be > 0");
    if (!is_swept("loss_tot") && !(c.loss_tot >= 0.0 && c.loss_tot < 1.0)) {
        throw ConfigError("loss_tot", "must lie in [0, 1)");
    }
    if (!is_swept("t_bs")) {
        const bool ok = c.scheme == Scheme::A ? (c.t_bs >= 0.0 && c.t_bs <= 1.0) : (c.t_bs > 0.0 && c.t_bs <= 1.0);
        if (!ok) throw ConfigError("t_bs", c.scheme == Scheme::A ? "must lie in [0, 1]" : "must lie in (0, 1]");
    }
    if (c.s_star != 1 && c.s_star != -1) throw ConfigError("s_star", "must be +1 or -1");
    if (c.couplings) {
        for (int s : *c.couplings) {
            if (s != 1 && s != -1) throw ConfigError("couplings", "entries must be +1 or -1");
        }
    }
    if (c.curve_rounds < 0) throw ConfigError("curve_rounds", "must be >= 0");
    if (!std::isfinite(c.feedback_gain)) throw ConfigError("feedback_gain", "must be finite");
    (void)c.ring();
}

}  // namespace cim
