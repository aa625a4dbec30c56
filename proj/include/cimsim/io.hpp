#pragma once

// CSV and JSON emission. Numbers are written with 17 significant digits so
// every double survives a write/read round trip.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "cimsim/config.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/sweep.hpp"
#include "cimsim/trajectory.hpp"

namespace cim {

inline constexpr double kMatrixSymmetryTolerance = 1e-9;

inline std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Finite doubles as JSON numbers, non-finite ones as null.
inline nlohmann::json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline std::string matrix_csv(const Eigen::MatrixXd& m) {
    std::string s;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) s += ',';
            s += fmt17(m(i, j));
        }
        s += '\n';
    }
    return s;
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(json_number(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Parses a square, symmetric (to 1e-9) comma-separated matrix.
inline Eigen::MatrixXd parse_matrix_csv(const std::string& text, const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : detail::split_list(t)) row.push_back(detail::parse_double(what, cell));
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Index>(rows.size());
    if (n == 0) throw ConfigError(what, "matrix file is empty");
    Eigen::MatrixXd m(n, n);
    for (Index i = 0; i < n; ++i) {
        if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
            throw ConfigError(what, "matrix is not square (row " + std::to_string(i + 1) + " has " +
                                        std::to_string(rows[static_cast<std::size_t>(i)].size()) + " entries, expected " +
                                        std::to_string(n) + ")");
        }
        for (Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kMatrixSymmetryTolerance) {
        throw ConfigError(what, "matrix is not symmetric (max |m - m^T| = " + fmt17(asym) + ")");
    }
    return m;
}

inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open matrix file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_matrix_csv(ss.str(), path);
}

inline const char* kTrajectoryHeader = "round,var_ux,var_up,var_Ux,var_Up,K,diverged";

inline std::string trajectory_csv(const Trajectory& tr) {
    std::string s = kTrajectoryHeader;
    s += '\n';
    for (const TrajectoryPoint& p : tr.points) {
        const auto& m = p.moments;
        s += std::to_string(p.round) + ',' + fmt17(m.var_u_x) + ',' + fmt17(m.var_u_p) + ',' + fmt17(m.var_U_x) + ',' +
             fmt17(m.var_U_p) + ',' + fmt17(m.k_measure) + ',' + (p.diverged ? "1" : "0") + '\n';
    }
    return s;
}

inline nlohmann::json trajectory_json(const Trajectory& tr) {
    nlohmann::json rows = nlohmann::json::array();
    for (const TrajectoryPoint& p : tr.points) {
        const auto& m = p.moments;
        rows.push_back({{"round", p.round},
                        {"var_ux", json_number(m.var_u_x)},
                        {"var_up", json_number(m.var_u_p)},
                        {"var_Ux", json_number(m.var_U_x)},
                        {"var_Up", json_number(m.var_U_p)},
                        {"K", json_number(m.k_measure)},
                        {"diverged", p.diverged}});
    }
    return rows;
}

inline const char* sweep_header(const SweepSpec& spec) {
    (void)spec;
    return "index,eta,t_bs,loss_tot,K,rounds_to_converge,diverged,converged";
}

inline std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepCell>& cells) {
    std::string s = sweep_header(spec);
    s += '\n';
    for (const SweepCell& c : cells) {
        s += std::to_string(c.index) + ',' + fmt17(c.params.eta) + ',' + fmt17(c.params.t_bs) + ',' +
             fmt17(c.params.loss_tot) + ',' + fmt17(c.k_measure) + ',' +
             (c.rounds_to_converge ? std::to_string(*c.rounds_to_converge) : std::string()) + ',' +
             (c.diverged ? "1" : "0") + ',' + (c.converged ? "1" : "0") + '\n';
    }
    return s;
}

inline nlohmann::json cell_json(const SweepCell& c) {
    return {{"index", c.index},
            {"eta", c.params.eta},
            {"t_bs", c.params.t_bs},
            {"loss_tot", c.params.loss_tot},
            {"K", json_number(c.k_measure)},
            {"rounds_to_converge", c.rounds_to_converge ? nlohmann::json(*c.rounds_to_converge) : nlohmann::json()},
            {"diverged", c.diverged},
            {"converged", c.converged}};
}

inline nlohmann::json sweep_json(const std::vector<SweepCell>& cells) {
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepCell& c : cells) rows.push_back(cell_json(c));
    return rows;
}

}  // namespace cim
