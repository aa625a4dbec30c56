#pragma once

// CLI subcommands. Each takes a validated-on-entry RunConfig, writes its files
// under output_dir and returns the process exit code.
//
// Exit codes: 0 ok, 2 config or domain error, 3 unphysical parameters or no
// steady state, 4 divergence guard tripped.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimsim/analysis.hpp"
#include "cimsim/config.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/gmps.hpp"
#include "cimsim/io.hpp"
#include "cimsim/scheme_delay.hpp"
#include "cimsim/scheme_feedback.hpp"
#include "cimsim/sweep.hpp"

namespace cim {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitUnphysical = 3, kExitDiverged = 4 };

/// Maps a library exception onto the exit-code contract.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidParameter*>(&e) ||
        dynamic_cast<const IndexError*>(&e) || dynamic_cast<const GaugeError*>(&e) ||
        dynamic_cast<const UnsupportedParity*>(&e) || dynamic_cast<const SingularMatrix*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const PhysicalityError*>(&e) || dynamic_cast<const NoSteadyState*>(&e) ||
        dynamic_cast<const DegenerateMeasurement*>(&e) || dynamic_cast<const ConditioningError*>(&e)) {
        return kExitUnphysical;
    }
    return kExitFailure;
}

namespace detail {

inline std::filesystem::path out_path(const RunConfig& c, const std::string& name) {
    return std::filesystem::path(c.output_dir) / name;
}

inline void write_matrices(const RunConfig& c, const QuadState& s) {
    if (c.format == OutputFormat::Csv) {
        write_text(out_path(c, "sigma_x.csv"), matrix_csv(s.sigma_x));
        write_text(out_path(c, "sigma_p.csv"), matrix_csv(s.sigma_p));
    } else {
        write_text(out_path(c, "sigma_x.json"), matrix_json(s.sigma_x).dump(2) + "\n");
        write_text(out_path(c, "sigma_p.json"), matrix_json(s.sigma_p).dump(2) + "\n");
    }
}

/// Writes a flat key/value report as `<stem>.csv` (key,value rows) or `<stem>.json`.
inline void write_report(const RunConfig& c, const std::string& stem, const nlohmann::ordered_json& report) {
    if (c.format == OutputFormat::Json) {
        write_text(out_path(c, stem + ".json"), report.dump(2) + "\n");
        return;
    }
    std::string s = "key,value\n";
    for (const auto& [k, v] : report.items()) {
        std::string val;
        if (v.is_number_float()) val = fmt17(v.get<double>());
        else if (v.is_null()) val = "";
        else if (v.is_string()) val = v.get<std::string>();
        else val = v.dump();
        s += k + ',' + val + '\n';
    }
    write_text(out_path(c, stem + ".csv"), s);
}

inline nlohmann::json num(double x) { return json_number(x); }

}  // namespace detail

inline int cmd_gmps(const RunConfig& c, std::ostream& log) {
    validate_config(c);
    const GmpsParams p{c.gmps_s, c.gmps_r, c.n_modes, c.epr_squeeze};
    const QuadState s = gmps_state(p);
    const CharacteristicMoments m = entanglement_k(s);
    const GmpsMoments exact = analytic_moments(c.gmps_r);
    detail::write_matrices(c, s);
    nlohmann::ordered_json r;
    r["s"] = c.gmps_s;
    r["r"] = c.gmps_r;
    r["n_modes"] = c.n_modes;
    r["epr_squeeze"] = c.epr_squeeze;
    r["var_ux"] = detail::num(m.var_u_x);
    r["var_up"] = detail::num(m.var_u_p);
    r["var_Ux"] = detail::num(m.var_U_x);
    r["var_Up"] = detail::num(m.var_U_p);
    r["K_numeric"] = detail::num(m.k_measure);
    r["K_analytic"] = exact.k_measure;
    r["K_difference"] = detail::num(m.k_measure - exact.k_measure);
    detail::write_report(c, "gmps", r);
    log << "gmps: K = " << fmt17(m.k_measure) << " (analytic " << fmt17(exact.k_measure) << ")\n";
    return kExitOk;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& log) {
    if (c.scheme == Scheme::Gmps) return cmd_gmps(c, log);
    validate_config(c);
    const CouplingRing ring = c.ring();
    Trajectory tr;
    std::optional<MeasurementRecord> record;
    if (c.scheme == Scheme::A) {
        tr = simulate_scheme_a({c.n_modes, c.eta, c.t_bs, c.loss_tot}, ring, c.rounds, c.record_every);
    } else {
        SchemeBParams p;
        p.n_modes = c.n_modes;
        p.eta = c.eta;
        p.t_b = c.t_bs;
        p.loss_tot = c.loss_tot;
        p.track_means = c.track_means;
        p.seed = c.seed;
        p.pair_order = c.pair_order;
        p.feedback_gain = c.feedback_gain;
        SchemeBRun run = simulate_scheme_b(p, ring, c.rounds, c.record_every);
        tr = std::move(run.trajectory);
        if (c.track_means) record = std::move(run.record);
    }
    if (c.format == OutputFormat::Csv) {
        write_text(detail::out_path(c, "trajectory.csv"), trajectory_csv(tr));
    } else {
        write_text(detail::out_path(c, "trajectory.json"), trajectory_json(tr).dump(2) + "\n");
    }
    detail::write_matrices(c, tr.final_state);
    if (record) {
        std::string s = "round,pair,x_value,p_value\n";
        for (const PairOutcomes& e : record->entries) {
            s += std::to_string(e.round) + ',' + std::to_string(e.pair) + ',' + fmt17(e.x.value) + ',' +
                 fmt17(e.p.value) + '\n';
        }
        write_text(detail::out_path(c, "outcomes.csv"), s);
        std::string m = "mode,mean_x,mean_p\n";
        for (Index k = 0; k < tr.final_state.n_modes(); ++k) {
            m += std::to_string(k) + ',' + fmt17(tr.final_state.mean_x[k]) + ',' + fmt17(tr.final_state.mean_p[k]) + '\n';
        }
        write_text(detail::out_path(c, "means.csv"), m);
    }
    if (tr.diverged) {
        log << "simulate: divergence guard tripped at round " << tr.rounds_run << "\n";
        return kExitDiverged;
    }
    log << "simulate: scheme " << to_string(c.scheme) << ", " << tr.rounds_run
        << " rounds, K = " << fmt17(tr.final_moments.k_measure) << "\n";
    return kExitOk;
}

inline int cmd_sweep(const RunConfig& c, unsigned jobs, std::ostream& log) {
    std::vector<std::string> swept;
    for (const Axis& a : c.sweep.axes) swept.push_back(a.name);
    validate_config(c, swept);
    if (c.sweep.axes.empty()) throw ConfigError("axis1", "sweep needs at least one axis");
    if (c.scheme == Scheme::Gmps) throw ConfigError("scheme", "sweep supports schemes A and B");
    try {
        c.sweep.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError("axis", e.what());
    }
    SweepBase base;
    base.scheme = c.scheme;
    base.n_modes = c.n_modes;
    base.defaults = {c.eta, c.t_bs, c.loss_tot};
    base.ring = c.ring();
    base.simulate_a = c.simulate_a;
    base.max_rounds = c.rounds;
    base.base_seed = c.seed;
    base.pair_order = c.pair_order;
    base.feedback_gain = c.feedback_gain;
    const std::vector<SweepCell> cells = run_sweep(base, c.sweep, jobs);

    if (c.format == OutputFormat::Csv) {
        write_text(detail::out_path(c, "sweep.csv"), sweep_csv(c.sweep, cells));
    } else {
        write_text(detail::out_path(c, "sweep.json"), sweep_json(cells).dump(2) + "\n");
    }
    const std::optional<SweepCell> best = best_cell(cells, c.sweep.eta_max);
    nlohmann::ordered_json b;
    b["K_min"] = best ? detail::num(best->k_measure) : nlohmann::json();
    b["eta"] = best ? nlohmann::json(best->params.eta) : nlohmann::json();
    b["t_bs"] = best ? nlohmann::json(best->params.t_bs) : nlohmann::json();
    b["loss_tot"] = best ? nlohmann::json(best->params.loss_tot) : nlohmann::json();
    b["index"] = best ? nlohmann::json(best->index) : nlohmann::json();
    b["eta_max"] = c.sweep.eta_max ? nlohmann::json(*c.sweep.eta_max) : nlohmann::json();
    write_text(detail::out_path(c, "best.json"), b.dump(2) + "\n");

    std::size_t n_div = 0;
    for (const SweepCell& cell : cells) n_div += cell.diverged ? 1 : 0;
    log << "sweep: " << cells.size() << " cells, " << n_div << " diverged";
    if (best) log << ", K_min = " << fmt17(best->k_measure) << " at eta = " << fmt17(best->params.eta)
                  << ", t_bs = " << fmt17(best->params.t_bs);
    log << "\n";
    return kExitOk;
}

inline int cmd_analytic_a(const RunConfig& c, std::ostream& log) {
    if (c.scheme != Scheme::A) throw ConfigError("scheme", "analytic-a needs scheme = A");
    validate_config(c);
    const SchemeAParams p{c.n_modes, c.eta, c.t_bs, c.loss_tot};
    const TransientModel m = transient_model_a(p);
    nlohmann::ordered_json r;
    r["eta"] = c.eta;
    r["t_bs"] = c.t_bs;
    r["loss_tot"] = c.loss_tot;
    r["xi_x"] = m.xi_x;
    r["xi_p"] = m.xi_p;
    r["chi_x"] = m.chi_x;
    r["chi_p"] = m.chi_p;
    r["w_x"] = detail::num(m.w_x);
    r["w_p"] = detail::num(m.w_p);
    r["W_x"] = detail::num(m.bigw_x);
    r["W_p"] = detail::num(m.bigw_p);
    r["threshold_eta"] = threshold_eta(c.loss_tot);
    std::optional<double> k;
    try {
        k = steady_state_k_a(p);
    } catch (const NoSteadyState&) {
    }
    r["steady_K"] = k ? nlohmann::json(*k) : nlohmann::json();
    r["optimal_K_bound"] = optimal_k_a(c.loss_tot);
    detail::write_report(c, "analytic", r);

    if (c.curve_rounds > 0) {
        std::string s = "round,var_ux,var_up,var_Ux,var_Up,K\n";
        for (long n = 0; n <= c.curve_rounds; ++n) {
            const ModelVariances v = model_variances_at(m, n);
            s += std::to_string(n) + ',' + fmt17(v.u_x) + ',' + fmt17(v.u_p) + ',' + fmt17(v.U_x) + ',' +
                 fmt17(v.U_p) + ',' + fmt17(2.0 * std::sqrt(v.u_x * v.u_p)) + '\n';
        }
        write_text(detail::out_path(c, "analytic_curve.csv"), s);
    }
    if (c.steady && !k) {
        log << "analytic-a: no steady state (eta " << fmt17(c.eta) << " >= threshold "
            << fmt17(threshold_eta(c.loss_tot)) << ")\n";
        return kExitUnphysical;
    }
    log << "analytic-a: threshold eta = " << fmt17(threshold_eta(c.loss_tot));
    if (k) log << ", steady K = " << fmt17(*k);
    log << "\n";
    return kExitOk;
}

inline int cmd_fit(const RunConfig& c, std::ostream& log) {
    if (!c.sigma_x_file) throw ConfigError("sigma_x_file", "is required for fit");
    if (!c.sigma_p_file) throw ConfigError("sigma_p_file", "is required for fit");
    QuadState s;
    s.sigma_x = read_matrix_csv(*c.sigma_x_file);
    s.sigma_p = read_matrix_csv(*c.sigma_p_file);
    if (s.sigma_x.rows() != s.sigma_p.rows()) throw ConfigError("sigma_p_file", "size differs from sigma_x_file");
    if (s.sigma_x.rows() != c.n_modes) {
        throw ConfigError("n_modes", "matrices have " + std::to_string(s.sigma_x.rows()) + " modes");
    }
    s.mean_x = Eigen::VectorXd::Zero(c.n_modes);
    s.mean_p = Eigen::VectorXd::Zero(c.n_modes);
    detail::symmetrize(s.sigma_x);
    detail::symmetrize(s.sigma_p);
    if (!is_physical(s)) throw PhysicalityError("fit: input covariance is not physical");
    const CouplingRing ring = c.ring();
    const ModelFit f = fit_model(s, ring);
    nlohmann::ordered_json r;
    r["s_star"] = f.s_star;
    r["n_modes"] = f.n_modes;
    r["D_x"] = detail::num(f.d_big_x);
    r["d_x"] = detail::num(f.d_small_x);
    r["gamma_x"] = detail::num(f.gamma_x);
    r["D_p"] = detail::num(f.d_big_p);
    r["d_p"] = detail::num(f.d_small_p);
    r["gamma_p"] = detail::num(f.gamma_p);
    r["rms_residual_x"] = detail::num(f.rms_residual_x);
    r["rms_residual_p"] = detail::num(f.rms_residual_p);
    r["degenerate"] = f.degenerate;
    if (c.n_modes % 2 == 0) {
        const CharacteristicMoments m = entanglement_k(to_ferromagnetic_frame(s, ring));
        r["K"] = detail::num(m.k_measure);
    }
    detail::write_report(c, "fit", r);
    log << "fit: d_x = " << fmt17(f.d_small_x) << ", gamma_x = " << fmt17(f.gamma_x)
        << ", rms_x = " << fmt17(f.rms_residual_x) << (f.degenerate ? " (degenerate profile)" : "") << "\n";
    return kExitOk;
}

}  // namespace cim
