#pragma once

// Parameter grids over (eta, t_bs, loss_tot) evaluated on a bounded worker
// pool. Cells are independent and results are stored by grid index.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cimsim/couplings.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"
#include "cimsim/scheme_delay.hpp"
#include "cimsim/scheme_feedback.hpp"

namespace cim {

enum class Scheme { A, B, Gmps };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::A: return "A";
        case Scheme::B: return "B";
        case Scheme::Gmps: break;
    }
    return "GMPS";
}

struct Axis {
    std::string name;  // eta, t_bs or loss_tot
    double min = 0.0;
    double max = 0.0;
    int count = 2;
    bool log_spacing = false;

    double value(int i) const {
        if (i == 0) return min;
        if (i == count - 1) return max;
        const double f = static_cast<double>(i) / static_cast<double>(count - 1);
        if (log_spacing) return std::exp(std::log(min) + f * (std::log(max) - std::log(min)));
        return min + f * (max - min);
    }

    void validate() const {
        if (name != "eta" && name != "t_bs" && name != "loss_tot") {
            throw InvalidParameter("sweep axis must be eta, t_bs or loss_tot, got '" + name + "'");
        }
        if (count < 2) throw InvalidParameter("sweep axis " + name + ": count must be >= 2");
        if (!(min < max)) throw InvalidParameter("sweep axis " + name + ": min must be < max");
        if (log_spacing && !(min > 0.0)) throw InvalidParameter("sweep axis " + name + ": log spacing needs min > 0");
        if (name == "eta" && !(min > 0.0)) throw InvalidParameter("sweep axis eta: values must be > 0");
        if (name == "t_bs" && !(min >= 0.0 && max <= 1.0)) throw InvalidParameter("sweep axis t_bs: range must lie in [0, 1]");
        if (name == "loss_tot" && !(min >= 0.0 && max < 1.0)) {
            throw InvalidParameter("sweep axis loss_tot: range must lie in [0, 1)");
        }
    }
};

struct SweepSpec {
    std::vector<Axis> axes;
    std::optional<double> eta_max;

    std::size_t n_cells() const {
        std::size_t n = 1;
        for (const Axis& a : axes) n *= static_cast<std::size_t>(a.count);
        return n;
    }

    void validate() const {
        if (axes.empty() || axes.size() > 2) throw InvalidParameter("sweep needs one or two axes");
        for (const Axis& a : axes) a.validate();
        if (axes.size() == 2 && axes[0].name == axes[1].name) throw InvalidParameter("sweep axes must differ");
        if (eta_max && !(*eta_max > 0.0)) throw InvalidParameter("eta_max must be > 0");
    }
};

/// Point of a sweep: the swept values of one grid cell (row-major, first
/// axis slowest).
struct CellParams {
    double eta = 0.0;
    double t_bs = 0.0;
    double loss_tot = 0.0;
};

struct SweepCell {
    std::size_t index = 0;
    CellParams params;
    double k_measure = std::numeric_limits<double>::quiet_NaN();
    std::optional<long> rounds_to_converge;
    bool diverged = false;
    bool converged = false;
};

struct SweepBase {
    Scheme scheme = Scheme::B;
    Index n_modes = 30;
    CellParams defaults;
    CouplingRing ring;
    /// Scheme A cells use the closed-form steady state unless this is set.
    bool simulate_a = false;
    long max_rounds = kSchemeBRoundCap;
    std::uint64_t base_seed = 0;
    PairOrder pair_order = PairOrder::Pipelined;
    double feedback_gain = 1.0;
};

inline CellParams cell_params(const SweepBase& base, const SweepSpec& spec, std::size_t index) {
    CellParams c = base.defaults;
    std::size_t rest = index;
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
        const Axis& ax = spec.axes[a];
        const auto count = static_cast<std::size_t>(ax.count);
        const double v = ax.value(static_cast<int>(rest % count));
        rest /= count;
        if (ax.name == "eta") c.eta = v;
        else if (ax.name == "t_bs") c.t_bs = v;
        else c.loss_tot = v;
    }
    return c;
}

inline SweepCell evaluate_cell(const SweepBase& base, const SweepSpec& spec, std::size_t index) {
    SweepCell cell;
    cell.index = index;
    cell.params = cell_params(base, spec, index);
    const CellParams& c = cell.params;
    if (base.scheme == Scheme::A) {
        const SchemeAParams p{base.n_modes, c.eta, c.t_bs, c.loss_tot};
        if (!base.simulate_a) {
            try {
                cell.k_measure = steady_state_k_a(p);
                cell.converged = true;
            } catch (const NoSteadyState&) {
                cell.diverged = true;
            }
            return cell;
        }
        const Trajectory tr = simulate_scheme_a(p, base.ring, base.max_rounds, base.max_rounds, true);
        cell.k_measure = tr.final_moments.k_measure;
        cell.diverged = tr.diverged;
        cell.rounds_to_converge = tr.steady_round;
        cell.converged = tr.steady_round.has_value() && !tr.diverged;
        return cell;
    }
    if (base.scheme != Scheme::B) throw InvalidParameter("sweep supports schemes A and B");
    SchemeBParams p;
    p.n_modes = base.n_modes;
    p.eta = c.eta;
    p.t_b = c.t_bs;
    p.loss_tot = c.loss_tot;
    p.seed = cell_seed(base.base_seed, index);
    p.pair_order = base.pair_order;
    p.feedback_gain = base.feedback_gain;
    const SchemeBRun run = simulate_scheme_b(p, base.ring, base.max_rounds, base.max_rounds, true);
    const Trajectory& tr = run.trajectory;
    cell.k_measure = tr.final_moments.k_measure;
    cell.diverged = tr.diverged;
    cell.rounds_to_converge = tr.steady_round;
    cell.converged = tr.steady_round.has_value() && !tr.diverged;
    return cell;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is
/// rethrown after all workers stop.
inline void parallel_for_index(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

inline std::vector<SweepCell> run_sweep(const SweepBase& base, const SweepSpec& spec, unsigned jobs) {
    spec.validate();
    if (base.ring.n_modes() != base.n_modes) throw InvalidParameter("sweep: ring size does not match n_modes");
    std::vector<SweepCell> cells(spec.n_cells());
    parallel_for_index(cells.size(), jobs, [&](std::size_t i) { cells[i] = evaluate_cell(base, spec, i); });
    return cells;
}

/// Cell with the smallest K among non-diverged cells with eta <= eta_max.
/// Ties go to the lowest index.
inline std::optional<SweepCell> best_cell(const std::vector<SweepCell>& cells, std::optional<double> eta_max) {
    std::optional<SweepCell> best;
    for (const SweepCell& c : cells) {
        if (c.diverged || !std::isfinite(c.k_measure)) continue;
        if (eta_max && c.params.eta > *eta_max) continue;
        if (!best || c.k_measure < best->k_measure) best = c;
    }
    return best;
}

}  // namespace cim
