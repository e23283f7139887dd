#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "screc/errors.hpp"
#include "screc/io.hpp"
#include "screc/mc.hpp"
#include "screc/parallel.hpp"
#include "screc/problem_gen.hpp"
#include "screc/rpca.hpp"

namespace screc {

/// Penalty selection policy for a solve: an explicit value, one of the two
/// bounds, or a multiple of the data bound.
struct TauPolicy {
    enum class Kind { kExplicit, kDataBound, kOracleBound, kMultiplier };
    Kind kind = Kind::kDataBound;
    double value = 0.0;
};

/// Accepted spellings: "data_bound", "oracle_bound", a number ("123.4"),
/// or a multiplier with x-suffix ("0.5x").
inline TauPolicy parse_tau_policy(const std::string& text) {
    if (text == "data_bound") return {TauPolicy::Kind::kDataBound, 0.0};
    if (text == "oracle_bound") return {TauPolicy::Kind::kOracleBound, 0.0};
    const bool mult = !text.empty() && text.back() == 'x';
    const std::string num = mult ? text.substr(0, text.size() - 1) : text;
    try {
        std::size_t used = 0;
        const double v = std::stod(num, &used);
        if (used != num.size() || !(v > 0.0)) throw std::invalid_argument(num);
        return {mult ? TauPolicy::Kind::kMultiplier : TauPolicy::Kind::kExplicit, v};
    } catch (const std::exception&) {
        throw InvalidArgumentError("tau policy \"" + text +
                                   "\" (want data_bound, oracle_bound, a number, or e.g. 0.5x)");
    }
}

inline double resolve_tau(const TauPolicy& p, const McInstance& inst) {
    switch (p.kind) {
        case TauPolicy::Kind::kExplicit: return p.value;
        case TauPolicy::Kind::kDataBound: return mc_tau_bound_data(inst.observed, inst.omega);
        case TauPolicy::Kind::kOracleBound: return mc_tau_bound_oracle(inst.m_true, inst.omega);
        case TauPolicy::Kind::kMultiplier:
            return p.value * mc_tau_bound_data(inst.observed, inst.omega);
    }
    throw InvalidArgumentError("resolve_tau: bad policy");
}

inline double resolve_tau(const TauPolicy& p, const RpcaInstance& inst) {
    switch (p.kind) {
        case TauPolicy::Kind::kExplicit: return p.value;
        case TauPolicy::Kind::kDataBound: return rpca_tau_bound_data(inst.d, inst.lambda);
        case TauPolicy::Kind::kOracleBound:
            return rpca_tau_bound_oracle(inst.m_true, inst.s_true, inst.lambda);
        case TauPolicy::Kind::kMultiplier:
            return p.value * rpca_tau_bound_data(inst.d, inst.lambda);
    }
    throw InvalidArgumentError("resolve_tau: bad policy");
}

/// One solve outcome, CSV row schema:
///   seed,n1,n2,r,rho,tau_multiplier,tau,rel_err,success,iters,wall_ms
struct TrialRecord {
    std::uint64_t seed = 0;
    std::size_t n1 = 0, n2 = 0, r = 0;
    double rho = 0.0;
    double tau_multiplier = 0.0;
    double tau = 0.0;
    double rel_err = 0.0;
    bool success = false;
    int iters = 0;
    std::optional<bool> certificate_pass;
    long long wall_ms = 0;
};

inline const char* trial_csv_header() {
    return "seed,n1,n2,r,rho,tau_multiplier,tau,rel_err,success,iters,wall_ms";
}

inline std::string trial_csv_row(const TrialRecord& t) {
    std::string row;
    row += std::to_string(t.seed);
    row += ',' + std::to_string(t.n1) + ',' + std::to_string(t.n2) + ',' + std::to_string(t.r);
    row += ',' + format_double(t.rho) + ',' + format_double(t.tau_multiplier) + ',' +
           format_double(t.tau) + ',' + format_double(t.rel_err);
    row += ',';
    row += (t.success ? '1' : '0');
    row += ',' + std::to_string(t.iters) + ',' + std::to_string(t.wall_ms);
    return row;
}

inline nlohmann::json trial_to_json(const TrialRecord& t) {
    nlohmann::json j{{"seed", t.seed},       {"n1", t.n1},
                     {"n2", t.n2},           {"r", t.r},
                     {"rho", t.rho},         {"tau_multiplier", t.tau_multiplier},
                     {"tau", t.tau},         {"rel_err", t.rel_err},
                     {"success", t.success}, {"iters", t.iters},
                     {"wall_ms", t.wall_ms}};
    if (t.certificate_pass.has_value()) j["certificate_pass"] = *t.certificate_pass;
    return j;
}

/// Monte-Carlo study over a (rank x ratio x tau-multiplier) grid.
struct SweepConfig {
    std::string problem;  ///< "mc" or "rpca"
    std::size_t n1 = 0, n2 = 0;
    std::vector<std::size_t> rank_grid;
    std::vector<double> ratio_grid;       ///< sampling (mc) or corruption (rpca) ratios
    std::vector<double> tau_multipliers;  ///< times the data bound
    int trials = 1;
    std::uint64_t base_seed = 0;
    double success_threshold = 1e-3;
    int max_iters = 5000;
    double feas_tol = 1e-6;
    std::optional<double> lambda;  ///< rpca only; default 1/sqrt(max dim)
    double magnitude = 1.0;        ///< rpca corruption magnitude

    void validate() const {
        if (problem != "mc" && problem != "rpca")
            throw InvalidArgumentError("sweep config: problem must be \"mc\" or \"rpca\"");
        if (n1 == 0 || n2 == 0) throw InvalidArgumentError("sweep config: n1, n2 must be positive");
        if (rank_grid.empty() || ratio_grid.empty() || tau_multipliers.empty())
            throw InvalidArgumentError("sweep config: all grids must be nonempty");
        for (std::size_t r : rank_grid)
            if (r == 0 || r > std::min(n1, n2))
                throw InvalidArgumentError("sweep config: rank " + std::to_string(r) +
                                           " outside [1, min(n1,n2)]");
        for (double rho : ratio_grid)
            if (!(rho > 0.0 && rho <= 1.0))
                throw InvalidArgumentError("sweep config: ratio must lie in (0,1]");
        for (double m : tau_multipliers)
            if (!(m > 0.0)) throw InvalidArgumentError("sweep config: tau multiplier must be > 0");
        if (trials < 1) throw InvalidArgumentError("sweep config: trials must be >= 1");
        if (!(success_threshold > 0.0))
            throw InvalidArgumentError("sweep config: success threshold must be > 0");
    }
};

inline SweepConfig parse_sweep_config(const nlohmann::json& j, const std::string& where) {
    detail::reject_unknown_keys(j,
                                {"problem", "n1", "n2", "rank_grid", "ratio_grid",
                                 "tau_multipliers", "trials", "base_seed", "success_threshold",
                                 "max_iters", "feas_tol", "lambda", "magnitude"},
                                where);
    SweepConfig c;
    c.problem = detail::require_field<std::string>(j, "problem", where);
    c.n1 = detail::require_field<std::size_t>(j, "n1", where);
    c.n2 = detail::require_field<std::size_t>(j, "n2", where);
    c.rank_grid = detail::require_field<std::vector<std::size_t>>(j, "rank_grid", where);
    c.ratio_grid = detail::require_field<std::vector<double>>(j, "ratio_grid", where);
    c.tau_multipliers = detail::require_field<std::vector<double>>(j, "tau_multipliers", where);
    c.trials = detail::require_field<int>(j, "trials", where);
    c.base_seed = detail::require_field<std::uint64_t>(j, "base_seed", where);
    if (j.contains("success_threshold"))
        c.success_threshold = detail::require_field<double>(j, "success_threshold", where);
    if (j.contains("max_iters")) c.max_iters = detail::require_field<int>(j, "max_iters", where);
    if (j.contains("feas_tol")) c.feas_tol = detail::require_field<double>(j, "feas_tol", where);
    if (j.contains("lambda")) c.lambda = detail::require_field<double>(j, "lambda", where);
    if (j.contains("magnitude"))
        c.magnitude = detail::require_field<double>(j, "magnitude", where);
    c.validate();
    return c;
}

struct SweepCell {
    std::size_t index = 0;
    std::size_t r = 0;
    double ratio = 0.0;
    double tau_multiplier = 0.0;
};

inline std::vector<SweepCell> sweep_cells(const SweepConfig& c) {
    std::vector<SweepCell> cells;
    std::size_t idx = 0;
    for (std::size_t r : c.rank_grid)
        for (double rho : c.ratio_grid)
            for (double mult : c.tau_multipliers) cells.push_back({idx++, r, rho, mult});
    return cells;
}

/// Per-trial seed pinning: base_seed + cell_index * 10^6 + trial_index.
inline std::uint64_t sweep_trial_seed(std::uint64_t base_seed, std::size_t cell_index,
                                      int trial_index) {
    return base_seed + cell_index * 1000000ULL + static_cast<std::uint64_t>(trial_index);
}

inline TrialRecord run_mc_trial(const SweepConfig& c, const SweepCell& cell, int trial) {
    const std::uint64_t seed = sweep_trial_seed(c.base_seed, cell.index, trial);
    const McInstance inst = make_mc_instance(c.n1, c.n2, cell.r, cell.ratio, seed);
    TrialRecord rec;
    rec.seed = seed;
    rec.n1 = c.n1;
    rec.n2 = c.n2;
    rec.r = cell.r;
    rec.rho = cell.ratio;
    rec.tau_multiplier = cell.tau_multiplier;
    rec.tau = cell.tau_multiplier * mc_tau_bound_data(inst.observed, inst.omega);
    McSolveOptions opts;
    opts.max_iters = c.max_iters;
    opts.feas_tol = c.feas_tol;
    SolveReport rep;
    try {
        rep = solve_mc(inst.observed, inst.omega, rec.tau, opts, &inst.m_true).report;
    } catch (const McNoConvergence& e) {
        rep = e.solution.report;
    }
    rec.rel_err = rep.rel_error.value_or(0.0);
    rec.success = rep.converged && rec.rel_err <= c.success_threshold;
    rec.iters = rep.iterations;
    rec.wall_ms = static_cast<long long>(rep.wall_seconds * 1000.0);
    return rec;
}

inline TrialRecord run_rpca_trial(const SweepConfig& c, const SweepCell& cell, int trial) {
    const std::uint64_t seed = sweep_trial_seed(c.base_seed, cell.index, trial);
    const RpcaInstance inst = make_rpca_instance(c.n1, c.n2, cell.r, cell.ratio, seed,
                                                 c.magnitude, c.lambda.value_or(0.0));
    TrialRecord rec;
    rec.seed = seed;
    rec.n1 = c.n1;
    rec.n2 = c.n2;
    rec.r = cell.r;
    rec.rho = cell.ratio;
    rec.tau_multiplier = cell.tau_multiplier;
    rec.tau = cell.tau_multiplier * rpca_tau_bound_data(inst.d, inst.lambda);
    RpcaSolveOptions opts;
    opts.max_iters = c.max_iters;
    opts.feas_tol = c.feas_tol;
    SolveReport rep;
    try {
        rep = solve_rpca(inst.d, inst.lambda, rec.tau, opts, &inst.m_true).report;
    } catch (const RpcaNoConvergence& e) {
        rep = e.solution.report;
    }
    rec.rel_err = rep.rel_error.value_or(0.0);
    rec.success = rep.converged && rec.rel_err <= c.success_threshold;
    rec.iters = rep.iterations;
    rec.wall_ms = static_cast<long long>(rep.wall_seconds * 1000.0);
    return rec;
}

struct CellSummary {
    SweepCell cell;
    int trials = 0;
    int successes = 0;
    double mean_iters = 0.0;
};

struct SweepResult {
    std::vector<TrialRecord> records;  ///< ordered by (cell, trial)
    std::vector<CellSummary> summaries;
};

/// Called with (task_index, record) as soon as a trial finishes, under a
/// lock. Lets the driver persist completed work even if the run is killed.
using TrialSink = std::function<void(std::size_t, const TrialRecord&)>;

/// Trials run concurrently into indexed slots, so the result is independent
/// of scheduling.
inline SweepResult run_sweep(const SweepConfig& c, unsigned threads = 0,
                             const TrialSink& sink = {}) {
    c.validate();
    const std::vector<SweepCell> cells = sweep_cells(c);
    const std::size_t total = cells.size() * static_cast<std::size_t>(c.trials);
    SweepResult result;
    result.records.resize(total);
    std::mutex sink_mutex;
    parallel_for(total, threads, [&](std::size_t task) {
        const std::size_t cell_idx = task / c.trials;
        const int trial = static_cast<int>(task % c.trials);
        result.records[task] = c.problem == "mc" ? run_mc_trial(c, cells[cell_idx], trial)
                                                 : run_rpca_trial(c, cells[cell_idx], trial);
        if (sink) {
            std::lock_guard<std::mutex> lock(sink_mutex);
            sink(task, result.records[task]);
        }
    });
    for (const SweepCell& cell : cells) {
        CellSummary s;
        s.cell = cell;
        double iter_sum = 0.0;
        for (int t = 0; t < c.trials; ++t) {
            const TrialRecord& rec = result.records[cell.index * c.trials + t];
            ++s.trials;
            s.successes += rec.success ? 1 : 0;
            iter_sum += rec.iters;
        }
        s.mean_iters = iter_sum / s.trials;
        result.summaries.push_back(s);
    }
    return result;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << trial_csv_header() << '\n';
    for (const TrialRecord& rec : result.records) out << trial_csv_row(rec) << '\n';
    for (const CellSummary& s : result.summaries) {
        out << "# cell=" << s.cell.index << " r=" << s.cell.r
            << " ratio=" << format_double(s.cell.ratio)
            << " tau_multiplier=" << format_double(s.cell.tau_multiplier)
            << " trials=" << s.trials << " success_rate="
            << format_double(static_cast<double>(s.successes) / s.trials)
            << " mean_iters=" << format_double(s.mean_iters) << '\n';
    }
}

/// Empirical recovery frontier: log-bisection of the smallest tau (within a
/// multiplicative tolerance) at which the solve recovers the ground truth.
struct FrontierOptions {
    double ratio_tol = 1.1;      ///< stop when hi/lo <= ratio_tol
    double floor_factor = 1e-4;  ///< lower bracket = floor_factor * data bound
    double success_threshold = 1e-3;
    int max_iters = 5000;
    double feas_tol = 1e-6;
};

struct FrontierReport {
    double tau_min_empirical = 0.0;
    double tau_data_bound = 0.0;
    std::optional<double> tau_oracle_bound;
    bool floored = false;  ///< success persisted down to the lower bracket
    bool ordering_ok = false;  ///< tau_min <= oracle <= data (where defined)
};

namespace detail {

template <typename SolveFn>
FrontierReport tau_frontier_impl(double data_bound, std::optional<double> oracle_bound,
                                 const FrontierOptions& opts, SolveFn&& succeeds_at) {
    FrontierReport rep;
    rep.tau_data_bound = data_bound;
    rep.tau_oracle_bound = oracle_bound;
    if (!succeeds_at(data_bound))
        throw RegimeError("tau_frontier: no recovery at the data bound");
    double hi = data_bound;
    double lo = data_bound * opts.floor_factor;
    if (succeeds_at(lo)) {
        rep.tau_min_empirical = lo;
        rep.floored = true;
    } else {
        while (hi / lo > opts.ratio_tol) {
            const double mid = std::sqrt(hi * lo);
            if (succeeds_at(mid))
                hi = mid;
            else
                lo = mid;
        }
        rep.tau_min_empirical = hi;
    }
    // A floored tau_min is only an upper bound on the true frontier, so it
    // cannot contradict the oracle bound.
    const double oracle = oracle_bound.value_or(rep.tau_data_bound);
    rep.ordering_ok = (rep.floored || rep.tau_min_empirical <= oracle * (1.0 + 1e-12)) &&
                      oracle <= rep.tau_data_bound * (1.0 + 1e-12);
    return rep;
}

}  // namespace detail

inline FrontierReport tau_frontier(const McInstance& inst, const FrontierOptions& opts = {}) {
    McSolveOptions sopts;
    sopts.max_iters = opts.max_iters;
    sopts.feas_tol = opts.feas_tol;
    auto succeeds_at = [&](double tau) {
        try {
            const McSolution sol = solve_mc(inst.observed, inst.omega, tau, sopts, &inst.m_true);
            return sol.report.rel_error.value_or(1.0) <= opts.success_threshold;
        } catch (const McNoConvergence&) {
            return false;
        }
    };
    std::optional<double> oracle;
    try {
        oracle = mc_tau_bound_oracle(inst.m_true, inst.omega);
    } catch (const RegimeError&) {
        oracle.reset();
    }
    return detail::tau_frontier_impl(mc_tau_bound_data(inst.observed, inst.omega), oracle, opts,
                                     succeeds_at);
}

inline FrontierReport tau_frontier(const RpcaInstance& inst, const FrontierOptions& opts = {}) {
    RpcaSolveOptions sopts;
    sopts.max_iters = opts.max_iters;
    sopts.feas_tol = opts.feas_tol;
    auto succeeds_at = [&](double tau) {
        try {
            const RpcaSolution sol = solve_rpca(inst.d, inst.lambda, tau, sopts, &inst.m_true);
            return sol.report.rel_error.value_or(1.0) <= opts.success_threshold;
        } catch (const RpcaNoConvergence&) {
            return false;
        }
    };
    return detail::tau_frontier_impl(
        rpca_tau_bound_data(inst.d, inst.lambda),
        rpca_tau_bound_oracle(inst.m_true, inst.s_true, inst.lambda), opts, succeeds_at);
}

}  // namespace screc
