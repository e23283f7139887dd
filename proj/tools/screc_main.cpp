// Experiment driver: instance generation, solves, penalty-bound studies,
// certificate checks and Monte-Carlo sweeps over the recovery programs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "screc/screc.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitPass = 0;
constexpr int kExitError = 1;    // usage / IO / regime errors
constexpr int kExitFailure = 2;  // quantitative failure (recovery or certificate)

struct GenConfig {
    std::string problem;
    std::size_t n1 = 0, n2 = 0, r = 0;
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string model = "bernoulli";
    std::optional<double> lambda;
    double magnitude = 1.0;
};

GenConfig parse_gen_config(const fs::path& path) {
    const json j = screc::detail::load_json(path);
    const std::string where = path.string();
    screc::detail::reject_unknown_keys(
        j, {"problem", "n1", "n2", "r", "rho", "seed", "model", "lambda", "magnitude"}, where);
    GenConfig c;
    c.problem = screc::detail::require_field<std::string>(j, "problem", where);
    if (c.problem != "mc" && c.problem != "rpca")
        throw screc::IoError(where + ": key \"problem\" must be \"mc\" or \"rpca\"");
    c.n1 = screc::detail::require_field<std::size_t>(j, "n1", where);
    c.n2 = screc::detail::require_field<std::size_t>(j, "n2", where);
    c.r = screc::detail::require_field<std::size_t>(j, "r", where);
    c.rho = screc::detail::require_field<double>(j, "rho", where);
    c.seed = screc::detail::require_field<std::uint64_t>(j, "seed", where);
    if (j.contains("model")) c.model = screc::detail::require_field<std::string>(j, "model", where);
    if (c.model != "bernoulli" && c.model != "uniform")
        throw screc::IoError(where + ": key \"model\" must be \"bernoulli\" or \"uniform\"");
    if (j.contains("lambda")) c.lambda = screc::detail::require_field<double>(j, "lambda", where);
    if (j.contains("magnitude"))
        c.magnitude = screc::detail::require_field<double>(j, "magnitude", where);
    if (c.n1 == 0 || c.n2 == 0)
        throw screc::IoError(where + ": keys \"n1\"/\"n2\" must be positive");
    if (c.r > std::min(c.n1, c.n2))
        throw screc::IoError(where + ": key \"r\" exceeds min(n1, n2)");
    if (!(c.rho >= 0.0 && c.rho <= 1.0))
        throw screc::IoError(where + ": key \"rho\" must lie in [0, 1]");
    return c;
}

void emit(const json& j, const std::optional<std::string>& out_path) {
    const std::string text = j.dump(2);
    std::cout << text << '\n';
    if (out_path) {
        std::ofstream out(*out_path);
        if (!out) throw screc::IoError("cannot open output file " + *out_path);
        out << text << '\n';
    }
}

int cmd_gen(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override) {
    GenConfig cfg = parse_gen_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    const auto model = cfg.model == "bernoulli" ? screc::SupportModel::kBernoulli
                                                : screc::SupportModel::kUniform;
    if (cfg.problem == "mc") {
        const screc::McInstance inst =
            screc::make_mc_instance(cfg.n1, cfg.n2, cfg.r, cfg.rho, cfg.seed, model);
        screc::write_mc_instance(out_dir, inst, cfg.rho, cfg.model);
        std::cout << "generated mc instance: " << cfg.n1 << "x" << cfg.n2 << " r=" << cfg.r
                  << " rho=" << cfg.rho << " (realized " << inst.sampling_ratio << ") seed="
                  << cfg.seed << " -> " << out_dir << '\n';
    } else {
        const screc::RpcaInstance inst = screc::make_rpca_instance(
            cfg.n1, cfg.n2, cfg.r, cfg.rho, cfg.seed, cfg.magnitude, cfg.lambda.value_or(0.0),
            model);
        screc::write_rpca_instance(out_dir, inst, cfg.rho, cfg.model);
        std::cout << "generated rpca instance: " << cfg.n1 << "x" << cfg.n2 << " r=" << cfg.r
                  << " rho=" << cfg.rho << " (realized " << inst.corruption_ratio
                  << ") lambda=" << inst.lambda << " seed=" << cfg.seed << " -> " << out_dir
                  << '\n';
    }
    return kExitPass;
}

int cmd_solve(const std::string& dir, const std::string& tau_text, double threshold,
              int max_iters, double feas_tol, const std::optional<std::string>& out_path) {
    const screc::TauPolicy policy = screc::parse_tau_policy(tau_text);
    const std::string kind = screc::read_instance_kind(dir);
    screc::TrialRecord rec;
    if (kind == "mc") {
        const screc::McInstance inst = screc::read_mc_instance(dir);
        rec.seed = inst.seed;
        rec.n1 = inst.m_true.rows();
        rec.n2 = inst.m_true.cols();
        rec.r = inst.rank;
        rec.rho = inst.requested_ratio;
        rec.tau = screc::resolve_tau(policy, inst);
        rec.tau_multiplier =
            policy.kind == screc::TauPolicy::Kind::kMultiplier ? policy.value : 0.0;
        screc::McSolveOptions opts;
        opts.max_iters = max_iters;
        opts.feas_tol = feas_tol;
        screc::SolveReport rep;
        try {
            rep = screc::solve_mc(inst.observed, inst.omega, rec.tau, opts, &inst.m_true).report;
        } catch (const screc::McNoConvergence& e) {
            rep = e.solution.report;
        }
        rec.rel_err = rep.rel_error.value_or(0.0);
        rec.success = rep.converged && rec.rel_err <= threshold;
        rec.iters = rep.iterations;
        rec.wall_ms = static_cast<long long>(rep.wall_seconds * 1000.0);
    } else {
        const screc::RpcaInstance inst = screc::read_rpca_instance(dir);
        rec.seed = inst.seed;
        rec.n1 = inst.m_true.rows();
        rec.n2 = inst.m_true.cols();
        rec.r = inst.rank;
        rec.rho = inst.requested_ratio;
        rec.tau = screc::resolve_tau(policy, inst);
        rec.tau_multiplier =
            policy.kind == screc::TauPolicy::Kind::kMultiplier ? policy.value : 0.0;
        screc::RpcaSolveOptions opts;
        opts.max_iters = max_iters;
        opts.feas_tol = feas_tol;
        screc::SolveReport rep;
        try {
            rep = screc::solve_rpca(inst.d, inst.lambda, rec.tau, opts, &inst.m_true).report;
        } catch (const screc::RpcaNoConvergence& e) {
            rep = e.solution.report;
        }
        rec.rel_err = rep.rel_error.value_or(0.0);
        rec.success = rep.converged && rec.rel_err <= threshold;
        rec.iters = rep.iterations;
        rec.wall_ms = static_cast<long long>(rep.wall_seconds * 1000.0);
    }
    emit(screc::trial_to_json(rec), out_path);
    return rec.success ? kExitPass : kExitFailure;
}

int cmd_sweep(const std::string& config_path, const std::string& out_csv, unsigned threads) {
    const json j = screc::detail::load_json(config_path);
    const screc::SweepConfig cfg = screc::parse_sweep_config(j, config_path);

    // Stream completed rows in order so an interrupted run still leaves the
    // finished prefix on disk.
    std::ofstream out(out_csv);
    if (!out) throw screc::IoError("cannot open output file " + out_csv);
    out << screc::trial_csv_header() << '\n' << std::flush;
    std::vector<std::optional<screc::TrialRecord>> pending;
    std::size_t flushed = 0;
    const screc::SweepResult result =
        screc::run_sweep(cfg, threads, [&](std::size_t task, const screc::TrialRecord& rec) {
            if (pending.size() <= task) pending.resize(task + 1);
            pending[task] = rec;
            while (flushed < pending.size() && pending[flushed].has_value()) {
                out << screc::trial_csv_row(*pending[flushed]) << '\n';
                ++flushed;
            }
            out.flush();
        });
    for (const screc::CellSummary& s : result.summaries) {
        out << "# cell=" << s.cell.index << " r=" << s.cell.r
            << " ratio=" << screc::format_double(s.cell.ratio)
            << " tau_multiplier=" << screc::format_double(s.cell.tau_multiplier)
            << " trials=" << s.trials << " success_rate="
            << screc::format_double(static_cast<double>(s.successes) / s.trials)
            << " mean_iters=" << screc::format_double(s.mean_iters) << '\n';
    }
    int successes = 0;
    for (const auto& r : result.records) successes += r.success ? 1 : 0;
    std::cout << "sweep: " << result.records.size() << " trials, " << successes
              << " successes -> " << out_csv << '\n';
    return kExitPass;
}

int cmd_tau_frontier(const std::string& dir, double ratio_tol, double floor_factor,
                     double threshold, int max_iters,
                     const std::optional<std::string>& out_path) {
    screc::FrontierOptions opts;
    opts.ratio_tol = ratio_tol;
    opts.floor_factor = floor_factor;
    opts.success_threshold = threshold;
    opts.max_iters = max_iters;
    const std::string kind = screc::read_instance_kind(dir);
    const screc::FrontierReport rep = kind == "mc"
                                          ? screc::tau_frontier(screc::read_mc_instance(dir), opts)
                                          : screc::tau_frontier(screc::read_rpca_instance(dir), opts);
    json j{{"tau_min_empirical", rep.tau_min_empirical},
           {"tau_data_bound", rep.tau_data_bound},
           {"floored", rep.floored},
           {"ordering_ok", rep.ordering_ok}};
    if (rep.tau_oracle_bound)
        j["tau_oracle_bound"] = *rep.tau_oracle_bound;
    else
        j["tau_oracle_bound"] = nullptr;
    emit(j, out_path);
    return kExitPass;
}

json certificate_report_json(const screc::CertificateReport& rep) {
    json j{{"cond_a_residual", rep.cond_a_residual},
           {"cond_b_residual", rep.cond_b_residual},
           {"cond_c_value", rep.cond_c_value},
           {"passed", rep.passed}};
    if (rep.lambda_tperp_norm) j["lambda_tperp_norm"] = *rep.lambda_tperp_norm;
    return j;
}

int cmd_certify(const std::string& dir, const std::string& tau_text, double tol,
                const std::optional<std::string>& out_path) {
    const screc::TauPolicy policy = screc::parse_tau_policy(tau_text);
    const std::string kind = screc::read_instance_kind(dir);
    if (kind == "mc") {
        const screc::McInstance inst = screc::read_mc_instance(dir);
        const double tau = screc::resolve_tau(policy, inst);
        const screc::McCertificate cert =
            screc::build_mc_certificate(inst.m_true, inst.omega, tau);
        const screc::CertificateReport rep =
            screc::check_mc_certificate(cert, inst.m_true, inst.omega, tol);
        json j = certificate_report_json(rep);
        j["tau"] = tau;
        emit(j, out_path);
        return rep.passed ? kExitPass : kExitFailure;
    }
    const screc::RpcaInstance inst = screc::read_rpca_instance(dir);
    const double tau = screc::resolve_tau(policy, inst);
    const screc::DualWitnesses wit =
        screc::build_dual_witnesses(inst.m_true, inst.s_true, inst.lambda);
    const screc::WitnessReport wrep =
        screc::check_dual_witnesses(wit.wl, wit.ws, inst.m_true, inst.s_true, inst.lambda);

    // Assemble the full certificate from the witnesses: the slack matrices
    // F and B absorb the stationarity residual off/on the support.
    const screc::TangentBasis t = screc::tangent_of(inst.m_true);
    const screc::DenseMatrix uv = screc::uv_product(t);
    screc::DenseMatrix w = wit.wl + wit.ws;
    const screc::DenseMatrix sgn = screc::sign_matrix(inst.s_true);
    screc::DenseMatrix resid = uv + w;
    resid.add_scaled(inst.m_true, 1.0 / tau);
    resid.add_scaled(inst.s_true, -1.0 / tau);
    resid.add_scaled(sgn, -inst.lambda);
    const screc::DenseMatrix f =
        screc::project_omega_complement(resid, inst.omega) * (1.0 / inst.lambda);
    const screc::DenseMatrix b = screc::project_omega(resid, inst.omega) * (1.0 / inst.lambda);
    const double gamma = screc::max_abs(
        screc::project_omega_complement(inst.m_true - inst.s_true, inst.omega));
    const double delta =
        screc::frobenius_norm(screc::project_omega(inst.m_true - inst.s_true, inst.omega));
    const screc::EpsilonChoice eps = screc::optimal_epsilon(gamma, delta, inst.lambda);
    const double alpha = eps.epsilon / (2.0 * inst.lambda);
    const double beta = 1.0 - eps.epsilon;
    const screc::RpcaCertificateReport rep = screc::check_rpca_certificate(
        w, f, b, inst.m_true, inst.s_true, inst.lambda, tau, alpha, beta, tol);

    json j{{"tau", tau},
           {"stationarity_residual", rep.stationarity_residual},
           {"w_tangent_residual", rep.w_tangent_residual},
           {"w_norm", rep.w_norm},
           {"f_support_residual", rep.f_support_residual},
           {"f_inf", rep.f_inf},
           {"b_frob", rep.b_frob},
           {"alpha", rep.alpha},
           {"beta", rep.beta},
           {"scalar_constraints_ok", rep.scalar_constraints_ok},
           {"pt_pomega_norm", rep.pt_pomega_norm},
           {"passed", rep.passed},
           {"witnesses",
            {{"wl_norm", wrep.wl_norm},
             {"wl_omega_frob", wrep.wl_omega_frob},
             {"wl_omegaperp_inf", wrep.wl_omegaperp_inf},
             {"ws_norm", wrep.ws_norm},
             {"ws_omegaperp_inf", wrep.ws_omegaperp_inf},
             {"ws_sign_residual", wrep.ws_sign_residual},
             {"low_rank_side_ok", wrep.low_rank_side_ok},
             {"sparse_side_ok", wrep.sparse_side_ok}}}};
    emit(j, out_path);
    return rep.passed ? kExitPass : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-rank recovery via strongly convex programming"};
    app.require_subcommand(1);

    std::string config_path, out_dir, instance_dir, out_csv;
    std::optional<std::string> out_path;
    std::string tau_text = "data_bound";
    double threshold = 1e-3, feas_tol = 1e-6, ratio_tol = 1.1, floor_factor = 1e-4, tol = 1e-6;
    int max_iters = 5000;
    unsigned threads = 0;
    std::optional<std::uint64_t> seed_override;

    auto* gen = app.add_subcommand("gen", "generate an instance bundle");
    gen->add_option("--config", config_path, "JSON generation config")->required();
    gen->add_option("--out", out_dir, "output bundle directory")->required();
    std::uint64_t seed_flag = 0;
    auto* seed_opt = gen->add_option("--seed", seed_flag, "seed override");

    auto* solve = app.add_subcommand("solve", "solve an instance and report the trial record");
    solve->add_option("instance", instance_dir, "instance bundle directory")->required();
    solve->add_option("--tau", tau_text, "data_bound | oracle_bound | <value> | <mult>x");
    solve->add_option("--threshold", threshold, "success cutoff on the relative error");
    solve->add_option("--max-iters", max_iters, "solver iteration budget");
    solve->add_option("--feas-tol", feas_tol, "solver feasibility tolerance");
    std::string solve_out;
    auto* solve_out_opt = solve->add_option("--out", solve_out, "also write the JSON record here");

    auto* sweep = app.add_subcommand("sweep", "run a Monte-Carlo sweep to CSV");
    sweep->add_option("--config", config_path, "JSON sweep config")->required();
    sweep->add_option("--out", out_csv, "output CSV path")->required();
    sweep->add_option("--threads", threads, "worker threads (default: SCREC_THREADS or all)");

    auto* frontier = app.add_subcommand("tau-frontier",
                                        "bisect the empirical recovery threshold for tau");
    frontier->add_option("instance", instance_dir, "instance bundle directory")->required();
    frontier->add_option("--ratio-tol", ratio_tol, "multiplicative bisection tolerance");
    frontier->add_option("--floor", floor_factor, "lower bracket as a fraction of the data bound");
    frontier->add_option("--threshold", threshold, "success cutoff on the relative error");
    frontier->add_option("--max-iters", max_iters, "solver iteration budget");
    std::string frontier_out;
    auto* frontier_out_opt =
        frontier->add_option("--out", frontier_out, "also write the JSON report here");

    auto* certify = app.add_subcommand("certify", "build and check the dual certificate");
    certify->add_option("instance", instance_dir, "instance bundle directory")->required();
    certify->add_option("--tau", tau_text, "data_bound | oracle_bound | <value> | <mult>x");
    certify->add_option("--tol", tol, "residual tolerance for the checks");
    std::string certify_out;
    auto* certify_out_opt =
        certify->add_option("--out", certify_out, "also write the JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (seed_opt->count() > 0) seed_override = seed_flag;
            return cmd_gen(config_path, out_dir, seed_override);
        }
        if (solve->parsed()) {
            if (solve_out_opt->count() > 0) out_path = solve_out;
            return cmd_solve(instance_dir, tau_text, threshold, max_iters, feas_tol, out_path);
        }
        if (sweep->parsed()) return cmd_sweep(config_path, out_csv, threads);
        if (frontier->parsed()) {
            if (frontier_out_opt->count() > 0) out_path = frontier_out;
            return cmd_tau_frontier(instance_dir, ratio_tol, floor_factor, threshold, max_iters,
                                    out_path);
        }
        if (certify->parsed()) {
            if (certify_out_opt->count() > 0) out_path = certify_out;
            return cmd_certify(instance_dir, tau_text, tol, out_path);
        }
    } catch (const screc::RegimeError& e) {
        std::cerr << "regime error: " << e.what() << '\n';
        return app.got_subcommand("tau-frontier") ? kExitFailure : kExitError;
    } catch (const screc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
