#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"
#include "screc/linear_map.hpp"
#include "screc/norms.hpp"
#include "screc/prox.hpp"
#include "screc/support_set.hpp"
#include "screc/svd.hpp"
#include "screc/tangent.hpp"

namespace screc {

struct McSolveOptions {
    /// Dual ascent step; <= 0 selects 1.2 / (rho_hat * tau) clamped to 1.9 / tau.
    double step_size = 0.0;
    int max_iters = 5000;
    double feas_tol = 1e-6;  ///< relative feasibility stopping threshold
    double rank_cutoff = kDefaultRankCutoff;
};

struct SolveReport {
    int iterations = 0;
    double feas_final = 0.0;
    std::vector<double> feas_trace;
    std::vector<double> dual_objective;
    std::optional<double> rel_error;  ///< vs ground truth when supplied
    double wall_seconds = 0.0;
    bool converged = false;
    bool step_clamped = false;
    double step_size = 0.0;
};

struct McSolution {
    DenseMatrix x;
    DenseMatrix y;  ///< dual iterate, supported on omega
    SolveReport report;
};

/// Thrown when the dual ascent exhausts max_iters; carries the partial
/// solution so callers can still report diagnostics.
class McNoConvergence : public ConvergenceError {
public:
    McNoConvergence(std::string what, McSolution partial)
        : ConvergenceError(std::move(what)), solution(std::move(partial)) {}
    McSolution solution;
};

/// Dual gradient ascent (Uzawa) for
///   min ||X||_* + 1/(2 tau) ||X||_F^2   s.t.   P_Omega X = observed.
/// Each step shrinks the scaled dual and pushes the dual along the
/// feasibility residual:
///   X_k = sv_shrink(tau * Y_{k-1}, tau),  Y_k = Y_{k-1} + delta * P_Omega(M - X_k).
inline McSolution solve_mc(const DenseMatrix& observed, const SupportSet& omega, double tau,
                           const McSolveOptions& opts = {},
                           const DenseMatrix* ground_truth = nullptr) {
    omega.require_matches(observed, "solve_mc");
    if (!(tau > 0.0)) throw InvalidArgumentError("solve_mc: tau must be positive");
    for (std::size_t i = 0; i < observed.size(); ++i)
        if (observed[i] != 0.0 && !std::binary_search(omega.linear().begin(),
                                                      omega.linear().end(), i))
            throw InvalidArgumentError("solve_mc: observed has data off the support");

    const auto t_start = std::chrono::steady_clock::now();
    auto finish = [&](McSolution& sol) {
        sol.report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (ground_truth != nullptr) {
            const double gt_norm = frobenius_norm(*ground_truth);
            sol.report.rel_error =
                gt_norm == 0.0 ? frobenius_norm(sol.x) : frobenius_norm(sol.x - *ground_truth) / gt_norm;
        }
    };

    McSolution sol{DenseMatrix(observed.rows(), observed.cols()),
                   DenseMatrix(observed.rows(), observed.cols()),
                   {}};
    const double obs_norm = frobenius_norm(observed);
    if (obs_norm == 0.0) {  // zero data: X = 0 is feasible and optimal
        sol.report.iterations = 1;
        sol.report.converged = true;
        sol.report.feas_trace.push_back(0.0);
        finish(sol);
        return sol;
    }

    const double rho_hat = omega.fraction();
    double delta = opts.step_size > 0.0 ? opts.step_size : 1.2 / (rho_hat * tau);
    const double delta_cap = 1.9 / tau;
    if (delta > delta_cap) {
        delta = delta_cap;
        sol.report.step_clamped = true;
    }
    sol.report.step_size = delta;

    const std::vector<std::size_t>& cells = omega.linear();
    std::vector<double> obs_cells(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) obs_cells[k] = observed[cells[k]];

    SvdWorkspace warm;
    DenseMatrix z(observed.rows(), observed.cols());
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        z = sol.y;
        z *= tau;
        const SvdFactors f = svd(z, opts.rank_cutoff, warm);
        sol.x = sv_shrink(f, tau);

        // Feasibility residual on the support and dual objective pieces.
        double res_sq = 0.0;
        double y_dot_obs = 0.0;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const double r = obs_cells[k] - sol.x[cells[k]];
            res_sq += r * r;
            y_dot_obs += sol.y[cells[k]] * obs_cells[k];
        }
        const double feas = std::sqrt(res_sq) / obs_norm;
        sol.report.feas_trace.push_back(feas);
        sol.report.feas_final = feas;
        sol.report.iterations = iter;

        double nuc = 0.0, frob_sq = 0.0, z_dot_x = 0.0;
        for (double s : f.sigma) {
            const double shrunk = std::max(s - tau, 0.0);
            nuc += shrunk;
            frob_sq += shrunk * shrunk;
            z_dot_x += s * shrunk;
        }
        // g(Y) = ||X||_* + ||X||_F^2/(2 tau) - <Y, P_Omega X - observed>
        sol.report.dual_objective.push_back(nuc + frob_sq / (2.0 * tau) - z_dot_x / tau +
                                            y_dot_obs);

        if (feas <= opts.feas_tol) {
            sol.report.converged = true;
            finish(sol);
            return sol;
        }
        for (std::size_t k = 0; k < cells.size(); ++k)
            sol.y[cells[k]] += delta * (obs_cells[k] - sol.x[cells[k]]);
    }
    finish(sol);
    throw McNoConvergence("solve_mc: feasibility " + std::to_string(sol.report.feas_final) +
                              " above tol after " + std::to_string(opts.max_iters) + " iterations",
                          std::move(sol));
}

/// Data-driven penalty bound (4 / p) ||P_Omega M||_F with p the sampling ratio.
inline double mc_tau_bound_data(const DenseMatrix& observed, const SupportSet& omega) {
    omega.require_matches(observed, "mc_tau_bound_data");
    if (omega.is_empty()) throw InvalidArgumentError("mc_tau_bound_data: empty support");
    return 4.0 / omega.fraction() * frobenius_norm(observed);
}

/// The tangent-restricted sampling operator P_T P_Omega P_T as a LinearMap.
inline LinearMap tangent_sampling_operator(const TangentBasis& t, const SupportSet& omega) {
    return {omega.rows(), omega.cols(),
            [t, omega](const DenseMatrix& zin) {
                return project_tangent(project_omega(project_tangent(zin, t), omega), t);
            },
            true,
            {}};
}

namespace detail {

/// (P_T P_Omega P_T)^{-1} rhs on T via constrained CG.
inline DenseMatrix invert_on_tangent(const TangentBasis& t, const SupportSet& omega,
                                     const DenseMatrix& rhs, const CgOptions& base = {}) {
    CgOptions opts = base;
    opts.constrain = [t](const DenseMatrix& zin) { return project_tangent(zin, t); };
    return cg_solve(tangent_sampling_operator(t, omega), rhs, opts);
}

}  // namespace detail

/// Ground-truth penalty bound
///   || P_Tperp P_Omega P_T (P_T P_Omega P_T)^{-1} M || / (1 - ||P_Tperp Lambda||),
/// with Lambda the tangent interpolant of U V^T through the sampled cells.
inline double mc_tau_bound_oracle(const DenseMatrix& m_true, const SupportSet& omega,
                                  double rank_cutoff = kDefaultRankCutoff) {
    omega.require_matches(m_true, "mc_tau_bound_oracle");
    if (omega.is_empty()) throw InvalidArgumentError("mc_tau_bound_oracle: empty support");
    const TangentBasis t = tangent_of(m_true, rank_cutoff);
    if (t.rank() == 0) return 0.0;

    const DenseMatrix g_uv = detail::invert_on_tangent(t, omega, uv_product(t));
    const DenseMatrix lambda = project_omega(project_tangent(g_uv, t), omega);
    const double lam_tperp = spectral_norm(project_tangent(lambda, t, TangentSide::kNormal));
    if (lam_tperp >= 1.0)
        throw RegimeError("mc_tau_bound_oracle: ||P_Tperp Lambda|| = " +
                          std::to_string(lam_tperp) + " >= 1, bound undefined");

    const DenseMatrix g_m = detail::invert_on_tangent(t, omega, project_tangent(m_true, t));
    const DenseMatrix pog = project_omega(project_tangent(g_m, t), omega);
    const double numerator = spectral_norm(project_tangent(pog, t, TangentSide::kNormal));
    return numerator / (1.0 - lam_tperp);
}

/// Dual certificate for exact completion: y = lambda_mat + correction where
/// correction = (1/tau) P_Omega P_T (P_T P_Omega P_T)^{-1} M.
struct McCertificate {
    DenseMatrix y;
    DenseMatrix lambda_mat;
    DenseMatrix correction;
    TangentBasis tangent;
    double tau = 0.0;
};

inline McCertificate build_mc_certificate(const DenseMatrix& m_true, const SupportSet& omega,
                                          double tau,
                                          double rank_cutoff = kDefaultRankCutoff) {
    omega.require_matches(m_true, "build_mc_certificate");
    if (!(tau > 0.0)) throw InvalidArgumentError("build_mc_certificate: tau must be positive");
    const TangentBasis t = tangent_of(m_true, rank_cutoff);
    McCertificate cert;
    cert.tangent = t;
    cert.tau = tau;
    if (t.rank() == 0) {
        cert.y = DenseMatrix(m_true.rows(), m_true.cols());
        cert.lambda_mat = cert.y;
        cert.correction = cert.y;
        return cert;
    }
    const DenseMatrix g_uv = detail::invert_on_tangent(t, omega, uv_product(t));
    cert.lambda_mat = project_omega(project_tangent(g_uv, t), omega);
    const DenseMatrix g_m = detail::invert_on_tangent(t, omega, project_tangent(m_true, t));
    cert.correction = project_omega(project_tangent(g_m, t), omega) * (1.0 / tau);
    cert.y = cert.lambda_mat + cert.correction;
    return cert;
}

struct CertificateReport {
    double cond_a_residual = 0.0;  ///< ||Y - P_Omega Y||_F
    double cond_b_residual = 0.0;  ///< ||P_T Y - (M/tau + U V^T)||_F relative
    double cond_c_value = 0.0;     ///< ||P_Tperp Y||
    std::optional<double> lambda_tperp_norm;  ///< ||P_Tperp Lambda|| when available
    bool passed = false;
};

inline constexpr double kCertificateTolB = 1e-6;

/// Evaluate the three optimality conditions for a candidate dual matrix.
inline CertificateReport check_mc_conditions(const DenseMatrix& y, double tau,
                                             const DenseMatrix& m_true, const SupportSet& omega,
                                             double cert_tol = kCertificateTolB,
                                             double rank_cutoff = kDefaultRankCutoff) {
    omega.require_matches(m_true, "check_mc_conditions");
    m_true.require_same_shape(y, "check_mc_conditions");
    const TangentBasis t = tangent_of(m_true, rank_cutoff);

    CertificateReport rep;
    rep.cond_a_residual = frobenius_norm(y - project_omega(y, omega));
    DenseMatrix target = m_true * (1.0 / tau);
    target += uv_product(t);
    const double target_norm = frobenius_norm(target);
    const double b_abs = frobenius_norm(project_tangent(y, t) - target);
    rep.cond_b_residual = target_norm == 0.0 ? b_abs : b_abs / target_norm;
    rep.cond_c_value = spectral_norm(project_tangent(y, t, TangentSide::kNormal));
    rep.passed = rep.cond_a_residual <= 1e-10 * frobenius_norm(y) &&
                 rep.cond_b_residual <= cert_tol && rep.cond_c_value <= 1.0;
    return rep;
}

inline CertificateReport check_mc_certificate(const McCertificate& cert,
                                              const DenseMatrix& m_true, const SupportSet& omega,
                                              double cert_tol = kCertificateTolB,
                                              double rank_cutoff = kDefaultRankCutoff) {
    CertificateReport rep =
        check_mc_conditions(cert.y, cert.tau, m_true, omega, cert_tol, rank_cutoff);
    rep.lambda_tperp_norm =
        spectral_norm(project_tangent(cert.lambda_mat, cert.tangent, TangentSide::kNormal));
    return rep;
}

/// Empirical view of the sampling operator on the tangent space: the
/// interpolant's normal-space norm and the Rayleigh quotient range over
/// seeded random tangent probes.
struct SamplingOperatorReport {
    double lambda_tperp_norm = 0.0;
    double rayleigh_min = 0.0;
    double rayleigh_max = 0.0;
};

inline SamplingOperatorReport check_sampling_operator(const TangentBasis& t,
                                                      const SupportSet& omega,
                                                      int probes, std::uint64_t seed) {
    if (probes < 1) throw InvalidArgumentError("check_sampling_operator: probes must be >= 1");
    SamplingOperatorReport rep;
    if (t.rank() == 0) return rep;

    if (!omega.is_empty()) {
        const DenseMatrix g_uv = detail::invert_on_tangent(t, omega, uv_product(t));
        const DenseMatrix lambda = project_omega(project_tangent(g_uv, t), omega);
        rep.lambda_tperp_norm =
            spectral_norm(project_tangent(lambda, t, TangentSide::kNormal));
    }  // empty support: Lambda = P_Omega(...) = 0 identically

    GaussianStream gauss(seed);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int p = 0; p < probes; ++p) {
        DenseMatrix z(omega.rows(), omega.cols());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = gauss.next();
        const DenseMatrix zt = project_tangent(z, t);
        const double denom = dot(zt, zt);
        if (denom == 0.0) continue;
        const DenseMatrix pz = project_omega(zt, omega);
        const double quotient = dot(pz, pz) / denom;  // <Z, P_T P_Om P_T Z>/||Z||^2 on T
        lo = std::min(lo, quotient);
        hi = std::max(hi, quotient);
    }
    rep.rayleigh_min = std::isfinite(lo) ? lo : 0.0;
    rep.rayleigh_max = hi;
    return rep;
}

/// First-order optimality of a primal/dual pair: W = Y - X/tau - U_X V_X^T
/// must be (numerically) in the normal space of X with spectral norm <= 1.
struct McKktReport {
    double tangent_residual = 0.0;  ///< ||P_{T_X} W||_F
    double w_norm = 0.0;            ///< ||W||
    double y_norm = 0.0;
};

inline McKktReport mc_kkt_report(const DenseMatrix& x, const DenseMatrix& y, double tau,
                                 double rank_cutoff = kDefaultRankCutoff) {
    const TangentBasis tx = tangent_of(x, rank_cutoff);
    DenseMatrix w = y;
    w.add_scaled(x, -1.0 / tau);
    w -= uv_product(tx);
    McKktReport rep;
    rep.tangent_residual = frobenius_norm(project_tangent(w, tx));
    rep.w_norm = spectral_norm(w);
    rep.y_norm = frobenius_norm(y);
    return rep;
}

}  // namespace screc
