#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"
#include "screc/linear_map.hpp"
#include "screc/mc.hpp"
#include "screc/norms.hpp"
#include "screc/problem_gen.hpp"
#include "screc/prox.hpp"
#include "screc/support_set.hpp"
#include "screc/tangent.hpp"

namespace screc {

struct RpcaSolveOptions {
    /// Dual step; <= 0 selects 0.9 / tau. The dual gradient is 2*tau-Lipschitz,
    /// so steps are clamped strictly below 1 / tau.
    double step_size = 0.0;
    int max_iters = 5000;
    double feas_tol = 1e-6;  ///< on ||D - L - S||_F / ||D||_F
    double rank_cutoff = kDefaultRankCutoff;
};

struct RpcaSolution {
    DenseMatrix l;
    DenseMatrix s;
    DenseMatrix y;  ///< dual iterate
    SolveReport report;
};

class RpcaNoConvergence : public ConvergenceError {
public:
    RpcaNoConvergence(std::string what, RpcaSolution partial)
        : ConvergenceError(std::move(what)), solution(std::move(partial)) {}
    RpcaSolution solution;
};

/// Iterative thresholding (dual gradient ascent) for
///   min ||L||_* + 1/(2 tau)||L||_F^2 + lambda ||S||_1 + 1/(2 tau)||S||_F^2
///   s.t. D = L + S.
/// Per step: L = sv_shrink(tau Y, tau), S = soft_threshold(tau Y, lambda tau),
/// Y += delta (D - L - S).
inline RpcaSolution solve_rpca(const DenseMatrix& d, double lambda, double tau,
                               const RpcaSolveOptions& opts = {},
                               const DenseMatrix* m_truth = nullptr) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw InvalidArgumentError("solve_rpca: lambda must lie in (0,1)");
    if (!(tau > 0.0)) throw InvalidArgumentError("solve_rpca: tau must be positive");

    const auto t_start = std::chrono::steady_clock::now();
    auto finish = [&](RpcaSolution& sol) {
        sol.report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (m_truth != nullptr) {
            const double gt = frobenius_norm(*m_truth);
            sol.report.rel_error =
                gt == 0.0 ? frobenius_norm(sol.l) : frobenius_norm(sol.l - *m_truth) / gt;
        }
    };

    RpcaSolution sol{DenseMatrix(d.rows(), d.cols()), DenseMatrix(d.rows(), d.cols()),
                     DenseMatrix(d.rows(), d.cols()), {}};
    const double d_norm = frobenius_norm(d);
    if (d_norm == 0.0) {
        sol.report.iterations = 1;
        sol.report.converged = true;
        sol.report.feas_trace.push_back(0.0);
        finish(sol);
        return sol;
    }

    double delta = opts.step_size > 0.0 ? opts.step_size : 0.9 / tau;
    const double delta_cap = 0.999 / tau;
    if (delta > delta_cap) {
        delta = delta_cap;
        sol.report.step_clamped = true;
    }
    sol.report.step_size = delta;

    // Warm dual start inside the unit spectral ball.
    const double d_spec = spectral_norm(d);
    if (d_spec > 0.0) {
        sol.y = d;
        sol.y *= 1.0 / d_spec;
    }

    SvdWorkspace warm;
    DenseMatrix z(d.rows(), d.cols());
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        z = sol.y;
        z *= tau;
        const SvdFactors f = svd(z, opts.rank_cutoff, warm);
        sol.l = sv_shrink(f, tau);
        sol.s = soft_threshold(z, lambda * tau);

        DenseMatrix resid = d;
        resid -= sol.l;
        resid -= sol.s;
        const double feas = frobenius_norm(resid) / d_norm;
        sol.report.feas_trace.push_back(feas);
        sol.report.feas_final = feas;
        sol.report.iterations = iter;

        double nuc = 0.0, l_sq = 0.0, z_dot_l = 0.0;
        for (double sv : f.sigma) {
            const double shrunk = std::max(sv - tau, 0.0);
            nuc += shrunk;
            l_sq += shrunk * shrunk;
            z_dot_l += sv * shrunk;
        }
        const double s_l1 = sum_abs(sol.s);
        const double s_sq = dot(sol.s, sol.s);
        const double z_dot_s = dot(z, sol.s);
        // g(Y) = f(L,S) - <Y, L + S - D>
        sol.report.dual_objective.push_back(nuc + l_sq / (2.0 * tau) + lambda * s_l1 +
                                            s_sq / (2.0 * tau) - (z_dot_l + z_dot_s) / tau +
                                            dot(sol.y, d));

        if (feas <= opts.feas_tol) {
            sol.report.converged = true;
            finish(sol);
            return sol;
        }
        sol.y.add_scaled(resid, delta);
    }
    finish(sol);
    throw RpcaNoConvergence("solve_rpca: feasibility " + std::to_string(sol.report.feas_final) +
                                " above tol after " + std::to_string(opts.max_iters) +
                                " iterations",
                            std::move(sol));
}

/// Data-driven penalty bound (2 ||D||_inf + lambda sqrt(15)/3 ||D||_F) / (lambda (1-lambda)).
inline double rpca_tau_bound_data(const DenseMatrix& d, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw InvalidArgumentError("rpca_tau_bound_data: lambda must lie in (0,1)");
    const double d_frob = frobenius_norm(d);
    if (d_frob == 0.0) throw InvalidArgumentError("rpca_tau_bound_data: zero data matrix");
    return (2.0 * max_abs(d) + lambda * std::sqrt(15.0) / 3.0 * d_frob) /
           (lambda * (1.0 - lambda));
}

/// Ground-truth penalty bound (2 gamma + lambda delta) / (lambda (1-lambda)) with
/// gamma = ||P_Omega-perp (M - S0)||_inf and delta = ||P_Omega (M - S0)||_F,
/// Omega the support of S0.
inline double rpca_tau_bound_oracle(const DenseMatrix& m_true, const DenseMatrix& s_true,
                                    double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw InvalidArgumentError("rpca_tau_bound_oracle: lambda must lie in (0,1)");
    m_true.require_same_shape(s_true, "rpca_tau_bound_oracle");
    const SupportSet omega = support_of(s_true);
    DenseMatrix diff = m_true;
    diff -= s_true;
    const double gamma = max_abs(project_omega_complement(diff, omega));
    const double delta = frobenius_norm(project_omega(diff, omega));
    return (2.0 * gamma + lambda * delta) / (lambda * (1.0 - lambda));
}

/// The balance point between the two penalty requirements
///   tau >= gamma / ((1/2 - eps) lambda)   and   tau >= delta / (eps/2 - lambda/4),
/// attained where the two candidates cross.
struct EpsilonChoice {
    double epsilon = 0.0;
    double tau_gamma_candidate = 0.0;  ///< gamma-side requirement at epsilon
    double tau_delta_candidate = 0.0;  ///< delta-side requirement at epsilon
};

inline EpsilonChoice optimal_epsilon(double gamma, double delta, double lambda) {
    if (!(gamma >= 0.0 && delta >= 0.0))
        throw InvalidArgumentError("optimal_epsilon: gamma, delta must be nonnegative");
    if (gamma + delta <= 0.0)
        throw InvalidArgumentError("optimal_epsilon: gamma + delta must be positive");
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw InvalidArgumentError("optimal_epsilon: lambda must lie in (0,1]");
    EpsilonChoice out;
    out.epsilon = (delta / 2.0 + gamma / 4.0) / (gamma / (2.0 * lambda) + delta);
    out.tau_gamma_candidate =
        gamma == 0.0 ? 0.0 : gamma / ((0.5 - out.epsilon) * lambda);
    out.tau_delta_candidate =
        delta == 0.0 ? 0.0 : delta / (out.epsilon / 2.0 - lambda / 4.0);
    return out;
}

/// Full dual-certificate check for the decomposition program: the
/// stationarity identity
///   U V^T + W + M/tau = lambda (sgn S0 + F + P_Omega B) + S0/tau
/// plus the side conditions on (W, F, B) and the scalar constraints on
/// (alpha, beta).
struct RpcaCertificateReport {
    double stationarity_residual = 0.0;  ///< Frobenius norm of the identity residual
    double w_tangent_residual = 0.0;     ///< ||P_T W||_F
    double w_norm = 0.0;                 ///< ||W||
    double f_support_residual = 0.0;     ///< ||P_Omega F||_F
    double f_inf = 0.0;                  ///< ||F||_inf
    double b_frob = 0.0;                 ///< ||P_Omega B||_F
    double alpha = 0.0;
    double beta = 0.0;
    bool scalar_constraints_ok = false;  ///< beta <= 1, alpha+beta <= 1/lambda, lambda <= (1-beta)/(2 alpha)
    double pt_pomega_norm = 0.0;         ///< ||P_Omega P_T||
    bool passed = false;
};

inline RpcaCertificateReport check_rpca_certificate(
    const DenseMatrix& w, const DenseMatrix& f, const DenseMatrix& b,
    const DenseMatrix& m_true, const DenseMatrix& s_true, double lambda, double tau,
    double alpha, double beta, double tol = 1e-8,
    double rank_cutoff = kDefaultRankCutoff) {
    m_true.require_same_shape(s_true, "check_rpca_certificate");
    m_true.require_same_shape(w, "check_rpca_certificate");
    m_true.require_same_shape(f, "check_rpca_certificate");
    m_true.require_same_shape(b, "check_rpca_certificate");
    if (!(tau > 0.0)) throw InvalidArgumentError("check_rpca_certificate: tau must be positive");
    if (!(lambda > 0.0)) throw InvalidArgumentError("check_rpca_certificate: lambda must be positive");

    const SupportSet omega = support_of(s_true);
    const TangentBasis t = tangent_of(m_true, rank_cutoff);

    RpcaCertificateReport rep;
    rep.alpha = alpha;
    rep.beta = beta;

    DenseMatrix resid = uv_product(t);
    resid += w;
    resid.add_scaled(m_true, 1.0 / tau);
    resid -= sign_matrix(s_true) * lambda;
    resid -= f * lambda;
    resid -= project_omega(b, omega) * lambda;
    resid.add_scaled(s_true, -1.0 / tau);
    rep.stationarity_residual = frobenius_norm(resid);

    rep.w_tangent_residual = frobenius_norm(project_tangent(w, t));
    rep.w_norm = spectral_norm(w);
    rep.f_support_residual = frobenius_norm(project_omega(f, omega));
    rep.f_inf = max_abs(f);
    rep.b_frob = frobenius_norm(project_omega(b, omega));
    rep.scalar_constraints_ok = beta <= 1.0 && alpha + beta <= 1.0 / lambda &&
                                (alpha <= 0.0 || lambda <= (1.0 - beta) / (2.0 * alpha));

    rep.pt_pomega_norm =
        std::sqrt(std::max(0.0, power_op_norm(tangent_sampling_operator(t, omega), 1234567,
                                              1e-8, 2000)
                                    .value));

    const double d_scale = frobenius_norm(m_true + s_true);
    rep.passed = rep.stationarity_residual <= tol * std::max(d_scale, 1.0) &&
                 rep.w_tangent_residual <= tol * std::max(1.0, frobenius_norm(w)) &&
                 rep.w_norm <= beta &&
                 rep.f_support_residual <= tol * std::max(1.0, frobenius_norm(f)) &&
                 rep.f_inf <= beta && rep.b_frob <= alpha && rep.scalar_constraints_ok &&
                 rep.pt_pomega_norm <= 0.5;
    return rep;
}

/// Diagnostics for a candidate pair of normal-space witnesses: wl targets
/// the low-rank side, ws the sparse side. Thresholds are lambda/4 for the
/// interpolation conditions and 1/4 for the spectral ones.
struct WitnessReport {
    double wl_norm = 0.0;            ///< ||W_L||
    double wl_omega_frob = 0.0;      ///< ||P_Omega (U V^T + W_L)||_F
    double wl_omegaperp_inf = 0.0;   ///< ||P_Omega-perp (U V^T + W_L)||_inf
    double wl_tangent_residual = 0.0;
    double ws_norm = 0.0;            ///< ||W_S||
    double ws_omegaperp_inf = 0.0;   ///< ||P_Omega-perp W_S||_inf
    double ws_sign_residual = 0.0;   ///< ||P_Omega W_S - lambda sgn(S0)||_F
    double ws_tangent_residual = 0.0;
    bool low_rank_side_ok = false;   ///< wl_norm < 1/4, wl_omega_frob < lambda/4, wl_omegaperp_inf < lambda/4
    bool sparse_side_ok = false;     ///< ws_norm < 1/4, ws_omegaperp_inf < lambda/4
};

inline WitnessReport check_dual_witnesses(const DenseMatrix& wl, const DenseMatrix& ws,
                                          const DenseMatrix& m_true, const DenseMatrix& s_true,
                                          double lambda,
                                          double rank_cutoff = kDefaultRankCutoff) {
    m_true.require_same_shape(s_true, "check_dual_witnesses");
    m_true.require_same_shape(wl, "check_dual_witnesses");
    m_true.require_same_shape(ws, "check_dual_witnesses");
    const SupportSet omega = support_of(s_true);
    const TangentBasis t = tangent_of(m_true, rank_cutoff);
    const DenseMatrix uv = uv_product(t);

    WitnessReport rep;
    rep.wl_norm = spectral_norm(wl);
    rep.wl_omega_frob = frobenius_norm(project_omega(uv + wl, omega));
    rep.wl_omegaperp_inf = max_abs(project_omega_complement(uv + wl, omega));
    rep.wl_tangent_residual = frobenius_norm(project_tangent(wl, t));
    rep.ws_norm = spectral_norm(ws);
    rep.ws_omegaperp_inf = max_abs(project_omega_complement(ws, omega));
    rep.ws_sign_residual =
        frobenius_norm(project_omega(ws, omega) - sign_matrix(s_true) * lambda);
    rep.ws_tangent_residual = frobenius_norm(project_tangent(ws, t));
    rep.low_rank_side_ok = rep.wl_norm < 0.25 && rep.wl_omega_frob < lambda / 4.0 &&
                           rep.wl_omegaperp_inf < lambda / 4.0;
    rep.sparse_side_ok = rep.ws_norm < 0.25 && rep.ws_omegaperp_inf < lambda / 4.0;
    return rep;
}

/// Least-squares witness candidates in the normal space of M:
///   wl minimizes ||P_Omega(U V^T + W)||_F over W in T-perp,
///   ws minimizes ||P_Omega W - lambda sgn(S0)||_F over W in T-perp.
/// Both normal-equation systems share the operator P_Tperp P_Omega P_Tperp.
struct DualWitnesses {
    DenseMatrix wl;
    DenseMatrix ws;
};

inline DualWitnesses build_dual_witnesses(const DenseMatrix& m_true, const DenseMatrix& s_true,
                                          double lambda,
                                          double rank_cutoff = kDefaultRankCutoff,
                                          double cg_tol = 1e-9, int cg_max_iters = 1000) {
    m_true.require_same_shape(s_true, "build_dual_witnesses");
    const SupportSet omega = support_of(s_true);
    const TangentBasis t = tangent_of(m_true, rank_cutoff);

    const LinearMap normal_op{
        m_true.rows(), m_true.cols(),
        [t, omega](const DenseMatrix& zin) {
            return project_tangent(project_omega(project_tangent(zin, t, TangentSide::kNormal),
                                                 omega),
                                   t, TangentSide::kNormal);
        },
        true,
        {}};
    CgOptions cg;
    cg.tol = cg_tol;
    cg.max_iters = cg_max_iters;
    cg.constrain = [t](const DenseMatrix& zin) {
        return project_tangent(zin, t, TangentSide::kNormal);
    };

    DualWitnesses out;
    const DenseMatrix uv = uv_product(t);
    const DenseMatrix rhs_l =
        project_tangent(project_omega(uv, omega), t, TangentSide::kNormal) * (-1.0);
    out.wl = frobenius_norm(rhs_l) == 0.0 ? DenseMatrix(m_true.rows(), m_true.cols())
                                          : cg_solve(normal_op, rhs_l, cg);
    const DenseMatrix rhs_s =
        project_tangent(sign_matrix(s_true) * lambda, t, TangentSide::kNormal);
    out.ws = frobenius_norm(rhs_s) == 0.0 ? DenseMatrix(m_true.rows(), m_true.cols())
                                          : cg_solve(normal_op, rhs_s, cg);
    return out;
}

/// First-order optimality probe for a candidate decomposition (L, S): the
/// sparse side pins the dual on supp(S), the remaining entries are fitted
/// inside the +-lambda box to match the low-rank side's tangent equation,
/// and the residual violations are reported.
struct RpcaKktReport {
    double kkt_residual = 0.0;  ///< max(tangent mismatch rel., spectral excess over 1)
    double feasibility = 0.0;   ///< ||D - L - S||_F / ||D||_F
    bool passed = false;
};

inline RpcaKktReport check_rpca_optimality(const DenseMatrix& l, const DenseMatrix& s,
                                           const DenseMatrix& d, double lambda, double tau,
                                           double tol = 1e-4,
                                           double rank_cutoff = kDefaultRankCutoff) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw InvalidArgumentError("check_rpca_optimality: lambda must lie in (0,1)");
    if (!(tau > 0.0)) throw InvalidArgumentError("check_rpca_optimality: tau must be positive");
    l.require_same_shape(s, "check_rpca_optimality");
    l.require_same_shape(d, "check_rpca_optimality");

    RpcaKktReport rep;
    const double d_norm = frobenius_norm(d);
    DenseMatrix resid = d;
    resid -= l;
    resid -= s;
    rep.feasibility = d_norm == 0.0 ? frobenius_norm(resid) : frobenius_norm(resid) / d_norm;

    const TangentBasis t = tangent_of(l, rank_cutoff);
    DenseMatrix target = uv_product(t);
    target.add_scaled(l, 1.0 / tau);

    // Fixed entries on supp(S); free entries boxed in [-lambda, lambda].
    DenseMatrix y(l.rows(), l.cols());
    std::vector<bool> fixed(l.size(), false);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != 0.0) {
            y[i] = lambda * (s[i] > 0.0 ? 1.0 : -1.0) + s[i] / tau;
            fixed[i] = true;
        }
    }
    const DenseMatrix target_t = project_tangent(target, t);
    constexpr int kFitIters = 500;
    for (int it = 0; it < kFitIters; ++it) {
        DenseMatrix grad = project_tangent(y, t);
        grad -= target_t;
        double change = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (fixed[i]) continue;
            const double next = std::clamp(y[i] - grad[i], -lambda, lambda);
            change += (next - y[i]) * (next - y[i]);
            y[i] = next;
        }
        if (std::sqrt(change) <= 1e-12 * std::max(1.0, frobenius_norm(y))) break;
    }

    const double tangent_mismatch = frobenius_norm(project_tangent(y, t) - target_t);
    const double target_scale = std::max(frobenius_norm(target_t), 1e-300);
    const double spectral_excess =
        std::max(0.0, spectral_norm(project_tangent(y, t, TangentSide::kNormal)) - 1.0);
    rep.kkt_residual = std::max(tangent_mismatch / target_scale, spectral_excess);
    rep.passed = rep.kkt_residual <= tol && rep.feasibility <= tol;
    return rep;
}

}  // namespace screc
