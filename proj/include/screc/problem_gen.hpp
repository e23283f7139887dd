#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"
#include "screc/rng.hpp"
#include "screc/support_set.hpp"
#include "screc/svd.hpp"

namespace screc {

/// M = A B^T with seeded standard Gaussian factors; rank r almost surely.
inline DenseMatrix gen_lowrank(std::size_t n1, std::size_t n2, std::size_t r,
                               std::uint64_t seed) {
    if (r > std::min(n1, n2))
        throw InvalidArgumentError("gen_lowrank: rank " + std::to_string(r) + " exceeds min(" +
                                   std::to_string(n1) + "," + std::to_string(n2) + ")");
    if (r == 0) return DenseMatrix(n1, n2);
    GaussianStream gauss(seed);
    DenseMatrix a(n1, r), b(n2, r);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = gauss.next();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = gauss.next();
    return multiply_a_bt(a, b);
}

/// Each cell kept independently with probability rho, row-major scan order.
inline SupportSet sample_support_bernoulli(std::size_t n1, std::size_t n2, double rho,
                                           std::uint64_t seed) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw InvalidArgumentError("sample_support_bernoulli: rho must lie in [0,1]");
    SplitMix64 rng(seed);
    std::vector<SupportSet::Index> idx;
    for (std::uint32_t i = 0; i < n1; ++i)
        for (std::uint32_t j = 0; j < n2; ++j)
            if (rng.next_unit() < rho) idx.emplace_back(i, j);
    return SupportSet(n1, n2, std::move(idx));
}

/// Exactly m distinct cells, uniform over all m-subsets (partial
/// Fisher-Yates on the flat index range).
inline SupportSet sample_support_uniform(std::size_t n1, std::size_t n2, std::size_t m,
                                         std::uint64_t seed) {
    const std::size_t total = n1 * n2;
    if (m > total)
        throw InvalidArgumentError("sample_support_uniform: m exceeds n1*n2");
    SplitMix64 rng(seed);
    std::vector<std::uint64_t> pool(total);
    for (std::size_t i = 0; i < total; ++i) pool[i] = i;
    std::vector<SupportSet::Index> idx;
    idx.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t pick = k + rng.next_below(total - k);
        std::swap(pool[k], pool[pick]);
        idx.emplace_back(static_cast<std::uint32_t>(pool[k] / n2),
                         static_cast<std::uint32_t>(pool[k] % n2));
    }
    return SupportSet(n1, n2, std::move(idx));
}

/// Corruption matrix supported exactly on omega with entries
/// +-magnitude, independent equiprobable signs (the default model; its
/// signs are what the sparse-side witness checks assume).
inline DenseMatrix gen_sparse(const SupportSet& omega, double magnitude, std::uint64_t seed) {
    if (!(magnitude > 0.0))
        throw InvalidArgumentError("gen_sparse: magnitude must be positive");
    SplitMix64 rng(seed);
    DenseMatrix s(omega.rows(), omega.cols());
    for (std::size_t flat : omega.linear())
        s[flat] = (rng.next_u64() & 1ULL) ? magnitude : -magnitude;
    return s;
}

/// Gaussian-magnitude variant: entries are sigma * N(0,1) on omega.
inline DenseMatrix gen_sparse_gaussian(const SupportSet& omega, double sigma,
                                       std::uint64_t seed) {
    if (!(sigma > 0.0))
        throw InvalidArgumentError("gen_sparse_gaussian: sigma must be positive");
    GaussianStream gauss(seed);
    DenseMatrix s(omega.rows(), omega.cols());
    for (std::size_t flat : omega.linear()) s[flat] = sigma * gauss.next();
    return s;
}

/// Incoherence statistics of the singular factors: how concentrated the
/// row/column spaces are on coordinate axes, and the entrywise size of
/// U V^T. strong_mu additionally scans all index pairs of the two Gram
/// matrices (skipped above kStrongMuMaxDim).
struct IncoherenceReport {
    double mu_row = 0.0;   ///< max_i ||U^T e_i||^2 n1 / r
    double mu_col = 0.0;   ///< max_i ||V^T e_i||^2 n2 / r
    double mu_uv = 0.0;    ///< ||U V^T||_inf^2 n1 n2 / r
    double mu = 0.0;       ///< max of the three
    std::optional<double> strong_mu;
};

inline constexpr std::size_t kStrongMuMaxDim = 2000;

inline IncoherenceReport incoherence(const DenseMatrix& m,
                                     double rank_cutoff = kDefaultRankCutoff) {
    const SvdFactors f = svd(m, rank_cutoff);
    if (f.rank() == 0) throw InvalidArgumentError("incoherence: zero matrix");
    const double r = static_cast<double>(f.rank());
    const std::size_t n1 = m.rows(), n2 = m.cols();

    auto max_row_sq = [](const DenseMatrix& basis) {
        double best = 0.0;
        for (std::size_t i = 0; i < basis.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < basis.cols(); ++j) acc += basis(i, j) * basis(i, j);
            best = std::max(best, acc);
        }
        return best;
    };

    IncoherenceReport rep;
    rep.mu_row = max_row_sq(f.u) * static_cast<double>(n1) / r;
    rep.mu_col = max_row_sq(f.v) * static_cast<double>(n2) / r;
    const double uv_inf = max_abs(multiply_a_bt(f.u, f.v));
    rep.mu_uv = uv_inf * uv_inf * static_cast<double>(n1) * static_cast<double>(n2) / r;
    rep.mu = std::max({rep.mu_row, rep.mu_col, rep.mu_uv});

    if (std::max(n1, n2) <= kStrongMuMaxDim) {
        const double sqrt_r = std::sqrt(r);
        auto pair_scan = [&](const DenseMatrix& basis, std::size_t n) {
            // gram = basis basis^T scanned entry by entry
            const DenseMatrix gram = multiply_a_bt(basis, basis);
            double need = 0.0;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) {
                    const double target = (a == b) ? r / static_cast<double>(n) : 0.0;
                    const double dev = std::abs(gram(a, b) - target);
                    need = std::max(need, dev * static_cast<double>(n) / sqrt_r);
                }
            return need;
        };
        rep.strong_mu = std::max(pair_scan(f.u, n1), pair_scan(f.v, n2));
    }
    return rep;
}

/// Ground-truth matrix completion problem.
struct McInstance {
    DenseMatrix m_true;
    SupportSet omega;
    DenseMatrix observed;  ///< P_Omega m_true
    std::size_t rank = 0;
    double sampling_ratio = 0.0;   ///< realized |Omega| / (n1 n2)
    double requested_ratio = 0.0;  ///< the generator's rho argument
    std::uint64_t seed = 0;
};

enum class SupportModel { kBernoulli, kUniform };

/// Deterministic in (dims, r, rho, seed); factor/support substreams are
/// decorrelated so consecutive seeds give independent-looking instances.
inline McInstance make_mc_instance(std::size_t n1, std::size_t n2, std::size_t r, double rho,
                                   std::uint64_t seed,
                                   SupportModel model = SupportModel::kBernoulli) {
    McInstance inst;
    inst.rank = r;
    inst.seed = seed;
    inst.requested_ratio = rho;
    inst.m_true = gen_lowrank(n1, n2, r, derive_seed(seed, 0));
    inst.omega = model == SupportModel::kBernoulli
                     ? sample_support_bernoulli(n1, n2, rho, derive_seed(seed, 1))
                     : sample_support_uniform(
                           n1, n2,
                           static_cast<std::size_t>(std::llround(rho * static_cast<double>(n1 * n2))),
                           derive_seed(seed, 1));
    inst.observed = project_omega(inst.m_true, inst.omega);
    inst.sampling_ratio = inst.omega.fraction();
    return inst;
}

/// Ground-truth robust PCA problem: d = m_true + s_true, s_true supported
/// on omega with +-magnitude symmetric signs.
struct RpcaInstance {
    DenseMatrix m_true;
    DenseMatrix s_true;
    SupportSet omega;  ///< support of s_true
    DenseMatrix d;
    double lambda = 0.0;
    double magnitude = 1.0;
    std::size_t rank = 0;
    double corruption_ratio = 0.0;   ///< realized fraction
    double requested_ratio = 0.0;    ///< the generator's rho argument
    std::uint64_t seed = 0;
};

inline double default_lambda(std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw InvalidArgumentError("default_lambda: empty dimensions");
    return 1.0 / std::sqrt(static_cast<double>(std::max(n1, n2)));
}

inline RpcaInstance make_rpca_instance(std::size_t n1, std::size_t n2, std::size_t r,
                                       double corruption_ratio, std::uint64_t seed,
                                       double magnitude = 1.0, double lambda = 0.0,
                                       SupportModel model = SupportModel::kBernoulli) {
    RpcaInstance inst;
    inst.seed = seed;
    inst.rank = r;
    inst.magnitude = magnitude;
    inst.requested_ratio = corruption_ratio;
    inst.m_true = gen_lowrank(n1, n2, r, derive_seed(seed, 0));
    inst.omega = model == SupportModel::kBernoulli
                     ? sample_support_bernoulli(n1, n2, corruption_ratio, derive_seed(seed, 1))
                     : sample_support_uniform(
                           n1, n2,
                           static_cast<std::size_t>(
                               std::llround(corruption_ratio * static_cast<double>(n1 * n2))),
                           derive_seed(seed, 1));
    inst.s_true = gen_sparse(inst.omega, magnitude, derive_seed(seed, 2));
    inst.d = inst.m_true + inst.s_true;
    inst.lambda = lambda > 0.0 ? lambda : default_lambda(n1, n2);
    inst.corruption_ratio = inst.omega.fraction();
    return inst;
}

}  // namespace screc
