#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"
#include "screc/problem_gen.hpp"
#include "screc/support_set.hpp"

namespace screc {

/// Full-precision decimal rendering (round-trips doubles exactly).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Matrix file: first line "n1 n2", then n1 rows of n2 decimal values.
inline void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("write_matrix: cannot open " + path.string());
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write_matrix: write failed for " + path.string());
}

inline DenseMatrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_matrix: cannot open " + path.string());
    std::size_t rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw IoError("read_matrix: bad header in " + path.string());
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!(in >> m[i]))
            throw IoError("read_matrix: truncated data in " + path.string());
    if (!m.all_finite())
        throw IoError("read_matrix: non-finite entry in " + path.string());
    return m;
}

// Support file: first line "n1 n2 m", then m lines "i j" (0-based).
inline void write_support(const std::filesystem::path& path, const SupportSet& s) {
    std::ofstream out(path);
    if (!out) throw IoError("write_support: cannot open " + path.string());
    out << s.rows() << ' ' << s.cols() << ' ' << s.count() << '\n';
    for (const auto& [i, j] : s.indices()) out << i << ' ' << j << '\n';
    if (!out) throw IoError("write_support: write failed for " + path.string());
}

inline SupportSet read_support(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_support: cannot open " + path.string());
    std::size_t rows = 0, cols = 0, m = 0;
    if (!(in >> rows >> cols >> m)) throw IoError("read_support: bad header in " + path.string());
    std::vector<SupportSet::Index> idx;
    idx.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::uint32_t i = 0, j = 0;
        if (!(in >> i >> j)) throw IoError("read_support: truncated data in " + path.string());
        idx.emplace_back(i, j);
    }
    try {
        return SupportSet(rows, cols, std::move(idx));
    } catch (const Error& e) {
        throw IoError("read_support: " + path.string() + ": " + e.what());
    }
}

namespace detail {

inline nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return j;
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw IoError(where + ": unknown key \"" + key + "\"");
    }
}

template <typename T>
T require_field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw IoError(where + ": missing key \"" + std::string(key) + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(where + ": key \"" + std::string(key) + "\": " + e.what());
    }
}

}  // namespace detail

// Instance bundle: a directory holding meta.json plus the matrix and
// support files. Completion bundles carry m_true/observed/omega,
// decomposition bundles m_true/s_true/d/omega.

inline void write_mc_instance(const std::filesystem::path& dir, const McInstance& inst,
                              double requested_rho, const std::string& model) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta{{"problem", "mc"},
                        {"n1", inst.m_true.rows()},
                        {"n2", inst.m_true.cols()},
                        {"r", inst.rank},
                        {"rho", requested_rho},
                        {"seed", inst.seed},
                        {"model", model}};
    std::ofstream out(dir / "meta.json");
    if (!out) throw IoError("write_mc_instance: cannot open meta.json under " + dir.string());
    out << meta.dump(2) << '\n';
    write_matrix(dir / "m_true.txt", inst.m_true);
    write_matrix(dir / "observed.txt", inst.observed);
    write_support(dir / "omega.txt", inst.omega);
}

inline void write_rpca_instance(const std::filesystem::path& dir, const RpcaInstance& inst,
                                double requested_rho, const std::string& model) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta{{"problem", "rpca"},
                        {"n1", inst.m_true.rows()},
                        {"n2", inst.m_true.cols()},
                        {"r", inst.rank},
                        {"rho", requested_rho},
                        {"seed", inst.seed},
                        {"model", model},
                        {"lambda", inst.lambda},
                        {"magnitude", inst.magnitude}};
    std::ofstream out(dir / "meta.json");
    if (!out) throw IoError("write_rpca_instance: cannot open meta.json under " + dir.string());
    out << meta.dump(2) << '\n';
    write_matrix(dir / "m_true.txt", inst.m_true);
    write_matrix(dir / "s_true.txt", inst.s_true);
    write_matrix(dir / "d.txt", inst.d);
    write_support(dir / "omega.txt", inst.omega);
}

inline std::string read_instance_kind(const std::filesystem::path& dir) {
    const nlohmann::json meta = detail::load_json(dir / "meta.json");
    return detail::require_field<std::string>(meta, "problem", "meta.json");
}

inline McInstance read_mc_instance(const std::filesystem::path& dir) {
    const std::string where = (dir / "meta.json").string();
    const nlohmann::json meta = detail::load_json(dir / "meta.json");
    detail::reject_unknown_keys(meta, {"problem", "n1", "n2", "r", "rho", "seed", "model"}, where);
    if (detail::require_field<std::string>(meta, "problem", where) != "mc")
        throw IoError(where + ": not a completion instance");
    McInstance inst;
    inst.rank = detail::require_field<std::size_t>(meta, "r", where);
    inst.seed = detail::require_field<std::uint64_t>(meta, "seed", where);
    if (!std::filesystem::exists(dir / "m_true.txt"))
        throw IoError("read_mc_instance: " + dir.string() +
                      " has no ground truth (m_true.txt missing)");
    inst.requested_ratio = detail::require_field<double>(meta, "rho", where);
    inst.m_true = read_matrix(dir / "m_true.txt");
    inst.observed = read_matrix(dir / "observed.txt");
    inst.omega = read_support(dir / "omega.txt");
    inst.omega.require_matches(inst.m_true, "read_mc_instance");
    if (frobenius_norm(inst.observed - project_omega(inst.m_true, inst.omega)) != 0.0)
        throw IoError("read_mc_instance: observed.txt is not P_Omega(m_true.txt) in " +
                      dir.string());
    inst.sampling_ratio = inst.omega.fraction();
    return inst;
}

inline RpcaInstance read_rpca_instance(const std::filesystem::path& dir) {
    const std::string where = (dir / "meta.json").string();
    const nlohmann::json meta = detail::load_json(dir / "meta.json");
    detail::reject_unknown_keys(
        meta, {"problem", "n1", "n2", "r", "rho", "seed", "model", "lambda", "magnitude"}, where);
    if (detail::require_field<std::string>(meta, "problem", where) != "rpca")
        throw IoError(where + ": not a decomposition instance");
    RpcaInstance inst;
    inst.rank = detail::require_field<std::size_t>(meta, "r", where);
    inst.seed = detail::require_field<std::uint64_t>(meta, "seed", where);
    inst.lambda = detail::require_field<double>(meta, "lambda", where);
    inst.magnitude = detail::require_field<double>(meta, "magnitude", where);
    inst.requested_ratio = detail::require_field<double>(meta, "rho", where);
    if (!std::filesystem::exists(dir / "m_true.txt"))
        throw IoError("read_rpca_instance: " + dir.string() +
                      " has no ground truth (m_true.txt missing)");
    inst.m_true = read_matrix(dir / "m_true.txt");
    inst.s_true = read_matrix(dir / "s_true.txt");
    inst.d = read_matrix(dir / "d.txt");
    inst.omega = read_support(dir / "omega.txt");
    inst.omega.require_matches(inst.m_true, "read_rpca_instance");
    if (frobenius_norm(inst.d - (inst.m_true + inst.s_true)) != 0.0)
        throw IoError("read_rpca_instance: d.txt != m_true.txt + s_true.txt in " + dir.string());
    for (std::size_t i = 0; i < inst.s_true.size(); ++i)
        if (inst.s_true[i] != 0.0 &&
            !std::binary_search(inst.omega.linear().begin(), inst.omega.linear().end(), i))
            throw IoError("read_rpca_instance: s_true.txt has mass off omega.txt in " +
                          dir.string());
    inst.corruption_ratio = inst.omega.fraction();
    return inst;
}

}  // namespace screc
