#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "screc/io.hpp"
#include "screc/problem_gen.hpp"
#include "screc/sweep.hpp"

using namespace screc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("screc_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args, const fs::path& out_file = {}) {
    std::string cmd = std::string(SCREC_CLI_PATH) + " " + args;
    if (!out_file.empty()) cmd += " > " + out_file.string() + " 2>&1";
    else cmd += " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

json first_json(const fs::path& p) { return json::parse(slurp(p)); }

/// CSV contents with the wall_ms column blanked, for golden comparisons.
std::string csv_without_wall(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line, out;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') {
            const auto cut = line.rfind(',');
            if (cut != std::string::npos) line = line.substr(0, cut);
        }
        out += line + "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("gen writes a bundle deterministically and validates its config") {
    TempDir tmp("gen");
    write_text(tmp.path / "cfg.json",
               R"({"problem":"mc","n1":24,"n2":24,"r":2,"rho":0.6,"seed":9})");
    CHECK(run_cli("gen --config " + (tmp.path / "cfg.json").string() + " --out " +
                  (tmp.path / "a").string()) == 0);
    CHECK(fs::exists(tmp.path / "a" / "m_true.txt"));
    CHECK(fs::exists(tmp.path / "a" / "observed.txt"));
    CHECK(fs::exists(tmp.path / "a" / "omega.txt"));
    CHECK(fs::exists(tmp.path / "a" / "meta.json"));

    CHECK(run_cli("gen --config " + (tmp.path / "cfg.json").string() + " --out " +
                  (tmp.path / "b").string()) == 0);
    CHECK(slurp(tmp.path / "a" / "m_true.txt") == slurp(tmp.path / "b" / "m_true.txt"));
    CHECK(slurp(tmp.path / "a" / "omega.txt") == slurp(tmp.path / "b" / "omega.txt"));

    // seed override changes the content
    CHECK(run_cli("gen --config " + (tmp.path / "cfg.json").string() + " --seed 10 --out " +
                  (tmp.path / "c").string()) == 0);
    CHECK(slurp(tmp.path / "a" / "m_true.txt") != slurp(tmp.path / "c" / "m_true.txt"));

    // invalid rank is rejected with a field-bearing message
    write_text(tmp.path / "bad.json",
               R"({"problem":"mc","n1":4,"n2":4,"r":9,"rho":0.5,"seed":1})");
    const fs::path err = tmp.path / "err.txt";
    CHECK(run_cli("gen --config " + (tmp.path / "bad.json").string() + " --out " +
                      (tmp.path / "d").string(),
                  err) == 1);
    CHECK(slurp(err).find("\"r\"") != std::string::npos);

    // unknown keys are rejected
    write_text(tmp.path / "typo.json",
               R"({"problem":"mc","n1":4,"n2":4,"r":2,"rho":0.5,"seed":1,"rnak":3})");
    CHECK(run_cli("gen --config " + (tmp.path / "typo.json").string() + " --out " +
                  (tmp.path / "e").string()) == 1);
}

TEST_CASE("solve succeeds at the data bound and fails when starved") {
    TempDir tmp("solve");
    write_text(tmp.path / "cfg.json",
               R"({"problem":"mc","n1":32,"n2":32,"r":2,"rho":0.6,"seed":3})");
    REQUIRE(run_cli("gen --config " + (tmp.path / "cfg.json").string() + " --out " +
                    (tmp.path / "inst").string()) == 0);

    const fs::path out = tmp.path / "solve.json";
    CHECK(run_cli("solve " + (tmp.path / "inst").string() + " --tau data_bound", out) == 0);
    const json rec = first_json(out);
    CHECK(rec.at("success").get<bool>());
    CHECK(rec.at("rel_err").get<double>() <= 1e-3);
    CHECK(rec.at("iters").get<int>() >= 1);

    CHECK(run_cli("solve " + (tmp.path / "inst").string() + " --tau 0.01x", out) == 2);
    const json bad = first_json(out);
    CHECK_FALSE(bad.at("success").get<bool>());
    CHECK(bad.at("rel_err").get<double>() >= 0.1);

    const fs::path err = tmp.path / "err.txt";
    CHECK(run_cli("solve " + (tmp.path / "missing").string(), err) == 1);
    CHECK(slurp(err).find("missing") != std::string::npos);
}

TEST_CASE("a one-cell one-trial sweep degenerates to a solve") {
    TempDir tmp("sweep1");
    write_text(tmp.path / "gen.json",
               R"({"problem":"mc","n1":32,"n2":32,"r":2,"rho":0.6,"seed":42})");
    REQUIRE(run_cli("gen --config " + (tmp.path / "gen.json").string() + " --out " +
                    (tmp.path / "inst").string()) == 0);
    const fs::path solve_out = tmp.path / "solve.json";
    REQUIRE(run_cli("solve " + (tmp.path / "inst").string() + " --tau data_bound", solve_out) ==
            0);
    const json rec = first_json(solve_out);

    write_text(tmp.path / "sweep.json",
               R"({"problem":"mc","n1":32,"n2":32,"rank_grid":[2],"ratio_grid":[0.6],)"
               R"("tau_multipliers":[1.0],"trials":1,"base_seed":42})");
    REQUIRE(run_cli("sweep --config " + (tmp.path / "sweep.json").string() + " --out " +
                    (tmp.path / "sweep.csv").string()) == 0);
    std::istringstream csv(slurp(tmp.path / "sweep.csv"));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == trial_csv_header());
    // same instance, same solver: rel_err and iters agree with the solve
    std::stringstream expect;
    expect << rec.at("seed").get<std::uint64_t>() << ",32,32,2,"
           << format_double(rec.at("rho").get<double>());
    CHECK(row.substr(0, expect.str().size()) == expect.str());
    CHECK(row.find(format_double(rec.at("rel_err").get<double>())) != std::string::npos);
    CHECK(row.find("," + std::to_string(rec.at("iters").get<int>()) + ",") != std::string::npos);
}

TEST_CASE("sweep rejects malformed configs before any work") {
    TempDir tmp("sweepbad");
    write_text(tmp.path / "bad.json",
               R"({"problem":"mc","n1":16,"n2":16,"rank_grid":[2],"ratio_grid":[0.5],)"
               R"("tau_multipliers":[1.0],"trials":1,"base_seed":1,"oops":true})");
    const fs::path err = tmp.path / "err.txt";
    CHECK(run_cli("sweep --config " + (tmp.path / "bad.json").string() + " --out " +
                      (tmp.path / "out.csv").string(),
                  err) == 1);
    CHECK(slurp(err).find("oops") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.path / "out.csv"));  // rejected before any work
}

TEST_CASE("tau-frontier exits 2 when even the data bound fails") {
    TempDir tmp("frontier_fail");
    write_text(tmp.path / "gen.json",
               R"({"problem":"mc","n1":20,"n2":20,"r":4,"rho":0.15,"seed":10})");
    REQUIRE(run_cli("gen --config " + (tmp.path / "gen.json").string() + " --out " +
                    (tmp.path / "inst").string()) == 0);
    const fs::path err = tmp.path / "err.txt";
    CHECK(run_cli("tau-frontier " + (tmp.path / "inst").string() + " --max-iters 800", err) == 2);
    CHECK(slurp(err).find("regime") != std::string::npos);
}

TEST_CASE("sweep output is identical across runs and thread counts") {
    TempDir tmp("sweepdet");
    write_text(tmp.path / "sweep.json",
               R"({"problem":"mc","n1":32,"n2":32,"rank_grid":[2],"ratio_grid":[0.6],)"
               R"("tau_multipliers":[1.0,0.01],"trials":3,"base_seed":7})");
    REQUIRE(run_cli("sweep --config " + (tmp.path / "sweep.json").string() + " --threads 1 --out " +
                    (tmp.path / "s1.csv").string()) == 0);
    REQUIRE(run_cli("sweep --config " + (tmp.path / "sweep.json").string() + " --threads 4 --out " +
                    (tmp.path / "s4.csv").string()) == 0);
    CHECK(csv_without_wall(tmp.path / "s1.csv") == csv_without_wall(tmp.path / "s4.csv"));
    // summary lines present
    CHECK(slurp(tmp.path / "s1.csv").find("# cell=0") != std::string::npos);
}

TEST_CASE("tau-frontier reports the ordering on a solvable instance") {
    TempDir tmp("frontier");
    write_text(tmp.path / "gen.json",
               R"({"problem":"mc","n1":32,"n2":32,"r":1,"rho":0.7,"seed":11})");
    REQUIRE(run_cli("gen --config " + (tmp.path / "gen.json").string() + " --out " +
                    (tmp.path / "inst").string()) == 0);
    const fs::path out = tmp.path / "frontier.json";
    CHECK(run_cli("tau-frontier " + (tmp.path / "inst").string() + " --ratio-tol 1.2", out) == 0);
    const json rep = first_json(out);
    const double tmin = rep.at("tau_min_empirical").get<double>();
    const double tdata = rep.at("tau_data_bound").get<double>();
    const double toracle = rep.at("tau_oracle_bound").get<double>();
    CHECK(tmin <= toracle);
    CHECK(toracle <= tdata);
    CHECK(rep.at("ordering_ok").get<bool>());
}

TEST_CASE("certify passes at the data bound and fails when starved") {
    TempDir tmp("certify");
    write_text(tmp.path / "gen.json",
               R"({"problem":"mc","n1":32,"n2":32,"r":2,"rho":0.6,"seed":3})");
    REQUIRE(run_cli("gen --config " + (tmp.path / "gen.json").string() + " --out " +
                    (tmp.path / "inst").string()) == 0);
    const fs::path out = tmp.path / "cert.json";
    CHECK(run_cli("certify " + (tmp.path / "inst").string() + " --tau data_bound", out) == 0);
    const json rep = first_json(out);
    CHECK(rep.at("passed").get<bool>());
    CHECK(rep.at("cond_c_value").get<double>() <= 1.0);

    CHECK(run_cli("certify " + (tmp.path / "inst").string() + " --tau 0.001x", out) == 2);
    const json bad = first_json(out);
    CHECK_FALSE(bad.at("passed").get<bool>());
    CHECK(bad.at("cond_c_value").get<double>() > 1.0);

    // ground truth removed: certification is impossible
    fs::remove(tmp.path / "inst" / "m_true.txt");
    const fs::path err = tmp.path / "err.txt";
    CHECK(run_cli("certify " + (tmp.path / "inst").string(), err) == 1);
    CHECK(slurp(err).find("ground truth") != std::string::npos);
}

TEST_CASE("certify on a flat decomposition instance") {
    TempDir tmp("certify_rpca");
    // Hand-built flat-factor instance (see the decomposition tests): the
    // witness route only clears its thresholds on incoherent targets.
    const std::size_t n = 100;
    DenseMatrix u(n, 2), v(n, 2);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        u(i, 0) = s;
        u(i, 1) = (i % 2 == 0) ? s : -s;
        v(i, 0) = s;
        v(i, 1) = ((i / 2) % 2 == 0) ? s : -s;
    }
    RpcaInstance inst;
    inst.m_true = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            inst.m_true(i, j) = 10.0 * u(i, 0) * v(j, 0) + 6.0 * u(i, 1) * v(j, 1);
    inst.omega = sample_support_bernoulli(n, n, 0.005, 19);
    inst.s_true = gen_sparse(inst.omega, 1.0, 20);
    inst.d = inst.m_true + inst.s_true;
    inst.lambda = default_lambda(n, n);
    inst.rank = 2;
    inst.seed = 19;
    write_rpca_instance(tmp.path / "inst", inst, 0.005, "bernoulli");

    const fs::path out = tmp.path / "cert.json";
    const int code = run_cli("certify " + (tmp.path / "inst").string() + " --tau data_bound", out);
    const json rep = first_json(out);
    CHECK(code == 0);
    CHECK(rep.at("passed").get<bool>());
    CHECK(rep.at("witnesses").at("low_rank_side_ok").get<bool>());
    CHECK(rep.at("witnesses").at("sparse_side_ok").get<bool>());
    CHECK(rep.at("pt_pomega_norm").get<double>() <= 0.5);
}
