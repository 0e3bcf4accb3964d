#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blochkit/cli.hpp"
#include "blochkit/io.hpp"
#include "oracles.hpp"

using blochkit::io::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;

    json report() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = blochkit::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string problem(const std::string& name) { return std::string(BLOCHKIT_PROBLEM_DIR) + "/" + name; }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "blochkit_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("analyze: free particle at lambda = 1") {
    const auto r = run({"analyze", problem("free.json")});
    REQUIRE(r.code == 0);
    const auto j = r.report();
    CHECK(j["results"]["classification"]["sigma_tag"] == "sigma_g^1");
    CHECK(j["results"]["classification"]["classes"] == json::parse("[[0.0, 0.0]]"));
    CHECK(j["results"]["classification"]["jordan"] == "J1");
    CHECK(j["status"] == "pass");
    CHECK(!j.contains("timings"));
}

TEST_CASE("analyze: intro counterexample logs the discrepancy") {
    const std::vector<std::string> args{"analyze", "--catalog", "intro_counterexample", "--lambda", "-1"};
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = a.report();
    CHECK(j["results"]["discrepancy_logged"] == true);
    const auto& fx = j["results"]["intro_fixture"];
    for (const auto& res : fx["segment_residuals"]) CHECK(res.get<double>() <= 1e-7);
    CHECK(fx["continuous"] == false);
}

TEST_CASE("analyze: Mathieu tag from the band lookup") {
    const auto e = oracle::mathieu_edges(1.0, 40);
    const auto r = run({"analyze", problem("mathieu.json")});
    REQUIRE(r.code == 0);
    const auto j = r.report();
    const double lambda = 5.0;
    bool inside = false;
    for (std::size_t b = 0; b + 1 < e.size(); b += 2) inside = inside || (lambda > e[b] && lambda < e[b + 1]);
    CHECK(j["results"]["band_lookup"]["bounded"] == inside);
    CHECK(j["results"]["band_lookup"]["tag"] == j["results"]["classification"]["sigma_tag"]);
    CHECK(j["results"]["bounded"] == inside);
}

TEST_CASE("bands: free particle gives one touching row") {
    const auto r = run({"bands", problem("free.json"), "--format", "csv"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"lambda_lo", "lambda_hi", "edge_kind_lo", "edge_kind_hi", "touching"});
    CHECK(rows[1] == std::vector<std::string>{"0", "20", "periodic", "truncated", "true"});
}

TEST_CASE("bands: Mathieu with the plane-wave oracle") {
    const auto e = oracle::mathieu_edges(1.0, 40);
    const auto r = run({"bands", problem("mathieu.json"), "--oracle", "--format", "csv"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() >= 3);
    CHECK(rows[0].back() == "discrepancy");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][5]) <= 1e-5);
        CHECK(std::abs(std::stod(rows[i][0]) - e[2 * (i - 1)]) <= 1e-6);
    }

    const fs::path csv = scratch("mathieu_bands.csv");
    const fs::path disp = scratch("mathieu_dispersion.csv");
    const auto w = run({"bands", problem("mathieu.json"), "--format", "csv", "--out", csv.string(), "--dispersion",
                        disp.string(), "--k-points", "11"});
    REQUIRE(w.code == 0);
    CHECK(w.report()["command"] == "bands");
    std::ifstream f(csv);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str().rfind("lambda_lo,lambda_hi", 0) == 0);
    std::ifstream d(disp);
    std::stringstream ds;
    ds << d.rdbuf();
    const auto drows = parse_csv(ds.str());
    CHECK(drows.size() == 12);
    CHECK(drows[0][0] == "k");
}

TEST_CASE("bloch: free particle columns are cos and sin") {
    const auto r = run({"bloch", problem("free.json"), "--grid", "64", "--format", "csv"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows[0].size() == 9);
    CHECK(rows[0][1] == "re_psi_bloch1");
    CHECK(rows.size() == 2 * 64 + 2);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double x = std::stod(rows[i][0]);
        CHECK(std::abs(std::stod(rows[i][1]) - std::cos(x)) <= 1e-8);
        CHECK(std::abs(std::stod(rows[i][5]) - std::sin(x)) <= 1e-8);
    }

    const auto c = run({"bloch", "--catalog", "constant", "--lambda", "5", "--format", "csv"});
    REQUIRE(c.code == 0);
    const auto crows = parse_csv(c.out);
    CHECK(crows[0][3] == "re_p_p1");
    CHECK(crows[0][7] == "re_p_p2");
}

TEST_CASE("nd: Hartree energies add and the plane wave is exact") {
    const auto h = run({"nd", problem("hartree.json")});
    REQUIRE(h.code == 0);
    const auto j = h.report();
    double sum = 0.0;
    for (const auto& e : j["results"]["factor_energies"]) sum += e.get<double>();
    CHECK(j["results"]["energy"].get<double>() == sum);
    CHECK(j["results"]["terms"].size() == 4);
    CHECK(j["results"]["residual"]["residual"].get<double>() <= 5e-5);

    const auto p = run({"nd", problem("plane_wave.json")});
    REQUIRE(p.code == 0);
    CHECK(p.report()["results"]["residual"]["residual"].get<double>() <= 1e-8);

    const auto csv = run({"nd", problem("plane_wave.json"), "--format", "csv"});
    const auto rows = parse_csv(csv.out);
    CHECK(rows[0] == std::vector<std::string>{"r1", "r2", "re_psi", "im_psi"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double phase = std::stod(rows[i][0]) + std::stod(rows[i][1]);
        CHECK(std::abs(std::stod(rows[i][2]) - std::cos(phase)) <= 1e-9);
        CHECK(std::abs(std::stod(rows[i][3]) - std::sin(phase)) <= 1e-9);
    }
}

TEST_CASE("transform: Gaussian properties") {
    const auto r = run({"transform", problem("gaussian.json")});
    REQUIRE(r.code == 0);
    const auto j = r.report();
    const auto& props = j["results"]["properties"];
    CHECK(props["quasi_periodicity"].get<double>() <= 1e-10);
    CHECK(props["k_periodicity"].get<double>() <= 1e-10);
}

TEST_CASE("verify: suites pass and reports are deterministic") {
    const auto a = run({"verify", "floquet", "--seed", "3"});
    const auto b = run({"verify", "floquet", "--seed", "3"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto table = a.report()["results"]["table"];
    for (const char* key : {"det_rule", "sum_rule", "A_le_2", "symmetry", "boundedness", "band_edge_jordan",
                            "zero_bloch", "p1_zero_constV"}) {
        CAPTURE(key);
        CHECK(table[key]["outcome"] == "pass");
    }

    const auto full = run({"verify", "spectrum"});
    const auto half = run({"verify", "spectrum", "--mpw", "32"});
    REQUIRE(full.code == 0);
    REQUIRE(half.code == 0);
    CHECK(half.report()["results"]["table"]["union"]["deviation"].get<double>() <= 1e-3);

    const auto rest = run({"verify", "nd"});
    CHECK(rest.code == 0);
    CHECK(run({"verify", "transform"}).code == 0);

    const auto timed = run({"verify", "transform", "--timings"});
    CHECK(timed.report().contains("timings"));
}

TEST_CASE("exit codes") {
    CHECK(run({}).code == blochkit::cli::kInputError);
    CHECK(run({"analyze"}).code == blochkit::cli::kInputError);
    CHECK(run({"analyze", "--catalog", "free"}).code == blochkit::cli::kInputError);
    CHECK(run({"analyze", "/nonexistent/problem.json", "--lambda", "1"}).code == blochkit::cli::kInputError);
    CHECK(run({"bands", "--catalog", "drift", "--range", "0", "1"}).code == blochkit::cli::kInputError);
    CHECK(run({"verify", "everything"}).code == blochkit::cli::kInputError);
    CHECK(run({"catalog", "--format", "xml"}).code == blochkit::cli::kInputError);

    const fs::path bad = scratch("bad.json");
    std::ofstream(bad) << "{\"version\": \"fb/1\", \"mode\": \"1d\", \"V\": 3}";
    CHECK(run({"analyze", bad.string(), "--lambda", "1"}).code == blochkit::cli::kInputError);

    // Support reaches past the requested shells: a numerical failure.
    const fs::path narrow = scratch("narrow.json");
    auto j = json::parse(std::ifstream(problem("gaussian.json")));
    j["transform"]["shells"] = 2;
    std::ofstream(narrow) << j.dump();
    const auto t = run({"transform", narrow.string()});
    CHECK(t.code == blochkit::cli::kNumericalFailure);
    CHECK(t.err.find("numerical failure") != std::string::npos);
}

TEST_CASE("catalog listing") {
    const auto r = run({"catalog"});
    REQUIRE(r.code == 0);
    std::vector<std::string> names;
    const auto j = r.report();
    for (const auto& e : j["entries"]) names.push_back(e["name"]);
    CHECK(names == std::vector<std::string>{"free", "constant", "mathieu", "kronig_penney", "intro_counterexample",
                                            "drift"});
    const auto csv = parse_csv(run({"catalog", "--format", "csv"}).out);
    CHECK(csv.size() == 7);
}
