#include <doctest.h>

#include <cmath>

#include "blochkit/catalog.hpp"
#include "blochkit/errors.hpp"
#include "blochkit/io.hpp"
#include "generators.hpp"

using namespace blochkit;
using io::json;

namespace {

double max_difference(const PeriodicCoefficient& a, const PeriodicCoefficient& b, gen::Source& src) {
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const double x = src.uniform(-2.0 * a.period(), 2.0 * a.period());
        worst = std::max(worst, std::abs(a.evaluate(x) - b.evaluate(x)));
    }
    return worst;
}

}  // namespace

TEST_CASE("coefficient kinds parse") {
    const auto c = io::coefficient_from_json(json::parse(R"({"period": 2.0, "kind": "constant", "value": [1.5, -0.5]})"));
    CHECK(c.kind() == PeriodicCoefficient::Kind::Constant);
    CHECK(c.constant_value() == cplx(1.5, -0.5));

    const auto f = io::coefficient_from_json(
        json::parse(R"({"period": 3.141592653589793, "kind": "fourier", "coefficients": [[1, 0], 0, [1, 0]]})"));
    CHECK(f.fourier_order() == 1);
    CHECK(std::abs(f.evaluate(0.3) - 2.0 * std::cos(0.6)) <= 1e-14);

    const auto r = io::coefficient_from_json(json::parse(R"({
        "period": 1.0, "kind": "piecewise", "breakpoints": [0.0, 1.0],
        "segments": [{"terms": [{"type": "rational", "alpha": 2, "pole": 2.0, "delta": -2}]}]})"));
    // u = -2 at x = 0: 2/4 + 1 = 1.5
    CHECK(std::abs(r.evaluate(0.0) - 1.5) <= 1e-15);

    const auto e = io::coefficient_from_json(json::parse(R"({
        "period": 2.0, "kind": "piecewise", "breakpoints": [0.0, 2.0],
        "segments": [{"terms": [{"type": "exp_trig", "amplitude": 2, "rate": 0.5, "omega": 3.0, "phase": 0.1},
                                {"type": "polynomial", "coefficients": [1, [0, 1]]}]}]})"));
    const double x = 0.7;
    CHECK(std::abs(e.evaluate(x) - (2.0 * std::exp(0.5 * x) * std::cos(3.0 * x + 0.1) + cplx(1.0, x))) <= 1e-14);

    const auto m = io::coefficient_from_json(json::parse(R"({"kind": "catalog", "name": "mathieu", "params": {"q": 0.5}})"));
    CHECK(std::abs(m.evaluate(0.2) - std::cos(0.4)) <= 1e-14);
}

TEST_CASE("schema violations are input errors") {
    const char* bad[] = {
        R"({"period": 1.0, "kind": "spline"})",
        R"({"period": 1.0, "kind": "constant"})",
        R"({"kind": "constant", "value": 1})",
        R"({"period": 1.0, "kind": "fourier", "coefficients": [[1, 0], [2, 0]]})",
        R"({"period": 1.0, "kind": "fourier", "coefficients": [[1, 0, 3]]})",
        R"({"period": 1.0, "kind": "catalog", "name": "nope"})",
        R"({"period": 2.0, "kind": "catalog", "name": "intro"})",
        R"({"period": 1.0, "kind": "piecewise", "breakpoints": [0, 1], "segments": [{"terms": [{"type": "bessel"}]}]})",
        R"({"period": "one", "kind": "constant", "value": 1})",
    };
    for (const char* text : bad) {
        CAPTURE(text);
        CHECK_THROWS_AS(io::coefficient_from_json(json::parse(text)), InvalidArgument);
    }

    CHECK_THROWS_AS(io::parse_problem(json::parse(R"({"version": "fb/0"})")), InvalidArgument);
    CHECK_THROWS_AS(io::parse_problem(json::parse(R"({"version": "fb/1", "mode": "2d"})")), InvalidArgument);
    CHECK_THROWS_AS(io::parse_problem(json::parse(R"({"version": "fb/1", "catalog": "missing"})")), InvalidArgument);
    CHECK_THROWS_AS(io::parse_problem(json::parse(R"({"version": "fb/1", "lattice": {"period": 1}})")), InvalidArgument);
    CHECK_THROWS_AS(io::parse_problem(json::parse(
                        R"({"version": "fb/1", "catalog": "free", "analysis": {"lambda_range": [3, 1]}})")),
                    InvalidArgument);
}

TEST_CASE("catalog coefficients survive a round trip") {
    gen::Source src(11);
    for (const auto& e : catalog::builtin()) {
        CAPTURE(e.name);
        const auto V = io::coefficient_from_json(io::to_json(e.problem.V()));
        const auto W = io::coefficient_from_json(io::to_json(e.problem.W()));
        CHECK(max_difference(V, e.problem.V(), src) == 0.0);
        CHECK(max_difference(W, e.problem.W(), src) == 0.0);
    }
}

TEST_CASE("random coefficients survive a text round trip") {
    gen::Source src(31);
    for (int trial = 0; trial < 20; ++trial) {
        const double period = src.uniform(0.5, 4.0);
        const auto c = trial % 2 == 0 ? gen::fourier_potential(src, period, 3, 2.0)
                                      : gen::step_potential(src, period, 4, 5.0);
        const auto back = io::coefficient_from_json(json::parse(io::to_json(c).dump()));
        CHECK(back.period() == c.period());
        CHECK(max_difference(back, c, src) == 0.0);
    }
}

TEST_CASE("problem files in every mode") {
    const auto one = io::parse_problem(json::parse(R"({
        "version": "fb/1", "lattice": {"period": 1.0},
        "W": {"period": 1.0, "kind": "constant", "value": 0.5},
        "V": {"period": 1.0, "kind": "constant", "value": 0.0},
        "analysis": {"lambda": 2.0, "rtol": 1e-9, "grid": 256, "seed": 7}})"));
    CHECK(one.mode == io::Mode::OneD);
    CHECK(!one.problem->is_schroedinger());
    CHECK(*one.analysis.lambda == 2.0);
    CHECK(one.analysis.floquet.propagation.rtol == 1e-9);
    CHECK(one.analysis.floquet.grid_points == 256);
    CHECK(one.analysis.seed == 7);

    const auto nd = io::parse_problem(json::parse(R"({
        "version": "fb/1", "mode": "nd",
        "lattice": {"vectors": [[1, 0], [0.5, 0.8660254037844386]]},
        "nd": {"laplacian_scale": 0.5, "mode": "verify-only", "potential": 2.0, "energy": 3.0,
               "potentials": [{"period": 1, "kind": "constant", "value": 0},
                              {"period": 1, "kind": "constant", "value": 0}],
               "lambdas": [1, 2]}})"));
    REQUIRE(nd.nd);
    CHECK(nd.nd->mode == PotentialMode::VerifyOnly);
    const auto sp = io::separable_problem(*nd.nd);
    CHECK(sp.V(Eigen::Vector2d(0.3, 0.1)) == cplx(2.0));

    const auto tr = io::parse_problem(json::parse(R"({
        "version": "fb/1", "mode": "transform", "lattice": {"period": 2.0},
        "transform": {"points_per_cell": 4, "cell_lo": [0], "cell_hi": [0],
                      "function": {"kind": "samples", "values": [1, [0, 1], 2, 3]}, "k_per_dim": 4, "shells": 1}})"));
    const auto f = io::sampled_function(*tr.transform);
    CHECK(f.values[1] == cplx(0.0, 1.0));

    auto wrong = tr;
    wrong.transform->samples.pop_back();
    CHECK_THROWS_AS(io::sampled_function(*wrong.transform), InvalidArgument);
}

TEST_CASE("band csv") {
    const auto bs = locate_bands(catalog::free_particle(), 0.0, 20.0, 128);
    const std::string csv = io::bands_csv(bs);
    CHECK(csv == "lambda_lo,lambda_hi,edge_kind_lo,edge_kind_hi,touching\n0,20,periodic,truncated,true\n");
    const auto j = io::to_json(bs);
    CHECK(j["bands"].size() == bs.bands.size());
    CHECK(j["spectral_set"][0]["touching_points"].size() == 8);
}

TEST_CASE("format_double is shortest round trip") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(-2.0) == "-2");
    CHECK(io::format_double(1e-300) == "1e-300");
    CHECK(io::format_double(INFINITY) == "inf");
    gen::Source src(4);
    for (int i = 0; i < 100; ++i) {
        const double v = src.uniform(-1e6, 1e6) * std::pow(10.0, static_cast<double>(src.integer(-20, 20)));
        CHECK(std::stod(io::format_double(v)) == v);
    }
}
