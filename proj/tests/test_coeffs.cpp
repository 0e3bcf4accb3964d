#include <doctest.h>

#include <cmath>

#include "blochkit/catalog.hpp"
#include "blochkit/coeffs.hpp"
#include "blochkit/errors.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace blochkit;

namespace {

// Reference mean of the intro potential, frozen from the Gauss-Legendre
// Richardson oracle (the oracle is re-run below as a guard).
constexpr double kIntroMean = 2.386294361119891;

}  // namespace

TEST_CASE("evaluation of the basic kinds") {
    const auto c = PeriodicCoefficient::constant(1.0, 3.0);
    CHECK(c.evaluate(0.0) == cplx(3.0));
    CHECK(c.evaluate(-17.25) == cplx(3.0));
    CHECK(c.is_constant());

    const auto m = catalog::mathieu_potential(1.0);
    CHECK(std::abs(m.evaluate(0.0) - 2.0) < 1e-15);
    CHECK(std::abs(m.evaluate(kPi / 4)) < 1e-15);
    CHECK(m.is_real());

    const auto v = catalog::intro_potential();
    CHECK(std::abs(v.evaluate(0.0) - 1.5) < 1e-15);
    CHECK(std::abs(v.evaluate(1.0) - 1.5) < 1e-15);  // right limit at the breakpoint
    CHECK(std::abs(v.evaluate(0.5) - (2.0 / 2.25 + 2.0 / 1.5)) < 1e-14);
}

TEST_CASE("intro potential mean matches the quadrature oracle") {
    double spread = 0.0;
    const double ref = oracle::richardson_quadrature(
        [](double x) { return 2.0 / ((x - 2.0) * (x - 2.0)) - 2.0 / (x - 2.0); }, 0.0, 1.0, &spread);
    CHECK(spread < 1e-12);
    CHECK(std::abs(ref - kIntroMean) < 1e-13);
    const cplx got = catalog::intro_potential().mean();
    CHECK(std::abs(got - kIntroMean) <= 1e-10 * kIntroMean);
    CHECK(got.imag() == 0.0);
}

TEST_CASE("mean of simple kinds") {
    CHECK(PeriodicCoefficient::constant(2.0, cplx(1, 2)).mean() == cplx(1, 2));
    CHECK(catalog::mathieu_potential(1.0).mean() == cplx(0.0));
    const auto kp = catalog::kronig_penney_potential(10.0, 0.3, 1.0);
    CHECK(std::abs(kp.mean() - 3.0) < 1e-12);
}

TEST_CASE("breakpoints are periodized, sorted and deduplicated") {
    CHECK(PeriodicCoefficient::constant(1.0, 1.0).breakpoints_in(0.0, 10.0).empty());

    const auto v = catalog::intro_potential();
    const auto b = v.breakpoints_in(-0.5, 2.5);
    REQUIRE(b.size() == 3);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == 1.0);
    CHECK(b[2] == 2.0);

    const auto kp = catalog::kronig_penney_potential(10.0, 0.3, 1.0);
    const auto k = kp.breakpoints_in(0.0, 2.0);
    const std::vector<double> want{0.0, 0.3, 1.0, 1.3, 2.0};
    REQUIRE(k.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(k[i] - want[i]) < 1e-14);
}

TEST_CASE("invalid coefficients are rejected") {
    CHECK_THROWS_AS(PeriodicCoefficient::constant(0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(PeriodicCoefficient::fourier(1.0, {1.0, 2.0}), InvalidArgument);
    // Pole inside its own segment.
    CHECK_THROWS_AS(PeriodicCoefficient::piecewise(1.0, {0.0, 1.0}, {Segment{{RationalTerm{1.0, 0.5, 0.0}}}}),
                    InvalidArgument);
    CHECK_THROWS_AS(PeriodicCoefficient::piecewise(1.0, {0.0, 0.7, 0.5, 1.0},
                                                   {Segment{}, Segment{}, Segment{}}),
                    InvalidArgument);
}

TEST_CASE("catalog names are unique and resolvable") {
    const auto& all = catalog::builtin();
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) CHECK(all[i].name != all[j].name);
        CHECK(&catalog::find(all[i].name) == &all[i]);
    }
    CHECK_THROWS_AS(catalog::find("nope"), InvalidArgument);
}

TEST_CASE("periodicity of catalog and random coefficients") {
    gen::Source s(5);
    std::vector<PeriodicCoefficient> pool;
    for (const auto& e : catalog::builtin()) {
        pool.push_back(e.problem.V());
        pool.push_back(e.problem.W());
    }
    for (int i = 0; i < 6; ++i) {
        pool.push_back(gen::fourier_potential(s, s.uniform(0.5, 4.0), 3, 5.0));
        pool.push_back(gen::step_potential(s, s.uniform(0.5, 4.0), 4, 5.0));
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const auto& c = pool[static_cast<std::size_t>(s.integer(0, long(pool.size()) - 1))];
        const double x = s.uniform(-20.0, 20.0);
        const auto near = c.breakpoints_in(x - 1e-9, x + c.period() + 1e-9);
        bool close = false;
        for (double b : near) {
            close = close || std::abs(b - x) <= 1e-9 || std::abs(b - x - c.period()) <= 1e-9;
        }
        if (close) continue;
        const cplx a = c.evaluate(x), b = c.evaluate(x + c.period());
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
        if (c.is_real()) CHECK(a.imag() == 0.0);
    }
}

TEST_CASE("mean is linear") {
    gen::Source s(7);
    for (int trial = 0; trial < 50; ++trial) {
        const double gamma = s.uniform(0.5, 3.0);
        const auto c1 = gen::step_potential(s, gamma, 3, 4.0);
        const auto c2 = trial % 2 ? gen::fourier_potential(s, gamma, 2, 3.0)
                                  : gen::step_potential(s, gamma, 5, 2.0);
        const cplx alpha = s.complex(2.0), beta = s.complex(2.0);
        const auto combo = PeriodicCoefficient::linear_combination(alpha, c1, beta, c2);
        const cplx want = alpha * c1.mean() + beta * c2.mean();
        CHECK(std::abs(combo.mean() - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    }
    const auto f = gen::fourier_potential(s, 1.0, 4, 2.0);
    CHECK(f.mean() == f.fourier_coefficients()[4]);
}

TEST_CASE("fourier coefficients of a step") {
    // 10 on [0, 0.3): c_m = 10 (1 - e^{-2 pi i m 0.3}) / (2 pi i m)
    const auto kp = catalog::kronig_penney_potential(10.0, 0.3, 1.0);
    for (int m = -4; m <= 4; ++m) {
        const cplx want = m == 0 ? cplx(3.0)
                                 : 10.0 * (1.0 - std::exp(cplx(0, -kTwoPi * m * 0.3))) /
                                       cplx(0, kTwoPi * m);
        CHECK(std::abs(kp.fourier_coefficient(m) - want) < 1e-11);
    }
}
