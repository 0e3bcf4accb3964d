#include <doctest.h>

#include <cmath>

#include "blochkit/catalog.hpp"
#include "blochkit/errors.hpp"
#include "blochkit/multidim.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace blochkit;

namespace {

const std::vector<double>& mathieu_edges() {
    static const std::vector<double> e = oracle::mathieu_edges(1.0, 40);
    return e;
}

Eigen::MatrixXd diag2(double a, double b) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

ProbeBox box2(double x0, double x1, double y0, double y1) {
    ProbeBox b{Eigen::VectorXd(2), Eigen::VectorXd(2)};
    b.lower << x0, y0;
    b.upper << x1, y1;
    return b;
}

Eigen::MatrixXd random_points(gen::Source& src, int d, int count, double extent) {
    Eigen::MatrixXd p(d, count);
    for (int c = 0; c < count; ++c)
        for (int j = 0; j < d; ++j) p(j, c) = src.uniform(-extent, extent);
    return p;
}

SeparableProblem plane_problem() {
    return {LatticeND(diag2(kTwoPi, kTwoPi)), 0.5, {catalog::free_particle(), catalog::free_particle()},
            PotentialMode::OrthogonalSum, {}};
}

}  // namespace

TEST_CASE("plane-wave product") {
    const auto sp = plane_problem();
    // At lambda = 1 the free monodromy is scalar; weights (1, i) pick exp(ix).
    std::vector<Factor> f;
    for (int j = 0; j < 2; ++j) f.push_back(make_factor(sp.directions[j], 1.0, {}, {1.0, cplx(0.0, 1.0)}));
    const auto sol = assemble(sp, std::move(f));
    CHECK(sol.energy == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sol.bounded);

    gen::Source src(3);
    const auto pts = random_points(src, 2, 20, 8.0);
    const auto psi = evaluate(sp, sol, pts);
    for (int c = 0; c < 20; ++c) {
        CHECK(std::abs(psi[c] - std::exp(cplx(0.0, pts(0, c) + pts(1, c)))) <= 1e-9);
    }
    const auto res = residual_nd(sp, sol, 64, box2(0.0, 1.0, 0.0, 1.0));
    CHECK(res.residual <= 1e-8);
    CHECK(res.transformed_residual <= 1e-8);

    const auto terms = combination_expand(sp, sol);
    CHECK(terms.size() == 1);
}

TEST_CASE("Hartree example: Mathieu times free") {
    const auto& e = mathieu_edges();
    const double l1 = 0.5 * (e[0] + e[1]);
    const auto ex = hartree_example({catalog::mathieu_potential(), PeriodicCoefficient::constant(kTwoPi, 0.0)},
                                    {l1, 0.3});
    CHECK(ex.problem.laplacian_scale == 1.0);
    CHECK(ex.solution.energy == l1 + 0.3);
    CHECK(ex.solution.factor_energies[0] == l1);
    CHECK(ex.solution.bounded);

    const auto res = residual_nd(ex.problem, ex.solution, 64, box2(0.0, kPi, 0.0, kTwoPi));
    CHECK(res.residual <= 1e-5);
    CHECK(res.transformed_residual <= 1e-8);

    const auto terms = combination_expand(ex.problem, ex.solution);
    CHECK(terms.size() == 4);
    CHECK(closed_under_sign_flip(ex.problem, terms));
    gen::Source src(5);
    const auto pts = random_points(src, 2, 12, 4.0);
    for (const auto& t : terms) CHECK(bloch_relation_deviation(ex.problem, t, pts) <= 1e-7);
}

TEST_CASE("Hartree example with zero potentials") {
    for (int d = 1; d <= 3; ++d) {
        std::vector<PeriodicCoefficient> v(d, PeriodicCoefficient::constant(kTwoPi, 0.0));
        const auto ex = hartree_example(v, std::vector<double>(d, 1.0));
        CHECK(ex.solution.energy == doctest::Approx(d).epsilon(1e-15));
        CHECK(combination_expand(ex.problem, ex.solution).size() == 1);
    }
}

TEST_CASE("expansion term counts follow 2^s") {
    const auto& e = mathieu_edges();
    const double band = 0.5 * (e[0] + e[1]);
    const auto free = PeriodicCoefficient::constant(kTwoPi, 0.0);
    const auto mathieu = catalog::mathieu_potential();

    // Form1 x Form1, Form3 x Form1, Form3 x Form3.
    CHECK(combination_expand(hartree_example({free, free}, {1.0, 0.25}).problem,
                             hartree_example({free, free}, {1.0, 0.25}).solution)
              .size() == 1);
    const auto mixed = hartree_example({mathieu, free}, {band, 1.0});
    const auto mixed_terms = combination_expand(mixed.problem, mixed.solution);
    REQUIRE(mixed_terms.size() == 2);
    CHECK(std::abs(mixed_terms[0].k_tilde(0) + mixed_terms[1].k_tilde(0)) <= 1e-9);
    CHECK(mixed_terms[0].k_tilde(1) == mixed_terms[1].k_tilde(1));

    const auto both = hartree_example({mathieu, mathieu}, {band, 0.5 * (e[2] + e[3])});
    const auto terms = combination_expand(both.problem, both.solution);
    CHECK(terms.size() == 4);
    CHECK(closed_under_sign_flip(both.problem, terms));
}

TEST_CASE("growth factors make the product unbounded and non-expandable") {
    const auto ex = hartree_example({PeriodicCoefficient::constant(1.0, 5.0), PeriodicCoefficient::constant(1.0, 0.0)},
                                    {5.0, 2.0});
    CHECK(std::holds_alternative<Form2>(ex.solution.factors[0].form.shape));
    CHECK(!ex.solution.bounded);
    CHECK_THROWS_AS(combination_expand(ex.problem, ex.solution), NotExpandable);

    const auto& e = mathieu_edges();
    const auto gap = hartree_example({catalog::mathieu_potential(), catalog::mathieu_potential()},
                                     {0.5 * (e[1] + e[2]), 0.5 * (e[0] + e[1])});
    CHECK(!gap.solution.factors[0].bounded);
    CHECK(gap.solution.factors[1].bounded);
    CHECK(!gap.solution.bounded);
    CHECK_THROWS_AS(combination_expand(gap.problem, gap.solution), NotExpandable);
    CHECK(residual_nd(gap.problem, gap.solution, 64, box2(0.0, kPi, 0.0, kPi)).residual <= 5e-5);
}

TEST_CASE("hexagonal lattice, verify-only with the cross term") {
    Eigen::MatrixXd hex(2, 2);
    hex << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    const LatticeND lat(hex);
    const double V0 = 2.0;
    const double a = 0.5;
    SeparableProblem sp{lat, a, {catalog::free_particle(1.0), catalog::free_particle(1.0)},
                        PotentialMode::VerifyOnly, [V0](const Eigen::VectorXd&) { return cplx(V0); }};

    // Factors exp(i k_j x~_j), one Bloch part each.
    std::vector<Factor> f;
    Eigen::Vector2d k;
    const double lambdas[2] = {3.0, 7.0};
    for (int j = 0; j < 2; ++j) {
        f.push_back(make_factor(sp.directions[j], lambdas[j], {}, {1.0, 0.0}));
        k(j) = f.back().form.bloch_parts()[0]->k.representative.real();
        CHECK(std::abs(k(j) * k(j) - lambdas[j]) <= 1e-9);
    }
    const Eigen::Vector2d kr = lat.transform().transpose() * k;
    const double E = V0 + a * kr.squaredNorm();
    const double omega = lat.cross(0, 1);
    CHECK(std::abs(E - (V0 + a * (k.squaredNorm() + 2.0 * omega * k(0) * k(1)))) <= 1e-12);

    const auto sol = assemble(sp, f, E);
    const auto res = residual_nd(sp, sol, 64, box2(0.0, 1.0, 0.0, 1.0));
    CHECK(res.residual <= 1e-5);
    CHECK(res.transformed_residual <= 1e-8);

    // Dropping the cross term leaves a visible residual.
    const auto naive = assemble(sp, f, V0 + a * k.squaredNorm());
    CHECK(residual_nd(sp, naive, 64, box2(0.0, 1.0, 0.0, 1.0)).residual > 1e-2);

    CHECK_THROWS_AS(assemble(sp, f), InvalidArgument);
    SeparableProblem wrong = sp;
    wrong.mode = PotentialMode::OrthogonalSum;
    CHECK_THROWS_AS(assemble(wrong, f), InvalidArgument);
}

TEST_CASE("input checks") {
    const auto sp = plane_problem();
    std::vector<Factor> one{make_factor(sp.directions[0], 1.0)};
    CHECK_THROWS_AS(assemble(sp, one), InvalidArgument);

    const auto ex = hartree_example({PeriodicCoefficient::constant(1.0, 0.0), PeriodicCoefficient::constant(1.0, 0.0)},
                                    {1.0, 1.0});
    CHECK_THROWS_AS(residual_nd(ex.problem, ex.solution, 31, box2(0, 1, 0, 1)), InvalidArgument);
    CHECK_THROWS_AS(residual_nd(ex.problem, ex.solution, 64, box2(0, 1, 1, 1)), InvalidArgument);

    SeparableProblem bad_period{LatticeND(diag2(1.0, 2.0)), 0.5,
                                {catalog::free_particle(1.0), catalog::free_particle(1.0)},
                                PotentialMode::OrthogonalSum, {}};
    CHECK_THROWS_AS(bad_period.validate(), InvalidArgument);
}

TEST_CASE("random orthogonal-sum products: residual and Bloch relation") {
    gen::Source src(2024);
    for (int trial = 0; trial < 6; ++trial) {
        CAPTURE(trial);
        const double g1 = src.uniform(0.8, 2.0);
        const double g2 = src.uniform(0.8, 2.0);
        const auto v1 = gen::fourier_potential(src, g1, 2, 2.0);
        const auto v2 = gen::fourier_potential(src, g2, 2, 2.0);
        const double l1 = src.uniform(-1.0, 12.0);
        const double l2 = src.uniform(-1.0, 12.0);
        const auto ex = hartree_example({v1, v2}, {l1, l2});
        CHECK(ex.solution.energy == l1 + l2);
        const auto res = residual_nd(ex.problem, ex.solution, 64, box2(0.0, 1.0, 0.0, 1.0));
        CHECK(res.residual <= 5e-5);

        bool expandable = true;
        for (const auto& f : ex.solution.factors) {
            expandable = expandable && f.bounded && !std::holds_alternative<Form2>(f.form.shape);
        }
        CHECK(ex.solution.bounded == (ex.solution.factors[0].bounded && ex.solution.factors[1].bounded));
        if (!expandable) continue;
        const auto terms = combination_expand(ex.problem, ex.solution);
        int s = 0;
        for (const auto& f : ex.solution.factors) s += f.form.form_number() == 3 ? 1 : 0;
        CHECK(terms.size() == (std::size_t{1} << s));
        const auto pts = random_points(src, 2, 8, 3.0);
        for (const auto& t : terms) CHECK(bloch_relation_deviation(ex.problem, t, pts) <= 1e-7);
    }
}
