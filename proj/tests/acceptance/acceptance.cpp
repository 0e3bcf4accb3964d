// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "blochkit/catalog.hpp"
#include "blochkit/cli.hpp"
#include "blochkit/errors.hpp"
#include "blochkit/io.hpp"
#include "blochkit/multidim.hpp"
#include "blochkit/spectrum.hpp"
#include "blochkit/transform.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace blochkit;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double entry_error(const Mat2& m, const std::array<cplx, 4>& exact) {
    double scale = 0.0;
    for (const cplx& z : exact) scale = std::max(scale, std::abs(z));
    const double err = std::max({std::abs(m(0, 0) - exact[0]), std::abs(m(0, 1) - exact[1]),
                                 std::abs(m(1, 0) - exact[2]), std::abs(m(1, 1) - exact[3])});
    return err / std::max(1.0, scale);
}

bool real_class(const CongruenceClass& k) { return std::abs(k.representative.imag()) <= 1e-9 * k.modulus; }

std::vector<double> mathieu_edges_pipeline() {
    const auto bs = locate_bands(catalog::mathieu(1.0), -1.0, 30.0, 256);
    std::vector<double> e;
    for (const auto& b : bs.bands) {
        if (b.lo_kind != EdgeKind::Truncated) e.push_back(b.lo);
        if (b.hi_kind != EdgeKind::Truncated) e.push_back(b.hi);
    }
    return e;
}

// 1
Verdict closed_form_monodromy() {
    gen::Source src(101);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double gamma = src.uniform(0.5, kTwoPi);
        const double lambda = src.uniform(-10.0, 40.0);
        const double v0 = src.uniform(-5.0, 5.0);
        const double w = src.uniform(-1.0, 1.0);
        const auto free = catalog::free_particle(gamma);
        worst = std::max(worst, entry_error(monodromy(free, lambda).M, oracle::constant_transfer(0.0, lambda, gamma)));
        const auto cv = catalog::constant_potential(v0, gamma);
        worst = std::max(worst, entry_error(monodromy(cv, lambda).M, oracle::constant_transfer(v0, lambda, gamma)));
        const Problem1D drift(Lattice1D(gamma), PeriodicCoefficient::constant(gamma, w),
                              PeriodicCoefficient::constant(gamma, v0));
        worst = std::max(worst, entry_error(monodromy(drift, lambda).M, oracle::drift_transfer(w, v0, lambda, gamma)));
    }
    return {worst <= 1e-10, "max relative entry error " + fmt(worst) + " <= 1e-10 over 50 (lambda, gamma) pairs"};
}

// 2
Verdict determinant_rule() {
    gen::Source src(202);
    int violations = 0;
    double worst_ratio = 0.0;
    for (const auto& e : catalog::builtin()) {
        const double gamma = e.problem.period();
        const cplx liouville = std::exp(gamma * e.problem.W().mean());
        for (int i = 0; i < 200; ++i) {
            const auto m = monodromy(e.problem, src.uniform(-10.0, 50.0));
            const double dev = std::abs(m.M.determinant() - liouville);
            const double bound = 10.0 * m.error_estimate;
            worst_ratio = std::max(worst_ratio, bound > 0.0 ? dev / bound : (dev > 0.0 ? kInf : 0.0));
            if (dev > bound) ++violations;
        }
    }
    return {violations == 0, std::to_string(violations) + " violations of |det M - exp(gamma mean W)| <= 10 err, worst ratio " +
                                 fmt(worst_ratio)};
}

// 3 and 4 share the sweep.
struct SweepCase {
    const Problem1D* problem;
    double lambda;
    Classification c;
};

std::vector<SweepCase> catalog_sweep() {
    gen::Source src(202);
    std::vector<SweepCase> out;
    for (const auto& e : catalog::builtin()) {
        for (int i = 0; i < 200; ++i) {
            const double lambda = src.uniform(-10.0, 50.0);
            out.push_back({&e.problem, lambda, classify(e.problem, lambda, {}, false)});
        }
    }
    return out;
}

Verdict cardinality_symmetry(const std::vector<SweepCase>& sweep) {
    int violations = 0;
    for (const auto& s : sweep) {
        const auto& classes = s.c.map.classes;
        if (classes.empty() || classes.size() > 2) ++violations;
        if (!s.problem->is_schroedinger()) continue;
        for (const auto& k : classes) {
            const auto neg = reduce_quasimomentum(-k.representative, k.modulus);
            bool found = false;
            for (const auto& other : classes) found = found || class_equal(neg, other);
            if (!found) ++violations;
        }
    }
    return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(sweep.size()) +
                                 " cases (|A| <= 2, closed under k -> -k when W = 0)"};
}

Verdict sum_rule(const std::vector<SweepCase>& sweep) {
    int violations = 0;
    int with_drift = 0;
    for (const auto& s : sweep) {
        const double gamma = s.problem->period();
        const double modulus = kTwoPi / gamma;
        const cplx wbar = s.problem->W().mean();
        if (std::abs(wbar) > 0.0) ++with_drift;
        const auto& classes = s.c.map.classes;
        if (s.c.map.sigma_tag == SigmaTag::G3) {
            if (classes.size() != 2) {
                ++violations;
                continue;
            }
            const auto sum = reduce_quasimomentum(classes[0].representative + classes[1].representative, modulus);
            if (!class_equal(sum, reduce_quasimomentum(wbar / cplx(0.0, 1.0), modulus), 1e-8)) ++violations;
        } else {
            const auto half = reduce_quasimomentum(wbar / cplx(0.0, 2.0), modulus);
            const auto shifted = reduce_quasimomentum(wbar / cplx(0.0, 2.0) + kPi / gamma, modulus);
            for (const auto& k : classes) {
                if (!class_equal(k, half, 1e-8) && !class_equal(k, shifted, 1e-8)) ++violations;
            }
        }
    }
    return {violations == 0 && with_drift > 0,
            std::to_string(violations) + " violations, " + std::to_string(with_drift) + " cases with nonzero mean W"};
}

// 5
Verdict mathieu_union() {
    const auto u = union_check(catalog::mathieu(1.0), 201, 64, 25.0);
    if (u.ode_bands.size() < 3 || u.planewave_bands.size() < 3) return {false, "fewer than three bands"};
    double worst = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        worst = std::max({worst, std::abs(u.ode_bands[j].first - u.planewave_bands[j].first),
                          std::abs(u.ode_bands[j].second - u.planewave_bands[j].second)});
    }
    return {worst <= 1e-5, "first three edge pairs differ by " + fmt(worst) + " <= 1e-5 (M_pw = 64, 201 k)"};
}

// 6
Verdict dichotomy() {
    const auto p = catalog::mathieu(1.0);
    const auto bs = locate_bands(p, -2.0, 30.0, 256);
    std::vector<std::pair<double, double>> bands, gaps;
    double prev = -2.0;
    for (const auto& b : bs.bands) {
        if (b.hi_kind == EdgeKind::Truncated) break;
        bands.emplace_back(b.lo, b.hi);
        if (b.lo > prev) gaps.emplace_back(prev, b.lo);
        prev = b.hi;
    }
    gen::Source src(606);
    auto sample = [&](const std::vector<std::pair<double, double>>& ivs) {
        for (;;) {
            const auto& iv = ivs[static_cast<std::size_t>(src.integer(0, static_cast<long>(ivs.size()) - 1))];
            const double lambda = src.uniform(iv.first, iv.second);
            const double D = discriminant(p, lambda);
            if (std::min(std::abs(D - 2.0), std::abs(D + 2.0)) >= 1e-4) return lambda;
        }
    };
    int wrong = 0;
    for (int i = 0; i < 100; ++i) {
        const double lambda = sample(bands);
        const auto c = classify(p, lambda);
        bool real = true;
        for (const auto& k : c.map.classes) real = real && real_class(k);
        if (!boundedness(*c.form) || !real) ++wrong;
    }
    for (int i = 0; i < 100; ++i) {
        const double lambda = sample(gaps);
        if (boundedness(*classify(p, lambda).form)) ++wrong;
    }
    return {wrong == 0, std::to_string(wrong) + " misclassifications over 100 band and 100 gap samples"};
}

// 7
Verdict edge_degeneracy() {
    const auto p = catalog::mathieu(1.0);
    const auto edges = mathieu_edges_pipeline();
    FloquetOptions tight;
    tight.propagation.rtol *= 0.5;
    int bad = 0;
    for (double e : edges) {
        const auto c = classify(p, e, {}, false);
        const bool degenerate = c.data.jordan != Jordan::J3 && c.map.sigma_tag != SigmaTag::G3;
        const auto t = classify(p, e, tight, false);
        if (!degenerate || t.data.jordan != c.data.jordan) ++bad;
    }
    const auto free = catalog::free_particle();
    double scalar_dev = 0.0;
    for (int n = 1; n <= 6; ++n) {
        const double lambda = n * n / 4.0;
        const auto c = classify(free, lambda, {}, false);
        const Mat2 target = (n % 2 == 0 ? 1.0 : -1.0) * Mat2::Identity();
        scalar_dev = std::max(scalar_dev, (c.data.monodromy.M - target).cwiseAbs().maxCoeff());
        const auto t = classify(free, lambda, tight, false);
        if (c.data.jordan != Jordan::J1 || t.data.jordan != Jordan::J1) ++bad;
    }
    return {bad == 0 && scalar_dev <= 1e-8, std::to_string(edges.size()) + " Mathieu edges and 6 free touchings, " +
                                                std::to_string(bad) + " bad tags, |M -+ I| <= " + fmt(scalar_dev)};
}

// 8
Verdict form_residuals() {
    std::vector<std::pair<Problem1D, double>> cases;
    for (const auto& e : catalog::builtin()) {
        for (double lambda : {-2.0, 0.5, 3.0, 7.5, 15.0}) cases.emplace_back(e.problem, lambda);
    }
    for (double e : mathieu_edges_pipeline()) cases.emplace_back(catalog::mathieu(1.0), e);
    cases.emplace_back(catalog::constant_potential(5.0, 1.0), 5.0);
    cases.emplace_back(catalog::free_particle(), 0.0);
    double residual = 0.0, periodicity = 0.0;
    int coupled = 0;
    for (const auto& [p, lambda] : cases) {
        const auto c = classify(p, lambda);
        const auto r = shifted_operator_residual(p, lambda, *c.form);
        residual = std::max(residual, r.max());
        if (r.coupled) ++coupled;
        periodicity = std::max(periodicity, c.form->transfer_periodicity);
    }
    return {residual <= 1e-5 && periodicity <= 1e-7 && coupled > 0,
            "residual " + fmt(residual) + " <= 1e-5, P periodicity " + fmt(periodicity) + " <= 1e-7 over " +
                std::to_string(cases.size()) + " cases (" + std::to_string(coupled) + " Form2)"};
}

// 9
Verdict zero_validators() {
    bool p1_ok = true;
    for (double v0 : {-3.0, 0.0, 5.0}) {
        const auto p = catalog::constant_potential(v0, 1.0);
        const auto c = classify(p, v0);
        const auto* f2 = std::get_if<Form2>(&c.form->shape);
        if (!f2 || c.map.classes.size() != 1 || std::abs(c.map.classes[0].representative) > 1e-12) {
            p1_ok = false;
            continue;
        }
        for (cplx v : f2->p1) p1_ok = p1_ok && std::abs(v) <= 1e-9;
    }

    int zeros = 0, bad = 0;
    double worst = 0.0;
    auto check_parts = [&](const Problem1D& p, double lambda) {
        const auto c = classify(p, lambda);
        if (!boundedness(*c.form) && c.form->form_number() != 2) return;
        for (const auto& z : zero_of_bloch_check(p, lambda, bloch_eigensolution(*c.form))) {
            if (!z.zero_found) continue;
            ++zeros;
            worst = std::max(worst, z.phase_deviation);
            if (!z.class_ok || z.phase_deviation > 1e-7) ++bad;
        }
    };
    for (double e : mathieu_edges_pipeline()) check_parts(catalog::mathieu(1.0), e);
    for (int n = 1; n <= 4; ++n) check_parts(catalog::free_particle(), n * n / 4.0);
    check_parts(catalog::kronig_penney(), 20.0);
    return {p1_ok && zeros > 0 && bad == 0,
            std::string("p1 = 0 for constant V at V0: ") + (p1_ok ? "yes" : "no") + "; " + std::to_string(zeros) +
                " Bloch eigenfunctions with zeros, " + std::to_string(bad) + " bad, phase deviation " + fmt(worst)};
}

// 10
Verdict separable_assembly() {
    const auto edges = mathieu_edges_pipeline();
    double residual = 0.0, analytic = 0.0, relation = 0.0;
    bool energies = true, counts = true;
    auto run = [&](const HartreeExample& ex, const ProbeBox& box) {
        const auto r = residual_nd(ex.problem, ex.solution, 64, box);
        residual = std::max(residual, r.residual);
        analytic = std::max(analytic, r.transformed_residual);
        double sum = 0.0;
        for (double e : ex.solution.factor_energies) sum += e;
        energies = energies && sum == ex.solution.energy;
        bool expandable = true;
        int s = 0;
        for (const auto& f : ex.solution.factors) {
            expandable = expandable && f.bounded && f.form.form_number() != 2;
            s += f.form.form_number() == 3 ? 1 : 0;
        }
        if (!expandable) return;
        const auto terms = combination_expand(ex.problem, ex.solution);
        counts = counts && terms.size() == (std::size_t{1} << s);
        Eigen::MatrixXd pts(2, 9);
        gen::Source src(10);
        for (int c = 0; c < 9; ++c) pts.col(c) << src.uniform(-3.0, 3.0), src.uniform(-3.0, 3.0);
        for (const auto& t : terms) relation = std::max(relation, bloch_relation_deviation(ex.problem, t, pts));
    };
    const ProbeBox cell{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(kPi, kTwoPi)};
    run(hartree_example({catalog::mathieu_potential(), PeriodicCoefficient::constant(kTwoPi, 0.0)},
                        {0.5 * (edges[0] + edges[1]), 0.3}),
        cell);
    const ProbeBox square{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(kPi, kPi)};
    run(hartree_example({catalog::mathieu_potential(), catalog::mathieu_potential()},
                        {0.5 * (edges[0] + edges[1]), 0.5 * (edges[2] + edges[3])}),
        square);
    gen::Source src(1010);
    const ProbeBox unit{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0)};
    for (int i = 0; i < 6; ++i) {
        const double q1 = src.uniform(0.2, 1.5), q2 = src.uniform(0.2, 1.5);
        run(hartree_example({catalog::mathieu_potential(q1), catalog::mathieu_potential(q2)},
                            {src.uniform(-1.0, 6.0), src.uniform(-1.0, 6.0)}),
            unit);
    }
    return {residual <= 5e-5 && energies && counts && relation <= 1e-7,
            "residual " + fmt(residual) + " <= 5e-5 at 64/dim (analytic " + fmt(analytic) + "), E = sum E_j " + (energies ? "exact" : "broken") +
                ", 2^s counts " + (counts ? "exact" : "wrong") + ", Bloch relation " + fmt(relation) + " <= 1e-7"};
}

// 11
Verdict transform_round_trip() {
    gen::Source src(1111);
    double recon = 0.0, props = 0.0, pars = 0.0;
    for (int trial = 0; trial < 6; ++trial) {
        const double gamma = src.uniform(0.5, 3.0);
        const int lo = static_cast<int>(src.integer(-2, 0));
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = gamma;
        auto f = sample_function(LatticeND(m), 32, {lo}, {lo + 2}, [](const Eigen::VectorXd&) { return cplx(0.0); });
        for (auto& v : f.values) v = src.complex(1.0);
        const auto field = bloch_floquet(f, 8, 3);
        recon = std::max(recon, invert(field, 8, kInf).max_error);
        const auto pr = check_properties(field);
        props = std::max({props, pr.quasi_periodicity, pr.k_periodicity});
        pars = std::max(pars, parseval(field).relative_deviation);
    }
    return {recon <= 1e-10 && props <= 1e-10 && pars <= 1e-8,
            "reconstruction " + fmt(recon) + " <= 1e-10, properties " + fmt(props) + " <= 1e-10, Parseval " +
                fmt(pars) + " <= 1e-8"};
}

// 12
Verdict intro_fixture_report() {
    const std::vector<std::string> args{"analyze", "--catalog", "intro_counterexample", "--lambda", "-1"};
    std::ostringstream a, b, err;
    const int ca = cli::run(args, a, err);
    const int cb = cli::run(args, b, err);
    const auto report = io::json::parse(a.str());
    const auto& results = report["results"];
    const bool produced = ca == cb && ca != cli::kInputError && ca != cli::kNumericalFailure &&
                          results.contains("intro_fixture") && results.contains("discrepancy_logged") &&
                          results["intro_fixture"].contains("segment_residuals");
    const bool flagged = produced && results["discrepancy_logged"] == true;
    return {produced && a.str() == b.str(),
            std::string("report produced twice, byte-identical: ") + (a.str() == b.str() ? "yes" : "no") +
                ", discrepancy flag " + (flagged ? "set" : "clear")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double time_limit;
        std::function<Verdict()> run;
    };
    std::vector<SweepCase> sweep;
    const std::vector<Criterion> criteria{
        {1, "closed-form monodromy", 5.0, closed_form_monodromy},
        {2, "determinant rule", 30.0, determinant_rule},
        {3, "quasimomentum cardinality and symmetry", 0.0,
         [&] {
             sweep = catalog_sweep();
             return cardinality_symmetry(sweep);
         }},
        {4, "sum rule", 0.0, [&] { return sum_rule(sweep); }},
        {5, "Mathieu bands against plane-wave fibers", 60.0, mathieu_union},
        {6, "bounded iff real quasimomenta", 0.0, dichotomy},
        {7, "band-edge degeneracy", 0.0, edge_degeneracy},
        {8, "form extraction residuals", 0.0, form_residuals},
        {9, "zero and p1 validators", 0.0, zero_validators},
        {10, "separable d-dimensional assembly", 0.0, separable_assembly},
        {11, "Bloch-Floquet transform round trip", 0.0, transform_round_trip},
        {12, "intro counterexample report", 0.0, intro_fixture_report},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing = fmt(secs) + " s";
        if (c.time_limit > 0.0) {
            timing += " (limit " + fmt(c.time_limit) + " s)";
            if (secs >= c.time_limit) {
                o.pass = false;
                o.detail += "; over the time limit";
            }
        }
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s; %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
