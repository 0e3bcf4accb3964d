#include "blochkit/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>
#include <boost/math/tools/minima.hpp>

#include "blochkit/errors.hpp"

namespace blochkit {

namespace {

constexpr cplx kI(0.0, 1.0);

cplx principal_log(cplx z) {
    if (z == cplx{}) throw NumericalError("logarithm of a zero multiplier");
    return std::log(z);
}

// Null vector of M - mu I from its larger row, scaled so the larger entry is 1.
Vec2 eigenvector(const Mat2& M, cplx mu) {
    const Mat2 A = M - mu * Mat2::Identity();
    const int row = A.row(0).norm() >= A.row(1).norm() ? 0 : 1;
    Vec2 v(A(row, 1), -A(row, 0));
    if (v.norm() == 0.0) {
        // A vanishes: any vector is an eigenvector.
        v = Vec2(1.0, 0.0);
    }
    const cplx lead = std::abs(v(0)) >= std::abs(v(1)) ? v(0) : v(1);
    return v / lead;
}

std::vector<double> two_period_grid(double gamma, int n) {
    std::vector<double> x(static_cast<std::size_t>(2 * n + 1));
    for (int i = 0; i <= 2 * n; ++i) x[static_cast<std::size_t>(i)] = gamma * i / n;
    return x;
}

std::vector<Vec2> sample(const Problem1D& problem, double lambda, const Vec2& init, cplx mu,
                         const std::vector<double>& grid, bool backward,
                         const PropagationOptions& options) {
    if (!backward) return solution_samples(problem, lambda, init, grid, options);
    // Decaying solutions are integrated from the far end, where they are
    // largest, so the growing mode cannot swamp them.
    const double end = grid.back();
    const double periods = std::round(end / problem.period());
    const Vec2 start = std::pow(mu, periods) * init;
    std::vector<double> back(grid.rbegin(), grid.rend());
    const auto t = transfer_checkpoints(problem, lambda, end, back, options);
    std::vector<Vec2> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[grid.size() - 1 - i] = t[i].entries * start;
    return out;
}

// Scales everything by one factor so that p peaks at 1 on the first period.
void normalize(BlochPart& part, int n) {
    std::size_t arg = 0;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
        if (std::abs(part.p[i]) > std::abs(part.p[arg])) arg = i;
    }
    const cplx peak = part.p[arg];
    if (peak == cplx{}) throw FormExtractionError("Bloch solution vanishes on the grid", 0.0);
    const cplx f = 1.0 / peak;
    for (auto& z : part.psi) z *= f;
    for (auto& z : part.dpsi) z *= f;
    for (auto& z : part.p) z *= f;
    part.init *= f;
}

// Max |p(x + gamma) - p(x)| relative to `scale`, or to max |p| when scale is 0.
double part_periodicity(const std::vector<cplx>& p, int n, double scale = 0.0) {
    double dev = 0.0, own = 0.0;
    for (int i = 0; i <= n; ++i) {
        dev = std::max(dev, std::abs(p[static_cast<std::size_t>(i + n)] - p[static_cast<std::size_t>(i)]));
        own = std::max(own, std::abs(p[static_cast<std::size_t>(i)]));
    }
    if (scale == 0.0) scale = own;
    return scale > 0.0 ? dev / scale : dev;
}

BlochPart make_part(const Problem1D& problem, double lambda, const Vec2& v, cplx mu,
                    const CongruenceClass& k, const std::vector<double>& grid, int n,
                    bool backward, const PropagationOptions& options) {
    BlochPart part;
    part.k = k;
    part.multiplier = mu;
    part.init = v;
    part.sampled_backward = backward;
    const auto states = sample(problem, lambda, v, mu, grid, backward, options);
    part.psi.resize(grid.size());
    part.dpsi.resize(grid.size());
    part.p.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        part.psi[i] = states[i](0);
        part.dpsi[i] = states[i](1);
        part.p[i] = std::exp(-kI * k.representative * grid[i]) * states[i](0);
    }
    normalize(part, n);
    return part;
}

// exp(-ikx) (psi, psi') as a vector; periodic for a Bloch solution.
Vec2 reduced_state(const BlochPart& part, double x, std::size_t i) {
    const cplx f = std::exp(-kI * part.k.representative * x);
    return Vec2(f * part.psi[i], f * part.dpsi[i]);
}

double transfer_periodicity(const std::vector<Mat2>& U, const Mat2& S, int n) {
    const Mat2 Sinv = S.inverse();
    double dev = 0.0, scale = 0.0;
    for (int i = 0; i <= n; ++i) {
        const Mat2 a = U[static_cast<std::size_t>(i)] * Sinv;
        const Mat2 b = U[static_cast<std::size_t>(i + n)] * Sinv;
        dev = std::max(dev, (b - a).norm());
        scale = std::max(scale, a.norm());
    }
    return dev / scale;
}

cplx aligned_multiplier(cplx det, cplx half_trace) {
    cplx s = std::sqrt(det);
    if ((std::conj(half_trace) * s).real() < 0.0) s = -s;
    return s;
}

}  // namespace

const char* to_string(Jordan j) {
    switch (j) {
        case Jordan::J1:
            return "J1";
        case Jordan::J2:
            return "J2";
        case Jordan::J3:
            return "J3";
    }
    return "?";
}

const char* to_string(SigmaTag s) {
    switch (s) {
        case SigmaTag::G1:
            return "sigma_g^1";
        case SigmaTag::G2:
            return "sigma_g^2";
        case SigmaTag::G3:
            return "sigma_g^3";
    }
    return "?";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Pass:
            return "pass";
        case Outcome::Fail:
            return "fail";
        case Outcome::Skip:
            return "skip";
    }
    return "?";
}

Monodromy monodromy(const Problem1D& problem, double lambda, const PropagationOptions& options) {
    const auto t = propagate(problem, lambda, 0.0, problem.period(), options);
    Monodromy m;
    m.M = t.entries;
    m.lambda = lambda;
    m.period = problem.period();
    m.error_estimate = t.error_estimate;
    m.liouville_det = std::exp(problem.W().integral(0.0, problem.period()));
    m.steps = t.steps;
    return m;
}

std::array<cplx, 2> multipliers(const Mat2& M) { return multipliers(M, M.determinant()); }

std::array<cplx, 2> multipliers(const Mat2& M, cplx det) {
    const cplx t = M.trace();
    cplx s = std::sqrt(t * t - 4.0 * det);
    if ((std::conj(t) * s).real() < 0.0) s = -s;
    const cplx big = 0.5 * (t + s);
    const cplx small = big == cplx{} ? cplx{} : det / big;
    std::array<cplx, 2> mu{big, small};
    const double a0 = std::abs(mu[0]), a1 = std::abs(mu[1]);
    const bool tie = std::abs(a0 - a1) <= 1e-12 * std::max(a0, a1);
    if ((!tie && a1 > a0) || (tie && std::arg(mu[1]) < std::arg(mu[0]))) std::swap(mu[0], mu[1]);
    return mu;
}

std::array<cplx, 2> multipliers(const Monodromy& m) { return multipliers(m.M, m.liouville_det); }

Jordan jordan_classify(const Mat2& M, const std::array<cplx, 2>& mu, double tau_eig,
                       double tau_scalar) {
    if (std::abs(mu[0] - mu[1]) > tau_eig * std::max(1.0, std::abs(mu[0]))) return Jordan::J3;
    const cplx half = 0.5 * M.trace();
    if ((M - half * Mat2::Identity()).norm() <= tau_scalar * M.norm()) return Jordan::J1;
    return Jordan::J2;
}

CongruenceClass quasimomentum(cplx mu, const Lattice1D& lattice) {
    if (!std::isfinite(mu.real()) || !std::isfinite(mu.imag()) || mu == cplx{}) {
        throw InvalidArgument("multiplier must be finite and nonzero");
    }
    return reduce_quasimomentum(-kI * std::log(mu) / lattice.period(), lattice);
}

Mat2 expm2(const Mat2& A) {
    const cplx t = 0.5 * A.trace();
    const Mat2 B = A - t * Mat2::Identity();
    const cplx beta2 = -B.determinant();
    cplx ch, shc;
    if (std::abs(beta2) < 1e-8) {
        ch = 1.0 + beta2 / 2.0 + beta2 * beta2 / 24.0;
        shc = 1.0 + beta2 / 6.0 + beta2 * beta2 / 120.0;
    } else {
        const cplx beta = std::sqrt(beta2);
        ch = std::cosh(beta);
        shc = std::sinh(beta) / beta;
    }
    return std::exp(t) * (ch * Mat2::Identity() + shc * B);
}

MatrixLog matrix_log(const Mat2& M, Jordan jordan, double gamma) {
    return matrix_log(M, jordan, gamma, multipliers(M));
}

MatrixLog matrix_log(const Mat2& M, Jordan jordan, double gamma, const std::array<cplx, 2>& mu) {
    if (!(gamma > 0.0)) throw InvalidArgument("period must be positive");
    MatrixLog out;
    if (jordan == Jordan::J3) {
        Mat2 S;
        S.col(0) = eigenvector(M, mu[0]);
        S.col(1) = eigenvector(M, mu[1]);
        const Eigen::JacobiSVD<Mat2> svd(S);
        const auto& sv = svd.singularValues();
        out.condition = sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();
        out.conditioning_warning = out.condition > 1e8;
        Mat2 D = Mat2::Zero();
        D(0, 0) = principal_log(mu[0]);
        D(1, 1) = principal_log(mu[1]);
        out.C = S * D * S.inverse() / gamma;
        return out;
    }
    // log(M) = a I + b N with N = M - (tr/2) I and N^2 = delta^2 I: exact for
    // any 2x2 matrix whose eigenvalues mu_bar (1 +- z) are close together.
    const cplx mbar = 0.5 * M.trace();
    if (mbar == cplx{}) throw NumericalError("degenerate multiplier at zero trace");
    const Mat2 N = M - mbar * Mat2::Identity();
    const cplx z2 = -N.determinant() / (mbar * mbar);
    cplx half_log, atanh_ratio;
    if (std::abs(z2) < 1e-8) {
        half_log = 0.5 * (-z2 - 0.5 * z2 * z2);
        atanh_ratio = 1.0 + z2 / 3.0 + z2 * z2 / 5.0;
    } else {
        const cplx z = std::sqrt(z2);
        half_log = 0.5 * std::log(1.0 - z2);
        atanh_ratio = std::atanh(z) / z;
    }
    const cplx a = principal_log(mbar) + half_log;
    const cplx b = atanh_ratio / mbar;
    out.C = (a * Mat2::Identity() + b * N) / gamma;
    return out;
}

FloquetData analyze(const Problem1D& problem, double lambda, const FloquetOptions& options) {
    FloquetData d;
    d.monodromy = monodromy(problem, lambda, options.propagation);
    const Mat2& M = d.monodromy.M;
    const cplx det = d.monodromy.liouville_det;
    const cplx half = 0.5 * M.trace();
    const cplx delta2 = half * half - det;
    const bool edge = std::abs(delta2) <= options.edge_tol * std::abs(det);

    if (edge) {
        const cplx mbar = aligned_multiplier(det, half);
        d.multipliers = {mbar, mbar};
        d.jordan = (M - half * Mat2::Identity()).norm() <= options.tau_scalar * M.norm() ? Jordan::J1
                                                                                      : Jordan::J2;
        d.near_degenerate =
            2.0 * std::sqrt(std::abs(delta2)) > options.tau_eig * std::max(1.0, std::abs(mbar));
    } else {
        d.multipliers = multipliers(M, det);
        d.jordan = jordan_classify(M, d.multipliers, options.tau_eig, options.tau_scalar);
        if (d.jordan != Jordan::J3) {
            const cplx mbar = aligned_multiplier(det, half);
            d.multipliers = {mbar, mbar};
        }
    }

    d.log = matrix_log(M, d.jordan, problem.period(), d.multipliers);
    d.log_residual = (expm2(d.log.C * problem.period()) - M).norm() / M.norm();

    const Lattice1D& lat = problem.lattice();
    if (d.jordan == Jordan::J3) {
        const auto k1 = quasimomentum(d.multipliers[0], lat);
        const auto k2 = quasimomentum(d.multipliers[1], lat);
        if (class_equal(k1, k2)) {
            d.quasimomenta = {k1};
            d.sigma = SigmaTag::G1;
        } else {
            d.quasimomenta = {k1, k2};
            d.sigma = SigmaTag::G3;
        }
    } else {
        d.quasimomenta = {quasimomentum(d.multipliers[0], lat)};
        d.sigma = d.jordan == Jordan::J1 ? SigmaTag::G1 : SigmaTag::G2;
    }
    return d;
}

std::vector<const BlochPart*> SolutionForm::bloch_parts() const {
    std::vector<const BlochPart*> out;
    if (const auto* f1 = std::get_if<Form1>(&shape)) {
        for (const auto& s : f1->solutions) out.push_back(&s);
    } else if (const auto* f2 = std::get_if<Form2>(&shape)) {
        out.push_back(&f2->bloch);
    } else {
        const auto& f3 = std::get<Form3>(shape);
        out.push_back(&f3.first);
        out.push_back(&f3.second);
    }
    return out;
}

SolutionForm periodic_parts(const Problem1D& problem, double lambda, const FloquetData& data,
                            const FloquetOptions& options) {
    const int n = options.grid_points;
    if (n < 32) throw InvalidArgument("form grids need at least 32 points per period");
    const double gamma = problem.period();
    const Mat2& M = data.monodromy.M;
    const auto& popt = options.propagation;

    SolutionForm form;
    form.grid = two_period_grid(gamma, n);
    form.points_per_period = n;
    form.period = gamma;
    const auto& x = form.grid;

    std::vector<Mat2> U(x.size());
    Mat2 S;

    if (data.jordan == Jordan::J2) {
        const cplx mu = data.multipliers[0];
        const CongruenceClass k = data.quasimomenta[0];
        const Mat2 N = M - 0.5 * M.trace() * Mat2::Identity();
        const int row = N.row(0).norm() >= N.row(1).norm() ? 0 : 1;
        Vec2 v(N(row, 1), -N(row, 0));
        v /= v.norm();
        const Vec2 w = N.adjoint() * v / N.squaredNorm();

        const auto y1 = solution_samples(problem, lambda, v, x, popt);
        const auto y2 = solution_samples(problem, lambda, w, x, popt);
        Form2 f2;
        f2.k0 = k;
        f2.multiplier = mu;
        f2.growth_init = w;
        f2.psi.resize(x.size());
        f2.p1.resize(x.size());
        f2.p2.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const cplx e = std::exp(-kI * k.representative * x[i]);
            const Vec2 p2v = e * y1[i] / (mu * gamma);
            const Vec2 p1v = e * y2[i] - x[i] * p2v;
            f2.psi[i] = y2[i](0);
            f2.p2[i] = p2v(0);
            f2.p1[i] = p1v(0);
            U[i].col(0) = e * y1[i];
            U[i].col(1) = p1v;
        }
        S.col(0) = v;
        S.col(1) = w;
        double scale = 0.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
            scale = std::max({scale, std::abs(f2.p1[i]), std::abs(f2.p2[i])});
            if (std::abs(f2.p2[i]) > std::abs(f2.p2[arg])) arg = i;
        }
        const cplx f = std::abs(f2.p2[arg]) / f2.p2[arg] / scale;
        for (auto* vec : {&f2.psi, &f2.p1, &f2.p2}) {
            for (auto& z : *vec) z *= f;
        }
        f2.growth_init *= f;

        BlochPart& b = f2.bloch;
        b.k = k;
        b.multiplier = mu;
        b.init = v;
        b.psi.resize(x.size());
        b.dpsi.resize(x.size());
        b.p.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            b.psi[i] = y1[i](0);
            b.dpsi[i] = y1[i](1);
            b.p[i] = std::exp(-kI * k.representative * x[i]) * y1[i](0);
        }
        normalize(b, n);
        form.periodicity_deviation =
            std::max({part_periodicity(f2.p1, n, 1.0), part_periodicity(f2.p2, n, 1.0),
                      part_periodicity(b.p, n)});
        form.shape = std::move(f2);
    } else {
        std::array<Vec2, 2> vecs;
        std::array<cplx, 2> mus = data.multipliers;
        std::array<CongruenceClass, 2> ks;
        std::array<bool, 2> backward{false, false};
        if (data.jordan == Jordan::J1) {
            vecs = {Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
            ks = {data.quasimomenta[0], data.quasimomenta[0]};
        } else {
            const Lattice1D& lat = problem.lattice();
            for (int j = 0; j < 2; ++j) {
                vecs[static_cast<std::size_t>(j)] = eigenvector(M, mus[static_cast<std::size_t>(j)]);
                ks[static_cast<std::size_t>(j)] = quasimomentum(mus[static_cast<std::size_t>(j)], lat);
            }
            backward[1] = std::abs(mus[1]) < 0.999 * std::abs(mus[0]);
        }
        std::array<BlochPart, 2> parts;
        for (std::size_t j = 0; j < 2; ++j) {
            parts[j] = make_part(problem, lambda, vecs[j], mus[j], ks[j], x, n, backward[j], popt);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            U[i].col(0) = reduced_state(parts[0], x[i], i);
            U[i].col(1) = reduced_state(parts[1], x[i], i);
        }
        S.col(0) = parts[0].init;
        S.col(1) = parts[1].init;
        form.periodicity_deviation =
            std::max(part_periodicity(parts[0].p, n), part_periodicity(parts[1].p, n));
        if (data.sigma == SigmaTag::G3) {
            form.shape = Form3{std::move(parts[0]), std::move(parts[1])};
        } else {
            form.shape = Form1{ks[0], {std::move(parts[0]), std::move(parts[1])}};
        }
    }

    form.transfer_periodicity = transfer_periodicity(U, S, n);
    const double worst = std::max(form.periodicity_deviation, form.transfer_periodicity);
    if (!(worst <= options.tol_per)) {
        throw FormExtractionError("periodic parts are not periodic (deviation " +
                                      std::to_string(worst) + ")",
                                  worst);
    }
    return form;
}

Classification classify(const Problem1D& problem, double lambda, const FloquetOptions& options,
                        bool extract_form) {
    Classification c;
    c.data = analyze(problem, lambda, options);
    c.map.lambda = lambda;
    c.map.classes = c.data.quasimomenta;
    c.map.sigma_tag = c.data.sigma;
    if (extract_form) c.form = periodic_parts(problem, lambda, c.data, options);
    return c;
}

CheckResult det_rule(const Problem1D& problem, const Monodromy& m) {
    (void)problem;
    CheckResult r;
    r.name = "det_rule";
    r.deviation = std::abs(m.M.determinant() - m.liouville_det);
    r.bound = 10.0 * m.error_estimate;
    r.outcome = r.deviation <= r.bound ? Outcome::Pass : Outcome::Fail;
    return r;
}

CheckResult verify_sum_rule(const Problem1D& problem, const QuasimomentumMap& map, double rel_tol) {
    CheckResult r;
    r.name = "sum_rule";
    const Lattice1D& lat = problem.lattice();
    const double mod = lat.modulus();
    const cplx wbar = problem.W().mean();
    r.bound = rel_tol;
    if (map.classes.size() == 2) {
        const auto sum = reduce_quasimomentum(map.classes[0].representative + map.classes[1].representative, lat);
        const auto target = reduce_quasimomentum(wbar / kI, lat);
        r.deviation = class_distance(sum, target) / mod;
        r.detail = "k1 + k2 against [Wbar/i]";
    } else if (map.classes.size() == 1) {
        const auto t0 = reduce_quasimomentum(wbar / (2.0 * kI), lat);
        const auto t1 = reduce_quasimomentum(wbar / (2.0 * kI) + kPi / lat.period(), lat);
        r.deviation = std::min(class_distance(map.classes[0], t0), class_distance(map.classes[0], t1)) / mod;
        r.detail = "k0 against [Wbar/2i] and [Wbar/2i + pi/gamma]";
    } else {
        r.outcome = Outcome::Fail;
        r.detail = "no classes";
        return r;
    }
    r.outcome = r.deviation <= rel_tol ? Outcome::Pass : Outcome::Fail;
    return r;
}

CheckResult cardinality_check(const QuasimomentumMap& map) {
    CheckResult r;
    r.name = "A_le_2";
    r.deviation = static_cast<double>(map.classes.size());
    r.bound = 2.0;
    const bool two = map.classes.size() == 2;
    const bool ok = !map.classes.empty() && map.classes.size() <= 2 &&
                    two == (map.sigma_tag == SigmaTag::G3);
    r.outcome = ok ? Outcome::Pass : Outcome::Fail;
    return r;
}

CheckResult symmetry_check(const Problem1D& problem, const QuasimomentumMap& map) {
    CheckResult r;
    r.name = "symmetry";
    r.bound = kClassTolerance;
    if (!problem.is_schroedinger()) {
        r.outcome = Outcome::Skip;
        r.detail = "requires W = 0 and real V";
        return r;
    }
    const double mod = problem.lattice().modulus();
    double worst = 0.0;
    for (const auto& k : map.classes) {
        const auto neg = reduce_quasimomentum(-k.representative, mod);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : map.classes) best = std::min(best, class_distance(neg, c) / mod);
        worst = std::max(worst, best);
    }
    r.deviation = worst;
    r.outcome = worst <= kClassTolerance ? Outcome::Pass : Outcome::Fail;
    return r;
}

bool boundedness(const SolutionForm& form) {
    if (std::holds_alternative<Form2>(form.shape)) return false;
    for (const auto* part : form.bloch_parts()) {
        if (std::abs(part->k.representative.imag()) > kClassTolerance * part->k.modulus) return false;
    }
    return true;
}

double ResidualReport::max() const {
    double m = coupled.value_or(0.0);
    for (double r : parts) m = std::max(m, r);
    return m;
}

ResidualReport shifted_operator_residual(const Problem1D& problem, double lambda,
                                         const SolutionForm& form) {
    const int n = form.points_per_period;
    if (n < 32) throw InvalidArgument("residual grids need at least 32 points per period");
    const auto& x = form.grid;
    const double h = form.period / n;
    const double reach = 2.0 * h * (1.0 + 1e-9);

    std::vector<double> cuts = problem.W().breakpoints_in(x.front() - 1.0, x.back() + 1.0);
    const auto vc = problem.V().breakpoints_in(x.front() - 1.0, x.back() + 1.0);
    cuts.insert(cuts.end(), vc.begin(), vc.end());
    std::sort(cuts.begin(), cuts.end());
    auto straddles = [&](double at) {
        const auto it = std::lower_bound(cuts.begin(), cuts.end(), at - reach);
        return it != cuts.end() && *it <= at + reach;
    };

    std::vector<std::size_t> points;
    std::vector<cplx> W, V;
    for (std::size_t i = 2; i + 2 < x.size(); ++i) {
        if (straddles(x[i])) continue;
        points.push_back(i);
        W.push_back(problem.W().evaluate(x[i]));
        V.push_back(problem.V().evaluate(x[i]));
    }

    auto d1 = [h](const std::vector<cplx>& p, std::size_t i) {
        return (-p[i + 2] + 8.0 * p[i + 1] - 8.0 * p[i - 1] + p[i - 2]) / (12.0 * h);
    };
    auto d2 = [h](const std::vector<cplx>& p, std::size_t i) {
        return (-p[i + 2] + 16.0 * p[i + 1] - 30.0 * p[i] + 16.0 * p[i - 1] - p[i - 2]) / (12.0 * h * h);
    };
    auto scale_of = [](std::initializer_list<const std::vector<cplx>*> vs) {
        double s = 0.0;
        for (const auto* v : vs) {
            for (cplx z : *v) s = std::max(s, std::abs(z));
        }
        return s > 0.0 ? s : 1.0;
    };
    // (D^k - lambda) p at point j of `points`.
    auto apply = [&](const std::vector<cplx>& p, cplx k, std::size_t j) {
        const std::size_t i = points[j];
        return -d2(p, i) + (W[j] - 2.0 * kI * k) * d1(p, i) + (kI * k * W[j] + V[j] + k * k - lambda) * p[i];
    };

    ResidualReport report;
    report.evaluated_points = static_cast<int>(points.size());
    if (const auto* f2 = std::get_if<Form2>(&form.shape)) {
        const cplx k = f2->k0.representative;
        const double s = scale_of({&f2->p1, &f2->p2});
        double r2 = 0.0, r1 = 0.0;
        for (std::size_t j = 0; j < points.size(); ++j) {
            const std::size_t i = points[j];
            r2 = std::max(r2, std::abs(apply(f2->p2, k, j)));
            const cplx rhs = (2.0 * kI * k - W[j]) * f2->p2[i] + 2.0 * d1(f2->p2, i);
            r1 = std::max(r1, std::abs(apply(f2->p1, k, j) - rhs));
        }
        report.parts = {r2 / s};
        report.coupled = r1 / s;
        return report;
    }
    for (const auto* part : form.bloch_parts()) {
        const double s = scale_of({&part->p});
        double r = 0.0;
        for (std::size_t j = 0; j < points.size(); ++j) {
            r = std::max(r, std::abs(apply(part->p, part->k.representative, j)));
        }
        report.parts.push_back(r / s);
    }
    return report;
}

ZeroReport zero_of_bloch_check(const Problem1D& problem, double lambda, const BlochPart& part,
                               const FloquetOptions& options) {
    ZeroReport rep;
    if (!problem.is_schroedinger()) {
        rep.detail = "requires W = 0 and real V";
        return rep;
    }
    const Lattice1D& lat = problem.lattice();
    const double gamma = lat.period();
    if (std::abs(part.k.representative.imag()) > kClassTolerance * lat.modulus()) {
        rep.detail = "Bloch solution is not bounded";
        return rep;
    }
    const int n = options.zero_grid_points;
    if (n < 32) throw InvalidArgument("zero search needs at least 32 points per period");
    std::vector<double> x(static_cast<std::size_t>(n + 2));
    for (int i = 0; i <= n + 1; ++i) x[static_cast<std::size_t>(i)] = gamma * i / n;
    const auto s = solution_samples(problem, lambda, part.init, x, options.propagation);

    double scale = 0.0;
    std::size_t peak = 0;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
        if (std::abs(s[i](0)) > scale) {
            scale = std::abs(s[i](0));
            peak = i;
        }
    }
    if (scale == 0.0) throw NumericalError("Bloch solution vanishes identically");

    // Refine each grid minimum of |psi| by re-propagating from its left neighbour.
    double best = std::numeric_limits<double>::infinity();
    double where = 0.0;
    for (std::size_t i = 1; i <= static_cast<std::size_t>(n); ++i) {
        const double a = std::abs(s[i](0));
        if (a > std::abs(s[i - 1](0)) || a > std::abs(s[i + 1](0))) continue;
        if (a > 0.25 * scale) continue;
        const Vec2 base = s[i - 1];
        const double lo = x[i - 1], hi = x[i + 1];
        auto state_at = [&](double t) {
            return Vec2(transfer(problem, lambda, lo, t, options.propagation).entries * base);
        };
        auto f = [&](double t) { return std::norm(state_at(t)(0)); };
        std::uintmax_t iters = 100;
        const auto found = boost::math::tools::brent_find_minima(
            f, lo, hi, std::numeric_limits<double>::digits / 2, iters);
        double t = found.first;
        // Gauss-Newton polish: minimize |psi(t) + psi'(t) dt| over real dt.
        for (int it = 0; it < 3; ++it) {
            const Vec2 st = state_at(t);
            const double den = std::norm(st(1));
            if (den == 0.0) break;
            const double step = -(std::conj(st(1)) * st(0)).real() / den;
            const double next = std::clamp(t + step, lo, hi);
            if (std::abs(state_at(next)(0)) >= std::abs(st(0))) break;
            t = next;
        }
        const double value = std::abs(state_at(t)(0)) / scale;
        if (value < best) {
            best = value;
            where = t;
        }
        if (a / scale < best) {
            best = a / scale;
            where = x[i];
        }
    }
    rep.min_abs = std::isfinite(best) ? best : 1.0;
    rep.zero_location = where;
    rep.zero_found = rep.min_abs <= options.tau_zero;

    const double theta = -std::arg(s[peak](0));
    const cplx rot = std::polar(1.0, theta);
    double dev = 0.0;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
        dev = std::max(dev, std::abs((rot * s[i](0)).imag()));
    }
    rep.phase_deviation = dev / scale;

    // Re p / Im p = tan(k x + C) with C = theta + pi/2 when psi is a rotated real function.
    const double k = part.k.representative.real();
    double qdev = 0.0;
    bool any = false;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
        const cplx p = std::exp(-kI * k * x[i]) * s[i](0);
        if (std::abs(p.imag()) <= 1e-3 * scale) continue;
        any = true;
        const double lhs = std::atan(p.real() / p.imag());
        const double rhs = k * x[i] + theta + 0.5 * kPi;
        qdev = std::max(qdev, std::abs(std::remainder(lhs - rhs, kPi)));
    }
    if (any) rep.quotient_deviation = qdev;

    if (!rep.zero_found) {
        rep.outcome = Outcome::Pass;
        rep.detail = "no zero found";
        return rep;
    }
    const auto zero = reduce_quasimomentum(0.0, lat);
    const auto edge = reduce_quasimomentum(kPi / gamma, lat);
    rep.class_ok = class_equal(part.k, zero) || class_equal(part.k, edge);
    const bool real_ok = rep.phase_deviation <= 1e-7;
    rep.outcome = rep.class_ok && real_ok ? Outcome::Pass : Outcome::Fail;
    rep.detail = rep.outcome == Outcome::Pass ? "zero found; k in {[0], [pi/gamma]}, real up to phase"
                                              : "zero found but the quasimomentum or phase check failed";
    return rep;
}

std::vector<ZeroReport> zero_of_bloch_check(const Problem1D& problem, double lambda,
                                            const Form1& form, const FloquetOptions& options) {
    std::vector<ZeroReport> out;
    for (const auto& s : form.solutions) out.push_back(zero_of_bloch_check(problem, lambda, s, options));
    return out;
}

Form1 bloch_eigensolution(const SolutionForm& form, int index) {
    const auto parts = form.bloch_parts();
    if (index < 0 || static_cast<std::size_t>(index) >= parts.size()) {
        throw InvalidArgument("form has no Bloch solution with that index");
    }
    const BlochPart& p = *parts[static_cast<std::size_t>(index)];
    return Form1{p.k, {p}};
}

}  // namespace blochkit
