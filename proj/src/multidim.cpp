#include "blochkit/multidim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blochkit/errors.hpp"

namespace blochkit {

namespace {

// (psi, psi') of the solution with data `init` at x = 0, at arbitrary xs.
std::vector<Vec2> samples_at(const Problem1D& problem, double lambda, const Vec2& init,
                             const std::vector<double>& xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> unique;
    std::vector<std::size_t> slot(xs.size());
    for (std::size_t idx : order) {
        if (unique.empty() || xs[idx] != unique.back()) unique.push_back(xs[idx]);
        slot[idx] = unique.size() - 1;
    }
    const auto values = solution_samples(problem, lambda, init, unique);
    std::vector<Vec2> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = values[slot[i]];
    return out;
}

// Per direction j, (psi_j, psi_j') at x~_j of each point column.
std::vector<std::vector<Vec2>> factor_samples(const SeparableProblem& problem,
                                              const std::vector<double>& lambdas,
                                              const std::vector<Vec2>& inits,
                                              const Eigen::MatrixXd& points) {
    const Eigen::MatrixXd xt = problem.lattice.transform() * points;
    std::vector<std::vector<Vec2>> out;
    for (int j = 0; j < problem.dimension(); ++j) {
        std::vector<double> xs(static_cast<std::size_t>(points.cols()));
        for (Eigen::Index c = 0; c < points.cols(); ++c) xs[static_cast<std::size_t>(c)] = xt(j, c);
        out.push_back(samples_at(problem.directions[static_cast<std::size_t>(j)],
                                 lambdas[static_cast<std::size_t>(j)], inits[static_cast<std::size_t>(j)], xs));
    }
    return out;
}

std::vector<cplx> products(const std::vector<std::vector<Vec2>>& f, std::size_t count, cplx scale) {
    std::vector<cplx> out(count, scale);
    for (const auto& dir : f) {
        for (std::size_t i = 0; i < count; ++i) out[i] *= dir[i](0);
    }
    return out;
}

std::vector<double> lambdas_of(const SeparableSolution& s) {
    std::vector<double> out;
    for (const auto& f : s.factors) out.push_back(f.lambda);
    return out;
}

std::vector<Vec2> inits_of(const SeparableSolution& s) {
    std::vector<Vec2> out;
    for (const auto& f : s.factors) out.push_back(f.init);
    return out;
}

}  // namespace

const char* to_string(PotentialMode mode) {
    return mode == PotentialMode::OrthogonalSum ? "orthogonal-sum" : "verify-only";
}

void SeparableProblem::validate() const {
    const int d = dimension();
    if (static_cast<int>(directions.size()) != d) {
        throw InvalidArgument("separable problem needs one direction problem per lattice vector");
    }
    if (!(laplacian_scale > 0.0)) throw InvalidArgument("laplacian scale must be positive");
    for (int j = 0; j < d; ++j) {
        const auto& p = directions[static_cast<std::size_t>(j)];
        if (!p.W().is_zero()) throw InvalidArgument("direction problems must have W = 0");
        const double len = lattice.length(j);
        if (std::abs(p.period() - len) > 1e-12 * len) {
            throw InvalidArgument("direction period must equal the primitive vector length");
        }
    }
    if (mode == PotentialMode::OrthogonalSum && !lattice.orthogonal()) {
        throw InvalidArgument("orthogonal-sum mode needs all cross coefficients to vanish");
    }
    if (mode == PotentialMode::VerifyOnly && !potential) {
        throw InvalidArgument("verify-only mode needs the full potential");
    }
}

cplx SeparableProblem::V(const Eigen::VectorXd& r) const {
    if (mode == PotentialMode::VerifyOnly) return potential(r);
    const Eigen::VectorXd xt = lattice.transform() * r;
    cplx acc = 0.0;
    for (int j = 0; j < dimension(); ++j) acc += directions[static_cast<std::size_t>(j)].V().evaluate(xt(j));
    return laplacian_scale * acc;
}

Factor make_factor(const Problem1D& problem, double lambda, const FloquetOptions& options,
                   std::array<cplx, 2> weights) {
    Classification c = classify(problem, lambda, options, true);
    Factor f;
    f.lambda = lambda;
    f.sigma = c.map.sigma_tag;
    f.classes = c.map.classes;
    f.weights = weights;
    f.form = std::move(*c.form);
    if (const auto* f2 = std::get_if<Form2>(&f.form.shape)) {
        f.init = f2->growth_init;
    } else {
        const auto parts = f.form.bloch_parts();
        for (std::size_t i = 0; i < parts.size(); ++i) f.init += weights[i] * parts[i]->init;
    }
    f.bounded = boundedness(f.form);
    return f;
}

SeparableSolution assemble(const SeparableProblem& problem, std::vector<Factor> factors,
                           std::optional<double> energy) {
    problem.validate();
    if (static_cast<int>(factors.size()) != problem.dimension()) {
        throw InvalidArgument("factor count must equal the dimension");
    }
    SeparableSolution s;
    s.transform = problem.lattice.transform();
    s.bounded = true;
    double total = 0.0;
    for (const auto& f : factors) {
        s.factor_energies.push_back(problem.laplacian_scale * f.lambda);
        total += s.factor_energies.back();
        s.bounded = s.bounded && f.bounded;
    }
    if (problem.mode == PotentialMode::OrthogonalSum) {
        s.energy = energy.value_or(total);
    } else {
        if (!energy) throw InvalidArgument("verify-only solutions need their energy");
        s.energy = *energy;
    }
    s.factors = std::move(factors);
    return s;
}

std::vector<cplx> evaluate(const SeparableProblem& problem, const SeparableSolution& solution,
                           const Eigen::MatrixXd& points) {
    if (points.rows() != problem.dimension()) throw InvalidArgument("point dimension mismatch");
    const auto f = factor_samples(problem, lambdas_of(solution), inits_of(solution), points);
    return products(f, static_cast<std::size_t>(points.cols()), 1.0);
}

HartreeExample hartree_example(const std::vector<PeriodicCoefficient>& potentials,
                               const std::vector<double>& lambdas, const FloquetOptions& options) {
    if (potentials.empty() || potentials.size() != lambdas.size()) {
        throw InvalidArgument("need one eigenvalue per potential");
    }
    const auto d = static_cast<Eigen::Index>(potentials.size());
    Eigen::MatrixXd prim = Eigen::MatrixXd::Zero(d, d);
    std::vector<Problem1D> dirs;
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto& v = potentials[static_cast<std::size_t>(j)];
        prim(j, j) = v.period();
        dirs.emplace_back(Lattice1D(v.period()), v);
    }
    SeparableProblem problem{LatticeND(prim), 1.0, std::move(dirs), PotentialMode::OrthogonalSum, {}};
    std::vector<Factor> factors;
    for (Eigen::Index j = 0; j < d; ++j) {
        factors.push_back(make_factor(problem.directions[static_cast<std::size_t>(j)],
                                      lambdas[static_cast<std::size_t>(j)], options));
    }
    auto solution = assemble(problem, std::move(factors));
    return {std::move(problem), std::move(solution)};
}

NdResidual residual_nd(const SeparableProblem& problem, const SeparableSolution& solution,
                       int grid_per_dim, const ProbeBox& box) {
    const int d = problem.dimension();
    if (grid_per_dim < 32) throw InvalidArgument("residual grids need at least 32 points per dimension");
    if (box.lower.size() != d || box.upper.size() != d) throw InvalidArgument("probe box dimension mismatch");
    for (int j = 0; j < d; ++j) {
        if (!(box.upper(j) > box.lower(j))) throw InvalidArgument("degenerate probe box");
    }

    const int n = grid_per_dim;
    const int m = n + 4;
    const Eigen::VectorXd h = (box.upper - box.lower) / (n - 1);
    long total = 1;
    for (int j = 0; j < d; ++j) total *= m;

    Eigen::MatrixXd pts(d, total);
    for (long idx = 0; idx < total; ++idx) {
        long rest = idx;
        for (int j = 0; j < d; ++j) {
            pts(j, idx) = box.lower(j) + (static_cast<double>(rest % m) - 2.0) * h(j);
            rest /= m;
        }
    }
    const auto f = factor_samples(problem, lambdas_of(solution), inits_of(solution), pts);
    const auto psi = products(f, static_cast<std::size_t>(total), 1.0);

    std::vector<long> stride(static_cast<std::size_t>(d), 1);
    for (int j = 1; j < d; ++j) stride[static_cast<std::size_t>(j)] = stride[static_cast<std::size_t>(j) - 1] * m;

    const double a = problem.laplacian_scale;
    const Eigen::MatrixXd G = problem.lattice.transform() * problem.lattice.transform().transpose();
    const Eigen::MatrixXd xt = problem.lattice.transform() * pts;

    NdResidual out;
    out.grid_per_dim = n;
    double worst = 0.0;
    double worst_t = 0.0;
    for (long idx = 0; idx < total; ++idx) {
        bool interior = true;
        long rest = idx;
        for (int j = 0; j < d; ++j) {
            const long c = rest % m;
            rest /= m;
            if (c < 2 || c >= m - 2) interior = false;
        }
        if (!interior) continue;
        const auto i = static_cast<std::size_t>(idx);
        out.max_abs = std::max(out.max_abs, std::abs(psi[i]));

        cplx lap = 0.0;
        for (int j = 0; j < d; ++j) {
            const long s = stride[static_cast<std::size_t>(j)];
            auto at = [&](long off) { return psi[static_cast<std::size_t>(idx + off * s)]; };
            lap += (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * h(j) * h(j));
        }
        const cplx V = problem.V(pts.col(idx));
        worst = std::max(worst, std::abs(-a * lap + (V - solution.energy) * psi[i]));

        // Second derivatives in x~ from the factor ODEs: psi'' = (U - lambda) psi.
        cplx op = 0.0;
        for (int p = 0; p < d; ++p) {
            for (int q = 0; q < d; ++q) {
                cplx term = G(p, q);
                for (int r = 0; r < d; ++r) {
                    const Vec2& v = f[static_cast<std::size_t>(r)][i];
                    if (r == p && r == q) {
                        const auto& dir = problem.directions[static_cast<std::size_t>(r)];
                        term *= (dir.V().evaluate(xt(r, idx)) - solution.factors[static_cast<std::size_t>(r)].lambda) * v(0);
                    } else if (r == p || r == q) {
                        term *= v(1);
                    } else {
                        term *= v(0);
                    }
                }
                op += term;
            }
        }
        worst_t = std::max(worst_t, std::abs(-a * op + (V - solution.energy) * psi[i]));
    }
    const double scale = out.max_abs > 0.0 ? out.max_abs : 1.0;
    out.residual = worst / scale;
    out.transformed_residual = worst_t / scale;
    return out;
}

std::vector<BlochTerm> combination_expand(const SeparableProblem& problem, const SeparableSolution& solution) {
    const int d = problem.dimension();
    struct Option {
        int choice;
        cplx weight;
        double k;
        Vec2 init;
    };
    std::vector<std::vector<Option>> per_dir;
    for (int j = 0; j < d; ++j) {
        const Factor& f = solution.factors[static_cast<std::size_t>(j)];
        if (std::holds_alternative<Form2>(f.form.shape)) {
            throw NotExpandable("direction " + std::to_string(j) + " carries a growth (Form2) factor");
        }
        const auto parts = f.form.bloch_parts();
        for (const auto* part : parts) {
            if (std::abs(part->k.representative.imag()) > kClassTolerance * part->k.modulus) {
                throw NotExpandable("direction " + std::to_string(j) + " has a complex quasimomentum");
            }
        }
        std::vector<Option> opts;
        if (std::holds_alternative<Form1>(f.form.shape)) {
            opts.push_back({0, 1.0, parts.front()->k.representative.real(), f.init});
        } else {
            for (std::size_t i = 0; i < parts.size(); ++i) {
                opts.push_back({static_cast<int>(i), f.weights[i], parts[i]->k.representative.real(), parts[i]->init});
            }
        }
        per_dir.push_back(std::move(opts));
    }

    std::vector<BlochTerm> terms(1);
    terms[0].k_tilde = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j) {
        std::vector<BlochTerm> next;
        for (const auto& t : terms) {
            for (const auto& o : per_dir[static_cast<std::size_t>(j)]) {
                BlochTerm u = t;
                u.choice.push_back(o.choice);
                u.coefficient *= o.weight;
                u.k_tilde(j) = o.k;
                u.inits.push_back(o.init);
                u.lambdas.push_back(solution.factors[static_cast<std::size_t>(j)].lambda);
                next.push_back(std::move(u));
            }
        }
        terms = std::move(next);
    }
    for (auto& t : terms) t.k = problem.lattice.transform().transpose() * t.k_tilde;
    return terms;
}

std::vector<cplx> evaluate_term(const SeparableProblem& problem, const BlochTerm& term,
                                const Eigen::MatrixXd& points) {
    const auto f = factor_samples(problem, term.lambdas, term.inits, points);
    return products(f, static_cast<std::size_t>(points.cols()), term.coefficient);
}

double bloch_relation_deviation(const SeparableProblem& problem, const BlochTerm& term,
                                const Eigen::MatrixXd& points) {
    const auto base = evaluate_term(problem, term, points);
    double scale = 0.0;
    for (const auto& v : base) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (int i = 0; i < problem.dimension(); ++i) {
        const Eigen::VectorXd g = problem.lattice.vector(i);
        const Eigen::MatrixXd shifted = points.colwise() + g;
        const auto moved = evaluate_term(problem, term, shifted);
        const cplx phase = std::exp(cplx(0.0, term.k.dot(g)));
        for (std::size_t c = 0; c < base.size(); ++c) worst = std::max(worst, std::abs(moved[c] - phase * base[c]));
    }
    return worst / scale;
}

bool closed_under_sign_flip(const SeparableProblem& problem, const std::vector<BlochTerm>& terms) {
    const int d = problem.dimension();
    auto same = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        for (int j = 0; j < d; ++j) {
            const double mod = kTwoPi / problem.lattice.length(j);
            if (!class_equal(reduce_quasimomentum(a(j), mod), reduce_quasimomentum(b(j), mod))) return false;
        }
        return true;
    };
    for (const auto& t : terms) {
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd flipped = t.k_tilde;
            flipped(j) = -flipped(j);
            const bool found = std::any_of(terms.begin(), terms.end(),
                                           [&](const BlochTerm& u) { return same(u.k_tilde, flipped); });
            if (!found) return false;
        }
    }
    return true;
}

}  // namespace blochkit
