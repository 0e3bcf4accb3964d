#include "blochkit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include "blochkit/errors.hpp"

namespace blochkit {

namespace {

void require_schroedinger(const Problem1D& problem, const char* op) {
    if (!problem.is_schroedinger()) {
        throw InvalidArgument(std::string(op) + " requires W = 0 and real V");
    }
}

double edge_value(EdgeKind kind) { return kind == EdgeKind::Periodic ? 2.0 : -2.0; }

struct Edge {
    double lambda;
    EdgeKind kind;
    bool touching;
};

class Scanner {
public:
    Scanner(const Problem1D& problem, const SpectrumOptions& options)
        : problem_(problem), options_(options) {}

    double D(double lambda) const { return discriminant(problem_, lambda, options_.propagation); }

    // Root of D - target on [a, b] with a sign change; Illinois regula falsi
    // with a bisection step whenever the bracket fails to shrink by half.
    double refine_edge(double a, double b, double fa, double fb, double target) const {
        double ga = fa - target;
        double gb = fb - target;
        if (ga == 0.0) return a;
        if (gb == 0.0) return b;
        int side = 0;
        for (int iter = 0; iter < 200; ++iter) {
            const double width = b - a;
            const double mid = 0.5 * (a + b);
            if (width <= options_.edge_rel * std::max(1.0, std::abs(mid))) break;
            double c = (a * gb - b * ga) / (gb - ga);
            if (!(c > a && c < b)) c = mid;
            const double gc = D(c) - target;
            if (std::abs(gc) <= options_.residual_tol) return c;
            if ((gc > 0.0) == (ga > 0.0)) {
                a = c;
                ga = gc;
                if (side == -1) gb *= 0.5;
                side = -1;
            } else {
                b = c;
                gb = gc;
                if (side == 1) ga *= 0.5;
                side = 1;
            }
            if (b - a > 0.5 * width) {
                const double m = 0.5 * (a + b);
                const double gm = D(m) - target;
                if ((gm > 0.0) == (ga > 0.0)) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                    gb = gm;
                }
                side = 0;
            }
        }
        return std::abs(ga) <= std::abs(gb) ? a : b;
    }

    // Sharpens a touching point found as an extremum of D: at coexistence
    // M = +-I, and M12 changes sign there.
    double sharpen_touching(double lambda, double a, double b) const {
        const double width = 1e-6 * std::max(1.0, std::abs(lambda));
        const double lo = std::max(a, lambda - width);
        const double hi = std::min(b, lambda + width);
        auto m12 = [&](double x) { return monodromy(problem_, x, options_.propagation).M(0, 1).real(); };
        double flo = m12(lo);
        double fhi = m12(hi);
        if (flo == 0.0) return lo;
        if (fhi == 0.0) return hi;
        if ((flo > 0.0) == (fhi > 0.0)) return lambda;
        double x0 = lo;
        double x1 = hi;
        while (x1 - x0 > options_.edge_rel * std::max(1.0, std::abs(x0))) {
            const double m = 0.5 * (x0 + x1);
            const double fm = m12(m);
            if (fm == 0.0) return m;
            if ((fm > 0.0) == (flo > 0.0)) {
                x0 = m;
                flo = fm;
            } else {
                x1 = m;
            }
        }
        return 0.5 * (x0 + x1);
    }

    const SpectrumOptions& options() const { return options_; }

private:
    const Problem1D& problem_;
    const SpectrumOptions& options_;
};

bool same_point(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

const char* to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::Periodic: return "periodic";
        case EdgeKind::Antiperiodic: return "antiperiodic";
        case EdgeKind::Truncated: return "truncated";
    }
    return "?";
}

double discriminant(const Problem1D& problem, double lambda, const PropagationOptions& options) {
    require_schroedinger(problem, "discriminant");
    const Monodromy m = monodromy(problem, lambda, options);
    const cplx tr = m.M.trace();
    if (std::abs(tr.imag()) > 1e-9 * std::max(1.0, std::abs(tr.real()))) {
        std::ostringstream msg;
        msg << "tr M has imaginary part " << tr.imag() << " at lambda = " << lambda;
        throw NumericalError(msg.str());
    }
    return tr.real();
}

DiscriminantCurve discriminant_curve(const Problem1D& problem, const std::vector<double>& lambdas,
                                     const PropagationOptions& options) {
    DiscriminantCurve curve;
    curve.lambdas = lambdas;
    curve.values.reserve(lambdas.size());
    for (double l : lambdas) curve.values.push_back(discriminant(problem, l, options));
    return curve;
}

BandStructure locate_bands(const Problem1D& problem, double lambda_min, double lambda_max,
                           int coarse_n, const SpectrumOptions& options) {
    require_schroedinger(problem, "locate_bands");
    if (!(lambda_min < lambda_max)) throw InvalidArgument("locate_bands: need lambda_min < lambda_max");
    if (coarse_n < 64) throw InvalidArgument("locate_bands: coarse_n must be at least 64");

    const Scanner scan(problem, options);
    const int n = coarse_n;
    std::vector<double> lam(n);
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        lam[i] = i + 1 == n ? lambda_max
                            : lambda_min + (lambda_max - lambda_min) * static_cast<double>(i) / (n - 1);
        d[i] = scan.D(lam[i]);
    }

    std::vector<Edge> edges;
    const EdgeKind kinds[2] = {EdgeKind::Periodic, EdgeKind::Antiperiodic};

    // Visible edges: sign changes of D - 2 and D + 2 between grid points.
    // D exactly at +-2 counts as inside the band.
    for (int i = 0; i + 1 < n; ++i) {
        for (EdgeKind kind : kinds) {
            const double t = edge_value(kind);
            auto outside = [&](double v) { return kind == EdgeKind::Periodic ? v > t : v < t; };
            if (outside(d[i]) != outside(d[i + 1])) {
                edges.push_back({scan.refine_edge(lam[i], lam[i + 1], d[i], d[i + 1], t), kind, false});
            }
        }
    }

    // Hidden gaps and touching points sit at local extrema of D that the
    // coarse grid sees from inside the band.
    const double tol = options.edge_tol;
    for (int i = 1; i + 1 < n; ++i) {
        for (EdgeKind kind : kinds) {
            const double sign = kind == EdgeKind::Periodic ? 1.0 : -1.0;
            const double v = sign * d[i];
            if (!(v >= sign * d[i - 1] && v >= sign * d[i + 1])) continue;
            if (v > 2.0) continue;
            auto neg = [&](double x) { return -sign * scan.D(x); };
            const auto [x_star, neg_star] = boost::math::tools::brent_find_minima(
                neg, lam[i - 1], lam[i + 1], std::numeric_limits<double>::digits / 2);
            const double peak = -neg_star;
            if (peak > 2.0 + tol) {
                const double t = edge_value(kind);
                const double dstar = sign * peak;
                edges.push_back({scan.refine_edge(lam[i - 1], x_star, d[i - 1], dstar, t), kind, false});
                edges.push_back({scan.refine_edge(x_star, lam[i + 1], dstar, d[i + 1], t), kind, false});
            } else if (peak >= 2.0 - tol) {
                edges.push_back({scan.sharpen_touching(x_star, lam[i - 1], lam[i + 1]), kind, true});
            }
        }
    }

    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.lambda < b.lambda; });

    // Two coincident edges of one kind are a touching point; a touching point
    // also absorbs regular edges found at the same place.
    std::vector<Edge> merged;
    for (const Edge& e : edges) {
        if (!merged.empty() && merged.back().kind == e.kind &&
            same_point(merged.back().lambda, e.lambda, 100.0 * options.edge_rel)) {
            Edge& prev = merged.back();
            if (e.touching && !prev.touching) prev.lambda = e.lambda;
            prev.touching = true;
            continue;
        }
        merged.push_back(e);
    }

    auto kind_at = [&](double value) {
        if (std::abs(value - 2.0) <= tol) return EdgeKind::Periodic;
        if (std::abs(value + 2.0) <= tol) return EdgeKind::Antiperiodic;
        return EdgeKind::Truncated;
    };

    BandStructure out;
    out.lambda_min = lambda_min;
    out.lambda_max = lambda_max;
    out.coarse_n = coarse_n;

    bool inside = std::abs(d.front()) <= 2.0;
    Band current;
    if (inside) {
        current.lo = lambda_min;
        current.lo_kind = kind_at(d.front());
    }
    auto close = [&](double hi, EdgeKind kind, bool touching) {
        current.hi = hi;
        current.hi_kind = kind;
        current.touching_hi = touching;
        current.index = static_cast<int>(out.bands.size());
        out.bands.push_back(current);
        current = Band{};
    };
    for (const Edge& e : merged) {
        if (e.touching) {
            if (!inside) {
                throw ResolutionError("locate_bands: touching point outside a band; increase coarse_n");
            }
            close(e.lambda, e.kind, true);
            current.lo = e.lambda;
            current.lo_kind = e.kind;
            current.touching_lo = true;
        } else if (inside) {
            close(e.lambda, e.kind, false);
            inside = false;
        } else {
            current.lo = e.lambda;
            current.lo_kind = e.kind;
            inside = true;
        }
    }
    if (inside) {
        const EdgeKind k = kind_at(d.back());
        if (current.lo < lambda_max) close(lambda_max, k, false);
    }

    // Every grid point must agree with the band membership it implies.
    for (int i = 0; i < n; ++i) {
        const bool in_band = std::abs(d[i]) <= 2.0;
        bool covered = false;
        for (const Band& b : out.bands) {
            const double pad = 100.0 * options.edge_rel * std::max(1.0, std::abs(lam[i]));
            if (lam[i] >= b.lo - pad && lam[i] <= b.hi + pad) {
                covered = true;
                break;
            }
        }
        if (in_band != covered && std::abs(std::abs(d[i]) - 2.0) > tol) {
            std::ostringstream msg;
            msg << "locate_bands: bracketing unresolved near lambda = " << lam[i]
                << " (D = " << d[i] << "); increase coarse_n";
            throw ResolutionError(msg.str());
        }
    }

    for (const Band& b : out.bands) {
        if (!out.spectral_set.empty() && b.touching_lo) {
            SpectralInterval& s = out.spectral_set.back();
            s.touching_points.push_back(b.lo);
            s.hi = b.hi;
            s.hi_kind = b.hi_kind;
        } else {
            out.spectral_set.push_back({b.lo, b.hi, b.lo_kind, b.hi_kind, {}});
        }
    }
    return out;
}

std::vector<EdgeKind> edge_sequence(const BandStructure& bands) {
    std::vector<EdgeKind> seq;
    for (const Band& b : bands.bands) {
        seq.push_back(b.lo_kind);
        seq.push_back(b.hi_kind);
    }
    return seq;
}

bool interlacing(const BandStructure& bands, int count) {
    const auto seq = edge_sequence(bands);
    if (static_cast<int>(seq.size()) < count) return false;
    for (int e = 0; e < count; ++e) {
        const EdgeKind expected = ((e + 1) / 2) % 2 == 0 ? EdgeKind::Periodic : EdgeKind::Antiperiodic;
        if (seq[e] != expected) return false;
    }
    return true;
}

RealAxisTag sigma_tag_real_axis(const Problem1D& problem, double lambda, const SpectrumOptions& options,
                                const FloquetOptions& floquet) {
    require_schroedinger(problem, "sigma_tag_real_axis");
    RealAxisTag out;
    out.discriminant = discriminant(problem, lambda, options.propagation);
    const double D = out.discriminant;
    std::ostringstream why;
    if (std::abs(std::abs(D) - 2.0) <= options.edge_tol) {
        FloquetOptions fo = floquet;
        fo.propagation = options.propagation;
        fo.edge_tol = options.edge_tol;
        const FloquetData data = analyze(problem, lambda, fo);
        out.jordan = data.jordan;
        if (data.jordan == Jordan::J1) {
            out.tag = SigmaTag::G1;
            out.bounded = true;
            why << "|D - " << (D > 0 ? "2" : "(-2)") << "| <= " << options.edge_tol << ", M scalar";
        } else {
            out.tag = SigmaTag::G2;
            out.bounded = false;
            why << "|D - " << (D > 0 ? "2" : "(-2)") << "| <= " << options.edge_tol << ", M defective";
        }
    } else if (std::abs(D) < 2.0) {
        out.tag = SigmaTag::G3;
        out.bounded = true;
        why << "|D| = " << std::abs(D) << " < 2: conjugate multipliers on the unit circle";
    } else {
        out.tag = SigmaTag::G3;
        out.bounded = false;
        why << "|D| = " << std::abs(D) << " > 2: reciprocal real multipliers";
    }
    out.rationale = why.str();
    return out;
}

FiberEigenvalues planewave_fiber(const Problem1D& problem, double k, int M_pw) {
    require_schroedinger(problem, "planewave_fiber");
    if (M_pw < 8) throw InvalidArgument("planewave_fiber: M_pw must be at least 8");
    const double gamma = problem.period();
    if (std::abs(k) > kPi / gamma * (1.0 + 1e-12)) {
        throw InvalidArgument("planewave_fiber: k outside the Brillouin interval");
    }
    const int size = 2 * M_pw + 1;
    std::vector<cplx> vhat(2 * size - 1);
    for (int j = -(size - 1); j <= size - 1; ++j) vhat[j + size - 1] = problem.V().fourier_coefficient(j);

    Eigen::MatrixXcd H(size, size);
    for (int a = 0; a < size; ++a) {
        for (int b = 0; b < size; ++b) H(a, b) = vhat[(a - b) + size - 1];
        const double q = k + kTwoPi * (a - M_pw) / gamma;
        H(a, a) += q * q;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("planewave_fiber: eigensolver failed");

    FiberEigenvalues out;
    out.k = k;
    out.M_pw = M_pw;
    out.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + size);
    for (int j = size - 5; j <= size - 1; ++j) {
        out.coefficient_tail = std::max(out.coefficient_tail, std::abs(vhat[j + size - 1]));
    }
    return out;
}

UnionReport union_check(const Problem1D& problem, int k_grid, int M_pw, double lambda_max, int coarse_n,
                        const SpectrumOptions& options) {
    if (k_grid < 2) throw InvalidArgument("union_check: need at least 2 k points");
    UnionReport out;
    out.k_points = k_grid;
    out.M_pw = M_pw;
    out.lambda_max = lambda_max;

    const double kmax = kPi / problem.period();
    std::vector<double> lo;
    std::vector<double> hi;
    for (int i = 0; i < k_grid; ++i) {
        const double k = -kmax + 2.0 * kmax * static_cast<double>(i) / (k_grid - 1);
        const auto fiber = planewave_fiber(problem, k, M_pw);
        if (lo.empty()) {
            lo.assign(fiber.eigenvalues.size(), std::numeric_limits<double>::infinity());
            hi.assign(fiber.eigenvalues.size(), -std::numeric_limits<double>::infinity());
        }
        for (std::size_t j = 0; j < fiber.eigenvalues.size(); ++j) {
            lo[j] = std::min(lo[j], fiber.eigenvalues[j]);
            hi[j] = std::max(hi[j], fiber.eigenvalues[j]);
        }
    }
    for (std::size_t j = 0; j < lo.size() && lo[j] <= lambda_max; ++j) {
        out.planewave_bands.emplace_back(lo[j], std::min(hi[j], lambda_max));
    }

    const double lambda_min = lo.front() - 1.0;
    const BandStructure bands = locate_bands(problem, lambda_min, lambda_max, coarse_n, options);
    for (const Band& b : bands.bands) out.ode_bands.emplace_back(b.lo, b.hi);

    out.count_match = out.ode_bands.size() == out.planewave_bands.size();
    const std::size_t common = std::min(out.ode_bands.size(), out.planewave_bands.size());
    for (std::size_t j = 0; j < common; ++j) {
        out.max_discrepancy = std::max({out.max_discrepancy,
                                        std::abs(out.ode_bands[j].first - out.planewave_bands[j].first),
                                        std::abs(out.ode_bands[j].second - out.planewave_bands[j].second)});
    }
    if (!out.count_match) out.max_discrepancy = std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace blochkit
