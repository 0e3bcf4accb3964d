#include "blochkit/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "blochkit/errors.hpp"

namespace blochkit {

namespace {

constexpr double kQuadratureRelTol = 1e-10;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

bool term_is_real(const Term& term) {
    return std::visit(
        [](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PolynomialTerm>) {
                return std::all_of(t.coefficients.begin(), t.coefficients.end(),
                                   [](cplx c) { return c.imag() == 0.0; });
            } else if constexpr (std::is_same_v<T, RationalTerm>) {
                return t.alpha.imag() == 0.0 && t.delta.imag() == 0.0;
            } else {
                return t.amplitude.imag() == 0.0 && t.rate.imag() == 0.0;
            }
        },
        term);
}

bool term_is_zero(const Term& term) {
    return std::visit(
        [](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PolynomialTerm>) {
                return std::all_of(t.coefficients.begin(), t.coefficients.end(),
                                   [](cplx c) { return c == cplx{}; });
            } else if constexpr (std::is_same_v<T, RationalTerm>) {
                return t.alpha == cplx{} && t.delta == cplx{};
            } else {
                return t.amplitude == cplx{};
            }
        },
        term);
}

Term scale_term(const Term& term, cplx factor) {
    return std::visit(
        [factor](auto t) -> Term {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PolynomialTerm>) {
                for (auto& c : t.coefficients) c *= factor;
            } else if constexpr (std::is_same_v<T, RationalTerm>) {
                t.alpha *= factor;
                t.delta *= factor;
            } else {
                t.amplitude *= factor;
            }
            return t;
        },
        term);
}

void validate_term(const Term& term, double lo, double hi) {
    std::visit(
        [lo, hi](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PolynomialTerm>) {
                for (cplx c : t.coefficients) {
                    if (!finite(c)) throw InvalidArgument("non-finite polynomial coefficient");
                }
            } else if constexpr (std::is_same_v<T, RationalTerm>) {
                if (!finite(t.alpha) || !finite(t.delta) || !std::isfinite(t.pole)) {
                    throw InvalidArgument("non-finite rational term");
                }
                if (t.pole >= lo && t.pole <= hi) {
                    throw InvalidArgument("rational term is singular inside its segment");
                }
            } else {
                if (!finite(t.amplitude) || !finite(t.rate) || !std::isfinite(t.omega) ||
                    !std::isfinite(t.phase)) {
                    throw InvalidArgument("non-finite exponential-trig term");
                }
            }
        },
        term);
}

// Adaptive Gauss-Legendre: a panel is accepted when the 20-point rule agrees
// with the same rule on its two halves, relative to the running L1 scale.
template <class F>
cplx integrate_complex(F&& f, double a, double b) {
    if (a == b) return {};
    using Rule = boost::math::quadrature::gauss<double, 20>;
    struct Panel {
        double lo, hi;
        cplx value;
        double l1;
        int depth;
    };
    auto apply = [&f](double lo, double hi, double& l1) {
        return Rule::integrate([&f](double x) { return cplx(f(x)); }, lo, hi, &l1);
    };
    double l1_total = 0.0;
    Panel first{a, b, {}, 0.0, 0};
    first.value = apply(a, b, first.l1);
    std::vector<Panel> stack{first};
    cplx total{};
    double error = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (p.lo + p.hi);
        double l1_left = 0.0, l1_right = 0.0;
        const cplx left = apply(p.lo, mid, l1_left);
        const cplx right = apply(mid, p.hi, l1_right);
        const cplx refined = left + right;
        const double local = std::abs(refined - p.value);
        l1_total = std::max(l1_total, l1_left + l1_right);
        const double scale = std::max(l1_total, std::abs(first.l1));
        const double allowed = 0.1 * kQuadratureRelTol * scale * (p.hi - p.lo) / (b - a);
        if (local <= allowed || local <= 64 * eps * (l1_left + l1_right) || p.depth >= 40) {
            total += refined;
            error += local;
            continue;
        }
        stack.push_back({p.lo, mid, left, l1_left, p.depth + 1});
        stack.push_back({mid, p.hi, right, l1_right, p.depth + 1});
    }
    const double achieved = error / std::max(l1_total, 1e-300);
    if (!(achieved <= kQuadratureRelTol)) {
        throw AccuracyError("quadrature did not converge on [" + std::to_string(a) + ", " +
                                std::to_string(b) + "]",
                            achieved);
    }
    return total;
}

}  // namespace

cplx evaluate_term(const Term& term, double x) {
    return std::visit(
        [x](const auto& t) -> cplx {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PolynomialTerm>) {
                cplx acc{};
                for (auto it = t.coefficients.rbegin(); it != t.coefficients.rend(); ++it) {
                    acc = acc * x + *it;
                }
                return acc;
            } else if constexpr (std::is_same_v<T, RationalTerm>) {
                const double u = x - t.pole;
                if (u == 0.0) throw EvaluationError("rational term evaluated at its pole");
                return t.alpha / (u * u) + t.delta / u;
            } else {
                return t.amplitude * std::exp(t.rate * x) * std::cos(t.omega * x + t.phase);
            }
        },
        term);
}

cplx evaluate_segment(const Segment& segment, double x) {
    cplx acc{};
    for (const auto& term : segment.terms) acc += evaluate_term(term, x);
    return acc;
}

PeriodicCoefficient PeriodicCoefficient::constant(double period, cplx value) {
    if (!std::isfinite(period) || period <= 0.0) throw InvalidArgument("period must be positive");
    if (!finite(value)) throw InvalidArgument("constant value must be finite");
    PeriodicCoefficient c;
    c.kind_ = Kind::Constant;
    c.period_ = period;
    c.constant_ = value;
    c.real_ = value.imag() == 0.0;
    return c;
}

PeriodicCoefficient PeriodicCoefficient::fourier(double period, std::vector<cplx> coefficients) {
    if (!std::isfinite(period) || period <= 0.0) throw InvalidArgument("period must be positive");
    if (coefficients.size() % 2 != 1) {
        throw InvalidArgument("Fourier coefficients must be indexed -M..M (odd count)");
    }
    for (cplx z : coefficients) {
        if (!finite(z)) throw InvalidArgument("non-finite Fourier coefficient");
    }
    PeriodicCoefficient c;
    c.kind_ = Kind::Fourier;
    c.period_ = period;
    c.fourier_ = std::move(coefficients);
    const int order = c.fourier_order();
    c.real_ = true;
    for (int m = 0; m <= order; ++m) {
        const cplx plus = c.fourier_[order + m];
        const cplx minus = c.fourier_[order - m];
        if (plus != std::conj(minus)) {
            c.real_ = false;
            break;
        }
    }
    return c;
}

PeriodicCoefficient PeriodicCoefficient::piecewise(double period, std::vector<double> breakpoints,
                                                   std::vector<Segment> segments) {
    if (!std::isfinite(period) || period <= 0.0) throw InvalidArgument("period must be positive");
    if (breakpoints.size() < 2 || segments.size() + 1 != breakpoints.size()) {
        throw InvalidArgument("piecewise coefficient needs s segments and s+1 breakpoints");
    }
    if (breakpoints.front() != 0.0 || std::abs(breakpoints.back() - period) > 1e-12 * period) {
        throw InvalidArgument("breakpoints must run from 0 to the period");
    }
    breakpoints.back() = period;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i] < breakpoints[i + 1])) {
            throw InvalidArgument("breakpoints must be strictly increasing");
        }
        for (const auto& term : segments[i].terms) {
            validate_term(term, breakpoints[i], breakpoints[i + 1]);
        }
    }
    PeriodicCoefficient c;
    c.kind_ = Kind::Piecewise;
    c.period_ = period;
    c.breakpoints_ = std::move(breakpoints);
    c.segments_ = std::move(segments);
    c.real_ = std::all_of(c.segments_.begin(), c.segments_.end(), [](const Segment& s) {
        return std::all_of(s.terms.begin(), s.terms.end(), term_is_real);
    });
    return c;
}

bool PeriodicCoefficient::is_zero() const {
    switch (kind_) {
        case Kind::Constant:
            return constant_ == cplx{};
        case Kind::Fourier:
            return std::all_of(fourier_.begin(), fourier_.end(), [](cplx z) { return z == cplx{}; });
        case Kind::Piecewise:
            return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) {
                return std::all_of(s.terms.begin(), s.terms.end(), term_is_zero);
            });
    }
    return false;
}

bool PeriodicCoefficient::is_constant() const {
    if (kind_ == Kind::Constant) return true;
    if (kind_ == Kind::Fourier) {
        const int order = fourier_order();
        for (int m = -order; m <= order; ++m) {
            if (m != 0 && fourier_[order + m] != cplx{}) return false;
        }
        return true;
    }
    return is_zero();
}

double PeriodicCoefficient::base_offset(double x) const {
    double t = x - period_ * std::floor(x / period_);
    if (t >= period_) t -= period_;
    if (t < 0.0) t = 0.0;
    return t;
}

std::size_t PeriodicCoefficient::segment_index(double t) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    auto idx = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it));
    idx = idx == 0 ? 0 : idx - 1;
    return std::min(idx, segments_.size() - 1);
}

cplx PeriodicCoefficient::evaluate(double x) const {
    if (!std::isfinite(x)) throw InvalidArgument("evaluation point must be finite");
    switch (kind_) {
        case Kind::Constant:
            return constant_;
        case Kind::Fourier: {
            const double t = base_offset(x);
            const int order = fourier_order();
            cplx acc{};
            for (int m = -order; m <= order; ++m) {
                acc += fourier_[order + m] * std::polar(1.0, kTwoPi * m * t / period_);
            }
            return real_ ? cplx(acc.real()) : acc;
        }
        case Kind::Piecewise: {
            const double t = base_offset(x);
            return evaluate_segment(segments_[segment_index(t)], t);
        }
    }
    return {};
}

cplx PeriodicCoefficient::evaluate_on_piece(double x, double anchor) const {
    if (kind_ != Kind::Piecewise) return evaluate(x);
    const double shift = period_ * std::floor(anchor / period_);
    const double ta = base_offset(anchor);
    return evaluate_segment(segments_[segment_index(ta)], x - shift);
}

cplx PeriodicCoefficient::piece_integral(std::size_t segment, double a, double b) const {
    const auto& seg = segments_[segment];
    return integrate_complex([&seg](double x) { return evaluate_segment(seg, x); }, a, b);
}

cplx PeriodicCoefficient::mean() const {
    switch (kind_) {
        case Kind::Constant:
            return constant_;
        case Kind::Fourier:
            return fourier_[fourier_order()];
        case Kind::Piecewise: {
            cplx acc{};
            for (std::size_t i = 0; i < segments_.size(); ++i) {
                acc += piece_integral(i, breakpoints_[i], breakpoints_[i + 1]);
            }
            return acc / period_;
        }
    }
    return {};
}

cplx PeriodicCoefficient::integral(double a, double b) const {
    if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("bounds must be finite");
    if (b < a) return -integral(b, a);
    switch (kind_) {
        case Kind::Constant:
            return constant_ * (b - a);
        case Kind::Fourier: {
            const int order = fourier_order();
            cplx acc = fourier_[order] * (b - a);
            for (int m = -order; m <= order; ++m) {
                if (m == 0) continue;
                const double w = kTwoPi * m / period_;
                const cplx iw(0.0, w);
                acc += fourier_[order + m] * (std::polar(1.0, w * base_offset(b)) -
                                              std::polar(1.0, w * base_offset(a))) /
                       iw;
            }
            return acc;
        }
        case Kind::Piecewise: {
            std::vector<double> cuts = breakpoints_in(a, b);
            cuts.insert(cuts.begin(), a);
            cuts.push_back(b);
            cplx acc{};
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                const double lo = cuts[i], hi = cuts[i + 1];
                if (hi <= lo) continue;
                const double mid = 0.5 * (lo + hi);
                const double shift = period_ * std::floor(mid / period_);
                const std::size_t seg = segment_index(base_offset(mid));
                acc += piece_integral(seg, lo - shift, hi - shift);
            }
            return acc;
        }
    }
    return {};
}

cplx PeriodicCoefficient::fourier_coefficient(int m) const {
    switch (kind_) {
        case Kind::Constant:
            return m == 0 ? constant_ : cplx{};
        case Kind::Fourier: {
            const int order = fourier_order();
            return std::abs(m) <= order ? fourier_[order + m] : cplx{};
        }
        case Kind::Piecewise: {
            const double w = kTwoPi * m / period_;
            cplx acc{};
            for (std::size_t i = 0; i < segments_.size(); ++i) {
                const auto& seg = segments_[i];
                acc += integrate_complex(
                    [&seg, w](double x) { return evaluate_segment(seg, x) * std::polar(1.0, -w * x); },
                    breakpoints_[i], breakpoints_[i + 1]);
            }
            return acc / period_;
        }
    }
    return {};
}

std::vector<double> PeriodicCoefficient::breakpoints_in(double a, double b) const {
    std::vector<double> out;
    if (kind_ != Kind::Piecewise || b < a) return out;
    const auto n0 = static_cast<long long>(std::floor(a / period_)) - 1;
    const auto n1 = static_cast<long long>(std::ceil(b / period_)) + 1;
    for (long long n = n0; n <= n1; ++n) {
        for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
            const double x = static_cast<double>(n) * period_ + breakpoints_[i];
            if (x >= a && x <= b) out.push_back(x);
        }
    }
    std::sort(out.begin(), out.end());
    std::vector<double> dedup;
    for (double x : out) {
        if (dedup.empty() || x - dedup.back() > 1e-14 * std::max(1.0, std::abs(x))) {
            dedup.push_back(x);
        }
    }
    return dedup;
}

std::vector<Segment> PeriodicCoefficient::as_segments(std::vector<double>& breakpoints) const {
    switch (kind_) {
        case Kind::Constant:
            breakpoints = {0.0, period_};
            return {Segment{{PolynomialTerm{{constant_}}}}};
        case Kind::Fourier: {
            breakpoints = {0.0, period_};
            Segment seg;
            const int order = fourier_order();
            for (int m = -order; m <= order; ++m) {
                if (fourier_[order + m] == cplx{}) continue;
                seg.terms.push_back(
                    ExpTrigTerm{fourier_[order + m], cplx(0.0, kTwoPi * m / period_), 0.0, 0.0});
            }
            return {seg};
        }
        case Kind::Piecewise:
            breakpoints = breakpoints_;
            return segments_;
    }
    return {};
}

PeriodicCoefficient PeriodicCoefficient::scaled(cplx factor) const {
    return linear_combination(factor, *this, 0.0, constant(period_, 0.0));
}

PeriodicCoefficient PeriodicCoefficient::linear_combination(cplx alpha,
                                                            const PeriodicCoefficient& first,
                                                            cplx beta,
                                                            const PeriodicCoefficient& second) {
    if (std::abs(first.period_ - second.period_) > 1e-12 * first.period_) {
        throw InvalidArgument("cannot combine coefficients with different periods");
    }
    const double period = first.period_;
    if (first.kind_ != Kind::Piecewise && second.kind_ != Kind::Piecewise) {
        if (first.kind_ == Kind::Constant && second.kind_ == Kind::Constant) {
            return constant(period, alpha * first.constant_ + beta * second.constant_);
        }
        const int order = std::max(first.kind_ == Kind::Fourier ? first.fourier_order() : 0,
                                   second.kind_ == Kind::Fourier ? second.fourier_order() : 0);
        std::vector<cplx> coeffs(2 * order + 1);
        for (int m = -order; m <= order; ++m) {
            coeffs[order + m] =
                alpha * first.fourier_coefficient(m) + beta * second.fourier_coefficient(m);
        }
        return fourier(period, std::move(coeffs));
    }
    std::vector<double> b1, b2;
    const auto s1 = first.as_segments(b1);
    const auto s2 = second.as_segments(b2);
    std::vector<double> merged;
    std::merge(b1.begin(), b1.end(), b2.begin(), b2.end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    std::vector<Segment> segments;
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
        const double mid = 0.5 * (merged[i] + merged[i + 1]);
        auto pick = [mid](const std::vector<double>& bp, const std::vector<Segment>& segs) {
            auto it = std::upper_bound(bp.begin(), bp.end(), mid);
            return segs[static_cast<std::size_t>(std::distance(bp.begin(), it)) - 1];
        };
        Segment seg;
        if (alpha != cplx{}) {
            for (const auto& t : pick(b1, s1).terms) seg.terms.push_back(scale_term(t, alpha));
        }
        if (beta != cplx{}) {
            for (const auto& t : pick(b2, s2).terms) seg.terms.push_back(scale_term(t, beta));
        }
        segments.push_back(std::move(seg));
    }
    return piecewise(period, std::move(merged), std::move(segments));
}

}  // namespace blochkit
