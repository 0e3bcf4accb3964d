#pragma once

#include <variant>
#include <vector>

#include "blochkit/types.hpp"

namespace blochkit {

/// sum_n c_n x^n
struct PolynomialTerm {
    std::vector<cplx> coefficients;
};

/// alpha/(x - pole)^2 + delta/(x - pole); the pole must lie outside the segment.
struct RationalTerm {
    cplx alpha;
    double pole;
    cplx delta;
};

/// amplitude * exp(rate * x) * cos(omega * x + phase)
struct ExpTrigTerm {
    cplx amplitude;
    cplx rate;
    double omega = 0.0;
    double phase = 0.0;
};

using Term = std::variant<PolynomialTerm, RationalTerm, ExpTrigTerm>;

/// Sum of terms, evaluated in the absolute coordinate of the base period [0, gamma).
struct Segment {
    std::vector<Term> terms;
};

cplx evaluate_term(const Term& term, double x);
cplx evaluate_segment(const Segment& segment, double x);

/// A gamma-periodic, piecewise-continuous complex coefficient (W or V).
///
/// Three representations: a constant, a truncated Fourier series
/// sum_{|m|<=M} c_m exp(2 pi i m x / gamma), or segments
/// 0 = b_0 < ... < b_s = gamma with one closed-form expression each. Segments
/// are left-closed and right-open, so evaluation at a breakpoint returns the
/// right limit.
class PeriodicCoefficient {
public:
    enum class Kind { Constant, Fourier, Piecewise };

    static PeriodicCoefficient constant(double period, cplx value);
    /// `coefficients` holds c_{-M} .. c_M (odd length).
    static PeriodicCoefficient fourier(double period, std::vector<cplx> coefficients);
    static PeriodicCoefficient piecewise(double period, std::vector<double> breakpoints,
                                         std::vector<Segment> segments);

    Kind kind() const noexcept { return kind_; }
    double period() const noexcept { return period_; }
    bool is_real() const noexcept { return real_; }
    bool is_zero() const;
    bool is_constant() const;

    cplx constant_value() const { return constant_; }
    const std::vector<cplx>& fourier_coefficients() const { return fourier_; }
    int fourier_order() const { return static_cast<int>(fourier_.size() / 2); }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<Segment>& segments() const { return segments_; }

    cplx evaluate(double x) const;
    /// Evaluates the expression of the piece that contains `anchor`, continued
    /// to `x`. Lets an integrator sample the closed piece up to its right end.
    cplx evaluate_on_piece(double x, double anchor) const;

    /// (1/gamma) * integral over one period.
    cplx mean() const;
    /// Integral over [a, b], split at breakpoints.
    cplx integral(double a, double b) const;
    /// (1/gamma) * integral_0^gamma c(x) exp(-2 pi i m x / gamma) dx
    cplx fourier_coefficient(int m) const;

    /// All periodized breakpoints in [a, b], sorted.
    std::vector<double> breakpoints_in(double a, double b) const;

    PeriodicCoefficient scaled(cplx factor) const;
    /// alpha * first + beta * second; both must share the period.
    static PeriodicCoefficient linear_combination(cplx alpha, const PeriodicCoefficient& first,
                                                  cplx beta, const PeriodicCoefficient& second);

private:
    PeriodicCoefficient() = default;
    double base_offset(double x) const;
    std::size_t segment_index(double t) const;
    std::vector<Segment> as_segments(std::vector<double>& breakpoints) const;
    cplx piece_integral(std::size_t segment, double a, double b) const;

    Kind kind_ = Kind::Constant;
    double period_ = 1.0;
    bool real_ = true;
    cplx constant_{};
    std::vector<cplx> fourier_;
    std::vector<double> breakpoints_;
    std::vector<Segment> segments_;
};

inline cplx evaluate(const PeriodicCoefficient& c, double x) { return c.evaluate(x); }
inline cplx mean(const PeriodicCoefficient& c) { return c.mean(); }
inline std::vector<double> breakpoints_in(const PeriodicCoefficient& c, double a, double b) {
    return c.breakpoints_in(a, b);
}

}  // namespace blochkit
