#include "blochkit/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "blochkit/errors.hpp"

namespace blochkit {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kRoundoff = 8.0 * std::numeric_limits<double>::epsilon();
// Per-step share of the requested tolerance, so that the accumulated global
// error over O(100) steps stays near rtol.
constexpr double kLocalShare = 0.02;

struct Coefficients {
    cplx w;
    cplx v;
};

class Integrator {
public:
    Integrator(const Problem1D& problem, double lambda, const PropagationOptions& options)
        : problem_(problem), lambda_(lambda), options_(options) {
        if (!(options.rtol > 0.0) || !(options.atol > 0.0)) {
            throw InvalidArgument("integration tolerances must be positive");
        }
        if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
    }

    std::vector<TransferMatrix> run(double from, std::span<const double> to) {
        if (!std::isfinite(from)) throw InvalidArgument("start point must be finite");
        double dir = 0.0;
        double prev = from;
        for (double t : to) {
            if (!std::isfinite(t)) throw InvalidArgument("checkpoints must be finite");
            const double d = t - prev;
            if (d != 0.0) {
                const double s = d > 0.0 ? 1.0 : -1.0;
                if (dir != 0.0 && s != dir) {
                    throw InvalidArgument("checkpoints must be monotone away from the start");
                }
                dir = s;
            }
            prev = t;
        }
        if (dir == 0.0) dir = 1.0;

        Y_ = Mat2::Identity();
        x_ = from;
        log_det_ = 0.0;
        error_sum_ = 0.0;
        steps_ = rejected_ = 0;
        h_ = 0.0;

        std::vector<TransferMatrix> out;
        out.reserve(to.size());
        for (double target : to) {
            advance_to(target, dir);
            TransferMatrix t;
            t.entries = Y_;
            t.from_x = from;
            t.to_x = target;
            t.lambda = lambda_;
            t.log_det = log_det_;
            const double det_mag = std::exp(log_det_.real());
            t.error_estimate = std::max(Y_.norm(), det_mag) * error_sum_;
            t.steps = steps_;
            t.rejected_steps = rejected_;
            out.push_back(t);
        }
        return out;
    }

private:
    Coefficients coefficients(double x, double anchor) const {
        return {problem_.W().evaluate_on_piece(x, anchor), problem_.V().evaluate_on_piece(x, anchor)};
    }

    Mat2 rhs(const Coefficients& c, const Mat2& Y) const {
        // [[0, 1], [V - lambda, W]] * Y
        Mat2 out;
        out.row(0) = Y.row(1);
        out.row(1) = (c.v - lambda_) * Y.row(0) + c.w * Y.row(1);
        return out;
    }

    void advance_to(double target, double dir) {
        if (target == x_) return;
        const double lo = std::min(x_, target), hi = std::max(x_, target);
        std::vector<double> cuts = problem_.W().breakpoints_in(lo, hi);
        const auto vcuts = problem_.V().breakpoints_in(lo, hi);
        cuts.insert(cuts.end(), vcuts.begin(), vcuts.end());
        std::sort(cuts.begin(), cuts.end());
        if (dir < 0.0) std::reverse(cuts.begin(), cuts.end());
        for (double c : cuts) {
            if ((c - x_) * dir > 0.0 && (target - c) * dir > 0.0) integrate_piece(c, dir);
        }
        integrate_piece(target, dir);
    }

    double column_scale(const Mat2& a, const Mat2& b, int j) const {
        return kLocalShare *
               (options_.atol + options_.rtol * std::max(a.col(j).norm(), b.col(j).norm()));
    }

    // Integrates over [x_, end] where the coefficients are given by one
    // closed-form piece each.
    void integrate_piece(double end, double dir) {
        if (end == x_) return;
        const double anchor = 0.5 * (x_ + end);
        if (h_ == 0.0) {
            const Coefficients c0 = coefficients(x_, anchor);
            const double freq = std::sqrt(1.0 + std::abs(c0.v - lambda_) + std::abs(c0.w));
            h_ = 0.05 / freq;
        }
        Coefficients ck1 = coefficients(x_, anchor);
        Mat2 k1 = rhs(ck1, Y_);
        while ((end - x_) * dir > 0.0) {
            const double remaining = std::abs(end - x_);
            double h = std::min(h_, remaining);
            const bool last = h >= remaining * (1.0 - 1e-12);
            if (last) h = remaining;
            const double hs = h * dir;
            const double xe = last ? end : x_ + hs;

            const Coefficients ck2 = coefficients(x_ + c2 * hs, anchor);
            const Mat2 k2 = rhs(ck2, Y_ + hs * (a21 * k1));
            const Coefficients ck3 = coefficients(x_ + c3 * hs, anchor);
            const Mat2 k3 = rhs(ck3, Y_ + hs * (a31 * k1 + a32 * k2));
            const Coefficients ck4 = coefficients(x_ + c4 * hs, anchor);
            const Mat2 k4 = rhs(ck4, Y_ + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            const Coefficients ck5 = coefficients(x_ + c5 * hs, anchor);
            const Mat2 k5 = rhs(ck5, Y_ + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Coefficients ck6 = coefficients(xe, anchor);
            const Mat2 k6 =
                rhs(ck6, Y_ + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const Mat2 Ynew = Y_ + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Mat2 k7 = rhs(ck6, Ynew);
            const Mat2 err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double ratio = 0.0;
            for (int j = 0; j < 2; ++j) {
                ratio = std::max(ratio, err.col(j).norm() / column_scale(Y_, Ynew, j));
            }
            if (!std::isfinite(ratio)) {
                throw IntegrationFailure("non-finite state during integration", x_);
            }

            if (ratio <= 1.0) {
                const double det_mag = std::exp(log_det_.real());
                const double local = err.norm() + kRoundoff * Ynew.norm();
                error_sum_ += local * Y_.norm() / det_mag;
                log_det_ += hs * (b1 * ck1.w + b3 * ck3.w + b4 * ck4.w + b5 * ck5.w + b6 * ck6.w);
                Y_ = Ynew;
                x_ = xe;
                k1 = k7;
                ck1 = ck6;
                ++steps_;
                const double grow =
                    ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
                // A step clipped to the piece end says nothing about a larger step.
                if (!last || h == h_) h_ = h * grow;
            } else {
                ++rejected_;
                h_ = h * std::max(0.2, 0.9 * std::pow(ratio, -0.2));
            }
            if (h_ < 1e-14 * std::max(1.0, std::abs(x_)) && (end - x_) * dir > 0.0) {
                throw IntegrationFailure("step size underflow at x = " + std::to_string(x_), x_);
            }
            if (steps_ + rejected_ > options_.max_steps) {
                throw IntegrationFailure("step budget exhausted at x = " + std::to_string(x_), x_);
            }
        }
    }

    const Problem1D& problem_;
    double lambda_;
    PropagationOptions options_;
    Mat2 Y_ = Mat2::Identity();
    double x_ = 0.0;
    double h_ = 0.0;
    cplx log_det_ = 0.0;
    double error_sum_ = 0.0;
    std::size_t steps_ = 0;
    std::size_t rejected_ = 0;
};

}  // namespace

Mat2 system_matrix(const Problem1D& problem, double lambda, double x) {
    Mat2 a;
    a << 0.0, 1.0, problem.V().evaluate(x) - lambda, problem.W().evaluate(x);
    return a;
}

TransferMatrix transfer(const Problem1D& problem, double lambda, double from, double to,
                        const PropagationOptions& options) {
    const double pts[1] = {to};
    return Integrator(problem, lambda, options).run(from, pts).front();
}

TransferMatrix propagate(const Problem1D& problem, double lambda, double x0, double x1,
                         const PropagationOptions& options) {
    if (!(x0 <= x1)) throw InvalidArgument("propagate requires x0 <= x1");
    return transfer(problem, lambda, x0, x1, options);
}

std::vector<TransferMatrix> transfer_checkpoints(const Problem1D& problem, double lambda,
                                                 double from, std::span<const double> to,
                                                 const PropagationOptions& options) {
    return Integrator(problem, lambda, options).run(from, to);
}

std::vector<Vec2> solution_samples(const Problem1D& problem, double lambda, const Vec2& init,
                                   std::span<const double> grid,
                                   const PropagationOptions& options) {
    if (!std::is_sorted(grid.begin(), grid.end())) {
        throw InvalidArgument("sample grid must be increasing");
    }
    std::vector<Vec2> out(grid.size());
    const auto split = std::lower_bound(grid.begin(), grid.end(), 0.0);
    const auto n_neg = static_cast<std::size_t>(std::distance(grid.begin(), split));
    if (n_neg > 0) {
        std::vector<double> back(grid.begin(), split);
        std::reverse(back.begin(), back.end());
        const auto t = transfer_checkpoints(problem, lambda, 0.0, back, options);
        for (std::size_t i = 0; i < n_neg; ++i) out[n_neg - 1 - i] = t[i].entries * init;
    }
    const std::span<const double> fwd(split, grid.end());
    if (!fwd.empty()) {
        const auto t = transfer_checkpoints(problem, lambda, 0.0, fwd, options);
        for (std::size_t i = 0; i < fwd.size(); ++i) out[n_neg + i] = t[i].entries * init;
    }
    return out;
}

double abel_defect(const Problem1D& problem, const TransferMatrix& transfer) {
    const cplx expected = std::exp(problem.W().integral(transfer.from_x, transfer.to_x));
    return std::abs(transfer.entries.determinant() - expected);
}

}  // namespace blochkit
