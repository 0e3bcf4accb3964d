#include "blochkit/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blochkit/catalog.hpp"
#include "blochkit/errors.hpp"

namespace blochkit {

namespace {

// Segment index n with n - 1 <= x < n.
int segment_of(double x) { return static_cast<int>(std::floor(x)) + 1; }

double psi_on(int n, double x) {
    const double u = x - n - 1.0;
    return std::exp(x) * (1.0 - x / u);
}

double dpsi_on(int n, double x) {
    const double u = x - n - 1.0;
    // d/dx [x/u] = -(n + 1)/u^2
    return std::exp(x) * (1.0 - x / u + (n + 1.0) / (u * u));
}

double V_on(int n, double x) {
    const double u = x - n - 1.0;
    return 2.0 / (u * u) - 2.0 / u;
}

}  // namespace

cplx intro_psi(double x) { return psi_on(segment_of(x), x); }
cplx intro_dpsi(double x) { return dpsi_on(segment_of(x), x); }

IntroFixtureReport intro_fixture(int first_segment, int count, int points_per_segment, const FloquetOptions& options) {
    if (count < 2 || points_per_segment < 16) throw InvalidArgument("intro_fixture: need two segments and 16 points");
    // psi vanishes identically on segment n = -1.
    if (first_segment < 0) throw InvalidArgument("intro_fixture: segments start at n = 0");
    IntroFixtureReport r;
    r.first_segment = first_segment;
    const double lambda = r.lambda;
    const double h = 1.0 / points_per_segment;

    for (int s = 0; s < count; ++s) {
        const int n = first_segment + s;
        // Fourth-order central differences, kept two steps away from the ends.
        double worst = 0.0;
        double scale = 0.0;
        for (int i = 2; i <= points_per_segment - 2; ++i) {
            const double x = n - 1.0 + i * h;
            auto f = [&](double y) { return psi_on(n, y); };
            const double d2 = (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h);
            worst = std::max(worst, std::abs(-d2 + (V_on(n, x) - lambda) * f(x)));
            scale = std::max(scale, std::abs(f(x)));
        }
        r.segment_residuals.push_back(worst / scale);
        if (s + 1 < count) {
            const double b = static_cast<double>(n);
            const double left = psi_on(n, b);
            r.value_jumps.push_back(std::abs(psi_on(n + 1, b) - left) / std::abs(left));
            r.derivative_jumps.push_back(std::abs(dpsi_on(n + 1, b) - dpsi_on(n, b)) / std::abs(dpsi_on(n, b)));
        }
    }
    r.continuous = std::all_of(r.value_jumps.begin(), r.value_jumps.end(), [](double j) { return j <= 1e-8; }) &&
                   std::all_of(r.derivative_jumps.begin(), r.derivative_jumps.end(), [](double j) { return j <= 1e-8; });

    r.ratio_min = std::numeric_limits<double>::infinity();
    r.ratio_max = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < (count - 1) * points_per_segment; ++i) {
        const double x = first_segment - 1.0 + i * h;
        const double q = intro_psi(x + 1.0).real() / intro_psi(x).real();
        r.ratio_min = std::min(r.ratio_min, q);
        r.ratio_max = std::max(r.ratio_max, q);
    }

    const Problem1D problem = catalog::intro_counterexample();
    r.classifier = classify(problem, lambda, options);
    r.implied_multiplier = std::exp(1.0);
    for (const cplx mu : r.classifier.data.multipliers) {
        if (std::abs(mu - r.implied_multiplier) <= 1e-6 * std::abs(r.implied_multiplier)) r.implied_multiplier_found = true;
    }
    r.discrepancy = !r.continuous || !r.implied_multiplier_found;
    r.note = r.discrepancy
                 ? "claimed eigenstate is not reproduced: psi jumps at the breakpoints or e is not a multiplier"
                 : "claim and classifier agree";
    return r;
}

}  // namespace blochkit
