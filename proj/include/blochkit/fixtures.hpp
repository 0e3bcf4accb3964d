#pragma once

#include <string>
#include <vector>

#include "blochkit/floquet.hpp"

namespace blochkit {

/// The intro counterexample: V = 2/u^2 - 2/u and psi = exp(x) (1 - x/u) with
/// u = x - n - 1 on n-1 <= x < n, claimed to be a non-Bloch eigenstate at lambda = -1.
///
/// The report checks psi segment by segment and records what the classifier
/// finds next to the claim. It asserts neither side.
struct IntroFixtureReport {
    double lambda = -1.0;
    /// Segments n = first_segment .. first_segment + count - 1.
    int first_segment = 0;
    /// max |-psi'' + V psi - lambda psi| / max |psi| on each segment, by differences.
    std::vector<double> segment_residuals;
    /// |psi(n+) - psi(n-)| / |psi(n-)| at the interior breakpoints.
    std::vector<double> value_jumps;
    std::vector<double> derivative_jumps;
    bool continuous = false;
    /// Range of psi(x + 1) / psi(x) over the segments; a Bloch solution has one value.
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    Classification classifier;
    /// The multiplier a decomposition exp(x)(p1 + x p2) would need.
    cplx implied_multiplier = 0.0;
    bool implied_multiplier_found = false;
    bool discrepancy = false;
    std::string note;
};

cplx intro_psi(double x);
cplx intro_dpsi(double x);

IntroFixtureReport intro_fixture(int first_segment = 1, int count = 4, int points_per_segment = 256,
                                 const FloquetOptions& options = {});

}  // namespace blochkit
