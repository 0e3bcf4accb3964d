#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blochkit/floquet.hpp"

namespace blochkit {

/// Re tr M(lambda). Requires W = 0 and real V.
double discriminant(const Problem1D& problem, double lambda, const PropagationOptions& options = {});

struct DiscriminantCurve {
    std::vector<double> lambdas;
    std::vector<double> values;
};

DiscriminantCurve discriminant_curve(const Problem1D& problem, const std::vector<double>& lambdas,
                                     const PropagationOptions& options = {});

/// Periodic: D = 2. Antiperiodic: D = -2. Truncated: the band runs past the scan range.
enum class EdgeKind { Periodic, Antiperiodic, Truncated };
const char* to_string(EdgeKind kind);

struct Band {
    double lo = 0.0;
    double hi = 0.0;
    int index = 0;
    EdgeKind lo_kind = EdgeKind::Truncated;
    EdgeKind hi_kind = EdgeKind::Truncated;
    /// The neighbouring band meets this one with a zero-width gap.
    bool touching_lo = false;
    bool touching_hi = false;
};

struct SpectralInterval {
    double lo = 0.0;
    double hi = 0.0;
    EdgeKind lo_kind = EdgeKind::Truncated;
    EdgeKind hi_kind = EdgeKind::Truncated;
    /// Interior points where two bands touch.
    std::vector<double> touching_points;
};

struct BandStructure {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    int coarse_n = 0;
    /// Bands split at touching points.
    std::vector<Band> bands;
    /// The spectral set: touching bands merged.
    std::vector<SpectralInterval> spectral_set;
};

struct SpectrumOptions {
    PropagationOptions propagation{};
    /// Edge refinement stops at |d lambda| <= edge_rel * max(1, |lambda|) ...
    double edge_rel = 1e-10;
    /// ... or |D -+ 2| <= residual_tol.
    double residual_tol = 1e-12;
    /// |D -+ 2| below this counts as an edge (touching points, range ends).
    double edge_tol = 1e-8;
};

BandStructure locate_bands(const Problem1D& problem, double lambda_min, double lambda_max,
                           int coarse_n = 256, const SpectrumOptions& options = {});

/// Edge kinds in order of increasing lambda; touching points appear twice.
std::vector<EdgeKind> edge_sequence(const BandStructure& bands);

/// True if the first `count` edges follow periodic, antiperiodic, antiperiodic,
/// periodic, periodic, ... Requires the lowest band to start at a real edge.
bool interlacing(const BandStructure& bands, int count);

struct RealAxisTag {
    SigmaTag tag = SigmaTag::G3;
    bool bounded = false;
    double discriminant = 0.0;
    std::optional<Jordan> jordan;
    std::string rationale;
};

RealAxisTag sigma_tag_real_axis(const Problem1D& problem, double lambda,
                                const SpectrumOptions& options = {}, const FloquetOptions& floquet = {});

struct FiberEigenvalues {
    double k = 0.0;
    int M_pw = 0;
    std::vector<double> eigenvalues;
    /// Largest |V_m| among the highest retained Fourier modes.
    double coefficient_tail = 0.0;
};

/// Eigenvalues of the fiber operator H(k) in the plane-wave basis |m| <= M_pw.
FiberEigenvalues planewave_fiber(const Problem1D& problem, double k, int M_pw);

struct UnionReport {
    int k_points = 0;
    int M_pw = 0;
    double lambda_max = 0.0;
    /// Band j from the plane-wave sweep: [min_k lambda_j(k), max_k lambda_j(k)], clipped.
    std::vector<std::pair<double, double>> planewave_bands;
    std::vector<std::pair<double, double>> ode_bands;
    bool count_match = false;
    double max_discrepancy = 0.0;
};

UnionReport union_check(const Problem1D& problem, int k_grid, int M_pw, double lambda_max,
                        int coarse_n = 256, const SpectrumOptions& options = {});

}  // namespace blochkit
