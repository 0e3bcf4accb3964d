#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blochkit/multidim.hpp"
#include "blochkit/spectrum.hpp"
#include "blochkit/transform.hpp"

namespace blochkit::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "fb/1";

// Coefficients: {"period": g, "kind": "constant" | "fourier" | "piecewise" | "catalog", ...}.
// Complex numbers are written as [re, im]; plain numbers are accepted on input.
PeriodicCoefficient coefficient_from_json(const json& j);
json to_json(const PeriodicCoefficient& c);

/// {"period": g} in one dimension, {"vectors": [[...], ...]} otherwise.
LatticeND lattice_from_json(const json& j);
json to_json(const LatticeND& lattice);

cplx complex_from_json(const json& j);
json to_json(cplx z);

enum class Mode { OneD, ND, Transform };
const char* to_string(Mode mode);

struct AnalysisParams {
    FloquetOptions floquet{};
    std::optional<double> lambda;
    std::optional<std::pair<double, double>> lambda_range;
    int coarse_n = 256;
    int k_points = 201;
    int mpw = 64;
    std::uint64_t seed = 0;
};

struct NdSpec {
    explicit NdSpec(LatticeND l) : lattice(std::move(l)) {}

    LatticeND lattice;
    double laplacian_scale = 1.0;
    std::vector<PeriodicCoefficient> potentials;
    std::vector<double> lambdas;
    std::vector<std::array<cplx, 2>> weights;
    PotentialMode mode = PotentialMode::OrthogonalSum;
    /// Verify-only mode: a constant full potential.
    cplx constant_potential = 0.0;
    std::optional<double> energy;
    ProbeBox box;
    int grid = 64;
    int export_points = 16;
};

struct TransformSpec {
    explicit TransformSpec(LatticeND l) : lattice(std::move(l)) {}

    LatticeND lattice;
    int points_per_cell = 32;
    std::vector<int> cell_lo;
    std::vector<int> cell_hi;
    /// "gaussian" or "samples".
    std::string function = "gaussian";
    double sigma = 1.0;
    Eigen::VectorXd center;
    std::vector<cplx> samples;
    int k_per_dim = 16;
    int shells = 4;
    int quadrature = 16;
};

struct ProblemFile {
    std::string version = kSchemaVersion;
    Mode mode = Mode::OneD;
    /// Set when the 1-D problem came from the built-in catalog.
    std::string catalog_name;
    std::optional<Problem1D> problem;
    std::optional<NdSpec> nd;
    std::optional<TransformSpec> transform;
    AnalysisParams analysis;
};

/// Throws InvalidArgument on any schema violation.
ProblemFile parse_problem(const json& j);
ProblemFile load_problem(const std::filesystem::path& path);
/// A 1-D problem file for a catalog entry.
ProblemFile catalog_problem(const std::string& name);

/// Direction problems -psi'' + U_j psi with the lattice-vector periods.
SeparableProblem separable_problem(const NdSpec& spec);
SampledFunction sampled_function(const TransformSpec& spec);

json to_json(const CongruenceClass& k);
json to_json(const CheckResult& r);
json to_json(const ResidualReport& r);
json to_json(const ZeroReport& r);
json to_json(const Classification& c);
json to_json(const BandStructure& bands);
json to_json(const UnionReport& u);
json to_json(const TransformProperties& p);

/// lambda_lo, lambda_hi, edge_kind_lo, edge_kind_hi, touching; one row per
/// spectral interval. A non-empty `discrepancy` adds a column.
std::string bands_csv(const BandStructure& bands, const std::vector<double>& discrepancy = {});
/// k, lambda_1..lambda_n
std::string dispersion_csv(const std::vector<FiberEigenvalues>& fibers, int bands);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace blochkit::io
