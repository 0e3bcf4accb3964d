#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "blochkit/lattice.hpp"

namespace blochkit {

/// Samples of a compactly supported function on the lattice-aligned grid
/// r = sum_j (g_j / N) gamma_j, for cells cell_lo_j <= floor(g_j / N) <= cell_hi_j.
/// Outside these cells the function is zero.
struct SampledFunction {
    LatticeND lattice;
    int points_per_cell = 0;
    std::vector<int> cell_lo;
    std::vector<int> cell_hi;
    /// Dimension 0 varies fastest.
    std::vector<cplx> values;

    int dimension() const { return lattice.dimension(); }
    std::vector<long> extent() const;
    std::size_t size() const { return values.size(); }
    /// Global grid index of sample i.
    std::vector<long> grid_index(std::size_t i) const;
    Eigen::VectorXd point(const std::vector<long>& grid_index) const;
    /// Zero outside the sampled cells.
    cplx at(const std::vector<long>& grid_index) const;
    /// Volume element of one sample.
    double cell_weight() const;
};

SampledFunction sample_function(const LatticeND& lattice, int points_per_cell, std::vector<int> cell_lo,
                                std::vector<int> cell_hi,
                                const std::function<cplx(const Eigen::VectorXd&)>& f);

/// U f(r, k) on the reference cell [0, 1)^d (fractional coordinates) for k on
/// the grid k_q = sum_j (q_j / K) g*_j, q_j = 0..K-1.
struct TransformField {
    std::shared_ptr<const SampledFunction> source;
    int k_per_dim = 0;
    int shells = 0;
    /// Rows: reference-cell samples (dimension 0 fastest); columns: k points.
    Eigen::MatrixXcd values;
    std::vector<Eigen::VectorXd> ks;
    /// Largest |f| beyond the shells; zero when the sum is exact.
    double tail_bound = 0.0;

    std::size_t cell_points() const { return static_cast<std::size_t>(values.rows()); }
    /// Global grid index of reference-cell sample i.
    std::vector<long> cell_index(std::size_t i) const;
};

/// k on the uniform reciprocal-cell grid with `k_per_dim` points per direction.
std::vector<Eigen::VectorXd> reciprocal_grid(const LatticeND& lattice, int k_per_dim);

/// sum over lattice vectors a of f(r + a) exp(-i k . a), for r on the sample grid.
cplx transform_value(const SampledFunction& f, const std::vector<long>& grid_index, const Eigen::VectorXd& k);

/// Throws TruncationError if f has support beyond `shells` cells of the reference cell.
TransformField bloch_floquet(const SampledFunction& f, int k_per_dim, int shells);

struct TransformProperties {
    /// max |U f(r + gamma_i, k) - exp(i k . gamma_i) U f(r, k)| / max |U f|
    double quasi_periodicity = 0.0;
    /// max |U f(r, k + g*_j) - U f(r, k)| / max |U f|
    double k_periodicity = 0.0;
    double max_abs = 0.0;
};

TransformProperties check_properties(const TransformField& field);

struct Inversion {
    SampledFunction function;
    /// max |f_rec - f| / max |f| (absolute when f = 0).
    double max_error = 0.0;
};

/// Trapezoid average over the reciprocal cell with quadrature_n points per
/// direction, reconstructing every sampled cell from the reference cell via
/// f(r + a) = mean over k of U f(r, k) exp(i k . a). Throws AccuracyError when
/// the error exceeds `tolerance`.
Inversion invert(const TransformField& field, int quadrature_n, double tolerance = 1e-10);

struct ParsevalReport {
    double norm_f = 0.0;
    double norm_field = 0.0;
    double relative_deviation = 0.0;
};

/// Sum of |f|^2 over the sampled cells against the k-average of the
/// reference-cell sum of |U f|^2.
ParsevalReport parseval(const TransformField& field);

}  // namespace blochkit
