#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blochkit/problem.hpp"

namespace blochkit {

struct PropagationOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t max_steps = 5'000'000;
};

/// Fundamental matrix X(to) for identity data at `from`.
struct TransferMatrix {
    Mat2 entries = Mat2::Identity();
    double from_x = 0.0;
    double to_x = 0.0;
    double lambda = 0.0;
    /// Bound on the propagated local errors, in the Frobenius norm; it also
    /// bounds the error of det(entries).
    double error_estimate = 0.0;
    /// Integral of W over [from_x, to_x] accumulated from the stage values.
    cplx log_det = 0.0;
    std::size_t steps = 0;
    std::size_t rejected_steps = 0;
};

/// [[0, 1], [V(x) - lambda, W(x)]]
Mat2 system_matrix(const Problem1D& problem, double lambda, double x);

/// Requires x0 <= x1. Integration restarts at every breakpoint of W and V.
TransferMatrix propagate(const Problem1D& problem, double lambda, double x0, double x1,
                         const PropagationOptions& options = {});

/// Like propagate, but `to` may lie on either side of `from`.
TransferMatrix transfer(const Problem1D& problem, double lambda, double from, double to,
                        const PropagationOptions& options = {});

/// One integration pass from `from` through every point of `to` (monotone and
/// all on one side of `from`); each step lands exactly on the requested points.
std::vector<TransferMatrix> transfer_checkpoints(const Problem1D& problem, double lambda,
                                                 double from, std::span<const double> to,
                                                 const PropagationOptions& options = {});

/// (psi, psi') at each grid point for initial data `init` at x = 0.
std::vector<Vec2> solution_samples(const Problem1D& problem, double lambda, const Vec2& init,
                                   std::span<const double> grid,
                                   const PropagationOptions& options = {});

/// |det T - exp(integral of W)| using the exact coefficient integral.
double abel_defect(const Problem1D& problem, const TransferMatrix& transfer);

}  // namespace blochkit
