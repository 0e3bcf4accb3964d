#include "blochkit/problem.hpp"

#include <cmath>

#include "blochkit/errors.hpp"

namespace blochkit {

Problem1D::Problem1D(Lattice1D lattice, PeriodicCoefficient W, PeriodicCoefficient V)
    : lattice_(lattice), W_(std::move(W)), V_(std::move(V)) {
    const double g = lattice_.period();
    if (std::abs(W_.period() - g) > 1e-12 * g || std::abs(V_.period() - g) > 1e-12 * g) {
        throw InvalidArgument("coefficient periods must equal the lattice period");
    }
}

Problem1D::Problem1D(Lattice1D lattice, PeriodicCoefficient V)
    : Problem1D(lattice, PeriodicCoefficient::constant(lattice.period(), 0.0), std::move(V)) {}

}  // namespace blochkit
