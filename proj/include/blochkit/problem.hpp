#pragma once

#include "blochkit/coeffs.hpp"
#include "blochkit/lattice.hpp"

namespace blochkit {

/// -psi'' + W psi' + V psi = lambda psi with gamma-periodic W and V.
class Problem1D {
public:
    Problem1D(Lattice1D lattice, PeriodicCoefficient W, PeriodicCoefficient V);
    /// W = 0.
    Problem1D(Lattice1D lattice, PeriodicCoefficient V);

    const Lattice1D& lattice() const noexcept { return lattice_; }
    double period() const noexcept { return lattice_.period(); }
    const PeriodicCoefficient& W() const noexcept { return W_; }
    const PeriodicCoefficient& V() const noexcept { return V_; }

    /// W == 0 and V real: the self-adjoint Schroedinger case.
    bool is_schroedinger() const { return W_.is_zero() && V_.is_real(); }

private:
    Lattice1D lattice_;
    PeriodicCoefficient W_;
    PeriodicCoefficient V_;
};

}  // namespace blochkit
