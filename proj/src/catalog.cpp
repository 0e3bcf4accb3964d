#include "blochkit/catalog.hpp"

#include "blochkit/errors.hpp"

namespace blochkit::catalog {

Problem1D free_particle(double gamma) {
    return Problem1D(Lattice1D(gamma), PeriodicCoefficient::constant(gamma, 0.0));
}

Problem1D constant_potential(double v0, double gamma) {
    return Problem1D(Lattice1D(gamma), PeriodicCoefficient::constant(gamma, v0));
}

PeriodicCoefficient mathieu_potential(double q) {
    return PeriodicCoefficient::fourier(kPi, {q, 0.0, q});
}

Problem1D mathieu(double q) { return Problem1D(Lattice1D(kPi), mathieu_potential(q)); }

PeriodicCoefficient kronig_penney_potential(double v0, double width, double gamma) {
    if (!(width > 0.0 && width < gamma)) {
        throw InvalidArgument("barrier width must lie strictly inside the period");
    }
    return PeriodicCoefficient::piecewise(
        gamma, {0.0, width, gamma},
        {Segment{{PolynomialTerm{{v0}}}}, Segment{{PolynomialTerm{{0.0}}}}});
}

Problem1D kronig_penney(double v0, double width, double gamma) {
    return Problem1D(Lattice1D(gamma), kronig_penney_potential(v0, width, gamma));
}

PeriodicCoefficient intro_potential() {
    // On the base cell [0, 1) (n = 1): u = x - 2.
    return PeriodicCoefficient::piecewise(1.0, {0.0, 1.0},
                                          {Segment{{RationalTerm{2.0, 2.0, -2.0}}}});
}

Problem1D intro_counterexample() { return Problem1D(Lattice1D(1.0), intro_potential()); }

Problem1D constant_drift(cplx c, double gamma) {
    return Problem1D(Lattice1D(gamma), PeriodicCoefficient::constant(gamma, c),
                     PeriodicCoefficient::constant(gamma, 0.0));
}

const std::vector<CatalogEntry>& builtin() {
    static const std::vector<CatalogEntry> entries = {
        {"free", free_particle(), "V = 0, gamma = 2 pi"},
        {"constant", constant_potential(), "V = 5, gamma = 1"},
        {"mathieu", mathieu(), "V = 2 q cos(2x), q = 1, gamma = pi"},
        {"kronig_penney", kronig_penney(), "square barrier V0 = 10, width 0.3, gamma = 1"},
        {"intro_counterexample", intro_counterexample(),
         "V = 2/u^2 - 2/u, u = x - n - 1 on [n-1, n), gamma = 1"},
        {"drift", constant_drift(), "W = 0.5, V = 0, gamma = 1"},
    };
    return entries;
}

const CatalogEntry& find(const std::string& name) {
    for (const auto& e : builtin()) {
        if (e.name == name) return e;
    }
    throw InvalidArgument("unknown catalog entry '" + name + "'");
}

}  // namespace blochkit::catalog
