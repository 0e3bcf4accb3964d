#pragma once

#include <string>
#include <vector>

#include "blochkit/problem.hpp"

namespace blochkit::catalog {

// Built-in problems in the unit convention -psi'' + W psi' + V psi = lambda psi.

Problem1D free_particle(double gamma = kTwoPi);
Problem1D constant_potential(double v0 = 5.0, double gamma = 1.0);
/// V(x) = 2 q cos(2x), gamma = pi.
Problem1D mathieu(double q = 1.0);
/// Square barrier of height v0 on [0, width), zero on [width, gamma).
Problem1D kronig_penney(double v0 = 10.0, double width = 0.3, double gamma = 1.0);
/// V = 2/u^2 - 2/u with u = x - n - 1 on n-1 <= x < n; gamma = 1.
Problem1D intro_counterexample();
/// W = c constant, V = 0.
Problem1D constant_drift(cplx c = 0.5, double gamma = 1.0);

PeriodicCoefficient mathieu_potential(double q = 1.0);
PeriodicCoefficient kronig_penney_potential(double v0 = 10.0, double width = 0.3,
                                            double gamma = 1.0);
PeriodicCoefficient intro_potential();

struct CatalogEntry {
    std::string name;
    Problem1D problem;
    std::string provenance;
};

/// Names are unique.
const std::vector<CatalogEntry>& builtin();
const CatalogEntry& find(const std::string& name);

}  // namespace blochkit::catalog
