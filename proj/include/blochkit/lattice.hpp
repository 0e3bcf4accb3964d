#pragma once

#include <vector>

#include <Eigen/Core>

#include "blochkit/types.hpp"

namespace blochkit {

/// One-dimensional Bravais lattice gamma * Z.
class Lattice1D {
public:
    explicit Lattice1D(double gamma);

    double period() const noexcept { return gamma_; }
    /// Reciprocal modulus 2*pi/gamma.
    double modulus() const noexcept { return kTwoPi / gamma_; }

private:
    double gamma_;
};

/// A quasimomentum class [k] modulo 2*pi/gamma. The representative has its real
/// part in (-pi/gamma, pi/gamma].
struct CongruenceClass {
    cplx representative;
    double modulus;
};

/// Default class tolerance, relative to the modulus.
inline constexpr double kClassTolerance = 1e-9;

CongruenceClass reduce_quasimomentum(cplx k, const Lattice1D& lattice);
CongruenceClass reduce_quasimomentum(cplx k, double modulus);

/// Distance between two classes (mod the common modulus), absolute units.
double class_distance(const CongruenceClass& a, const CongruenceClass& b);

/// True iff the classes agree within rel_tol * modulus.
bool class_equal(const CongruenceClass& a, const CongruenceClass& b,
                 double rel_tol = kClassTolerance);

/// d-dimensional lattice spanned by the rows of `primitive`.
///
/// `transform()` is the matrix A whose rows are the normalized primitive
/// vectors; lattice-adapted coordinates are x~ = A r. `reciprocal()` holds the
/// rows g_j with g_j . gamma_i = 2 pi delta_ij.
class LatticeND {
public:
    explicit LatticeND(Eigen::MatrixXd primitive);

    int dimension() const noexcept { return static_cast<int>(primitive_.rows()); }
    const Eigen::MatrixXd& primitive() const noexcept { return primitive_; }
    const Eigen::MatrixXd& transform() const noexcept { return transform_; }
    const Eigen::MatrixXd& reciprocal() const noexcept { return reciprocal_; }
    Eigen::VectorXd vector(int j) const { return primitive_.row(j).transpose(); }
    double length(int j) const { return primitive_.row(j).norm(); }

    /// omega_ij = sum_k a_ik a_jk for i < j.
    double cross(int i, int j) const { return cross_(i, j); }
    bool orthogonal(double tol = 1e-12) const;

    /// Lattice whose primitive vectors are this lattice's reciprocal vectors.
    LatticeND dual() const { return LatticeND(reciprocal_); }

private:
    Eigen::MatrixXd primitive_;
    Eigen::MatrixXd transform_;
    Eigen::MatrixXd reciprocal_;
    Eigen::MatrixXd cross_;
};

/// Rows are the reciprocal vectors. Throws DegenerateLattice when singular.
Eigen::MatrixXd reciprocal_lattice(const LatticeND& lattice);

struct CrossCoefficient {
    int i;
    int j;
    double omega;
};

/// All omega_ij with i < j, in lexicographic order.
std::vector<CrossCoefficient> cross_coefficients(const LatticeND& lattice);

}  // namespace blochkit
