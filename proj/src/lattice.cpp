#include "blochkit/lattice.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "blochkit/errors.hpp"

namespace blochkit {

Lattice1D::Lattice1D(double gamma) : gamma_(gamma) {
    if (!std::isfinite(gamma) || gamma <= 0.0) {
        throw InvalidArgument("lattice period must be finite and positive");
    }
}

CongruenceClass reduce_quasimomentum(cplx k, double modulus) {
    if (!std::isfinite(k.real()) || !std::isfinite(k.imag())) {
        throw InvalidArgument("quasimomentum must be finite");
    }
    if (!std::isfinite(modulus) || modulus <= 0.0) {
        throw InvalidArgument("quasimomentum modulus must be finite and positive");
    }
    // std::remainder is exact, so repeated reduction is a fixed point.
    double re = std::remainder(k.real(), modulus);
    const double half = 0.5 * modulus;
    if (re <= -half) re += modulus;
    return {cplx(re, k.imag()), modulus};
}

CongruenceClass reduce_quasimomentum(cplx k, const Lattice1D& lattice) {
    return reduce_quasimomentum(k, lattice.modulus());
}

namespace {

void require_same_modulus(const CongruenceClass& a, const CongruenceClass& b) {
    if (std::abs(a.modulus - b.modulus) > 1e-12 * std::max(a.modulus, b.modulus)) {
        throw InvalidArgument("congruence classes have different moduli");
    }
}

}  // namespace

double class_distance(const CongruenceClass& a, const CongruenceClass& b) {
    require_same_modulus(a, b);
    const cplx d = a.representative - b.representative;
    const double re = std::abs(std::remainder(d.real(), a.modulus));
    return std::hypot(re, d.imag());
}

bool class_equal(const CongruenceClass& a, const CongruenceClass& b, double rel_tol) {
    return class_distance(a, b) <= rel_tol * a.modulus;
}

LatticeND::LatticeND(Eigen::MatrixXd primitive) : primitive_(std::move(primitive)) {
    const auto d = primitive_.rows();
    if (d == 0 || primitive_.cols() != d) {
        throw InvalidArgument("primitive matrix must be square and non-empty");
    }
    if (!primitive_.allFinite()) {
        throw InvalidArgument("primitive vectors must be finite");
    }
    double scale = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double n = primitive_.row(j).norm();
        if (n == 0.0) throw DegenerateLattice("zero primitive vector");
        scale *= n;
    }
    const double det = primitive_.determinant();
    if (std::abs(det) <= 1e-12 * scale) {
        throw DegenerateLattice("primitive vectors are linearly dependent (det = " +
                                std::to_string(det) + ")");
    }
    transform_ = primitive_;
    for (Eigen::Index j = 0; j < d; ++j) transform_.row(j).normalize();
    reciprocal_ = kTwoPi * primitive_.inverse().transpose();
    cross_ = transform_ * transform_.transpose();
}

bool LatticeND::orthogonal(double tol) const {
    for (int i = 0; i < dimension(); ++i) {
        for (int j = i + 1; j < dimension(); ++j) {
            if (std::abs(cross_(i, j)) > tol) return false;
        }
    }
    return true;
}

Eigen::MatrixXd reciprocal_lattice(const LatticeND& lattice) { return lattice.reciprocal(); }

std::vector<CrossCoefficient> cross_coefficients(const LatticeND& lattice) {
    std::vector<CrossCoefficient> out;
    for (int i = 0; i < lattice.dimension(); ++i) {
        for (int j = i + 1; j < lattice.dimension(); ++j) {
            out.push_back({i, j, lattice.cross(i, j)});
        }
    }
    return out;
}

}  // namespace blochkit
