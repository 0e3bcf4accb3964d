#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "blochkit/floquet.hpp"

namespace blochkit {

enum class PotentialMode { OrthogonalSum, VerifyOnly };
const char* to_string(PotentialMode mode);

/// -a Lap Psi + V Psi = E Psi on R^d, in lattice-adapted coordinates x~ = A r.
///
/// Each direction problem is the one-dimensional operator -psi'' + U_j psi with
/// period |gamma_j|. In orthogonal-sum mode V(r) = a sum_j U_j(x~_j) and a
/// factor with 1-D eigenvalue lambda_j contributes E_j = a lambda_j.
struct SeparableProblem {
    LatticeND lattice;
    double laplacian_scale = 0.5;
    std::vector<Problem1D> directions;
    PotentialMode mode = PotentialMode::OrthogonalSum;
    /// The full potential in verify-only mode.
    std::function<cplx(const Eigen::VectorXd&)> potential;

    int dimension() const { return lattice.dimension(); }
    /// Throws InvalidArgument if the problem is inconsistent.
    void validate() const;
    cplx V(const Eigen::VectorXd& r) const;
};

/// One direction's solution psi_j, fixed by its data at x = 0.
struct Factor {
    double lambda = 0.0;
    SigmaTag sigma = SigmaTag::G3;
    std::vector<CongruenceClass> classes;
    SolutionForm form;
    /// Weights of the Bloch parts of a two-solution form; Form2 uses its growth solution.
    std::array<cplx, 2> weights{1.0, 1.0};
    Vec2 init = Vec2::Zero();
    bool bounded = false;
};

Factor make_factor(const Problem1D& problem, double lambda, const FloquetOptions& options = {},
                   std::array<cplx, 2> weights = {1.0, 1.0});

struct SeparableSolution {
    std::vector<Factor> factors;
    /// a lambda_j for each direction.
    std::vector<double> factor_energies;
    double energy = 0.0;
    Eigen::MatrixXd transform;
    bool bounded = false;
};

/// In orthogonal-sum mode the energy is sum_j E_j; verify-only mode needs it supplied.
SeparableSolution assemble(const SeparableProblem& problem, std::vector<Factor> factors,
                           std::optional<double> energy = std::nullopt);

/// Psi at the columns of `points`.
std::vector<cplx> evaluate(const SeparableProblem& problem, const SeparableSolution& solution,
                           const Eigen::MatrixXd& points);

struct HartreeExample {
    SeparableProblem problem;
    SeparableSolution solution;
};

/// -Lap Psi + sum_j V_j(x_j) Psi = E Psi on the rectangular lattice of the
/// potentials' periods, with psi_j taken at lambda_j.
HartreeExample hartree_example(const std::vector<PeriodicCoefficient>& potentials,
                               const std::vector<double>& lambdas, const FloquetOptions& options = {});

struct ProbeBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct NdResidual {
    /// max |-a Lap Psi + V Psi - E Psi| / max |Psi| by 4th-order differences in r.
    double residual = 0.0;
    /// The same operator written in x~ with the cross terms omega_ij, from the
    /// factor derivatives.
    double transformed_residual = 0.0;
    int grid_per_dim = 0;
    double max_abs = 0.0;
};

NdResidual residual_nd(const SeparableProblem& problem, const SeparableSolution& solution,
                       int grid_per_dim, const ProbeBox& box);

/// A pure Bloch product term.
struct BlochTerm {
    /// Which Bloch part each direction contributes.
    std::vector<int> choice;
    cplx coefficient = 1.0;
    /// Real representatives per direction.
    Eigen::VectorXd k_tilde;
    /// The quasimomentum in r: A^T k_tilde.
    Eigen::VectorXd k;
    std::vector<Vec2> inits;
    std::vector<double> lambdas;
};

/// Throws NotExpandable when a factor is Form2 or has a complex class.
std::vector<BlochTerm> combination_expand(const SeparableProblem& problem,
                                          const SeparableSolution& solution);

/// coefficient * prod_j psi_j at the columns of `points`.
std::vector<cplx> evaluate_term(const SeparableProblem& problem, const BlochTerm& term,
                                const Eigen::MatrixXd& points);

/// max over lattice vectors gamma_i and points of
/// |Psi(r + gamma_i) - exp(i k . gamma_i) Psi(r)| / max |Psi|.
double bloch_relation_deviation(const SeparableProblem& problem, const BlochTerm& term,
                                const Eigen::MatrixXd& points);

/// True if the set of k_tilde is closed under flipping the sign of any one
/// coordinate, comparing classes modulo 2 pi / |gamma_j|.
bool closed_under_sign_flip(const SeparableProblem& problem, const std::vector<BlochTerm>& terms);

}  // namespace blochkit
