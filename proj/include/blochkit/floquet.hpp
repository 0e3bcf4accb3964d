#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blochkit/propagate.hpp"

namespace blochkit {

struct FloquetOptions {
    PropagationOptions propagation{};
    double tau_eig = 1e-7;
    double tau_scalar = 1e-8;
    /// |tr^2 - 4 det| <= 4 edge_tol |det| sends M down the J1/J2 path.
    double edge_tol = 1e-8;
    int grid_points = 512;
    double tol_per = 1e-7;
    double tau_zero = 1e-6;
    int zero_grid_points = 2048;
};

struct Monodromy {
    Mat2 M = Mat2::Identity();
    double lambda = 0.0;
    double period = 1.0;
    double error_estimate = 0.0;
    /// exp(integral of W over one period), exact up to quadrature.
    cplx liouville_det = 1.0;
    std::size_t steps = 0;
};

Monodromy monodromy(const Problem1D& problem, double lambda, const PropagationOptions& options = {});

/// Roots of mu^2 - tr(M) mu + det, larger one first; det defaults to det(M).
std::array<cplx, 2> multipliers(const Mat2& M);
std::array<cplx, 2> multipliers(const Mat2& M, cplx det);
/// Uses the Liouville determinant, which does not suffer the cancellation of
/// det(M) when the solutions grow strongly.
std::array<cplx, 2> multipliers(const Monodromy& m);

enum class Jordan { J1, J2, J3 };
enum class SigmaTag { G1, G2, G3 };

const char* to_string(Jordan j);
const char* to_string(SigmaTag s);

Jordan jordan_classify(const Mat2& M, const std::array<cplx, 2>& mu, double tau_eig = 1e-7,
                       double tau_scalar = 1e-8);

/// k = Log(mu) / (i gamma), reduced to the Brillouin strip.
CongruenceClass quasimomentum(cplx mu, const Lattice1D& lattice);

struct MatrixLog {
    Mat2 C = Mat2::Zero();
    double condition = 1.0;
    bool conditioning_warning = false;
};

MatrixLog matrix_log(const Mat2& M, Jordan jordan, double gamma);
MatrixLog matrix_log(const Mat2& M, Jordan jordan, double gamma, const std::array<cplx, 2>& mu);

/// exp(A) for a 2x2 matrix in closed form.
Mat2 expm2(const Mat2& A);

struct FloquetData {
    Monodromy monodromy;
    std::array<cplx, 2> multipliers{};
    Jordan jordan = Jordan::J3;
    /// Distinct but nearly equal multipliers coerced to the J1/J2 path.
    bool near_degenerate = false;
    MatrixLog log;
    /// ||exp(C gamma) - M|| / ||M||
    double log_residual = 0.0;
    std::vector<CongruenceClass> quasimomenta;
    SigmaTag sigma = SigmaTag::G3;
};

FloquetData analyze(const Problem1D& problem, double lambda, const FloquetOptions& options = {});

/// A Bloch solution psi = exp(ikx) p(x) sampled on the form grid.
struct BlochPart {
    CongruenceClass k{};
    cplx multiplier{};
    Vec2 init = Vec2::Zero();
    std::vector<cplx> psi;
    std::vector<cplx> dpsi;
    std::vector<cplx> p;
    bool sampled_backward = false;
};

/// One class; holds two solutions when M is scalar.
struct Form1 {
    CongruenceClass k0{};
    std::vector<BlochPart> solutions;
};

/// psi = exp(i k0 x) (p1 + x p2); `bloch` is the Bloch solution exp(i k0 x) mu gamma p2.
struct Form2 {
    CongruenceClass k0{};
    cplx multiplier{};
    Vec2 growth_init = Vec2::Zero();
    std::vector<cplx> psi;
    std::vector<cplx> p1;
    std::vector<cplx> p2;
    BlochPart bloch;
};

struct Form3 {
    BlochPart first;
    BlochPart second;
};

struct SolutionForm {
    std::variant<Form1, Form2, Form3> shape;
    /// Two periods: x_i = i gamma / n for i = 0..2n.
    std::vector<double> grid;
    int points_per_period = 0;
    double period = 1.0;
    double periodicity_deviation = 0.0;
    /// Periodicity of P(x) = X(x) exp(-C x).
    double transfer_periodicity = 0.0;

    int form_number() const { return static_cast<int>(shape.index()) + 1; }
    std::vector<const BlochPart*> bloch_parts() const;
};

SolutionForm periodic_parts(const Problem1D& problem, double lambda, const FloquetData& data,
                            const FloquetOptions& options = {});

struct QuasimomentumMap {
    double lambda = 0.0;
    std::vector<CongruenceClass> classes;
    SigmaTag sigma_tag = SigmaTag::G3;
};

struct Classification {
    FloquetData data;
    QuasimomentumMap map;
    std::optional<SolutionForm> form;
};

Classification classify(const Problem1D& problem, double lambda, const FloquetOptions& options = {},
                        bool extract_form = true);

enum class Outcome { Pass, Fail, Skip };
const char* to_string(Outcome o);

struct CheckResult {
    std::string name;
    Outcome outcome = Outcome::Skip;
    double deviation = 0.0;
    double bound = 0.0;
    std::string detail;

    bool passed() const { return outcome != Outcome::Fail; }
};

CheckResult det_rule(const Problem1D& problem, const Monodromy& m);
CheckResult verify_sum_rule(const Problem1D& problem, const QuasimomentumMap& map,
                            double rel_tol = 1e-8);
CheckResult cardinality_check(const QuasimomentumMap& map);
/// Class set closed under k -> -k; skipped unless W == 0 and V is real.
CheckResult symmetry_check(const Problem1D& problem, const QuasimomentumMap& map);

bool boundedness(const SolutionForm& form);

struct ResidualReport {
    /// max |D^k p - lambda p| / max |p| for each Bloch part (p1, p2 for Form2).
    std::vector<double> parts;
    /// Form2 coupled equation for p1.
    std::optional<double> coupled;
    int evaluated_points = 0;

    double max() const;
};

ResidualReport shifted_operator_residual(const Problem1D& problem, double lambda,
                                         const SolutionForm& form);

struct ZeroReport {
    Outcome outcome = Outcome::Skip;
    bool zero_found = false;
    double min_abs = 0.0;
    double zero_location = 0.0;
    bool class_ok = true;
    double phase_deviation = 0.0;
    /// Deviation of atan(Re p / Im p) from k x + C, report-only.
    std::optional<double> quotient_deviation;
    std::string detail;
};

ZeroReport zero_of_bloch_check(const Problem1D& problem, double lambda, const BlochPart& part,
                               const FloquetOptions& options = {});
std::vector<ZeroReport> zero_of_bloch_check(const Problem1D& problem, double lambda,
                                            const Form1& form, const FloquetOptions& options = {});

/// Form1 built from one Bloch solution of a form (index 0 or 1 for Form3);
/// Form2 contributes its Bloch part, which at a band edge is the edge eigenfunction.
Form1 bloch_eigensolution(const SolutionForm& form, int index = 0);

}  // namespace blochkit
