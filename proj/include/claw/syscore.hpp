#pragma once

#include "claw/expr.hpp"
#include "claw/numkit.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace claw {

class SingularJacobian : public std::runtime_error {
  public:
    explicit SingularJacobian(const std::string& msg) : std::runtime_error(msg) {}
};

class DependentDensities : public std::runtime_error {
  public:
    explicit DependentDensities(const std::string& msg) : std::runtime_error(msg) {}
};

class TransformSingular : public std::runtime_error {
  public:
    explicit TransformSingular(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Provenance { Primal, Reciprocal, Dual, ChangeOfVariables, ParametricFile };

std::string provenance_str(Provenance p);

/// A conservation law (density B, flux A) with precomputed symbolic
/// gradients.
struct ConservationLaw {
    ConservationLaw() = default;
    ConservationLaw(std::string name, Expr density, Expr flux, int n);

    std::string name;
    Expr density;
    Expr flux;
    std::vector<Expr> density_grad;
    std::vector<Expr> flux_grad;

    Eigen::RowVectorXd grad_density(std::span<const double> u) const;
    Eigen::RowVectorXd grad_flux(std::span<const double> u) const;
};

/// A system of n conservation laws held parametrically: densities U(u) and
/// fluxes F(u) over parameters u. Primal systems have U = identity; derived
/// systems (reciprocal transforms, duals, changes of variables) stay
/// parametric in the original u. Immutable after construction.
class ParametricSystem {
  public:
    ParametricSystem(std::string name, std::vector<Expr> densities, std::vector<Expr> fluxes,
                     Provenance provenance,
                     std::pair<double, double> domain = {0.6, 1.7});

    static ParametricSystem primal(std::string name, int n, std::vector<Expr> fluxes,
                                   std::pair<double, double> domain = {0.6, 1.7});

    int n() const { return n_; }
    const std::string& name() const { return name_; }
    Provenance provenance() const { return provenance_; }
    bool is_primal() const { return provenance_ == Provenance::Primal; }
    std::pair<double, double> domain() const { return domain_; }

    const std::vector<Expr>& densities() const { return densities_; }
    const std::vector<Expr>& fluxes() const { return fluxes_; }
    const std::vector<std::vector<Expr>>& density_jacobian_exprs() const { return d_dens_; }
    const std::vector<std::vector<Expr>>& flux_jacobian_exprs() const { return d_flux_; }

    Eigen::VectorXd eval_densities(std::span<const double> u) const;
    Eigen::VectorXd eval_fluxes(std::span<const double> u) const;
    Eigen::MatrixXd density_jacobian(std::span<const double> u) const;
    Eigen::MatrixXd flux_jacobian(std::span<const double> u) const;

    /// The canonical laws (U^i | F^i), named after the parameter slots.
    std::vector<ConservationLaw> canonical_laws() const;

  private:
    std::string name_;
    int n_;
    std::vector<Expr> densities_;
    std::vector<Expr> fluxes_;
    std::vector<std::vector<Expr>> d_dens_;
    std::vector<std::vector<Expr>> d_flux_;
    Provenance provenance_;
    std::pair<double, double> domain_;
};

/// The trivial laws dx = (1|0) and dt = (0|1), valid for every system.
std::vector<ConservationLaw> trivial_laws(int n);

// ---------------------------------------------------------------------------
// Characteristic fields
// ---------------------------------------------------------------------------

struct CharField {
    ProjectiveValue speed;
    Eigen::VectorXd xi;       // right field, unit norm, sign convention
    Eigen::RowVectorXd omega; // characteristic form, omega_a(xi_b) = delta_ab
};

struct CharFieldSet {
    Eigen::VectorXd point;
    std::vector<CharField> fields; // sorted by descending speed, infinite first
    int n() const { return static_cast<int>(fields.size()); }
};

/// Characteristic decomposition at u: the pencil (grad F, grad U) for
/// parametric systems, plain eigen-decomposition of grad f for primal ones.
CharFieldSet characteristic_fields(const ParametricSystem& sys, std::span<const double> u,
                                   double gap_tol = 1e-6);

/// Matches the families of `other` to those of `center` by field direction.
/// Returns per center family the matched index in `other` and the sign that
/// aligns the matched field with the center one. Throws if the matching is
/// not a bijection.
std::vector<std::pair<int, double>> match_fields(const CharFieldSet& center,
                                                 const CharFieldSet& other);

// ---------------------------------------------------------------------------
// Law verification
// ---------------------------------------------------------------------------

struct CheckLawPoint {
    int index;
    // |grad A - grad B (grad U)^-1 grad F| / (1 + |grad A|); absent where the
    // density Jacobian is structurally singular (systems with an infinite
    // characteristic speed have xi_1 in its kernel at every point).
    std::optional<double> chain_residual;
    // max_a |b A_a - a B_a| / (1 + |grad A|); absent where the system is not
    // strictly hyperbolic at the point. At least one of the two residuals is
    // always present.
    std::optional<double> char_residual;
};

struct CheckLawReport {
    std::string law_name;
    std::vector<CheckLawPoint> per_point;
    double max_residual = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
};

CheckLawReport check_law(const ParametricSystem& sys, const ConservationLaw& law,
                         const std::vector<Eigen::VectorXd>& points, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Reciprocal transformations
// ---------------------------------------------------------------------------

/// A reciprocal change of independent variables built from two rows of
/// coefficients over a law basis plus two trailing constants: the row
/// (c_1..c_m, c, c~) encodes the 1-form  sum_k c_k (P_k dx + Q_k dt) + c dx
/// + c~ dt.  The transformed system and the law images share the common
/// denominator delta = B M - A N.
///
/// When the rows are combinations of the canonical laws alone, the density
/// images of the canonical laws can turn out affinely dependent (their
/// differences are the new trivial laws); the carrier then re-bases onto n
/// independent transformed laws drawn from the canonical, extra, and trivial
/// law images. Characteristic speeds and fields are invariant under that
/// choice.
/// Identifies a law of the pre-transform system by role: a canonical law
/// (density slot), one of the caller's extra laws, or a trivial law.
struct LawRef {
    enum class Kind { Canonical, Extra, TrivialX, TrivialT };
    Kind kind;
    int index = 0; // canonical slot or extra-law position
};

struct ReciprocalTransform {
    Expr B, A, N, M, delta;
    ParametricSystem system;
    bool rebased = false;
    std::vector<std::string> carrier_laws; // names of the laws the carrier uses
    std::vector<LawRef> carrier_refs;      // pre-transform identity of each carrier law

    ConservationLaw map_law(const ConservationLaw& law) const;

  private:
    friend ReciprocalTransform reciprocal_transform(const ParametricSystem&,
                                                    const std::vector<ConservationLaw>&,
                                                    const std::vector<Rational>&,
                                                    const std::vector<Rational>&,
                                                    const std::vector<Eigen::VectorXd>&,
                                                    const std::vector<ConservationLaw>&);
    ReciprocalTransform(Expr B, Expr A, Expr N, Expr M, Expr delta, ParametricSystem sys)
        : B(B), A(A), N(N), M(M), delta(delta), system(std::move(sys)) {}
};

ReciprocalTransform reciprocal_transform(const ParametricSystem& sys,
                                         const std::vector<ConservationLaw>& basis,
                                         const std::vector<Rational>& row_x,
                                         const std::vector<Rational>& row_t,
                                         const std::vector<Eigen::VectorXd>& check_points,
                                         const std::vector<ConservationLaw>& extra_laws = {});

// ---------------------------------------------------------------------------
// Change of field variables
// ---------------------------------------------------------------------------

/// Re-expresses the system with the given laws' densities as field
/// variables: U = densities, F = fluxes, still parametric in u. The laws
/// must be valid and their densities functionally independent on the points.
ParametricSystem change_variables(const ParametricSystem& sys,
                                  const std::vector<ConservationLaw>& new_densities,
                                  const std::vector<Eigen::VectorXd>& points);

// ---------------------------------------------------------------------------
// Linear degeneracy and Temple rectilinearity (finite-difference path)
// ---------------------------------------------------------------------------

struct FamilyResidualPoint {
    int index;
    std::vector<double> per_family;
};

struct FamilyResidualReport {
    std::string check;
    std::vector<FamilyResidualPoint> per_point;
    std::vector<double> per_family_max;
    std::vector<std::string> chart; // "speed" or "inverse_speed" per family
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Per-family |xi_a(lambda^a)| by central finite differences of the matched
/// characteristic speed along the field. Families whose speed is projectively
/// near-infinite are differentiated in the inverse-speed chart and flagged.
FamilyResidualReport linear_degeneracy(const ParametricSystem& sys,
                                       const std::vector<Eigen::VectorXd>& points,
                                       double fd_step = 1e-5, double tol = 1e-6);

/// Per-family turning of the rarefaction direction in field space:
/// | P_perp d/ds (grad U xi_a / |grad U xi_a|) |  along the field. Zero iff
/// the rarefaction curves are straight in the density coordinates.
FamilyResidualReport temple_rectilinearity(const ParametricSystem& sys,
                                           const std::vector<Eigen::VectorXd>& points,
                                           double fd_step = 1e-5, double tol = 1e-5);

// ---------------------------------------------------------------------------
// Structure coefficients
// ---------------------------------------------------------------------------

/// Coefficients of d omega^a = c^a_ij omega^i wedge omega^j and
/// d lambda^a = lambda^a_i omega^i at a point, with the convention
/// c^a_ij = -1/2 omega^a([xi_i, xi_j]); brackets use central finite
/// differences of the normalized fields.
struct StructureCoefficients {
    Eigen::VectorXd point;
    std::vector<Eigen::MatrixXd> c; // per family: antisymmetric n x n
    Eigen::MatrixXd lambda_i;       // (family, i) = xi_i(lambda^family)
    std::vector<std::string> chart;
    std::vector<bool> riemann_invariant; // c^a_ij == 0 for all i,j != a
    static constexpr double kFlagThreshold = 1e-3;
    static constexpr const char* kConvention = "c^a_ij = -1/2 * omega^a([xi_i, xi_j])";
};

StructureCoefficients structure_coefficients(const ParametricSystem& sys,
                                             std::span<const double> u,
                                             double fd_step = 1e-5);

// ---------------------------------------------------------------------------
// Seeded domain sampling
// ---------------------------------------------------------------------------

struct SampleOptions {
    double lo = 0.6;
    double hi = 1.7;
    int count = 100;
    unsigned seed = 42;
    double gap_tol = 1e-6;
    int max_attempts = 100000;
};

/// Uniform samples of the box [lo,hi]^n from a seeded generator; points at
/// which any of the given systems fails strict hyperbolicity (speed gap
/// below gap_tol) are rejected and redrawn.
std::vector<Eigen::VectorXd>
sample_points(const std::vector<const ParametricSystem*>& systems, const SampleOptions& opts);

// Batch-evaluation helpers (single shared memo per point).
Eigen::VectorXd eval_vector(const std::vector<Expr>& exprs, std::span<const double> u);
Eigen::MatrixXd eval_matrix(const std::vector<std::vector<Expr>>& rows,
                            std::span<const double> u);

} // namespace claw
