#pragma once

#include "claw/syscore.hpp"

namespace claw {

class DegenerateHypersurface : public std::runtime_error {
  public:
    explicit DegenerateHypersurface(const std::string& msg) : std::runtime_error(msg) {}
};

class DualUndefined : public std::runtime_error {
  public:
    explicit DualUndefined(const std::string& msg) : std::runtime_error(msg) {}
};

/// Normalizes a homogeneous coordinate vector in place: max |coordinate| = 1
/// and first nonzero coordinate positive. Throws on the zero vector.
void normalize_projective(Eigen::VectorXd& y, double zero_tol = 0.0);

/// sin of the angle between two projective points.
double projective_angle_sin(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// The two additional conservation laws (B|A), (N|M) that extend a system to
/// a ruled hypersurface of codimension 2.
struct LawPair {
    ConservationLaw first;  // (B | A)
    ConservationLaw second; // (N | M)
};

/// Swaps the roles of the two laws (the dual construction distinguishes the
/// first law: its gradients become the dual densities).
inline LawPair swapped(const LawPair& pair) { return LawPair{pair.second, pair.first}; }

/// Homogeneous coordinates in P^{n+3} carry the slots
/// [Y^0 : Y^1..Y^n : Y^{n+1} : Y^{n+2} : Y^{n+3}].
/// The line generator through parameter value u is spanned by
///   p = [1 : U(u) : B : N : 0]   and   r = [0 : F(u) : A : M : 1].
struct GeneratorFrame {
    Eigen::VectorXd p;
    Eigen::VectorXd r;
    Eigen::MatrixXd dp; // rows: d/du_i p
    Eigen::MatrixXd dr; // rows: d/du_i r
};

GeneratorFrame generator_frame(const ParametricSystem& sys, const LawPair& pair,
                               std::span<const double> u);

/// Normalized generator points (p, r).
std::pair<Eigen::VectorXd, Eigen::VectorXd>
generator_points(const ParametricSystem& sys, const LawPair& pair, std::span<const double> u);

// ---------------------------------------------------------------------------
// Tangent stability
// ---------------------------------------------------------------------------

struct TangentStabilityPoint {
    int index;
    int rank;                 // of [p; r; dp] -- expected n+2
    double projection_residual; // max over i of |(I-P) dr_i| / |dr_i|
};

struct TangentStabilityReport {
    std::vector<TangentStabilityPoint> per_point;
    double max_residual = 0.0;
    bool nondegenerate = false; // rank exactly n+2 everywhere
    double tolerance = 1e-8;
    bool pass = false;
};

/// Checks that the projective tangent space along each generator is spanned
/// by {p, r, d_i p}: full rank n+2 and each d_i r inside the span. Rank
/// deficiency raises DegenerateHypersurface (the laws are not independent).
TangentStabilityReport tangent_stability(const ParametricSystem& sys, const LawPair& pair,
                                         const std::vector<Eigen::VectorXd>& points,
                                         double tol = 1e-8);

// ---------------------------------------------------------------------------
// Focal submanifolds
// ---------------------------------------------------------------------------

/// The n focal points on the generator at u, one per characteristic family
/// (sorted as in characteristic_fields). For speed [a:b] the point is
/// b r - a p = [-a : bF - aU : bA - aB : bM - aN : b], which stays finite at
/// infinite speeds. Points are returned normalized.
std::vector<Eigen::VectorXd> focal_points(const ParametricSystem& sys, const LawPair& pair,
                                          std::span<const double> u);

struct FocalHyperplaneReport {
    int family;
    Eigen::VectorXd coefficients;
    double residual;
    double tolerance = 1e-8;
    bool pass = false;
};

FocalHyperplaneReport focal_hyperplane(const ParametricSystem& sys, const LawPair& pair,
                                       int family, const std::vector<Eigen::VectorXd>& points,
                                       double tol = 1e-8);

// ---------------------------------------------------------------------------
// Duality
// ---------------------------------------------------------------------------

/// Generators of the dual hypersurface in dual coordinates Z:
///   p~ = [u.gB - B : -gB : 1 : 0 : F.gB - A]
///   r~ = [u.gN - N : -gN : 0 : 1 : F.gN - M]
/// where gB, gN are gradients with respect to the field variables (chain rule
/// through (grad U)^-1 for parametric systems). Both annihilate the tangent
/// frame {p, r, d_i p} under the incidence pairing <Z,Y> = sum Z_k Y^k.
std::pair<Eigen::VectorXd, Eigen::VectorXd>
dual_generators(const ParametricSystem& sys, const LawPair& pair, std::span<const double> u);

/// Max |<Z,Y>|/(|Z||Y|) over Z in {p~, r~}, Y in {p, r, d_i p}.
double incidence_residual(const ParametricSystem& sys, const LawPair& pair,
                          std::span<const double> u);

struct DualSystemResult {
    ParametricSystem system;
    LawPair pair;
    /// True when the input had an infinite characteristic speed and was
    /// first moved to a finite-speed reciprocal representative (a constant
    /// rotation of the independent-variable axes); the dual is then taken
    /// in that representative's density coordinates.
    bool rotated_carrier = false;
};

/// A finite-speed representative of the system's reciprocal class. Systems
/// with an infinite speed have singular density Jacobians everywhere, so
/// the gradient-based dual construction runs on the rotated carrier
/// dX' = dT, dT' = dX + dT instead (speeds map by L -> 1/(L-1)).
struct FiniteRepresentative {
    ParametricSystem system;
    LawPair pair;
    bool rotated = false;
};

FiniteRepresentative finite_speed_representative(const ParametricSystem& sys,
                                                 const LawPair& pair,
                                                 const std::vector<Eigen::VectorXd>& points);

/// Constructs the dual system symbolically: densities -gB, fluxes -gN, with
/// the dual law pair (u.gB-B | u.gN-N), (F.gB-A | F.gN-M), read off through
/// the fixed slot involution Y^0 <-> Z_{n+1}, Y^{n+2} <-> Z_{n+3}. The field
/// Hessian of B must be invertible on the sample points (DualUndefined
/// otherwise). Infinite-speed systems are dualized through their
/// finite-speed representative.
DualSystemResult dual_system(const ParametricSystem& sys, const LawPair& pair,
                             const std::vector<Eigen::VectorXd>& points);

/// Dual system of a reciprocally transformed system, built through the base
/// system's dual and the constant projective map the transform induces on
/// the hypersurface (reciprocal transformations act projectively on the
/// congruence). `transform_rows` holds n+4 rational rows expressing the
/// transformed potential basis [dX', dw_1..dw_n, dB', dN', dT'] over the
/// base potential basis [dx, dq^1..dq^n, dq_B, dq_N, dt]. This route keeps
/// the dual expressions shallow -- one quotient over base-dual polynomials
/// -- where the direct gradient construction on the composite system loses
/// too much precision, and it works verbatim for carriers with an infinite
/// characteristic speed.
DualSystemResult dual_system_via_base(const ParametricSystem& base, const LawPair& base_pair,
                                      const std::vector<std::vector<Rational>>& transform_rows,
                                      const std::vector<Eigen::VectorXd>& points);

/// Assembles the transform-row matrix for dual_system_via_base from a
/// reciprocal transform over the base canonical laws (rows of length n+2,
/// trailing dx/dt constants), the carrier law references recorded by
/// reciprocal_transform, and the two law references serving as the
/// transformed system's additional pair. Extra-law references index the
/// base pair.
std::vector<std::vector<Rational>>
transform_row_matrix(int n, const std::vector<Rational>& row_x,
                     const std::vector<Rational>& row_t,
                     const std::vector<LawRef>& carrier_refs, const LawRef& pair_first,
                     const LawRef& pair_second);

/// Deterministic choice of the transformed system's additional law pair:
/// the first two of [base pair, trivial dx, trivial dt, canonical laws] not
/// already used by the carrier.
std::pair<LawRef, LawRef> pick_transformed_pair(int n, const std::vector<LawRef>& carrier_refs);

struct BidualityPoint {
    int index;
    double max_angle;
};

struct BidualityReport {
    std::vector<BidualityPoint> per_point;
    double max_angle = 0.0;
    double tolerance = 1e-7;
    bool pass = false;
};

/// Principal angles between the double-dual generator plane and the original
/// (p, r) plane; the slot involution squares to the identity so the spans
/// must coincide.
BidualityReport biduality_check(const ParametricSystem& sys, const LawPair& pair,
                                const std::vector<Eigen::VectorXd>& points,
                                double tol = 1e-7);

struct SharedFieldsPoint {
    int index;
    double max_angle_sin;   // worst matched-direction mismatch
    double structure_diff;  // max |c_sys - c_dual| after family matching
};

struct SharedFieldsReport {
    std::vector<SharedFieldsPoint> per_point;
    double max_angle_sin = 0.0;
    double max_structure_diff = 0.0;
    double angle_tolerance = 1e-6;
    double structure_tolerance = 1e-4;
    bool pass = false;
};

/// Verifies that the characteristic directions of the system and of its dual
/// coincide in parameter space, and that the structure coefficients agree
/// after matching families by direction.
SharedFieldsReport shared_char_fields_check(const ParametricSystem& sys,
                                            const ParametricSystem& dual,
                                            const std::vector<Eigen::VectorXd>& points,
                                            double angle_tol = 1e-6,
                                            double structure_tol = 1e-4);

// Symbolic helpers shared with hamgeo/webcubic.
Expr symbolic_determinant(const std::vector<std::vector<Expr>>& m);

/// Field-variable gradient of a scalar with u-gradient `grad`: grad *
/// (grad U)^-1 as expressions. Primal systems return `grad` unchanged;
/// parametric ones go through the adjugate over the determinant.
std::vector<Expr> symbolic_field_gradient(const ParametricSystem& sys,
                                          const std::vector<Expr>& grad);

} // namespace claw
