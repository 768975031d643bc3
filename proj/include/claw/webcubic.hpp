#pragma once

#include "claw/syscore.hpp"

#include <array>

namespace claw {

class CanonicalSpeedError : public std::runtime_error {
  public:
    explicit CanonicalSpeedError(const std::string& msg) : std::runtime_error(msg) {}
};

class DependentLaws : public std::runtime_error {
  public:
    explicit DependentLaws(const std::string& msg) : std::runtime_error(msg) {}
};

class NonGenericPoint : public std::runtime_error {
  public:
    explicit NonGenericPoint(const std::string& msg) : std::runtime_error(msg) {}
};

class CoincidentPoints : public std::runtime_error {
  public:
    explicit CoincidentPoints(const std::string& msg) : std::runtime_error(msg) {}
};

/// One Abelian relation: first integrals (I_1, I_2, I_3) of the three web
/// foliations with dI_1 + dI_2 + dI_3 = 0 (I_3 = -I_1 - I_2 exactly).
struct AbelianTriple {
    std::array<Expr, 3> integrals;
    std::array<std::vector<Expr>, 3> gradients;
};

/// Five independent Abelian relations of the rarefaction 3-web of a system
/// with the canonical speed triple {inf, 0, -1}.
struct AbelianBasis {
    std::vector<AbelianTriple> triples;
    int size() const { return static_cast<int>(triples.size()); }
};

/// Splits each law (B|A) of a canonical-speed system into the triple
/// I_1 = B, I_2 = A, I_3 = -A-B. Verifies the speed triple {inf, 0, -1}
/// (CanonicalSpeedError otherwise), law validity, independence of the five
/// triples (DependentLaws), and the annihilations xi_1(I_1), xi_2(I_2),
/// xi_3(I_3) at the sample points.
AbelianBasis abelian_from_laws(const ParametricSystem& sys,
                               const std::vector<ConservationLaw>& laws,
                               const std::vector<Eigen::VectorXd>& points,
                               double speed_tol = 1e-8, double law_tol = 1e-9,
                               double annihilation_tol = 1e-6);

/// True iff the system's projective speeds are {[1:0],[0:1],[-1:1]} at every
/// point, each within angular distance tol.
bool has_canonical_speed_triple(const ParametricSystem& sys,
                                const std::vector<Eigen::VectorXd>& points, double tol = 1e-8);

/// Greedy selection of `count` laws whose stacked density/flux gradients
/// have full rank over the sample points (laws that only add a constant
/// multiple of earlier ones are skipped). Throws DependentLaws if the
/// candidates cannot produce the requested rank.
std::vector<ConservationLaw>
select_independent_laws(const std::vector<ConservationLaw>& candidates, int count,
                        const std::vector<Eigen::VectorXd>& points, double tol = 1e-8);

struct PqrResult {
    Eigen::VectorXd p, q, r;  // normalized points of P^4
    double formula_angle_sin; // worst disagreement between the two formulas
};

/// The three intersection points P = xi_1(I_3) = -xi_1(I_2),
/// Q = xi_2(I_1) = -xi_2(I_3), R = xi_3(I_2) = -xi_3(I_1), componentwise
/// over the basis. Throws NonGenericPoint when a defining vector vanishes.
PqrResult pqr_points(const ParametricSystem& sys, const AbelianBasis& basis,
                     std::span<const double> u);

/// Homogeneous cubic on P^4: 35 coefficients in graded-lexicographic
/// monomial order, normalized to max |coefficient| = 1 with the first
/// nonzero coefficient positive.
struct CubicForm {
    Eigen::VectorXd coefficients;

    static const std::vector<std::array<int, 5>>& monomials();
    double evaluate(const Eigen::VectorXd& x) const;
};

struct CubicFitResult {
    CubicForm cubic;
    double residual; // max |cubic(sample)| over normalized samples
    int nullity;     // dimension of the null space of the monomial matrix
    bool degenerate; // nullity > 1
};

/// Fits a cubic through >= 60 normalized points of P^4 by a nullspace
/// computation on the N x 35 monomial matrix. nullity 0 means no cubic
/// (reported, not thrown).
CubicFitResult fit_cubic(const std::vector<Eigen::VectorXd>& samples, double tol = 1e-8);

/// Evaluates the cubic on s X + t Y at [1:0], [0:1], [1:1], [1:-1]; since a
/// nonzero binary cubic has at most 3 roots, all four below tolerance
/// certifies the whole line lies on the cubic. Returns the max.
double line_on_cubic(const CubicForm& cubic, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y);

} // namespace claw
