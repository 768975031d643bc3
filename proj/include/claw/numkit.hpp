#pragma once

#include "claw/rational.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace claw {

class NotStrictlyHyperbolic : public std::runtime_error {
  public:
    explicit NotStrictlyHyperbolic(const std::string& msg) : std::runtime_error(msg) {}
};

class SingularPencil : public std::runtime_error {
  public:
    explicit SingularPencil(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateInput : public std::runtime_error {
  public:
    explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

/// A point of the projective line: the speed a/b, with b = 0 meaning the
/// infinite speed. Canonical form has max(|a|,|b|) = 1 and the first nonzero
/// component positive.
struct ProjectiveValue {
    double a = 0.0;
    double b = 1.0;

    ProjectiveValue() = default;
    ProjectiveValue(double a, double b);

    static ProjectiveValue finite(double v) { return ProjectiveValue(v, 1.0); }
    static ProjectiveValue infinite() { return ProjectiveValue(1.0, 0.0); }

    /// In canonical form |b| <= tol means the speed is (numerically) the
    /// point at infinity; QZ returns such roots with a stray beta of order
    /// machine epsilon rather than an exact zero.
    bool is_infinite(double tol = 1e-9) const { return std::abs(b) <= tol; }
    double value() const { return a / b; }

    /// sin of the angle between the two lines through the origin in R^2.
    static double angular_gap(const ProjectiveValue& x, const ProjectiveValue& y) {
        double cross = x.a * y.b - x.b * y.a;
        double nx = std::hypot(x.a, x.b);
        double ny = std::hypot(y.a, y.b);
        return std::abs(cross) / (nx * ny);
    }

    /// Descending order with the infinite speed first. Intended for strictly
    /// separated values; ties are rejected upstream.
    static bool descending(const ProjectiveValue& x, const ProjectiveValue& y) {
        bool xi = x.is_infinite(), yi = y.is_infinite();
        if (xi != yi) return xi;
        if (xi && yi) return false;
        return x.value() > y.value();
    }

    std::string str() const;
};

/// Eigen-decomposition of a strictly hyperbolic real matrix: eigenvalues in
/// strictly decreasing order, unit right vectors with the deterministic sign
/// convention (largest-magnitude component positive), left vectors scaled so
/// that left_i . right_j = delta_ij.
struct Spectrum {
    struct Pair {
        double value;
        Eigen::VectorXd right;
        Eigen::RowVectorXd left;
    };
    std::vector<Pair> pairs;
};

/// Applies the sign convention in place: the component of largest magnitude
/// (smallest index on ties) is made positive. Returns the applied sign.
double apply_sign_convention(Eigen::VectorXd& v);

Spectrum eigen(const Eigen::MatrixXd& m, double gap_tol = 1e-6);

/// Generalized eigenpairs of the regular pencil (A, B): projective speeds
/// [a:b] with b*A*v = a*B*v, sorted descending with infinite speeds first.
/// Throws SingularPencil for singular pencils and NotStrictlyHyperbolic for
/// complex or clustered (angular gap < gap_tol) roots.
std::vector<std::pair<ProjectiveValue, Eigen::VectorXd>>
pencil_eigs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gap_tol = 1e-6);

/// Orthonormal basis of the right null space of m at relative tolerance tol
/// (against the largest singular value). Columns of the result span the null
/// space; the basis may be empty (0 columns).
Eigen::MatrixXd nullspace(const Eigen::MatrixXd& m, double tol = 1e-9);

int numerical_rank(const Eigen::MatrixXd& m, double tol = 1e-9);

struct HyperplaneFit {
    Eigen::VectorXd coefficients;
    double residual; // max |<c,p>| / (|c| |p|) over the input points
};

/// Least-squares hyperplane through homogeneous points (rows of `points`
/// after stacking). Throws DegenerateInput when the points do not determine
/// a unique hyperplane (fewer than d+1 points, or nullity > 1).
HyperplaneFit fit_hyperplane(const std::vector<Eigen::VectorXd>& points, double tol = 1e-9);

/// Principal angles between the column spans of two matrices with the same
/// row count; returned in descending order (largest angle first, radians).
std::vector<double> principal_angles(const Eigen::MatrixXd& span_a,
                                     const Eigen::MatrixXd& span_b);

/// sin of the angle between two directions (vectors up to sign and scale).
double direction_angle_sin(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Exact inverse of a rational matrix (Gauss-Jordan); throws on singular.
std::vector<std::vector<Rational>> rational_inverse(const std::vector<std::vector<Rational>>& m);

} // namespace claw
