#pragma once

#include "claw/ruledgeo.hpp"

namespace claw {

/// Hamiltonian data: density h(u) and a constant symmetric invertible matrix
/// eta, kept exact. The fluxes are f = eta grad h; the classical form is the
/// diagonal case eta = diag(+-1).
struct HamiltonianSpec {
    Expr h;
    std::vector<std::vector<Rational>> eta;

    int n() const { return static_cast<int>(eta.size()); }
    Eigen::MatrixXd eta_matrix() const;
};

/// The built system together with its n+2 canonical conservation laws:
///   u^i dx + f^i dt,
///   1/2 (u . eta^-1 u) dx + (u . grad h - h) dt,
///   h dx + 1/2 (grad h . eta grad h) dt,
/// and the default law pair (quadratic law, h law).
struct HamiltonianBuild {
    ParametricSystem system;
    std::vector<ConservationLaw> laws; // n canonical, then quadratic, then h
    LawPair pair;
    std::vector<std::vector<Rational>> eta_inv;
};

HamiltonianBuild build_hamiltonian(const HamiltonianSpec& spec,
                                   std::pair<double, double> domain = {0.6, 1.7});

/// The quadric carrying the generators of a Hamiltonian system:
/// (X,Y) = X_mid . eta^-1 Y_mid - X_0 Y_{n+1} - X_{n+1} Y_0
///         - X_{n+2} Y_{n+3} - X_{n+3} Y_{n+2}.
class QuadricForm {
  public:
    explicit QuadricForm(const Eigen::MatrixXd& eta_inv);

    double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        return x.dot(g_ * y);
    }
    const Eigen::MatrixXd& matrix() const { return g_; }
    bool nondegenerate(double tol = 1e-12) const;

  private:
    Eigen::MatrixXd g_;
};

struct ScaledResidualPoint {
    int index;
    double residual;
};

struct QuadricMembershipReport {
    std::vector<ScaledResidualPoint> per_point; // max of |(p,p)|,|(r,r)|,|(p,r)| scaled
    double max_residual = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
};

/// Checks that the whole generator line lies on the quadric. The pair and
/// eta may come from build_hamiltonian (the usual case) or be supplied
/// explicitly as a negative control.
QuadricMembershipReport quadric_membership(const ParametricSystem& sys, const LawPair& pair,
                                           const Eigen::MatrixXd& eta_inv,
                                           const std::vector<Eigen::VectorXd>& points,
                                           double tol = 1e-9);

struct LegendreReport {
    std::vector<ScaledResidualPoint> per_point; // max over directions
    double max_residual = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
};

/// Pairing (r, d_i p du^i) along the generators; vanishes identically for
/// Hamiltonian data. Directions default to the coordinate directions when
/// none are given.
LegendreReport legendre_check(const ParametricSystem& sys, const LawPair& pair,
                              const Eigen::MatrixXd& eta_inv,
                              const std::vector<Eigen::VectorXd>& points,
                              const std::vector<Eigen::VectorXd>& directions = {},
                              double tol = 1e-9);

struct AutodualityReport {
    std::vector<BidualityPoint> per_point;
    double max_angle = 0.0;
    double tolerance = 1e-8;
    bool pass = false;
};

/// Maps the dual generators back through the polarity substitution
/// (slot swap 0 <-> n+1, n+2 <-> n+3, middle block scaled by -eta) and
/// compares the resulting plane with span(p, r).
AutodualityReport autoduality_check(const ParametricSystem& sys, const LawPair& pair,
                                    const Eigen::MatrixXd& eta,
                                    const std::vector<Eigen::VectorXd>& points,
                                    double tol = 1e-8);

} // namespace claw
