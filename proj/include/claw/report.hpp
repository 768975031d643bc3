#pragma once

#include "claw/hamgeo.hpp"
#include "claw/ruledgeo.hpp"
#include "claw/syscore.hpp"
#include "claw/webcubic.hpp"

#include <json.hpp>

namespace claw {

/// Tolerance knobs shared by the CLI commands; defaults pin the exact-path,
/// finite-difference and geometric thresholds used by every check suite.
struct Tolerances {
    double law = 1e-9;          // exact-derivative residuals
    double fd = 1e-6;           // finite-difference linear degeneracy
    double temple = 1e-5;       // rectilinearity turning
    double angle = 1e-8;        // direction / autoduality comparisons
    double stability = 1e-8;    // tangent stability projections
    double biduality = 1e-7;    // double-dual principal angles
    double shared_angle = 1e-6; // dual field direction agreement
    double structure = 1e-4;    // structure coefficient agreement
    double hyperplane = 1e-8;   // focal hyperplane fits
    double quadric = 1e-9;      // quadric membership / Legendre pairing
    double fit = 1e-8;          // cubic fit
};

nlohmann::json to_json(const Tolerances& t);
nlohmann::json to_json(const Eigen::VectorXd& v);
nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const ProjectiveValue& v);

nlohmann::json to_json(const CheckLawReport& r);
nlohmann::json to_json(const FamilyResidualReport& r);
nlohmann::json to_json(const StructureCoefficients& r);
nlohmann::json to_json(const TangentStabilityReport& r);
nlohmann::json to_json(const FocalHyperplaneReport& r);
nlohmann::json to_json(const BidualityReport& r);
nlohmann::json to_json(const SharedFieldsReport& r);
nlohmann::json to_json(const QuadricMembershipReport& r);
nlohmann::json to_json(const LegendreReport& r);
nlohmann::json to_json(const AutodualityReport& r);
nlohmann::json to_json(const CubicFitResult& r);

} // namespace claw
