#include "claw/report.hpp"

namespace claw {

using nlohmann::json;

json to_json(const Tolerances& t) {
    return json{{"law", t.law},
                {"fd", t.fd},
                {"temple", t.temple},
                {"angle", t.angle},
                {"stability", t.stability},
                {"biduality", t.biduality},
                {"shared_angle", t.shared_angle},
                {"structure", t.structure},
                {"hyperplane", t.hyperplane},
                {"quadric", t.quadric},
                {"fit", t.fit}};
}

json to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const ProjectiveValue& v) { return json::array({v.a, v.b}); }

json to_json(const CheckLawReport& r) {
    json per = json::array();
    for (const auto& p : r.per_point)
        per.push_back(json{{"i", p.index},
                           {"chain", p.chain_residual ? nlohmann::json(*p.chain_residual)
                                                      : nlohmann::json()},
                           {"char", p.char_residual ? nlohmann::json(*p.char_residual)
                                                    : nlohmann::json()}});
    return json{{"check", "check_law"},          {"law", r.law_name},
                {"points", r.per_point.size()},  {"per_point", per},
                {"max_residual", r.max_residual}, {"tolerance", r.tolerance},
                {"pass", r.pass}};
}

json to_json(const FamilyResidualReport& r) {
    json per = json::array();
    for (const auto& p : r.per_point) {
        json fam = json::array();
        for (double v : p.per_family) fam.push_back(v);
        per.push_back(json{{"i", p.index}, {"per_family", fam}});
    }
    return json{{"check", r.check},
                {"points", r.per_point.size()},
                {"per_point", per},
                {"per_family_max", r.per_family_max},
                {"chart", r.chart},
                {"max_residual", r.max_residual},
                {"tolerance", r.tolerance},
                {"pass", r.pass}};
}

json to_json(const StructureCoefficients& r) {
    json cs = json::array();
    for (const auto& m : r.c) cs.push_back(to_json(m));
    return json{{"check", "structure_coefficients"},
                {"convention", StructureCoefficients::kConvention},
                {"point", to_json(r.point)},
                {"c", cs},
                {"lambda_i", to_json(r.lambda_i)},
                {"chart", r.chart},
                {"riemann_invariant", r.riemann_invariant},
                {"flag_threshold", StructureCoefficients::kFlagThreshold}};
}

json to_json(const TangentStabilityReport& r) {
    json per = json::array();
    for (const auto& p : r.per_point)
        per.push_back(json{{"i", p.index}, {"rank", p.rank}, {"residual", p.projection_residual}});
    return json{{"check", "tangent_stability"},   {"points", r.per_point.size()},
                {"per_point", per},               {"max_residual", r.max_residual},
                {"nondegenerate", r.nondegenerate}, {"tolerance", r.tolerance},
                {"pass", r.pass}};
}

json to_json(const FocalHyperplaneReport& r) {
    return json{{"check", "focal_hyperplane"},
                {"family", r.family},
                {"coefficients", to_json(r.coefficients)},
                {"residual", r.residual},
                {"tolerance", r.tolerance},
                {"pass", r.pass}};
}

json to_json(const BidualityReport& r) {
    json per = json::array();
    for (const auto& p : r.per_point)
        per.push_back(json{{"i", p.index}, {"angle", p.max_angle}});
    return json{{"check", "biduality"},       {"points", r.per_point.size()},
                {"per_point", per},           {"max_angle", r.max_angle},
                {"tolerance", r.tolerance},   {"pass", r.pass}};
}

json to_json(const SharedFieldsReport& r) {
    json per = json::array();
    for (const auto& p : r.per_point)
        per.push_back(json{{"i", p.index},
                           {"angle_sin", p.max_angle_sin},
                           {"structure_diff", p.structure_diff}});
    return json{{"check", "shared_characteristic_fields"},
                {"points", r.per_point.size()},
                {"per_point", per},
                {"max_angle_sin", r.max_angle_sin},
                {"max_structure_diff", r.max_structure_diff},
                {"angle_tolerance", r.angle_tolerance},
                {"structure_tolerance", r.structure_tolerance},
                {"pass", r.pass}};
}

namespace {
json scaled_points(const std::vector<ScaledResidualPoint>& pts) {
    json per = json::array();
    for (const auto& p : pts) per.push_back(json{{"i", p.index}, {"r", p.residual}});
    return per;
}
} // namespace

json to_json(const QuadricMembershipReport& r) {
    return json{{"check", "quadric_membership"}, {"points", r.per_point.size()},
                {"per_point", scaled_points(r.per_point)},
                {"max_residual", r.max_residual}, {"tolerance", r.tolerance},
                {"pass", r.pass}};
}

json to_json(const LegendreReport& r) {
    return json{{"check", "legendre_pairing"},   {"points", r.per_point.size()},
                {"per_point", scaled_points(r.per_point)},
                {"max_residual", r.max_residual}, {"tolerance", r.tolerance},
                {"pass", r.pass}};
}

json to_json(const AutodualityReport& r) {
    json per = json::array();
    for (const auto& p : r.per_point)
        per.push_back(json{{"i", p.index}, {"angle", p.max_angle}});
    return json{{"check", "autoduality"},     {"points", r.per_point.size()},
                {"per_point", per},           {"max_angle", r.max_angle},
                {"tolerance", r.tolerance},   {"pass", r.pass}};
}

json to_json(const CubicFitResult& r) {
    return json{{"check", "cubic_fit"},
                {"coefficients", to_json(r.cubic.coefficients)},
                {"residual", r.residual},
                {"nullity", r.nullity},
                {"degenerate", r.degenerate}};
}

} // namespace claw
