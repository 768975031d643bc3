#include "claw/syscore.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <random>

namespace claw {

std::string provenance_str(Provenance p) {
    switch (p) {
        case Provenance::Primal: return "primal";
        case Provenance::Reciprocal: return "reciprocal";
        case Provenance::Dual: return "dual";
        case Provenance::ChangeOfVariables: return "change-of-variables";
        case Provenance::ParametricFile: return "parametric";
    }
    return "unknown";
}

Eigen::VectorXd eval_vector(const std::vector<Expr>& exprs, std::span<const double> u) {
    ExprEvaluator ev(u);
    Eigen::VectorXd out(static_cast<Eigen::Index>(exprs.size()));
    for (std::size_t i = 0; i < exprs.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = ev.value(exprs[i]);
    return out;
}

Eigen::MatrixXd eval_matrix(const std::vector<std::vector<Expr>>& rows,
                            std::span<const double> u) {
    ExprEvaluator ev(u);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                ev.value(rows[i][j]);
    return out;
}

// ---------------------------------------------------------------------------
// ConservationLaw / ParametricSystem
// ---------------------------------------------------------------------------

ConservationLaw::ConservationLaw(std::string name_in, Expr density_in, Expr flux_in, int n)
    : name(std::move(name_in)), density(std::move(density_in)), flux(std::move(flux_in)) {
    for (int j = 0; j < n; ++j) {
        density_grad.push_back(density.differentiate(j));
        flux_grad.push_back(flux.differentiate(j));
    }
}

Eigen::RowVectorXd ConservationLaw::grad_density(std::span<const double> u) const {
    return eval_vector(density_grad, u).transpose();
}

Eigen::RowVectorXd ConservationLaw::grad_flux(std::span<const double> u) const {
    return eval_vector(flux_grad, u).transpose();
}

ParametricSystem::ParametricSystem(std::string name, std::vector<Expr> densities,
                                   std::vector<Expr> fluxes, Provenance provenance,
                                   std::pair<double, double> domain)
    : name_(std::move(name)), n_(static_cast<int>(fluxes.size())),
      densities_(std::move(densities)), fluxes_(std::move(fluxes)), provenance_(provenance),
      domain_(domain) {
    if (densities_.size() != fluxes_.size())
        throw std::invalid_argument("density/flux count mismatch");
    d_dens_.resize(densities_.size());
    d_flux_.resize(fluxes_.size());
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            d_dens_[i].push_back(densities_[static_cast<std::size_t>(i)].differentiate(j));
            d_flux_[i].push_back(fluxes_[static_cast<std::size_t>(i)].differentiate(j));
        }
    }
}

ParametricSystem ParametricSystem::primal(std::string name, int n, std::vector<Expr> fluxes,
                                          std::pair<double, double> domain) {
    if (static_cast<int>(fluxes.size()) != n)
        throw std::invalid_argument("flux count must equal variable count");
    std::vector<Expr> ident;
    for (int i = 0; i < n; ++i) ident.push_back(Expr::variable(i));
    return ParametricSystem(std::move(name), std::move(ident), std::move(fluxes),
                            Provenance::Primal, domain);
}

Eigen::VectorXd ParametricSystem::eval_densities(std::span<const double> u) const {
    return eval_vector(densities_, u);
}

Eigen::VectorXd ParametricSystem::eval_fluxes(std::span<const double> u) const {
    return eval_vector(fluxes_, u);
}

Eigen::MatrixXd ParametricSystem::density_jacobian(std::span<const double> u) const {
    if (is_primal()) return Eigen::MatrixXd::Identity(n_, n_);
    return eval_matrix(d_dens_, u);
}

Eigen::MatrixXd ParametricSystem::flux_jacobian(std::span<const double> u) const {
    return eval_matrix(d_flux_, u);
}

std::vector<ConservationLaw> ParametricSystem::canonical_laws() const {
    std::vector<ConservationLaw> out;
    for (int i = 0; i < n_; ++i)
        out.emplace_back("u" + std::to_string(i + 1), densities_[static_cast<std::size_t>(i)],
                         fluxes_[static_cast<std::size_t>(i)], n_);
    return out;
}

std::vector<ConservationLaw> trivial_laws(int n) {
    return {ConservationLaw("xform", Expr::constant(1), Expr::constant(0), n),
            ConservationLaw("tform", Expr::constant(0), Expr::constant(1), n)};
}

// ---------------------------------------------------------------------------
// Characteristic fields
// ---------------------------------------------------------------------------

CharFieldSet characteristic_fields(const ParametricSystem& sys, std::span<const double> u,
                                   double gap_tol) {
    const int n = sys.n();
    CharFieldSet set;
    set.point = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));

    Eigen::MatrixXd xi_mat(n, n);
    if (sys.is_primal()) {
        Spectrum spec = eigen(sys.flux_jacobian(u), gap_tol);
        for (int k = 0; k < n; ++k) {
            CharField f;
            f.speed = ProjectiveValue::finite(spec.pairs[static_cast<std::size_t>(k)].value);
            f.xi = spec.pairs[static_cast<std::size_t>(k)].right;
            xi_mat.col(k) = f.xi;
            set.fields.push_back(std::move(f));
        }
    } else {
        auto pairs = pencil_eigs(sys.flux_jacobian(u), sys.density_jacobian(u), gap_tol);
        for (int k = 0; k < n; ++k) {
            CharField f;
            f.speed = pairs[static_cast<std::size_t>(k)].first;
            f.xi = pairs[static_cast<std::size_t>(k)].second;
            xi_mat.col(k) = f.xi;
            set.fields.push_back(std::move(f));
        }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(xi_mat);
    if (!lu.isInvertible())
        throw NotStrictlyHyperbolic("characteristic fields do not span the parameter space");
    Eigen::MatrixXd omega = lu.inverse();
    for (int k = 0; k < n; ++k) set.fields[static_cast<std::size_t>(k)].omega = omega.row(k);
    return set;
}

std::vector<std::pair<int, double>> match_fields(const CharFieldSet& center,
                                                 const CharFieldSet& other) {
    const int n = center.n();
    if (other.n() != n) throw std::invalid_argument("match_fields: family count mismatch");

    struct Cand {
        double score;
        int a, b;
    };
    std::vector<Cand> cands;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double c = center.fields[static_cast<std::size_t>(a)].xi.dot(
                other.fields[static_cast<std::size_t>(b)].xi);
            cands.push_back({std::abs(c), a, b});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.score != y.score) return x.score > y.score;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    std::vector<std::pair<int, double>> out(static_cast<std::size_t>(n), {-1, 1.0});
    std::vector<bool> used_a(static_cast<std::size_t>(n), false),
        used_b(static_cast<std::size_t>(n), false);
    int matched = 0;
    for (const auto& c : cands) {
        if (used_a[static_cast<std::size_t>(c.a)] || used_b[static_cast<std::size_t>(c.b)])
            continue;
        used_a[static_cast<std::size_t>(c.a)] = true;
        used_b[static_cast<std::size_t>(c.b)] = true;
        double dot = center.fields[static_cast<std::size_t>(c.a)].xi.dot(
            other.fields[static_cast<std::size_t>(c.b)].xi);
        out[static_cast<std::size_t>(c.a)] = {c.b, dot < 0 ? -1.0 : 1.0};
        if (++matched == n) break;
    }
    for (const auto& m : out)
        if (m.first < 0) throw std::runtime_error("match_fields: incomplete matching");
    return out;
}

// ---------------------------------------------------------------------------
// check_law
// ---------------------------------------------------------------------------

namespace {

Eigen::RowVectorXd field_gradient(const ParametricSystem& sys, const Eigen::RowVectorXd& du,
                                  const Eigen::MatrixXd& jac_u) {
    if (sys.is_primal()) return du;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac_u);
    if (!lu.isInvertible())
        throw SingularJacobian("density Jacobian is singular at a sample point");
    return du * lu.inverse();
}

} // namespace

CheckLawReport check_law(const ParametricSystem& sys, const ConservationLaw& law,
                         const std::vector<Eigen::VectorXd>& points, double tol) {
    CheckLawReport report;
    report.law_name = law.name;
    report.tolerance = tol;

    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        Eigen::RowVectorXd grad_b = law.grad_density(u);
        Eigen::RowVectorXd grad_a = law.grad_flux(u);
        Eigen::MatrixXd jac_f = sys.flux_jacobian(u);
        Eigen::MatrixXd jac_u = sys.density_jacobian(u);
        const double weight = 1.0 + grad_a.norm();

        CheckLawPoint pt{static_cast<int>(idx), std::nullopt, std::nullopt};
        bool has_infinite_speed = false;
        try {
            CharFieldSet fields = characteristic_fields(sys, u);
            double char_res = 0.0;
            for (const auto& f : fields.fields) {
                if (f.speed.is_infinite(1e-9)) has_infinite_speed = true;
                double a_coef = grad_a.dot(f.xi);
                double b_coef = grad_b.dot(f.xi);
                char_res = std::max(
                    char_res, std::abs(f.speed.b * a_coef - f.speed.a * b_coef) / weight);
            }
            pt.char_residual = char_res;
            report.max_residual = std::max(report.max_residual, char_res);
        } catch (const NotStrictlyHyperbolic&) {
            // Characteristic form unavailable; fall through to the chain rule.
        }
        if (!has_infinite_speed) {
            Eigen::RowVectorXd chain = field_gradient(sys, grad_b, jac_u) * jac_f;
            pt.chain_residual = (grad_a - chain).norm() / weight;
            report.max_residual = std::max(report.max_residual, *pt.chain_residual);
        }
        if (!pt.chain_residual && !pt.char_residual)
            throw NotStrictlyHyperbolic(
                "law check impossible: no valid residual formulation at a sample point");
        report.per_point.push_back(std::move(pt));
    }
    report.pass = report.max_residual <= tol;
    return report;
}

// ---------------------------------------------------------------------------
// Reciprocal transformation
// ---------------------------------------------------------------------------

namespace {

/// Greedy selection of pool indices whose stacked density gradients keep
/// full rank over the sample points.
std::vector<std::size_t>
pick_density_basis(const std::vector<ConservationLaw>& pool, int count,
                   const std::vector<Eigen::VectorXd>& points) {
    const std::size_t k = std::min<std::size_t>(points.size(), 8);
    if (k == 0) throw std::invalid_argument("no points for density basis selection");
    const int n = static_cast<int>(points.front().size());

    std::vector<std::size_t> chosen;
    Eigen::MatrixXd stack(0, static_cast<Eigen::Index>(n * k));
    for (std::size_t idx = 0; idx < pool.size(); ++idx) {
        if (static_cast<int>(chosen.size()) == count) break;
        const auto& law = pool[idx];
        Eigen::VectorXd row(static_cast<Eigen::Index>(n * k));
        for (std::size_t i = 0; i < k; ++i) {
            std::span<const double> u(points[i].data(),
                                      static_cast<std::size_t>(points[i].size()));
            row.segment(static_cast<Eigen::Index>(n * i), n) = law.grad_density(u).transpose();
        }
        Eigen::MatrixXd trial(stack.rows() + 1, stack.cols());
        trial.topRows(stack.rows()) = stack;
        trial.row(stack.rows()) = row.transpose();
        if (numerical_rank(trial.transpose(), 1e-8) == static_cast<int>(trial.rows())) {
            stack = trial;
            chosen.push_back(idx);
        }
    }
    if (static_cast<int>(chosen.size()) < count)
        throw TransformSingular(
            "could not assemble independent density coordinates for the transformed system");
    return chosen;
}

/// A carrier is usable when its pencil is regular with distinct real roots
/// on most of the sample (stray points near the transform's singular locus
/// are rejected later by joint sampling). Density-Jacobian invertibility is
/// deliberately not required: a system with an infinite characteristic
/// speed has the first field in the kernel of grad U at every point.
bool carrier_valid(const ParametricSystem& sys, const std::vector<Eigen::VectorXd>& points) {
    int good = 0, total = 0;
    const std::size_t stride = std::max<std::size_t>(1, points.size() / 16);
    for (std::size_t i = 0; i < points.size(); i += stride) {
        ++total;
        std::span<const double> u(points[i].data(), static_cast<std::size_t>(points[i].size()));
        try {
            characteristic_fields(sys, u);
            ++good;
        } catch (const NotStrictlyHyperbolic&) {
        } catch (const SingularPencil&) {
        } catch (const EvalSingular&) {
        }
    }
    return total > 0 && good * 4 >= total * 3;
}

} // namespace

ReciprocalTransform reciprocal_transform(const ParametricSystem& sys,
                                         const std::vector<ConservationLaw>& basis,
                                         const std::vector<Rational>& row_x,
                                         const std::vector<Rational>& row_t,
                                         const std::vector<Eigen::VectorXd>& check_points,
                                         const std::vector<ConservationLaw>& extra_laws) {
    const std::size_t m = basis.size();
    if (row_x.size() != m + 2 || row_t.size() != m + 2)
        throw std::invalid_argument("reciprocal rows must have basis size + 2 entries");

    auto combine = [&](const std::vector<Rational>& row, bool density_part) {
        Expr acc = Expr::constant(row[m + (density_part ? 0 : 1)]);
        for (std::size_t k = 0; k < m; ++k) {
            if (row[k].is_zero()) continue;
            const Expr& part = density_part ? basis[k].density : basis[k].flux;
            Expr term = row[k].is_one() ? part : Expr::constant(row[k]) * part;
            acc = acc.is_constant() && acc.constant_value().is_zero() ? term : acc + term;
        }
        return acc;
    };

    Expr b = combine(row_x, true);
    Expr a = combine(row_x, false);
    Expr nn = combine(row_t, true);
    Expr mm = combine(row_t, false);
    Expr delta = b * mm - a * nn;

    for (const auto& p : check_points) {
        std::span<const double> u(p.data(), static_cast<std::size_t>(p.size()));
        double d = delta.evaluate(u);
        if (std::abs(d) < 1e-12)
            throw TransformSingular("BM - AN vanishes at a sample point");
    }

    const int n = sys.n();
    auto map_one = [&](const ConservationLaw& law) {
        return ConservationLaw(law.name, (law.density * mm - law.flux * nn) / delta,
                               (law.flux * b - law.density * a) / delta, n);
    };

    std::vector<Expr> new_dens, new_flux;
    for (int i = 0; i < n; ++i) {
        const Expr& ui = sys.densities()[static_cast<std::size_t>(i)];
        const Expr& fi = sys.fluxes()[static_cast<std::size_t>(i)];
        new_dens.push_back((ui * mm - fi * nn) / delta);
        new_flux.push_back((fi * b - ui * a) / delta);
    }

    ParametricSystem out(sys.name() + "_reciprocal", new_dens, new_flux,
                         Provenance::Reciprocal, sys.domain());
    ReciprocalTransform result(b, a, nn, mm, delta, std::move(out));

    if (carrier_valid(result.system, check_points)) {
        for (int i = 0; i < n; ++i)
            result.carrier_refs.push_back({LawRef::Kind::Canonical, i});
    } else {
        // The canonical density images are dependent (the rows hit trivial
        // laws); re-base the carrier on independent transformed laws.
        std::vector<ConservationLaw> pool;
        std::vector<LawRef> refs;
        for (int i = 0; i < n; ++i) {
            pool.push_back(map_one(sys.canonical_laws()[static_cast<std::size_t>(i)]));
            refs.push_back({LawRef::Kind::Canonical, i});
        }
        for (std::size_t i = 0; i < extra_laws.size(); ++i) {
            pool.push_back(map_one(extra_laws[i]));
            refs.push_back({LawRef::Kind::Extra, static_cast<int>(i)});
        }
        {
            auto triv = trivial_laws(n);
            pool.push_back(map_one(triv[0]));
            refs.push_back({LawRef::Kind::TrivialX, 0});
            pool.push_back(map_one(triv[1]));
            refs.push_back({LawRef::Kind::TrivialT, 0});
        }
        std::vector<std::size_t> picked = pick_density_basis(pool, n, check_points);

        std::vector<Expr> dens, flux;
        for (std::size_t idx : picked) {
            dens.push_back(pool[idx].density);
            flux.push_back(pool[idx].flux);
            result.carrier_laws.push_back(pool[idx].name);
            result.carrier_refs.push_back(refs[idx]);
        }
        result.system = ParametricSystem(sys.name() + "_reciprocal", std::move(dens),
                                         std::move(flux), Provenance::Reciprocal, sys.domain());
        result.rebased = true;
        if (!carrier_valid(result.system, check_points))
            throw TransformSingular(
                "re-based transformed carrier is not strictly hyperbolic at a sample point");
    }
    return result;
}

ConservationLaw ReciprocalTransform::map_law(const ConservationLaw& law) const {
    Expr p = law.density, q = law.flux;
    return ConservationLaw(law.name, (p * M - q * N) / delta, (q * B - p * A) / delta,
                           system.n());
}

// ---------------------------------------------------------------------------
// Change of variables
// ---------------------------------------------------------------------------

ParametricSystem change_variables(const ParametricSystem& sys,
                                  const std::vector<ConservationLaw>& new_densities,
                                  const std::vector<Eigen::VectorXd>& points) {
    if (static_cast<int>(new_densities.size()) != sys.n())
        throw std::invalid_argument("change_variables: need exactly n laws");

    for (const auto& law : new_densities) {
        CheckLawReport rep = check_law(sys, law, points);
        if (!rep.pass)
            throw std::invalid_argument("change_variables: law `" + law.name +
                                        "` is not a conservation law of the system");
    }

    std::vector<Expr> dens, flux;
    for (const auto& law : new_densities) {
        dens.push_back(law.density);
        flux.push_back(law.flux);
    }
    ParametricSystem out(sys.name() + "_chv", std::move(dens), std::move(flux),
                         Provenance::ChangeOfVariables, sys.domain());

    for (const auto& p : points) {
        std::span<const double> u(p.data(), static_cast<std::size_t>(p.size()));
        Eigen::FullPivLU<Eigen::MatrixXd> lu(out.density_jacobian(u));
        if (!lu.isInvertible())
            throw DependentDensities("new densities are dependent at a sample point");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Finite-difference machinery
// ---------------------------------------------------------------------------

namespace {

// |lambda| <= 4 uses the plain speed chart; beyond that (and at infinity)
// the inverse-speed chart keeps the derivative finite.
bool finite_chart(const ProjectiveValue& v) { return std::abs(v.b) >= 0.25; }

double chart_value(const ProjectiveValue& v, bool finite) {
    return finite ? v.a / v.b : v.b / v.a;
}

CharFieldSet fields_at(const ParametricSystem& sys, const Eigen::VectorXd& u) {
    std::span<const double> s(u.data(), static_cast<std::size_t>(u.size()));
    return characteristic_fields(sys, s);
}

struct Stencil {
    CharFieldSet plus;
    CharFieldSet minus;
    std::vector<std::pair<int, double>> match_plus;
    std::vector<std::pair<int, double>> match_minus;
};

Stencil stencil_along(const ParametricSystem& sys, const CharFieldSet& center, int family,
                      double h) {
    const Eigen::VectorXd& xi = center.fields[static_cast<std::size_t>(family)].xi;
    Stencil st;
    st.plus = fields_at(sys, center.point + h * xi);
    st.minus = fields_at(sys, center.point - h * xi);
    st.match_plus = match_fields(center, st.plus);
    st.match_minus = match_fields(center, st.minus);
    return st;
}

} // namespace

FamilyResidualReport linear_degeneracy(const ParametricSystem& sys,
                                       const std::vector<Eigen::VectorXd>& points,
                                       double fd_step, double tol) {
    FamilyResidualReport report;
    report.check = "linear_degeneracy";
    report.tolerance = tol;
    report.per_family_max.assign(static_cast<std::size_t>(sys.n()), 0.0);
    report.chart.assign(static_cast<std::size_t>(sys.n()), "speed");

    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        CharFieldSet center = fields_at(sys, points[idx]);
        FamilyResidualPoint row;
        row.index = static_cast<int>(idx);
        for (int a = 0; a < sys.n(); ++a) {
            bool finite = finite_chart(center.fields[static_cast<std::size_t>(a)].speed);
            if (!finite) report.chart[static_cast<std::size_t>(a)] = "inverse_speed";
            Stencil st = stencil_along(sys, center, a, fd_step);
            double vp = chart_value(
                st.plus.fields[static_cast<std::size_t>(st.match_plus[static_cast<std::size_t>(a)].first)]
                    .speed,
                finite);
            double vm = chart_value(
                st.minus
                    .fields[static_cast<std::size_t>(st.match_minus[static_cast<std::size_t>(a)].first)]
                    .speed,
                finite);
            double deriv = std::abs(vp - vm) / (2.0 * fd_step);
            row.per_family.push_back(deriv);
            auto& fam_max = report.per_family_max[static_cast<std::size_t>(a)];
            fam_max = std::max(fam_max, deriv);
            report.max_residual = std::max(report.max_residual, deriv);
        }
        report.per_point.push_back(std::move(row));
    }
    report.pass = report.max_residual <= tol;
    return report;
}

FamilyResidualReport temple_rectilinearity(const ParametricSystem& sys,
                                           const std::vector<Eigen::VectorXd>& points,
                                           double fd_step, double tol) {
    FamilyResidualReport report;
    report.check = "temple_rectilinearity";
    report.tolerance = tol;
    report.per_family_max.assign(static_cast<std::size_t>(sys.n()), 0.0);
    report.chart.assign(static_cast<std::size_t>(sys.n()), "field_space");

    // A family whose rarefaction direction collapses under grad U (the
    // infinite-speed family of a constant-speed system) is untestable in
    // these density coordinates and is flagged instead of scored.
    auto direction = [&](const CharFieldSet& at, int family,
                         double sign) -> std::optional<Eigen::VectorXd> {
        std::span<const double> u(at.point.data(), static_cast<std::size_t>(at.point.size()));
        Eigen::MatrixXd jac = sys.density_jacobian(u);
        Eigen::VectorXd d = jac * (sign * at.fields[static_cast<std::size_t>(family)].xi);
        double norm = d.norm();
        if (norm <= 1e-9 * std::max(1.0, jac.norm())) return std::nullopt;
        return Eigen::VectorXd(d / norm);
    };

    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        CharFieldSet center = fields_at(sys, points[idx]);
        FamilyResidualPoint row;
        row.index = static_cast<int>(idx);
        for (int a = 0; a < sys.n(); ++a) {
            auto d0 = direction(center, a, 1.0);
            if (!d0) {
                report.chart[static_cast<std::size_t>(a)] = "degenerate_pushforward";
                row.per_family.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            Stencil st = stencil_along(sys, center, a, fd_step);
            auto mp = st.match_plus[static_cast<std::size_t>(a)];
            auto mm = st.match_minus[static_cast<std::size_t>(a)];
            auto dp = direction(st.plus, mp.first, mp.second);
            auto dm = direction(st.minus, mm.first, mm.second);
            if (!dp || !dm) {
                report.chart[static_cast<std::size_t>(a)] = "degenerate_pushforward";
                row.per_family.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            if (dp->dot(*d0) < 0) *dp = -*dp;
            if (dm->dot(*d0) < 0) *dm = -*dm;
            Eigen::VectorXd dd = (*dp - *dm) / (2.0 * fd_step);
            Eigen::VectorXd turn = dd - dd.dot(*d0) * (*d0);
            double res = turn.norm();
            row.per_family.push_back(res);
            auto& fam_max = report.per_family_max[static_cast<std::size_t>(a)];
            fam_max = std::max(fam_max, res);
            report.max_residual = std::max(report.max_residual, res);
        }
        report.per_point.push_back(std::move(row));
    }
    report.pass = report.max_residual <= tol;
    return report;
}

StructureCoefficients structure_coefficients(const ParametricSystem& sys,
                                             std::span<const double> u, double fd_step) {
    const int n = sys.n();
    Eigen::VectorXd point =
        Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    CharFieldSet center = characteristic_fields(sys, u);

    StructureCoefficients out;
    out.point = point;
    out.lambda_i.resize(n, n);
    out.chart.assign(static_cast<std::size_t>(n), "speed");

    // D_i xi_j and lambda^a along xi_i, for every i.
    std::vector<std::vector<Eigen::VectorXd>> dxi(
        static_cast<std::size_t>(n), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) {
        Stencil st = stencil_along(sys, center, i, fd_step);
        for (int j = 0; j < n; ++j) {
            auto mp = st.match_plus[static_cast<std::size_t>(j)];
            auto mm = st.match_minus[static_cast<std::size_t>(j)];
            Eigen::VectorXd xp =
                mp.second * st.plus.fields[static_cast<std::size_t>(mp.first)].xi;
            Eigen::VectorXd xm =
                mm.second * st.minus.fields[static_cast<std::size_t>(mm.first)].xi;
            dxi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                (xp - xm) / (2.0 * fd_step);

            bool finite = finite_chart(center.fields[static_cast<std::size_t>(j)].speed);
            if (!finite) out.chart[static_cast<std::size_t>(j)] = "inverse_speed";
            double vp = chart_value(st.plus.fields[static_cast<std::size_t>(mp.first)].speed,
                                    finite);
            double vm = chart_value(st.minus.fields[static_cast<std::size_t>(mm.first)].speed,
                                    finite);
            out.lambda_i(j, i) = (vp - vm) / (2.0 * fd_step);
        }
    }

    for (int a = 0; a < n; ++a) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Eigen::VectorXd bracket = dxi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                                          dxi[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                double value = -0.5 * center.fields[static_cast<std::size_t>(a)].omega.dot(bracket);
                c(i, j) = value;
                c(j, i) = -value;
            }
        out.c.push_back(std::move(c));
    }

    for (int a = 0; a < n; ++a) {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != a && j != a)
                    worst = std::max(worst, std::abs(out.c[static_cast<std::size_t>(a)](i, j)));
        out.riemann_invariant.push_back(worst <= StructureCoefficients::kFlagThreshold);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd>
sample_points(const std::vector<const ParametricSystem*>& systems, const SampleOptions& opts) {
    if (systems.empty()) throw std::invalid_argument("sample_points: no systems");
    const int n = systems.front()->n();
    std::mt19937_64 rng(opts.seed);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<Eigen::VectorXd> out;
    int attempts = 0;
    while (static_cast<int>(out.size()) < opts.count) {
        if (++attempts > opts.max_attempts)
            throw std::runtime_error("sample_points: rejection sampling did not converge");
        Eigen::VectorXd u(n);
        for (int i = 0; i < n; ++i) u[i] = opts.lo + (opts.hi - opts.lo) * unit();
        bool ok = true;
        for (const auto* sys : systems) {
            try {
                std::span<const double> s(u.data(), static_cast<std::size_t>(u.size()));
                characteristic_fields(*sys, s, opts.gap_tol);
            } catch (const NotStrictlyHyperbolic&) {
                ok = false;
                break;
            } catch (const SingularPencil&) {
                ok = false;
                break;
            } catch (const EvalSingular&) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(std::move(u));
    }
    return out;
}

} // namespace claw
