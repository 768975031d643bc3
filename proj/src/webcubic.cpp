#include "claw/webcubic.hpp"

#include "claw/ruledgeo.hpp"

#include <algorithm>
#include <cmath>

namespace claw {

namespace {

const std::array<ProjectiveValue, 3> kCanonicalTriple = {
    ProjectiveValue::infinite(), ProjectiveValue::finite(0.0), ProjectiveValue::finite(-1.0)};

Eigen::RowVectorXd gradient_at(const std::vector<Expr>& grad, std::span<const double> u) {
    return eval_vector(grad, u).transpose();
}

} // namespace

bool has_canonical_speed_triple(const ParametricSystem& sys,
                                const std::vector<Eigen::VectorXd>& points, double tol) {
    if (sys.n() != 3) return false;
    for (const auto& pt : points) {
        std::span<const double> u(pt.data(), static_cast<std::size_t>(pt.size()));
        CharFieldSet fields = characteristic_fields(sys, u);
        for (int k = 0; k < 3; ++k) {
            double gap = ProjectiveValue::angular_gap(
                fields.fields[static_cast<std::size_t>(k)].speed,
                kCanonicalTriple[static_cast<std::size_t>(k)]);
            if (gap > tol) return false;
        }
    }
    return true;
}

std::vector<ConservationLaw>
select_independent_laws(const std::vector<ConservationLaw>& candidates, int count,
                        const std::vector<Eigen::VectorXd>& points, double tol) {
    if (points.empty()) throw std::invalid_argument("select_independent_laws: no points");
    const std::size_t k = std::min<std::size_t>(points.size(), 8);
    const int n = static_cast<int>(points.front().size());

    auto law_row = [&](const ConservationLaw& law) {
        Eigen::VectorXd row(static_cast<Eigen::Index>(2 * n * k));
        for (std::size_t i = 0; i < k; ++i) {
            std::span<const double> u(points[i].data(),
                                      static_cast<std::size_t>(points[i].size()));
            row.segment(static_cast<Eigen::Index>(2 * n * i), n) =
                law.grad_density(u).transpose();
            row.segment(static_cast<Eigen::Index>(2 * n * i + n), n) =
                law.grad_flux(u).transpose();
        }
        return row;
    };

    std::vector<ConservationLaw> chosen;
    Eigen::MatrixXd stack(0, static_cast<Eigen::Index>(2 * n * k));
    for (const auto& law : candidates) {
        if (static_cast<int>(chosen.size()) == count) break;
        Eigen::MatrixXd trial(stack.rows() + 1, stack.cols());
        trial.topRows(stack.rows()) = stack;
        trial.row(stack.rows()) = law_row(law).transpose();
        if (numerical_rank(trial.transpose(), tol) == static_cast<int>(trial.rows())) {
            stack = trial;
            chosen.push_back(law);
        }
    }
    if (static_cast<int>(chosen.size()) < count)
        throw DependentLaws("could not select " + std::to_string(count) +
                            " independent laws from " + std::to_string(candidates.size()) +
                            " candidates");
    return chosen;
}

AbelianBasis abelian_from_laws(const ParametricSystem& sys,
                               const std::vector<ConservationLaw>& laws,
                               const std::vector<Eigen::VectorXd>& points, double speed_tol,
                               double law_tol, double annihilation_tol) {
    if (laws.size() != 5) throw std::invalid_argument("abelian_from_laws: need 5 laws");
    if (!has_canonical_speed_triple(sys, points, speed_tol))
        throw CanonicalSpeedError(
            "system speeds are not {inf, 0, -1}; apply a reciprocal transformation first");

    for (const auto& law : laws) {
        CheckLawReport rep = check_law(sys, law, points, law_tol);
        if (!rep.pass)
            throw std::invalid_argument("law `" + law.name +
                                        "` fails verification on the system");
    }

    // Independence: no combination of the laws may have constant density and
    // flux simultaneously.
    {
        std::vector<ConservationLaw> picked = select_independent_laws(laws, 5, points);
        if (picked.size() != 5) throw DependentLaws("laws are dependent"); // unreachable
    }

    const int n = sys.n();
    AbelianBasis basis;
    for (const auto& law : laws) {
        AbelianTriple triple;
        triple.integrals[0] = law.density;
        triple.integrals[1] = law.flux;
        triple.integrals[2] = -(law.flux + law.density);
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < n; ++j)
                triple.gradients[static_cast<std::size_t>(k)].push_back(
                    triple.integrals[static_cast<std::size_t>(k)].differentiate(j));
        basis.triples.push_back(std::move(triple));
    }

    // xi_1(I_1) = xi_2(I_2) = xi_3(I_3) = 0 at the samples.
    for (const auto& pt : points) {
        std::span<const double> u(pt.data(), static_cast<std::size_t>(pt.size()));
        CharFieldSet fields = characteristic_fields(sys, u);
        for (const auto& triple : basis.triples) {
            for (int k = 0; k < 3; ++k) {
                Eigen::RowVectorXd g =
                    gradient_at(triple.gradients[static_cast<std::size_t>(k)], u);
                double v = g.dot(fields.fields[static_cast<std::size_t>(k)].xi);
                if (std::abs(v) > annihilation_tol * (1.0 + g.norm()))
                    throw std::runtime_error(
                        "Abelian annihilation xi_k(I_k) violated at a sample point");
            }
        }
    }
    return basis;
}

PqrResult pqr_points(const ParametricSystem& sys, const AbelianBasis& basis,
                     std::span<const double> u) {
    CharFieldSet fields = characteristic_fields(sys, u);
    const int m = basis.size();

    auto apply = [&](int family, int integral) {
        Eigen::VectorXd out(m);
        for (int i = 0; i < m; ++i) {
            Eigen::RowVectorXd g = gradient_at(
                basis.triples[static_cast<std::size_t>(i)].gradients[static_cast<std::size_t>(integral)],
                u);
            out[i] = g.dot(fields.fields[static_cast<std::size_t>(family)].xi);
        }
        return out;
    };

    auto build = [&](int family, int primary, int secondary) {
        Eigen::VectorXd first = apply(family, primary);
        Eigen::VectorXd second = -apply(family, secondary);
        double scale = std::max(first.cwiseAbs().maxCoeff(), second.cwiseAbs().maxCoeff());
        if (scale < 1e-10)
            throw NonGenericPoint("P/Q/R vector vanishes at this parameter value");
        double angle = direction_angle_sin(first, second);
        Eigen::VectorXd out = first;
        normalize_projective(out);
        return std::make_pair(out, angle);
    };

    // P = xi_1(I_3) = -xi_1(I_2), Q = xi_2(I_1) = -xi_2(I_3),
    // R = xi_3(I_2) = -xi_3(I_1)
    auto [p, ap] = build(0, 2, 1);
    auto [q, aq] = build(1, 0, 2);
    auto [r, ar] = build(2, 1, 0);

    PqrResult out;
    out.p = p;
    out.q = q;
    out.r = r;
    out.formula_angle_sin = std::max({ap, aq, ar});
    return out;
}

// ---------------------------------------------------------------------------
// Cubic forms
// ---------------------------------------------------------------------------

const std::vector<std::array<int, 5>>& CubicForm::monomials() {
    static const std::vector<std::array<int, 5>> table = [] {
        std::vector<std::array<int, 5>> t;
        for (int e0 = 3; e0 >= 0; --e0)
            for (int e1 = 3 - e0; e1 >= 0; --e1)
                for (int e2 = 3 - e0 - e1; e2 >= 0; --e2)
                    for (int e3 = 3 - e0 - e1 - e2; e3 >= 0; --e3)
                        t.push_back({e0, e1, e2, e3, 3 - e0 - e1 - e2 - e3});
        return t;
    }();
    return table;
}

double CubicForm::evaluate(const Eigen::VectorXd& x) const {
    const auto& mono = monomials();
    double acc = 0.0;
    for (std::size_t k = 0; k < mono.size(); ++k) {
        double term = coefficients[static_cast<Eigen::Index>(k)];
        for (int v = 0; v < 5; ++v)
            for (int rep = 0; rep < mono[k][static_cast<std::size_t>(v)]; ++rep)
                term *= x[v];
        acc += term;
    }
    return acc;
}

namespace {

/// Composes a cubic c' with a linear map W: returns the coefficients of
/// x -> c'(W x) in the standard monomial order. Works by multiplying out
/// the linear forms (W x)_v factor by factor over dense coefficient tables
/// graded by total degree.
Eigen::VectorXd pull_back_cubic(const Eigen::VectorXd& coeffs, const Eigen::MatrixXd& w) {
    // Monomial tables per degree 0..3.
    std::vector<std::vector<std::array<int, 5>>> tables(4);
    for (int d = 0; d <= 3; ++d)
        for (int e0 = d; e0 >= 0; --e0)
            for (int e1 = d - e0; e1 >= 0; --e1)
                for (int e2 = d - e0 - e1; e2 >= 0; --e2)
                    for (int e3 = d - e0 - e1 - e2; e3 >= 0; --e3)
                        tables[static_cast<std::size_t>(d)].push_back(
                            {e0, e1, e2, e3, d - e0 - e1 - e2 - e3});
    auto index_of = [&](int d, const std::array<int, 5>& e) {
        const auto& t = tables[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] == e) return i;
        throw std::logic_error("monomial index");
    };

    const auto& mono = CubicForm::monomials();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mono.size()));
    for (std::size_t k = 0; k < mono.size(); ++k) {
        if (coeffs[static_cast<Eigen::Index>(k)] == 0.0) continue;
        // poly starts as the scalar coefficient, then gains one linear
        // factor (W x)_v per unit of exponent.
        std::vector<double> poly = {coeffs[static_cast<Eigen::Index>(k)]};
        int degree = 0;
        for (int v = 0; v < 5; ++v) {
            for (int rep = 0; rep < mono[k][static_cast<std::size_t>(v)]; ++rep) {
                std::vector<double> next(tables[static_cast<std::size_t>(degree + 1)].size(),
                                         0.0);
                for (std::size_t t = 0; t < poly.size(); ++t) {
                    if (poly[t] == 0.0) continue;
                    for (int j = 0; j < 5; ++j) {
                        if (w(v, j) == 0.0) continue;
                        std::array<int, 5> e = tables[static_cast<std::size_t>(degree)][t];
                        e[static_cast<std::size_t>(j)] += 1;
                        next[index_of(degree + 1, e)] += poly[t] * w(v, j);
                    }
                }
                poly = std::move(next);
                ++degree;
            }
        }
        for (std::size_t t = 0; t < poly.size(); ++t)
            out[static_cast<Eigen::Index>(t)] += poly[t];
    }
    return out;
}

} // namespace

CubicFitResult fit_cubic(const std::vector<Eigen::VectorXd>& samples, double tol) {
    if (samples.size() < 60)
        throw DegenerateInput("fit_cubic: need at least 60 samples");
    const auto& mono = CubicForm::monomials();

    std::vector<Eigen::VectorXd> normalized;
    for (const auto& s : samples) {
        if (s.size() != 5)
            throw std::invalid_argument("fit_cubic: samples must have 5 coordinates");
        Eigen::VectorXd x = s;
        normalize_projective(x);
        normalized.push_back(x);
    }

    // Whitening: anisotropic sample clouds (the web samples hug a
    // hyperplane) make the raw monomial matrix so ill-conditioned that
    // spurious near-null directions appear. Fit in isotropic coordinates
    // y = W x and pull the cubic back through W afterwards.
    Eigen::MatrixXd pointmat(static_cast<Eigen::Index>(normalized.size()), 5);
    for (std::size_t i = 0; i < normalized.size(); ++i)
        pointmat.row(static_cast<Eigen::Index>(i)) = normalized[i].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> psvd(pointmat, Eigen::ComputeFullV);
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(5, 5);
    {
        double s0 = psvd.singularValues()[0];
        Eigen::VectorXd scale(5);
        for (int k = 0; k < 5; ++k)
            scale[k] = s0 / std::max(psvd.singularValues()[k], 1e-12 * s0);
        w = scale.asDiagonal() * psvd.matrixV().transpose();
    }

    Eigen::MatrixXd m(static_cast<Eigen::Index>(normalized.size()),
                      static_cast<Eigen::Index>(mono.size()));
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        Eigen::VectorXd y = w * normalized[i];
        normalize_projective(y);
        for (std::size_t k = 0; k < mono.size(); ++k) {
            double term = 1.0;
            for (int v = 0; v < 5; ++v)
                for (int rep = 0; rep < mono[k][static_cast<std::size_t>(v)]; ++rep)
                    term *= y[v];
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = term;
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    double smax = svd.singularValues()[0];
    int nullity = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] <= tol * smax) ++nullity;

    CubicFitResult result;
    result.cubic.coefficients =
        pull_back_cubic(svd.matrixV().col(svd.matrixV().cols() - 1), w);
    double cmax = result.cubic.coefficients.cwiseAbs().maxCoeff();
    result.cubic.coefficients /= cmax;
    for (Eigen::Index i = 0; i < result.cubic.coefficients.size(); ++i) {
        if (result.cubic.coefficients[i] != 0.0) {
            if (result.cubic.coefficients[i] < 0)
                result.cubic.coefficients = -result.cubic.coefficients;
            break;
        }
    }
    result.nullity = nullity;
    result.degenerate = nullity > 1;
    double worst = 0.0;
    for (const auto& x : normalized)
        worst = std::max(worst, std::abs(result.cubic.evaluate(x)));
    result.residual = worst;
    return result;
}

double line_on_cubic(const CubicForm& cubic, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y) {
    if (direction_angle_sin(x, y) < 1e-10)
        throw CoincidentPoints("line_on_cubic: points coincide projectively");
    const std::array<std::pair<double, double>, 4> params = {
        {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {1.0, -1.0}}};
    Eigen::VectorXd xn = x, yn = y;
    normalize_projective(xn);
    normalize_projective(yn);
    double worst = 0.0;
    for (const auto& [s, t] : params) {
        Eigen::VectorXd z = s * xn + t * yn;
        normalize_projective(z);
        worst = std::max(worst, std::abs(cubic.evaluate(z)));
    }
    return worst;
}

} // namespace claw
