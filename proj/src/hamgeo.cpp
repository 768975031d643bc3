#include "claw/hamgeo.hpp"

namespace claw {

Eigen::MatrixXd HamiltonianSpec::eta_matrix() const {
    const int nn = n();
    Eigen::MatrixXd m(nn, nn);
    for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
            m(i, j) = eta[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].to_double();
    return m;
}

namespace {

/// Left-associated sum of coefficient * factor terms; unit coefficients are
/// dropped and negative ones become subtractions, which keeps built laws in
/// the shape the displayed formulas take.
Expr linear_combination(const std::vector<std::pair<Rational, Expr>>& terms) {
    Expr acc;
    bool started = false;
    for (const auto& [c, factor] : terms) {
        if (c.is_zero()) continue;
        bool negative = c.is_negative();
        Rational mag = negative ? -c : c;
        Expr term = mag.is_one() ? factor : Expr::constant(mag) * factor;
        if (!started) {
            acc = negative ? -term : term;
            started = true;
        } else {
            acc = negative ? acc - term : acc + term;
        }
    }
    if (!started) return Expr::constant(0);
    return acc;
}

/// 1/2 * sum_{i<=j} coeff_ij x_i x_j  with coeff_ij = s_ij (i==j) or 2 s_ij,
/// squares written as powers.
Expr half_square_form(const std::vector<std::vector<Rational>>& s, const std::vector<Expr>& x) {
    const int n = static_cast<int>(s.size());
    std::vector<std::pair<Rational, Expr>> terms;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Rational c = s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (i != j) c = c * Rational(2);
            if (c.is_zero()) continue;
            Expr factor = (i == j) ? Expr::pow(x[static_cast<std::size_t>(i)], 2)
                                   : x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
            terms.emplace_back(c, factor);
        }
    return Expr::constant(Rational(1, 2)) * linear_combination(terms);
}

} // namespace

HamiltonianBuild build_hamiltonian(const HamiltonianSpec& spec,
                                   std::pair<double, double> domain) {
    const int n = spec.n();
    if (n <= 0) throw std::invalid_argument("empty Hamiltonian spec");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (spec.eta[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] !=
                spec.eta[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
                throw std::invalid_argument("eta must be symmetric");
    std::vector<std::vector<Rational>> eta_inv = rational_inverse(spec.eta);

    std::vector<Expr> vars, grad_h;
    for (int i = 0; i < n; ++i) {
        vars.push_back(Expr::variable(i));
        grad_h.push_back(spec.h.differentiate(i));
    }

    // f^i = sum_j eta_ij h_j
    std::vector<Expr> fluxes;
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<Rational, Expr>> terms;
        for (int j = 0; j < n; ++j)
            terms.emplace_back(spec.eta[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                               grad_h[static_cast<std::size_t>(j)]);
        fluxes.push_back(linear_combination(terms));
    }

    ParametricSystem system =
        ParametricSystem::primal("hamiltonian", n, fluxes, domain);

    std::vector<ConservationLaw> laws;
    for (int i = 0; i < n; ++i)
        laws.emplace_back("u" + std::to_string(i + 1), vars[static_cast<std::size_t>(i)],
                          fluxes[static_cast<std::size_t>(i)], n);

    // quadratic law: 1/2 u.eta^-1 u | u.grad h - h
    Expr quad_density = half_square_form(eta_inv, vars);
    std::vector<std::pair<Rational, Expr>> euler_terms;
    for (int i = 0; i < n; ++i)
        euler_terms.emplace_back(Rational(1),
                                 vars[static_cast<std::size_t>(i)] * grad_h[static_cast<std::size_t>(i)]);
    Expr quad_flux = linear_combination(euler_terms) - spec.h;
    laws.emplace_back("quadratic", quad_density, quad_flux, n);

    // h law: h | 1/2 grad h . eta grad h
    Expr h_flux = half_square_form(spec.eta, grad_h);
    laws.emplace_back("hamiltonian", spec.h, h_flux, n);

    LawPair pair{laws[static_cast<std::size_t>(n)], laws[static_cast<std::size_t>(n + 1)]};
    return HamiltonianBuild{std::move(system), std::move(laws), std::move(pair),
                            std::move(eta_inv)};
}

// ---------------------------------------------------------------------------
// Quadric form
// ---------------------------------------------------------------------------

QuadricForm::QuadricForm(const Eigen::MatrixXd& eta_inv) {
    const Eigen::Index n = eta_inv.rows();
    g_ = Eigen::MatrixXd::Zero(n + 4, n + 4);
    g_.block(1, 1, n, n) = eta_inv;
    g_(0, n + 1) = -1.0;
    g_(n + 1, 0) = -1.0;
    g_(n + 2, n + 3) = -1.0;
    g_(n + 3, n + 2) = -1.0;
}

bool QuadricForm::nondegenerate(double tol) const {
    return std::abs(g_.determinant()) > tol;
}

QuadricMembershipReport quadric_membership(const ParametricSystem& sys, const LawPair& pair,
                                           const Eigen::MatrixXd& eta_inv,
                                           const std::vector<Eigen::VectorXd>& points,
                                           double tol) {
    QuadricForm form(eta_inv);
    const double form_scale = std::max(1.0, eta_inv.cwiseAbs().maxCoeff());

    QuadricMembershipReport report;
    report.tolerance = tol;
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        GeneratorFrame fr = generator_frame(sys, pair, u);
        double np = fr.p.norm(), nr = fr.r.norm();
        double pp = std::abs(form(fr.p, fr.p)) / (np * np * form_scale);
        double rr = std::abs(form(fr.r, fr.r)) / (nr * nr * form_scale);
        double pr = std::abs(form(fr.p, fr.r)) / (np * nr * form_scale);
        double res = std::max({pp, rr, pr});
        report.per_point.push_back({static_cast<int>(idx), res});
        report.max_residual = std::max(report.max_residual, res);
    }
    report.pass = report.max_residual <= tol;
    return report;
}

LegendreReport legendre_check(const ParametricSystem& sys, const LawPair& pair,
                              const Eigen::MatrixXd& eta_inv,
                              const std::vector<Eigen::VectorXd>& points,
                              const std::vector<Eigen::VectorXd>& directions, double tol) {
    QuadricForm form(eta_inv);
    const double form_scale = std::max(1.0, eta_inv.cwiseAbs().maxCoeff());
    const int n = sys.n();

    std::vector<Eigen::VectorXd> dirs = directions;
    if (dirs.empty())
        for (int i = 0; i < n; ++i) dirs.push_back(Eigen::VectorXd::Unit(n, i));

    LegendreReport report;
    report.tolerance = tol;
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        GeneratorFrame fr = generator_frame(sys, pair, u);
        double worst = 0.0;
        for (const auto& d : dirs) {
            Eigen::VectorXd tangent = fr.dp.transpose() * d;
            double denom = fr.r.norm() * std::max(tangent.norm(), 1e-300) * form_scale;
            worst = std::max(worst, std::abs(form(fr.r, tangent)) / denom);
        }
        report.per_point.push_back({static_cast<int>(idx), worst});
        report.max_residual = std::max(report.max_residual, worst);
    }
    report.pass = report.max_residual <= tol;
    return report;
}

AutodualityReport autoduality_check(const ParametricSystem& sys, const LawPair& pair,
                                    const Eigen::MatrixXd& eta,
                                    const std::vector<Eigen::VectorXd>& points, double tol) {
    const int n = sys.n();
    AutodualityReport report;
    report.tolerance = tol;

    auto substitute = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(n + 4);
        y[0] = z[n + 1];
        y[n + 1] = z[0];
        y[n + 2] = z[n + 3];
        y[n + 3] = z[n + 2];
        y.segment(1, n) = -eta * z.segment(1, n);
        return y;
    };

    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        GeneratorFrame fr = generator_frame(sys, pair, u);
        auto [pt, rt] = dual_generators(sys, pair, u);

        Eigen::MatrixXd span_a(n + 4, 2), span_b(n + 4, 2);
        span_a.col(0) = fr.p;
        span_a.col(1) = fr.r;
        span_b.col(0) = substitute(pt);
        span_b.col(1) = substitute(rt);
        double angle = principal_angles(span_a, span_b).front();
        report.per_point.push_back({static_cast<int>(idx), angle});
        report.max_angle = std::max(report.max_angle, angle);
    }
    report.pass = report.max_angle <= tol;
    return report;
}

} // namespace claw
