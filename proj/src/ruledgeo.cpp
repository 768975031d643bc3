#include "claw/ruledgeo.hpp"

#include <cmath>
#include <map>

namespace claw {

void normalize_projective(Eigen::VectorXd& y, double zero_tol) {
    double m = y.cwiseAbs().maxCoeff();
    if (m <= zero_tol) throw std::invalid_argument("zero homogeneous vector");
    y /= m;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0) {
            if (y[i] < 0) y = -y;
            break;
        }
    }
}

double projective_angle_sin(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return direction_angle_sin(x, y);
}

// ---------------------------------------------------------------------------
// Generator frame
// ---------------------------------------------------------------------------

GeneratorFrame generator_frame(const ParametricSystem& sys, const LawPair& pair,
                               std::span<const double> u) {
    const int n = sys.n();
    const int dim = n + 4;
    ExprEvaluator ev(u);

    GeneratorFrame fr;
    fr.p = Eigen::VectorXd::Zero(dim);
    fr.r = Eigen::VectorXd::Zero(dim);
    fr.dp = Eigen::MatrixXd::Zero(n, dim);
    fr.dr = Eigen::MatrixXd::Zero(n, dim);

    fr.p[0] = 1.0;
    fr.r[dim - 1] = 1.0;
    for (int j = 0; j < n; ++j) {
        fr.p[1 + j] = ev.value(sys.densities()[static_cast<std::size_t>(j)]);
        fr.r[1 + j] = ev.value(sys.fluxes()[static_cast<std::size_t>(j)]);
    }
    fr.p[n + 1] = ev.value(pair.first.density);
    fr.p[n + 2] = ev.value(pair.second.density);
    fr.r[n + 1] = ev.value(pair.first.flux);
    fr.r[n + 2] = ev.value(pair.second.flux);

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            fr.dp(i, 1 + j) =
                ev.value(sys.density_jacobian_exprs()[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
            fr.dr(i, 1 + j) =
                ev.value(sys.flux_jacobian_exprs()[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
        }
        fr.dp(i, n + 1) = ev.value(pair.first.density_grad[static_cast<std::size_t>(i)]);
        fr.dp(i, n + 2) = ev.value(pair.second.density_grad[static_cast<std::size_t>(i)]);
        fr.dr(i, n + 1) = ev.value(pair.first.flux_grad[static_cast<std::size_t>(i)]);
        fr.dr(i, n + 2) = ev.value(pair.second.flux_grad[static_cast<std::size_t>(i)]);
    }
    return fr;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
generator_points(const ParametricSystem& sys, const LawPair& pair, std::span<const double> u) {
    GeneratorFrame fr = generator_frame(sys, pair, u);
    normalize_projective(fr.p);
    normalize_projective(fr.r);
    return {fr.p, fr.r};
}

// ---------------------------------------------------------------------------
// Tangent stability
// ---------------------------------------------------------------------------

TangentStabilityReport tangent_stability(const ParametricSystem& sys, const LawPair& pair,
                                         const std::vector<Eigen::VectorXd>& points,
                                         double tol) {
    const int n = sys.n();
    TangentStabilityReport report;
    report.tolerance = tol;
    report.nondegenerate = true;

    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        GeneratorFrame fr = generator_frame(sys, pair, u);

        Eigen::MatrixXd tangent(n + 2, n + 4);
        tangent.row(0) = fr.p.transpose() / fr.p.norm();
        tangent.row(1) = fr.r.transpose() / fr.r.norm();
        for (int i = 0; i < n; ++i) {
            double norm = fr.dp.row(i).norm();
            tangent.row(2 + i) = fr.dp.row(i);
            if (norm > 0) tangent.row(2 + i) /= norm;
        }

        int rank = numerical_rank(tangent.transpose(), 1e-9);
        if (rank < n + 2)
            throw DegenerateHypersurface(
                "tangent frame rank " + std::to_string(rank) + " < n+2 at sample point " +
                std::to_string(idx) + " (laws not independent)");

        // Orthonormal basis of the row space, then project each d_i r.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(tangent.transpose());
        Eigen::MatrixXd q =
            qr.householderQ() * Eigen::MatrixXd::Identity(n + 4, n + 2);
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd v = fr.dr.row(i).transpose();
            double norm = v.norm();
            if (norm == 0.0) continue;
            Eigen::VectorXd res = v - q * (q.transpose() * v);
            worst = std::max(worst, res.norm() / norm);
        }

        report.per_point.push_back({static_cast<int>(idx), rank, worst});
        report.max_residual = std::max(report.max_residual, worst);
    }
    report.pass = report.max_residual <= tol && report.nondegenerate;
    return report;
}

// ---------------------------------------------------------------------------
// Focal submanifolds
// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd> focal_points(const ParametricSystem& sys, const LawPair& pair,
                                          std::span<const double> u) {
    GeneratorFrame fr = generator_frame(sys, pair, u);
    CharFieldSet fields = characteristic_fields(sys, u);
    std::vector<Eigen::VectorXd> out;
    for (const auto& f : fields.fields) {
        // Finite speeds are returned in the chart normalized against the
        // last slot, [-lambda : F - lambda U : A - lambda B : M - lambda N : 1];
        // at infinite speed the speed-safe form [-a : bF-aU : ... : b] is
        // normalized projectively instead.
        Eigen::VectorXd y = f.speed.b * fr.r - f.speed.a * fr.p;
        if (!f.speed.is_infinite())
            y /= f.speed.b;
        else
            normalize_projective(y);
        out.push_back(std::move(y));
    }
    return out;
}

FocalHyperplaneReport focal_hyperplane(const ParametricSystem& sys, const LawPair& pair,
                                       int family, const std::vector<Eigen::VectorXd>& points,
                                       double tol) {
    const int n = sys.n();
    if (static_cast<int>(points.size()) < n + 5)
        throw DegenerateInput("focal_hyperplane: need at least n+5 sample points");
    if (family < 0 || family >= n) throw std::out_of_range("focal_hyperplane: bad family");

    std::vector<Eigen::VectorXd> samples;
    for (const auto& pt : points) {
        std::span<const double> u(pt.data(), static_cast<std::size_t>(pt.size()));
        samples.push_back(focal_points(sys, pair, u)[static_cast<std::size_t>(family)]);
    }
    HyperplaneFit fit = fit_hyperplane(samples, 1e-9);

    FocalHyperplaneReport report;
    report.family = family;
    report.coefficients = fit.coefficients;
    report.residual = fit.residual;
    report.tolerance = tol;
    report.pass = fit.residual <= tol;
    return report;
}

// ---------------------------------------------------------------------------
// Dual generators (numeric)
// ---------------------------------------------------------------------------

namespace {

Eigen::RowVectorXd numeric_field_gradient(const ParametricSystem& sys,
                                          const Eigen::RowVectorXd& grad_u,
                                          std::span<const double> u) {
    if (sys.is_primal()) return grad_u;
    Eigen::MatrixXd jac_u = sys.density_jacobian(u);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac_u);
    if (!lu.isInvertible())
        throw SingularJacobian("density Jacobian singular at requested point");
    return grad_u * lu.inverse();
}

Eigen::VectorXd dual_point(const Eigen::RowVectorXd& g, const Eigen::VectorXd& uvals,
                           const Eigen::VectorXd& fvals, double value_dens, double value_flux,
                           bool first_slot_one) {
    const Eigen::Index n = g.size();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n + 4);
    z[0] = uvals.dot(g.transpose()) - value_dens;
    for (Eigen::Index j = 0; j < n; ++j) z[1 + j] = -g[j];
    z[n + 1] = first_slot_one ? 1.0 : 0.0;
    z[n + 2] = first_slot_one ? 0.0 : 1.0;
    z[n + 3] = fvals.dot(g.transpose()) - value_flux;
    return z;
}

} // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd>
dual_generators(const ParametricSystem& sys, const LawPair& pair, std::span<const double> u) {
    Eigen::VectorXd uvals = sys.eval_densities(u);
    Eigen::VectorXd fvals = sys.eval_fluxes(u);
    ExprEvaluator ev(u);
    double b_val = ev.value(pair.first.density);
    double a_val = ev.value(pair.first.flux);
    double n_val = ev.value(pair.second.density);
    double m_val = ev.value(pair.second.flux);

    Eigen::RowVectorXd gb = numeric_field_gradient(sys, pair.first.grad_density(u), u);
    Eigen::RowVectorXd gn = numeric_field_gradient(sys, pair.second.grad_density(u), u);

    Eigen::VectorXd pt = dual_point(gb, uvals, fvals, b_val, a_val, true);
    Eigen::VectorXd rt = dual_point(gn, uvals, fvals, n_val, m_val, false);
    return {pt, rt};
}

double incidence_residual(const ParametricSystem& sys, const LawPair& pair,
                          std::span<const double> u) {
    GeneratorFrame fr = generator_frame(sys, pair, u);
    auto [pt, rt] = dual_generators(sys, pair, u);
    double worst = 0.0;
    auto probe = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
        double r = std::abs(z.dot(y)) / (z.norm() * y.norm());
        worst = std::max(worst, r);
    };
    probe(pt, fr.p);
    probe(pt, fr.r);
    probe(rt, fr.p);
    probe(rt, fr.r);
    for (int i = 0; i < sys.n(); ++i) {
        probe(pt, fr.dp.row(i).transpose());
        probe(rt, fr.dp.row(i).transpose());
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Symbolic determinant / field gradients
// ---------------------------------------------------------------------------

namespace {

// Laplace expansion over column subsets (memoized), so the minors are shared
// subtrees of the resulting DAG.
class DetBuilder {
  public:
    explicit DetBuilder(const std::vector<std::vector<Expr>>& m)
        : m_(m), n_(static_cast<int>(m.size())) {}

    /// Determinant of the submatrix skipping row `skip_row` (-1 for none)
    /// and using the columns of `mask`, rows in increasing order.
    Expr submatrix_det(int skip_row, unsigned mask) {
        skip_row_ = skip_row;
        cache_.clear();
        return minor_det(0, mask);
    }

  private:
    Expr minor_det(int row, unsigned mask) {
        if (row == skip_row_) return minor_det(row + 1, mask);
        if (mask == 0) return Expr::constant(1);
        auto key = std::make_pair(row, mask);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        Expr acc = Expr::constant(0);
        bool started = false;
        int sign = 1;
        for (int col = 0; col < n_; ++col) {
            if (!(mask & (1u << col))) continue;
            Expr sub = minor_det(next_row(row), mask & ~(1u << col));
            Expr term = m_[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] * sub;
            if (!started) {
                acc = sign > 0 ? term : -term;
                started = true;
            } else {
                acc = sign > 0 ? acc + term : acc - term;
            }
            sign = -sign;
        }
        cache_.emplace(key, acc);
        return acc;
    }

    int next_row(int row) const {
        int r = row + 1;
        if (r == skip_row_) ++r;
        return r;
    }

    const std::vector<std::vector<Expr>>& m_;
    int n_;
    int skip_row_ = -1;
    std::map<std::pair<int, unsigned>, Expr> cache_;
};

} // namespace

Expr symbolic_determinant(const std::vector<std::vector<Expr>>& m) {
    if (m.empty()) return Expr::constant(1);
    if (m.size() > 8) throw std::invalid_argument("symbolic determinant limited to n <= 8");
    DetBuilder b(m);
    return b.submatrix_det(-1, (1u << m.size()) - 1u);
}

std::vector<Expr> symbolic_field_gradient(const ParametricSystem& sys,
                                          const std::vector<Expr>& grad) {
    if (sys.is_primal()) return grad;
    const int n = sys.n();
    const auto& ju = sys.density_jacobian_exprs(); // ju[i][j] = dU^i/du_j

    DetBuilder builder(ju);
    Expr det = builder.submatrix_det(-1, (1u << n) - 1u);

    // adj(J)[k][j] = cofactor C_{j,k} = (-1)^{j+k} det(J minus row j, col k).
    // Field gradient: g_j = (sum_k grad_k adj[k][j]) / det
    //               = (sum_k grad_k C_{j,k}) / det.
    std::vector<Expr> out;
    for (int j = 0; j < n; ++j) {
        Expr acc = Expr::constant(0);
        bool started = false;
        for (int k = 0; k < n; ++k) {
            Expr minor = builder.submatrix_det(j, ((1u << n) - 1u) & ~(1u << k));
            bool negative = ((j + k) % 2) != 0;
            Expr term = grad[static_cast<std::size_t>(k)] * minor;
            if (!started) {
                acc = negative ? -term : term;
                started = true;
            } else {
                acc = negative ? acc - term : acc + term;
            }
        }
        out.push_back(acc / det);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dual system
// ---------------------------------------------------------------------------

FiniteRepresentative finite_speed_representative(const ParametricSystem& sys,
                                                 const LawPair& pair,
                                                 const std::vector<Eigen::VectorXd>& points) {
    bool has_infinite = false;
    for (const auto& p : points) {
        std::span<const double> u(p.data(), static_cast<std::size_t>(p.size()));
        CharFieldSet fields = characteristic_fields(sys, u);
        for (const auto& f : fields.fields)
            if (f.speed.is_infinite(1e-9)) has_infinite = true;
        if (has_infinite) break;
    }
    if (!has_infinite) return FiniteRepresentative{sys, pair, false};

    // dX' = dT, dT' = dX + dT over the system's own independent variables.
    std::vector<Rational> row_x = {Rational(0), Rational(1)};
    std::vector<Rational> row_t = {Rational(1), Rational(1)};
    ReciprocalTransform rot = reciprocal_transform(sys, {}, row_x, row_t, points);
    LawPair rot_pair{rot.map_law(pair.first), rot.map_law(pair.second)};
    return FiniteRepresentative{std::move(rot.system), std::move(rot_pair), true};
}

DualSystemResult dual_system(const ParametricSystem& sys_in, const LawPair& pair_in,
                             const std::vector<Eigen::VectorXd>& points) {
    FiniteRepresentative rep = finite_speed_representative(sys_in, pair_in, points);
    const ParametricSystem& sys = rep.system;
    const LawPair& pair = rep.pair;
    const int n = sys.n();

    std::vector<Expr> gb = symbolic_field_gradient(sys, pair.first.density_grad);
    std::vector<Expr> gn = symbolic_field_gradient(sys, pair.second.density_grad);

    std::vector<Expr> dual_dens, dual_flux;
    for (int j = 0; j < n; ++j) {
        dual_dens.push_back(-gb[static_cast<std::size_t>(j)]);
        dual_flux.push_back(-gn[static_cast<std::size_t>(j)]);
    }

    auto contract = [&](const std::vector<Expr>& vec, const std::vector<Expr>& g) {
        Expr acc = vec[0] * g[0];
        for (int k = 1; k < n; ++k)
            acc = acc + vec[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
        return acc;
    };

    Expr b_hat = contract(sys.densities(), gb) - pair.first.density;
    Expr a_hat = contract(sys.densities(), gn) - pair.second.density;
    Expr n_hat = contract(sys.fluxes(), gb) - pair.first.flux;
    Expr m_hat = contract(sys.fluxes(), gn) - pair.second.flux;

    ParametricSystem dual(sys.name() + "_dual", std::move(dual_dens), std::move(dual_flux),
                          Provenance::Dual, sys.domain());

    // The construction needs the field Hessian of B invertible; equivalently
    // the dual density Jacobian -d(gB)/du must be invertible at the samples.
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        Eigen::FullPivLU<Eigen::MatrixXd> lu(dual.density_jacobian(u));
        if (!lu.isInvertible())
            throw DualUndefined("field Hessian of the first pair law is singular at point " +
                                std::to_string(idx));
    }

    LawPair dual_pair{ConservationLaw(pair.first.name + "_dual", b_hat, a_hat, n),
                      ConservationLaw(pair.second.name + "_dual", n_hat, m_hat, n)};
    return DualSystemResult{std::move(dual), std::move(dual_pair), rep.rotated};
}

std::vector<std::vector<Rational>>
transform_row_matrix(int n, const std::vector<Rational>& row_x,
                     const std::vector<Rational>& row_t,
                     const std::vector<LawRef>& carrier_refs, const LawRef& pair_first,
                     const LawRef& pair_second) {
    const std::size_t dim = static_cast<std::size_t>(n) + 4;
    if (row_x.size() != static_cast<std::size_t>(n) + 2 ||
        row_t.size() != static_cast<std::size_t>(n) + 2)
        throw std::invalid_argument("transform_row_matrix: rows must have n+2 entries");
    if (carrier_refs.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("transform_row_matrix: need n carrier references");

    // Base potential columns: [dx, dq^1..dq^n, dq_B, dq_N, dt].
    auto const_row = [&](const std::vector<Rational>& row) {
        std::vector<Rational> out(dim, Rational(0));
        out[0] = row[static_cast<std::size_t>(n)];       // dx coefficient
        out[dim - 1] = row[static_cast<std::size_t>(n) + 1]; // dt coefficient
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(1 + i)] = row[static_cast<std::size_t>(i)];
        return out;
    };
    auto ref_row = [&](const LawRef& ref) {
        std::vector<Rational> out(dim, Rational(0));
        switch (ref.kind) {
            case LawRef::Kind::Canonical: out[static_cast<std::size_t>(1 + ref.index)] = Rational(1); break;
            case LawRef::Kind::Extra:
                if (ref.index < 0 || ref.index > 1)
                    throw std::invalid_argument("transform_row_matrix: extra laws must be the base pair");
                out[static_cast<std::size_t>(n + 1 + ref.index)] = Rational(1);
                break;
            case LawRef::Kind::TrivialX: out[0] = Rational(1); break;
            case LawRef::Kind::TrivialT: out[dim - 1] = Rational(1); break;
        }
        return out;
    };

    std::vector<std::vector<Rational>> rows;
    rows.push_back(const_row(row_x));
    for (const auto& ref : carrier_refs) rows.push_back(ref_row(ref));
    rows.push_back(ref_row(pair_first));
    rows.push_back(ref_row(pair_second));
    rows.push_back(const_row(row_t));
    return rows;
}

std::pair<LawRef, LawRef> pick_transformed_pair(int n,
                                                const std::vector<LawRef>& carrier_refs) {
    auto used = [&](const LawRef& ref) {
        for (const auto& c : carrier_refs)
            if (c.kind == ref.kind && c.index == ref.index) return true;
        return false;
    };
    std::vector<LawRef> prefs = {{LawRef::Kind::Extra, 0},
                                 {LawRef::Kind::Extra, 1},
                                 {LawRef::Kind::TrivialX, 0},
                                 {LawRef::Kind::TrivialT, 0}};
    for (int i = 0; i < n; ++i) prefs.push_back({LawRef::Kind::Canonical, i});

    std::vector<LawRef> picked;
    for (const auto& ref : prefs) {
        if (used(ref)) continue;
        picked.push_back(ref);
        if (picked.size() == 2) break;
    }
    if (picked.size() != 2)
        throw std::invalid_argument("pick_transformed_pair: no independent pair available");
    return {picked[0], picked[1]};
}

DualSystemResult dual_system_via_base(const ParametricSystem& base, const LawPair& base_pair,
                                      const std::vector<std::vector<Rational>>& transform_rows,
                                      const std::vector<Eigen::VectorXd>& points) {
    const int n = base.n();
    const std::size_t dim = static_cast<std::size_t>(n) + 4;
    if (transform_rows.size() != dim)
        throw std::invalid_argument("dual_system_via_base: need n+4 transform rows");
    for (const auto& row : transform_rows)
        if (row.size() != dim)
            throw std::invalid_argument("dual_system_via_base: rows must have n+4 entries");

    // Dual coordinates transform by the inverse transpose of the potential map.
    std::vector<std::vector<Rational>> linv = rational_inverse(transform_rows);

    DualSystemResult bd = dual_system(base, base_pair, points);

    // Symbolic dual generators of the base in its own dual coordinates.
    std::vector<Expr> pt_b(dim), rt_b(dim);
    pt_b[0] = bd.pair.first.density;
    rt_b[0] = bd.pair.first.flux;
    for (int i = 0; i < n; ++i) {
        pt_b[static_cast<std::size_t>(1 + i)] = bd.system.densities()[static_cast<std::size_t>(i)];
        rt_b[static_cast<std::size_t>(1 + i)] = bd.system.fluxes()[static_cast<std::size_t>(i)];
    }
    pt_b[static_cast<std::size_t>(n + 1)] = Expr::constant(1);
    rt_b[static_cast<std::size_t>(n + 1)] = Expr::constant(0);
    pt_b[static_cast<std::size_t>(n + 2)] = Expr::constant(0);
    rt_b[static_cast<std::size_t>(n + 2)] = Expr::constant(1);
    pt_b[static_cast<std::size_t>(n + 3)] = bd.pair.second.density;
    rt_b[static_cast<std::size_t>(n + 3)] = bd.pair.second.flux;

    // Z' = L^{-T} Z, i.e. Z'_i = sum_j linv[j][i] Z_j.
    auto map_vector = [&](const std::vector<Expr>& z) {
        std::vector<Expr> out(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            Expr acc = Expr::constant(0);
            bool started = false;
            for (std::size_t j = 0; j < dim; ++j) {
                const Rational& c = linv[j][i];
                if (c.is_zero()) continue;
                Expr term = c.is_one() ? z[j] : Expr::constant(c) * z[j];
                if (!started) {
                    acc = (c == Rational(-1)) ? -z[j] : term;
                    started = true;
                } else {
                    acc = (c == Rational(-1)) ? acc - z[j] : acc + term;
                }
            }
            out[i] = acc;
        }
        return out;
    };
    std::vector<Expr> zp = map_vector(pt_b);
    std::vector<Expr> zr = map_vector(rt_b);

    // Renormalize the generator plane so the pair slots carry (1,0) / (0,1).
    const std::size_t s1 = static_cast<std::size_t>(n + 1);
    const std::size_t s2 = static_cast<std::size_t>(n + 2);
    Expr det = zp[s1] * zr[s2] - zr[s1] * zp[s2];
    for (const auto& p : points) {
        std::span<const double> u(p.data(), static_cast<std::size_t>(p.size()));
        if (std::abs(det.evaluate(u)) < 1e-12)
            throw DualUndefined("transformed dual generators cannot be normalized on the "
                                "pair slots at a sample point");
    }

    std::vector<Expr> pt_t(dim), rt_t(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        pt_t[i] = (zr[s2] * zp[i] - zp[s2] * zr[i]) / det;
        rt_t[i] = (zp[s1] * zr[i] - zr[s1] * zp[i]) / det;
    }

    std::vector<Expr> dens, flux;
    for (int i = 0; i < n; ++i) {
        dens.push_back(pt_t[static_cast<std::size_t>(1 + i)]);
        flux.push_back(rt_t[static_cast<std::size_t>(1 + i)]);
    }
    ParametricSystem dual(base.name() + "_transformed_dual", std::move(dens), std::move(flux),
                          Provenance::Dual, base.domain());

    LawPair dual_pair{
        ConservationLaw(base_pair.first.name + "_dual", pt_t[0], rt_t[0], n),
        ConservationLaw(base_pair.second.name + "_dual", pt_t[static_cast<std::size_t>(n + 3)],
                        rt_t[static_cast<std::size_t>(n + 3)], n)};
    return DualSystemResult{std::move(dual), std::move(dual_pair), false};
}

// ---------------------------------------------------------------------------
// Biduality and shared characteristic fields
// ---------------------------------------------------------------------------

BidualityReport biduality_check(const ParametricSystem& sys_in, const LawPair& pair_in,
                                const std::vector<Eigen::VectorXd>& points, double tol) {
    // Resolve the finite-speed representative once, so the double dual is
    // compared against the frame it was actually built from.
    FiniteRepresentative rep = finite_speed_representative(sys_in, pair_in, points);
    const ParametricSystem& sys = rep.system;
    const LawPair& pair = rep.pair;

    DualSystemResult dual = dual_system(sys, pair, points);
    DualSystemResult ddual = dual_system(dual.system, dual.pair, points);

    BidualityReport report;
    report.tolerance = tol;
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        GeneratorFrame orig = generator_frame(sys, pair, u);
        GeneratorFrame dd = generator_frame(ddual.system, ddual.pair, u);

        Eigen::MatrixXd span_a(orig.p.size(), 2), span_b(orig.p.size(), 2);
        span_a.col(0) = orig.p;
        span_a.col(1) = orig.r;
        span_b.col(0) = dd.p;
        span_b.col(1) = dd.r;
        double angle = principal_angles(span_a, span_b).front();
        report.per_point.push_back({static_cast<int>(idx), angle});
        report.max_angle = std::max(report.max_angle, angle);
    }
    report.pass = report.max_angle <= tol;
    return report;
}

SharedFieldsReport shared_char_fields_check(const ParametricSystem& sys,
                                            const ParametricSystem& dual,
                                            const std::vector<Eigen::VectorXd>& points,
                                            double angle_tol, double structure_tol) {
    SharedFieldsReport report;
    report.angle_tolerance = angle_tol;
    report.structure_tolerance = structure_tol;

    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        std::span<const double> u(points[idx].data(),
                                  static_cast<std::size_t>(points[idx].size()));
        CharFieldSet fa = characteristic_fields(sys, u);
        CharFieldSet fb = characteristic_fields(dual, u);
        auto match = match_fields(fa, fb);

        double worst_angle = 0.0;
        for (int a = 0; a < sys.n(); ++a) {
            double s = direction_angle_sin(
                fa.fields[static_cast<std::size_t>(a)].xi,
                fb.fields[static_cast<std::size_t>(match[static_cast<std::size_t>(a)].first)].xi);
            worst_angle = std::max(worst_angle, s);
        }

        StructureCoefficients ca = structure_coefficients(sys, u);
        StructureCoefficients cb = structure_coefficients(dual, u);
        double worst_struct = 0.0;
        for (int a = 0; a < sys.n(); ++a) {
            int pa = match[static_cast<std::size_t>(a)].first;
            for (int i = 0; i < sys.n(); ++i)
                for (int j = 0; j < sys.n(); ++j) {
                    int pi = match[static_cast<std::size_t>(i)].first;
                    int pj = match[static_cast<std::size_t>(j)].first;
                    double diff = std::abs(ca.c[static_cast<std::size_t>(a)](i, j) -
                                           cb.c[static_cast<std::size_t>(pa)](pi, pj));
                    worst_struct = std::max(worst_struct, diff);
                }
        }

        report.per_point.push_back({static_cast<int>(idx), worst_angle, worst_struct});
        report.max_angle_sin = std::max(report.max_angle_sin, worst_angle);
        report.max_structure_diff = std::max(report.max_structure_diff, worst_struct);
    }
    report.pass =
        report.max_angle_sin <= angle_tol && report.max_structure_diff <= structure_tol;
    return report;
}

} // namespace claw
