#include "claw/numkit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace claw {

ProjectiveValue::ProjectiveValue(double a_in, double b_in) : a(a_in), b(b_in) {
    double m = std::max(std::abs(a), std::abs(b));
    if (m == 0.0) throw std::invalid_argument("projective value (0,0)");
    a /= m;
    b /= m;
    double lead = std::abs(a) > 0 ? a : b;
    if (lead < 0) {
        a = -a;
        b = -b;
    }
    if (a == 0.0) a = 0.0; // normalize -0
    if (b == 0.0) b = 0.0;
}

std::string ProjectiveValue::str() const {
    if (is_infinite()) return "inf";
    std::ostringstream ss;
    ss << value();
    return ss.str();
}

double apply_sign_convention(Eigen::VectorXd& v) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            imax = i;
        }
    }
    double s = v[imax] < 0 ? -1.0 : 1.0;
    v *= s;
    return s;
}

Spectrum eigen(const Eigen::MatrixXd& m, double gap_tol) {
    const Eigen::Index n = m.rows();
    if (n != m.cols()) throw std::invalid_argument("eigen: matrix must be square");
    const double scale = m.norm();

    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success)
        throw NotStrictlyHyperbolic("eigen-decomposition failed to converge");

    std::vector<std::pair<double, Eigen::Index>> order;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::complex<double> ev = solver.eigenvalues()[i];
        if (std::abs(ev.imag()) > gap_tol * std::max(scale, 1e-300))
            throw NotStrictlyHyperbolic("complex eigenvalue pair");
        order.emplace_back(ev.real(), i);
    }
    std::sort(order.begin(), order.end(),
              [](const auto& x, const auto& y) { return x.first > y.first; });
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        if (order[i].first - order[i + 1].first < gap_tol * scale)
            throw NotStrictlyHyperbolic("repeated eigenvalue (gap below tolerance)");

    Eigen::MatrixXd right(n, n);
    Spectrum spec;
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd v = solver.eigenvectors().col(order[k].second).real();
        v.normalize();
        apply_sign_convention(v);
        right.col(k) = v;
    }
    Eigen::MatrixXd left = right.inverse(); // rows pair with right columns
    for (Eigen::Index k = 0; k < n; ++k)
        spec.pairs.push_back({order[k].first, right.col(k), left.row(k)});
    return spec;
}

std::vector<std::pair<ProjectiveValue, Eigen::VectorXd>>
pencil_eigs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gap_tol) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || b.rows() != n || b.cols() != n)
        throw std::invalid_argument("pencil_eigs: matrices must be square, same size");
    const double scale = std::max(a.norm(), b.norm());

    // Regularity probe: det(cos(t) A - sin(t) B) at fixed angles.
    bool regular = false;
    for (int k = 0; k < 8 && !regular; ++k) {
        double t = 0.37 + k * 0.41;
        double d = (std::cos(t) * a - std::sin(t) * b).determinant();
        if (std::abs(d) > 1e-12 * std::pow(std::max(scale, 1e-300), double(n))) regular = true;
    }
    if (!regular) throw SingularPencil("pencil det(aA - bB) vanishes identically");

    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(a, b, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw SingularPencil("QZ iteration failed to converge");

    std::vector<ProjectiveValue> roots;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::complex<double> alpha = solver.alphas()[i];
        double beta = solver.betas()[i];
        double mag = std::max(std::abs(alpha), std::abs(beta));
        if (std::abs(alpha.imag()) > gap_tol * std::max(mag, 1e-300))
            throw NotStrictlyHyperbolic("complex projective root of pencil");
        roots.emplace_back(alpha.real(), beta);
    }
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (ProjectiveValue::angular_gap(roots[i], roots[j]) < gap_tol)
                throw NotStrictlyHyperbolic("clustered projective roots of pencil");

    std::sort(roots.begin(), roots.end(), ProjectiveValue::descending);

    std::vector<std::pair<ProjectiveValue, Eigen::VectorXd>> out;
    for (const auto& r : roots) {
        Eigen::MatrixXd pencil = r.b * a - r.a * b;
        Eigen::MatrixXd ns = nullspace(pencil, 1e-8);
        Eigen::VectorXd v;
        if (ns.cols() == 0) {
            // Fall back to the smallest singular direction.
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(pencil, Eigen::ComputeFullV);
            v = svd.matrixV().col(n - 1);
        } else {
            v = ns.col(0);
        }
        v.normalize();
        apply_sign_convention(v);
        out.emplace_back(r, v);
    }
    return out;
}

Eigen::MatrixXd nullspace(const Eigen::MatrixXd& m, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const Eigen::Index cols = m.cols();
    const Eigen::Index rank_max = std::min(m.rows(), cols);
    double smax = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < rank_max; ++i)
        if (svd.singularValues()[i] > tol * smax) ++rank;
    if (smax == 0.0) rank = 0;
    return svd.matrixV().rightCols(cols - rank);
}

int numerical_rank(const Eigen::MatrixXd& m, double tol) {
    return static_cast<int>(m.cols() - nullspace(m, tol).cols());
}

HyperplaneFit fit_hyperplane(const std::vector<Eigen::VectorXd>& points, double tol) {
    if (points.empty()) throw DegenerateInput("fit_hyperplane: no points");
    const Eigen::Index dim = points.front().size();
    if (static_cast<Eigen::Index>(points.size()) < dim)
        throw DegenerateInput("fit_hyperplane: need at least dim points");

    // The least-squares direction is taken for the point matrix as given;
    // callers choose the per-point scale (the chart normalization of focal
    // points is part of the fit's meaning).
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), dim);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].cwiseAbs().maxCoeff() == 0.0)
            throw DegenerateInput("fit_hyperplane: zero point");
        m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    double smax = svd.singularValues()[0];
    if (smax == 0.0) throw DegenerateInput("fit_hyperplane: all points zero");
    Eigen::Index nullity = 0;
    for (Eigen::Index i = 0; i < dim; ++i)
        if (svd.singularValues()[i] <= tol * smax) ++nullity;
    if (nullity > 1)
        throw DegenerateInput("fit_hyperplane: points lie in a subspace of codimension > 1");

    HyperplaneFit fit;
    fit.coefficients = svd.matrixV().col(dim - 1);
    apply_sign_convention(fit.coefficients);
    double worst = 0.0;
    for (const auto& p : points) {
        double r = std::abs(fit.coefficients.dot(p)) / (fit.coefficients.norm() * p.norm());
        worst = std::max(worst, r);
    }
    fit.residual = worst;
    return fit;
}

std::vector<double> principal_angles(const Eigen::MatrixXd& span_a,
                                     const Eigen::MatrixXd& span_b) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qa(span_a), qb(span_b);
    Eigen::MatrixXd qa_thin =
        qa.householderQ() * Eigen::MatrixXd::Identity(span_a.rows(), span_a.cols());
    Eigen::MatrixXd qb_thin =
        qb.householderQ() * Eigen::MatrixXd::Identity(span_b.rows(), span_b.cols());
    // Sine-based form: the acos of a cosine near 1 floors out around 1e-8,
    // far too coarse for the angle tolerances used here.
    Eigen::MatrixXd residual = qb_thin - qa_thin * (qa_thin.transpose() * qb_thin);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
    std::vector<double> angles;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        double s = std::clamp(svd.singularValues()[i], 0.0, 1.0);
        angles.push_back(std::asin(s));
    }
    return angles;
}

double direction_angle_sin(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double nx = x.norm(), ny = y.norm();
    if (nx == 0.0 || ny == 0.0) throw std::invalid_argument("zero direction");
    // Orthogonal-residual form: sqrt(1 - cos^2) cannot resolve angles
    // below ~1e-8 in double precision.
    Eigen::VectorXd yhat = y / ny;
    Eigen::VectorXd r = x - x.dot(yhat) * yhat;
    return std::min(1.0, r.norm() / nx);
}

std::vector<std::vector<Rational>>
rational_inverse(const std::vector<std::vector<Rational>>& m) {
    const int n = static_cast<int>(m.size());
    std::vector<std::vector<Rational>> a = m;
    std::vector<std::vector<Rational>> inv(static_cast<std::size_t>(n),
                                           std::vector<Rational>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = Rational(1);

    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        for (int row = col; row < n; ++row)
            if (!a[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)].is_zero()) {
                pivot = row;
                break;
            }
        if (pivot < 0) throw std::invalid_argument("matrix is singular");
        std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(pivot)]);
        std::swap(inv[static_cast<std::size_t>(col)], inv[static_cast<std::size_t>(pivot)]);

        Rational p = a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        for (int j = 0; j < n; ++j) {
            a[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)] =
                a[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)] / p;
            inv[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)] =
                inv[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)] / p;
        }
        for (int row = 0; row < n; ++row) {
            if (row == col) continue;
            Rational f = a[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
            if (f.is_zero()) continue;
            for (int j = 0; j < n; ++j) {
                a[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)] =
                    a[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)] -
                    f * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
                inv[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)] =
                    inv[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)] -
                    f * inv[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
            }
        }
    }
    return inv;
}


} // namespace claw
