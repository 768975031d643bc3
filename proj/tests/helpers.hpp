#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// deliberately avoid the code paths they are used to check: eigenvalues come
// from characteristic-polynomial roots, derivatives from central finite
// differences.

#include "claw/hamgeo.hpp"
#include "claw/parser.hpp"
#include "claw/ruledgeo.hpp"
#include "claw/syscore.hpp"
#include "claw/webcubic.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace testutil {

inline std::string corpus_path(const std::string& name) {
    return std::string(CLAWGEO_CORPUS_DIR) + "/" + name;
}

/// Parsed intro system plus the seeded default sample.
struct IntroFixture {
    claw::SourceSpec spec;
    claw::ParametricSystem sys;
    std::vector<claw::ConservationLaw> named;
    claw::LawPair pair;
    std::vector<Eigen::VectorXd> points;

    static const IntroFixture& get() {
        static IntroFixture f;
        return f;
    }

  private:
    IntroFixture()
        : spec(claw::parse_file(corpus_path("example_intro.claw"))),
          sys(claw::ParametricSystem::primal(spec.name, spec.n(), spec.fluxes, *spec.domain)),
          named(), pair(), points() {
        for (const auto& law : spec.laws)
            named.emplace_back(law.name, law.density, law.flux, spec.n());
        pair = claw::LawPair{named[0], named[1]};
        claw::SampleOptions opts;
        points = claw::sample_points({&sys}, opts);
    }
};

/// The reciprocal chain to the constant-speed system, with guarded sampling
/// for the web and bridge suites.
struct WebFixture {
    claw::ReciprocalTransform transform;
    std::vector<claw::ConservationLaw> mapped; // sigma4, sigma5, xform, tform images
    claw::LawPair tpair;                       // transformed additional pair
    std::vector<std::vector<claw::Rational>> dual_rows;
    std::vector<Eigen::VectorXd> points; // valid for base and transformed

    static const WebFixture& get() {
        static WebFixture f;
        return f;
    }

  private:
    WebFixture() : transform(make_transform()), mapped(), tpair(), dual_rows(), points() {
        const IntroFixture& intro = IntroFixture::get();
        for (const auto& law : intro.named) mapped.push_back(transform.map_law(law));
        for (const auto& law : claw::trivial_laws(3)) mapped.push_back(transform.map_law(law));
        auto [r1, r2] = claw::pick_transformed_pair(3, transform.carrier_refs);
        tpair = claw::LawPair{resolve(r1), resolve(r2)};
        dual_rows = claw::transform_row_matrix(3, row_x(), row_t(), transform.carrier_refs,
                                               r1, r2);
        claw::SampleOptions opts;
        opts.gap_tol = 1e-2;
        points = claw::sample_points({&intro.sys, &transform.system}, opts);
    }

    static std::vector<claw::Rational> row_x() {
        using claw::Rational;
        return {Rational(1), Rational(0), Rational(-1), Rational(0), Rational(0)};
    }
    static std::vector<claw::Rational> row_t() {
        using claw::Rational;
        return {Rational(0), Rational(1), Rational(-1), Rational(0), Rational(0)};
    }
    static claw::ReciprocalTransform make_transform() {
        const IntroFixture& intro = IntroFixture::get();
        return claw::reciprocal_transform(intro.sys, intro.sys.canonical_laws(), row_x(),
                                          row_t(), intro.points);
    }
    claw::ConservationLaw resolve(const claw::LawRef& ref) {
        const IntroFixture& intro = IntroFixture::get();
        switch (ref.kind) {
            case claw::LawRef::Kind::Canonical:
                return transform.map_law(
                    intro.sys.canonical_laws()[static_cast<std::size_t>(ref.index)]);
            case claw::LawRef::Kind::Extra:
                return transform.map_law(intro.named[static_cast<std::size_t>(ref.index)]);
            case claw::LawRef::Kind::TrivialX:
                return transform.map_law(claw::trivial_laws(3)[0]);
            default: return transform.map_law(claw::trivial_laws(3)[1]);
        }
    }
};

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Real roots of x^3 + p2 x^2 + p1 x + p0 via the trigonometric method;
/// requires three real roots (discriminant checked loosely).
inline std::vector<double> cubic_roots(double p2, double p1, double p0) {
    double a = p2, b = p1, c = p0;
    double q = (3.0 * b - a * a) / 9.0;
    double r = (9.0 * a * b - 27.0 * c - 2.0 * a * a * a) / 54.0;
    double disc = q * q * q + r * r;
    std::vector<double> roots;
    if (disc <= 1e-12 * std::max(1.0, std::abs(q * q * q))) {
        double mq = std::sqrt(std::max(0.0, -q));
        double theta = std::acos(std::clamp(r / std::max(1e-300, mq * mq * mq), -1.0, 1.0));
        for (int k = 0; k < 3; ++k)
            roots.push_back(2.0 * mq * std::cos((theta + 2.0 * M_PI * k) / 3.0) - a / 3.0);
    } else {
        // One real root; good enough for failure diagnostics.
        double s = std::cbrt(r + std::sqrt(disc));
        double t = std::cbrt(r - std::sqrt(disc));
        roots.push_back(s + t - a / 3.0);
    }
    std::sort(roots.begin(), roots.end(), std::greater<double>());
    return roots;
}

/// Characteristic polynomial roots of a 3x3 matrix, sorted descending.
inline std::vector<double> charpoly_roots(const Eigen::Matrix3d& m) {
    double tr = m.trace();
    double sum2 = 0.5 * (tr * tr - (m * m).trace()); // sum of principal 2x2 minors
    double det = m.determinant();
    // det(xI - M) = x^3 - tr x^2 + sum2 x - det
    return cubic_roots(-tr, sum2, -det);
}

/// Central finite difference of a scalar expression.
inline double fd_partial(const claw::Expr& e, std::vector<double> point, int var,
                         double h = 1e-5) {
    point[static_cast<std::size_t>(var)] += h;
    double up = e.evaluate(point);
    point[static_cast<std::size_t>(var)] -= 2.0 * h;
    double dn = e.evaluate(point);
    return (up - dn) / (2.0 * h);
}

/// Deterministic point stream in [lo, hi]^n for property tests.
inline std::vector<std::vector<double>> random_points(int n, int count, unsigned seed,
                                                      double lo = 0.5, double hi = 1.8) {
    std::vector<std::vector<double>> out;
    std::uint64_t state = seed * 6364136223846793005ull + 1442695040888963407ull;
    auto next = [&state]() {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        return static_cast<double>((state * 2685821657736338717ull) >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < count; ++i) {
        std::vector<double> p;
        for (int k = 0; k < n; ++k) p.push_back(lo + (hi - lo) * next());
        out.push_back(std::move(p));
    }
    return out;
}

inline std::span<const double> span_of(const Eigen::VectorXd& v) {
    return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
}

} // namespace testutil
