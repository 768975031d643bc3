// clawgeo -- command-line front end: parse a conservation-law system file,
// run named check suites, and emit deterministic JSON reports.

#include "claw/hamgeo.hpp"
#include "claw/parser.hpp"
#include "claw/report.hpp"
#include "claw/ruledgeo.hpp"
#include "claw/syscore.hpp"
#include "claw/webcubic.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <random>
#include <json.hpp>

using namespace claw;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string input;
    std::string out;
    std::string csv;
    std::string write_path;
    std::string rows;
    std::string law1, law2;
    unsigned seed = 42;
    int samples = 100;
    double gap = 1e-6;
    Tolerances tol;
};

struct LoadedSystem {
    SourceSpec spec;
    ParametricSystem system;
    std::vector<ConservationLaw> named;
};

LoadedSystem load(const std::string& path) {
    SourceSpec spec = parse_file(path);
    ParametricSystem system =
        spec.is_primal()
            ? ParametricSystem::primal(spec.name, spec.n(), spec.fluxes,
                                       spec.domain.value_or(std::make_pair(0.6, 1.7)))
            : ParametricSystem(spec.name, spec.densities, spec.fluxes,
                               Provenance::ParametricFile,
                               spec.domain.value_or(std::make_pair(0.6, 1.7)));
    std::vector<ConservationLaw> named;
    for (const auto& law : spec.laws)
        named.emplace_back(law.name, law.density, law.flux, spec.n());
    return {std::move(spec), std::move(system), std::move(named)};
}

std::vector<Eigen::VectorXd> sample(const std::vector<const ParametricSystem*>& systems,
                                    const RunConfig& cfg, double gap_override = 0.0) {
    SampleOptions opts;
    auto dom = systems.front()->domain();
    opts.lo = dom.first;
    opts.hi = dom.second;
    opts.count = cfg.samples;
    opts.seed = cfg.seed;
    opts.gap_tol = gap_override > 0.0 ? gap_override : cfg.gap;
    return sample_points(systems, opts);
}

json config_json(const RunConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"samples", cfg.samples},
                {"gap", cfg.gap},
                {"tolerances", to_json(cfg.tol)}};
}

json system_json(const ParametricSystem& sys) {
    return json{{"name", sys.name()},
                {"n", sys.n()},
                {"provenance", provenance_str(sys.provenance())},
                {"domain", json::array({sys.domain().first, sys.domain().second})}};
}

std::vector<Rational> parse_row(const std::string& text, std::size_t want) {
    std::vector<Rational> row;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        std::string t;
        for (char c : token)
            if (!std::isspace(static_cast<unsigned char>(c))) t += c;
        if (t.empty()) continue;
        bool neg = false;
        if (t[0] == '-') {
            neg = true;
            t = t.substr(1);
        } else if (t[0] == '+') {
            t = t.substr(1);
        }
        Rational v = Rational::from_decimal(t);
        row.push_back(neg ? -v : v);
    }
    if (row.size() > want) throw std::invalid_argument("row has too many entries");
    while (row.size() < want) row.push_back(Rational(0));
    return row;
}

std::pair<std::vector<Rational>, std::vector<Rational>> parse_rows(const std::string& text,
                                                                   int n) {
    auto semi = text.find(';');
    if (semi == std::string::npos)
        throw std::invalid_argument("--rows needs two rows separated by ';'");
    return {parse_row(text.substr(0, semi), static_cast<std::size_t>(n) + 2),
            parse_row(text.substr(semi + 1), static_cast<std::size_t>(n) + 2)};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

json speeds_json(const ParametricSystem& sys, const std::vector<Eigen::VectorXd>& points,
                 std::size_t limit = 5) {
    json arr = json::array();
    for (std::size_t i = 0; i < points.size() && i < limit; ++i) {
        std::span<const double> u(points[i].data(), static_cast<std::size_t>(points[i].size()));
        CharFieldSet f = characteristic_fields(sys, u);
        json speeds = json::array();
        for (const auto& fld : f.fields) speeds.push_back(to_json(fld.speed));
        arr.push_back(json{{"point", to_json(points[i])}, {"speeds", speeds}});
    }
    return arr;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

json run_analyze(const LoadedSystem& in, const RunConfig& cfg, bool& pass) {
    const ParametricSystem& sys = in.system;
    auto points = sample({&sys}, cfg);

    json checks = json::array();
    bool all_laws = true;
    std::vector<ConservationLaw> laws = sys.canonical_laws();
    for (const auto& law : in.named) laws.push_back(law);
    for (const auto& law : laws) {
        CheckLawReport rep = check_law(sys, law, points, cfg.tol.law);
        all_laws = all_laws && rep.pass;
        checks.push_back(to_json(rep));
    }

    FamilyResidualReport ld = linear_degeneracy(sys, points, 1e-5, cfg.tol.fd);
    FamilyResidualReport tpl = temple_rectilinearity(sys, points, 1e-5, cfg.tol.temple);
    checks.push_back(to_json(ld));
    checks.push_back(to_json(tpl));

    std::span<const double> u0(points.front().data(),
                               static_cast<std::size_t>(points.front().size()));
    StructureCoefficients sc = structure_coefficients(sys, u0);

    bool nondiag = true;
    for (bool r : sc.riemann_invariant) nondiag = nondiag && !r;

    json findings{{"laws_checked", laws.size()},
                  {"laws_valid", all_laws},
                  {"linearly_degenerate", ld.pass},
                  {"temple_rectilinear", tpl.pass},
                  {"nondiagonalizable", nondiag}};

    pass = all_laws;
    return json{{"checks", checks},
                {"structure", to_json(sc)},
                {"speeds", speeds_json(sys, points)},
                {"findings", findings},
                {"pass", pass}};
}

// ---------------------------------------------------------------------------
// dualize
// ---------------------------------------------------------------------------

LawPair pair_from_config(const LoadedSystem& in, const RunConfig& cfg) {
    auto find = [&](const std::string& name) -> const ConservationLaw& {
        for (const auto& law : in.named)
            if (law.name == name) return law;
        throw std::runtime_error("law `" + name + "` not found in " + cfg.input);
    };
    if (!cfg.law1.empty() && !cfg.law2.empty()) return LawPair{find(cfg.law1), find(cfg.law2)};
    if (in.named.size() < 2)
        throw std::runtime_error("dualize needs two additional laws (found " +
                                 std::to_string(in.named.size()) + ")");
    return LawPair{in.named[0], in.named[1]};
}

SourceSpec derived_spec(const std::string& name, const std::vector<std::string>& variables,
                        const ParametricSystem& sys, const std::vector<ConservationLaw>& laws) {
    SourceSpec spec;
    spec.name = name;
    spec.variables = variables;
    spec.densities = sys.densities();
    spec.fluxes = sys.fluxes();
    for (const auto& law : laws) spec.laws.push_back({law.name, law.density, law.flux});
    spec.domain = sys.domain();
    return spec;
}

json run_dualize(const LoadedSystem& in, const RunConfig& cfg, bool& pass) {
    const ParametricSystem& sys = in.system;
    LawPair pair = pair_from_config(in, cfg);
    auto points = sample({&sys}, cfg);

    json checks = json::array();
    TangentStabilityReport ts = tangent_stability(sys, pair, points, cfg.tol.stability);
    checks.push_back(to_json(ts));

    double worst_incidence = 0.0;
    for (const auto& p : points) {
        std::span<const double> u(p.data(), static_cast<std::size_t>(p.size()));
        worst_incidence = std::max(worst_incidence, incidence_residual(sys, pair, u));
    }
    bool incidence_ok = worst_incidence <= cfg.tol.law;
    checks.push_back(json{{"check", "dual_generator_incidence"},
                          {"max_residual", worst_incidence},
                          {"tolerance", cfg.tol.law},
                          {"pass", incidence_ok}});

    DualSystemResult dual = dual_system(sys, pair, points);
    bool dual_laws_ok = true;
    for (const auto* law : {&dual.pair.first, &dual.pair.second}) {
        CheckLawReport rep = check_law(dual.system, *law, points, cfg.tol.law);
        dual_laws_ok = dual_laws_ok && rep.pass;
        checks.push_back(to_json(rep));
    }

    SharedFieldsReport shared = shared_char_fields_check(sys, dual.system, points,
                                                         cfg.tol.shared_angle,
                                                         cfg.tol.structure);
    checks.push_back(to_json(shared));

    BidualityReport bid = biduality_check(sys, pair, points, cfg.tol.biduality);
    checks.push_back(to_json(bid));

    if (!cfg.write_path.empty()) {
        std::vector<ConservationLaw> dual_laws = {dual.pair.first, dual.pair.second};
        write_text(cfg.write_path, format_source(derived_spec(in.spec.name + "_dual",
                                                              in.spec.variables, dual.system,
                                                              dual_laws)));
    }
    if (!cfg.csv.empty()) {
        std::ostringstream csv;
        csv << "index,kind";
        for (int k = 0; k < sys.n() + 4; ++k) csv << ",c" << k;
        csv << "\n";
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::span<const double> u(points[i].data(),
                                      static_cast<std::size_t>(points[i].size()));
            auto [p, r] = generator_points(sys, pair, u);
            auto focal = focal_points(sys, pair, u);
            auto emit = [&](const std::string& kind, const Eigen::VectorXd& v) {
                csv << i << "," << kind;
                for (Eigen::Index k = 0; k < v.size(); ++k) csv << "," << v[k];
                csv << "\n";
            };
            emit("p", p);
            emit("r", r);
            for (std::size_t f = 0; f < focal.size(); ++f)
                emit("focal" + std::to_string(f + 1), focal[f]);
        }
        write_text(cfg.csv, csv.str());
    }

    pass = ts.pass && incidence_ok && dual_laws_ok && shared.pass && bid.pass;
    return json{{"checks", checks},
                {"pair", json::array({pair.first.name, pair.second.name})},
                {"dual_system", system_json(dual.system)},
                {"rotated_carrier", dual.rotated_carrier},
                {"pass", pass}};
}

// ---------------------------------------------------------------------------
// hamiltonian-check
// ---------------------------------------------------------------------------

json run_hamiltonian(const LoadedSystem& in, const RunConfig& cfg, bool& pass) {
    if (!in.spec.hamiltonian)
        throw std::runtime_error("input file declares no hamiltonian block");
    const ParametricSystem& sys = in.system;
    HamiltonianSpec hspec{in.spec.hamiltonian->h, in.spec.hamiltonian->eta_exact};
    HamiltonianBuild build = build_hamiltonian(hspec, sys.domain());
    auto points = sample({&sys}, cfg);

    json checks = json::array();

    // Declared fluxes must agree with eta * grad h.
    double worst_flux = 0.0;
    for (const auto& p : points) {
        std::span<const double> u(p.data(), static_cast<std::size_t>(p.size()));
        Eigen::VectorXd a = sys.eval_fluxes(u);
        Eigen::VectorXd b = build.system.eval_fluxes(u);
        worst_flux = std::max(worst_flux, (a - b).norm() / (1.0 + a.norm()));
    }
    bool flux_ok = worst_flux <= cfg.tol.law;
    checks.push_back(json{{"check", "flux_consistency"},
                          {"max_residual", worst_flux},
                          {"tolerance", cfg.tol.law},
                          {"pass", flux_ok}});

    bool laws_ok = true;
    for (const auto& law : build.laws) {
        CheckLawReport rep = check_law(build.system, law, points, cfg.tol.law);
        laws_ok = laws_ok && rep.pass;
        checks.push_back(to_json(rep));
    }

    Eigen::MatrixXd eta = in.spec.hamiltonian->eta;
    Eigen::MatrixXd eta_inv = eta.inverse();
    QuadricMembershipReport qm =
        quadric_membership(build.system, build.pair, eta_inv, points, cfg.tol.quadric);
    checks.push_back(to_json(qm));
    LegendreReport lg =
        legendre_check(build.system, build.pair, eta_inv, points, {}, cfg.tol.quadric);
    checks.push_back(to_json(lg));
    AutodualityReport ad =
        autoduality_check(build.system, build.pair, eta, points, cfg.tol.angle);
    checks.push_back(to_json(ad));

    pass = flux_ok && laws_ok && qm.pass && lg.pass && ad.pass;
    return json{{"checks", checks}, {"pass", pass}};
}

// ---------------------------------------------------------------------------
// reciprocal
// ---------------------------------------------------------------------------

struct ReciprocalOutcome {
    ReciprocalTransform transform;
    std::vector<ConservationLaw> mapped_laws; // named images + xform/tform
    std::optional<LawPair> pair;              // transformed additional pair
    std::optional<std::pair<LawRef, LawRef>> pair_refs;
};

ReciprocalOutcome do_reciprocal(const LoadedSystem& in, const std::vector<Rational>& row_x,
                                const std::vector<Rational>& row_t,
                                const std::vector<Eigen::VectorXd>& points) {
    const ParametricSystem& sys = in.system;
    std::vector<ConservationLaw> extra;
    if (in.named.size() >= 2) extra = {in.named[0], in.named[1]};

    ReciprocalTransform rec = [&] {
        try {
            return reciprocal_transform(sys, sys.canonical_laws(), row_x, row_t, points);
        } catch (const TransformSingular&) {
            // Carrier needs the additional laws as well.
            return reciprocal_transform(sys, sys.canonical_laws(), row_x, row_t, points,
                                        extra);
        }
    }();

    ReciprocalOutcome out{std::move(rec), {}, std::nullopt, std::nullopt};
    for (const auto& law : in.named) out.mapped_laws.push_back(out.transform.map_law(law));
    for (const auto& law : trivial_laws(sys.n()))
        out.mapped_laws.push_back(out.transform.map_law(law));

    if (in.named.size() >= 2) {
        auto [r1, r2] = pick_transformed_pair(sys.n(), out.transform.carrier_refs);
        auto resolve = [&](const LawRef& ref) {
            switch (ref.kind) {
                case LawRef::Kind::Canonical:
                    return out.transform.map_law(
                        sys.canonical_laws()[static_cast<std::size_t>(ref.index)]);
                case LawRef::Kind::Extra:
                    return out.transform.map_law(in.named[static_cast<std::size_t>(ref.index)]);
                case LawRef::Kind::TrivialX:
                    return out.transform.map_law(trivial_laws(sys.n())[0]);
                default: return out.transform.map_law(trivial_laws(sys.n())[1]);
            }
        };
        out.pair = LawPair{resolve(r1), resolve(r2)};
        out.pair_refs = std::make_pair(r1, r2);
    }
    return out;
}

json run_reciprocal(const LoadedSystem& in, const RunConfig& cfg, bool& pass) {
    const ParametricSystem& sys = in.system;
    if (cfg.rows.empty()) throw std::runtime_error("reciprocal requires --rows");
    auto [row_x, row_t] = parse_rows(cfg.rows, sys.n());
    auto base_points = sample({&sys}, cfg);

    ReciprocalOutcome rec = do_reciprocal(in, row_x, row_t, base_points);
    const ParametricSystem& tsys = rec.transform.system;
    auto points = sample({&sys, &tsys}, cfg);

    json checks = json::array();
    bool laws_ok = true;
    for (const auto& law : rec.mapped_laws) {
        CheckLawReport rep = check_law(tsys, law, points, cfg.tol.law);
        laws_ok = laws_ok && rep.pass;
        checks.push_back(to_json(rep));
    }

    json findings{{"rebased_carrier", rec.transform.rebased},
                  {"carrier_laws", rec.transform.carrier_laws},
                  {"canonical_speed_triple", has_canonical_speed_triple(tsys, points)}};

    if (rec.pair) {
        json focal = json::array();
        for (int fam = 0; fam < sys.n(); ++fam) {
            FocalHyperplaneReport fh =
                focal_hyperplane(tsys, *rec.pair, fam, points, cfg.tol.hyperplane);
            focal.push_back(to_json(fh));
        }
        findings["focal_hyperplanes"] = focal;
    }

    if (!cfg.write_path.empty())
        write_text(cfg.write_path,
                   format_source(derived_spec(in.spec.name + "_reciprocal",
                                              in.spec.variables, tsys, rec.mapped_laws)));
    if (!cfg.csv.empty() && rec.pair) {
        std::ostringstream csv;
        csv << "index,kind";
        for (int k = 0; k < sys.n() + 4; ++k) csv << ",c" << k;
        csv << "\n";
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::span<const double> u(points[i].data(),
                                      static_cast<std::size_t>(points[i].size()));
            auto focal = focal_points(tsys, *rec.pair, u);
            for (std::size_t f = 0; f < focal.size(); ++f) {
                csv << i << ",focal" << f + 1;
                for (Eigen::Index k = 0; k < focal[f].size(); ++k) csv << "," << focal[f][k];
                csv << "\n";
            }
        }
        write_text(cfg.csv, csv.str());
    }

    pass = laws_ok;
    return json{{"checks", checks},
                {"speeds", speeds_json(tsys, points)},
                {"findings", findings},
                {"transformed_system", system_json(tsys)},
                {"pass", pass}};
}

// ---------------------------------------------------------------------------
// web-cubic
// ---------------------------------------------------------------------------

json web_suite(const ParametricSystem& tsys, const std::vector<ConservationLaw>& candidates,
               const std::vector<Eigen::VectorXd>& points, const RunConfig& cfg, bool& pass,
               std::string* csv_out) {
    json out;
    std::vector<ConservationLaw> five = select_independent_laws(candidates, 5, points);
    json names = json::array();
    for (const auto& law : five) names.push_back(law.name);
    out["basis_laws"] = names;

    AbelianBasis basis = abelian_from_laws(tsys, five, points, cfg.tol.angle, cfg.tol.law,
                                           cfg.tol.fd);
    out["basis_rank"] = basis.size();

    const std::size_t fit_count =
        std::max<std::size_t>(20, points.size() * 2 / 5); // 3 samples per point
    std::vector<Eigen::VectorXd> pooled, held;
    std::vector<PqrResult> pqr_all;
    double worst_formula = 0.0;
    std::ostringstream csv;
    csv << "index";
    for (int k = 0; k < tsys.n(); ++k) csv << ",u" << k + 1;
    for (const char* nm : {"P", "Q", "R"})
        for (int k = 0; k < 5; ++k) csv << "," << nm << k;
    csv << "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::span<const double> u(points[i].data(),
                                  static_cast<std::size_t>(points[i].size()));
        PqrResult q = pqr_points(tsys, basis, u);
        worst_formula = std::max(worst_formula, q.formula_angle_sin);
        auto& dst = i < fit_count ? pooled : held;
        dst.push_back(q.p);
        dst.push_back(q.q);
        dst.push_back(q.r);
        pqr_all.push_back(q);
        csv << i;
        for (Eigen::Index k = 0; k < points[i].size(); ++k) csv << "," << points[i][k];
        for (const auto* v : {&q.p, &q.q, &q.r})
            for (Eigen::Index k = 0; k < v->size(); ++k) csv << "," << (*v)[k];
        csv << "\n";
    }
    if (csv_out) *csv_out = csv.str();

    bool formula_ok = worst_formula <= cfg.tol.angle;
    out["pqr_formula_agreement"] = worst_formula;

    CubicFitResult fit = fit_cubic(pooled, cfg.tol.fit);
    out["fit"] = to_json(fit);

    double held_res = 0.0;
    for (const auto& x : held) {
        Eigen::VectorXd xn = x;
        normalize_projective(xn);
        held_res = std::max(held_res, std::abs(fit.cubic.evaluate(xn)));
    }
    out["held_out_residual"] = held_res;
    const double held_tol = 1e-7;

    double line_res = 0.0;
    for (std::size_t i = fit_count; i < pqr_all.size(); ++i) {
        const PqrResult& q = pqr_all[i];
        line_res = std::max({line_res, line_on_cubic(fit.cubic, q.p, q.q),
                             line_on_cubic(fit.cubic, q.q, q.r),
                             line_on_cubic(fit.cubic, q.r, q.p)});
    }
    out["line_on_cubic_residual"] = line_res;

    // Negative control: random P^4 points admit no cubic.
    int random_nullity = 0;
    {
        std::mt19937_64 rng(cfg.seed * 2654435761u + 17u);
        auto unit = [&rng]() {
            return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        };
        std::vector<Eigen::VectorXd> rand_pts;
        for (int i = 0; i < 60; ++i) {
            Eigen::VectorXd x(5);
            for (int k = 0; k < 5; ++k) x[k] = unit();
            rand_pts.push_back(x);
        }
        random_nullity = fit_cubic(rand_pts, cfg.tol.fit).nullity;
    }
    out["random_control_nullity"] = random_nullity;

    pass = formula_ok && fit.nullity >= 1 && fit.residual <= cfg.tol.fit &&
           held_res <= held_tol && line_res <= cfg.tol.fit && random_nullity == 0;
    out["pass"] = pass;
    return out;
}

json run_web_cubic(const LoadedSystem& in, const RunConfig& cfg, bool& pass) {
    const ParametricSystem& tsys = in.system;
    // pqr needs generic points; guard the sample away from the transform's
    // singular locus.
    auto points = sample({&tsys}, cfg, std::max(cfg.gap, 1e-2));
    if (!has_canonical_speed_triple(tsys, points, cfg.tol.angle))
        throw CanonicalSpeedError(
            "system speeds are not {inf, 0, -1}; apply a reciprocal transformation first");

    std::vector<ConservationLaw> candidates = tsys.canonical_laws();
    for (const auto& law : in.named) candidates.push_back(law);
    for (const auto& law : trivial_laws(tsys.n())) candidates.push_back(law);

    std::string csv;
    json out = web_suite(tsys, candidates, points, cfg, pass, &csv);
    if (!cfg.csv.empty()) write_text(cfg.csv, csv);
    return out;
}

// ---------------------------------------------------------------------------
// all
// ---------------------------------------------------------------------------

json run_all(const LoadedSystem& in, const RunConfig& cfg, bool& pass) {
    json stages;
    bool ok = true;

    bool analyze_ok = false;
    stages["analyze"] = run_analyze(in, cfg, analyze_ok);
    ok = ok && analyze_ok;

    if (in.spec.hamiltonian) {
        bool ham_ok = false;
        stages["hamiltonian"] = run_hamiltonian(in, cfg, ham_ok);
        ok = ok && ham_ok;
    }

    if (in.named.size() >= 2) {
        bool dual_ok = false;
        stages["duality"] = run_dualize(in, cfg, dual_ok);
        ok = ok && dual_ok;
    }

    std::string rows = cfg.rows;
    if (rows.empty() && in.system.n() == 3) rows = "1,0,-1;0,1,-1";
    if (!rows.empty() && in.named.size() >= 2) {
        const ParametricSystem& sys = in.system;
        auto [row_x, row_t] = parse_rows(rows, sys.n());
        auto base_points = sample({&sys}, cfg);

        ReciprocalOutcome rec = do_reciprocal(in, row_x, row_t, base_points);
        const ParametricSystem& tsys = rec.transform.system;
        auto points = sample({&sys, &tsys}, cfg);

        json rj;
        bool laws_ok = true;
        json law_checks = json::array();
        for (const auto& law : rec.mapped_laws) {
            CheckLawReport rep = check_law(tsys, law, points, cfg.tol.law);
            laws_ok = laws_ok && rep.pass;
            law_checks.push_back(to_json(rep));
        }
        rj["checks"] = law_checks;
        bool triple = has_canonical_speed_triple(tsys, points, cfg.tol.angle);
        rj["canonical_speed_triple"] = triple;
        rj["rebased_carrier"] = rec.transform.rebased;

        bool focal_ok = true;
        if (rec.pair) {
            json focal = json::array();
            for (int fam = 0; fam < sys.n(); ++fam) {
                FocalHyperplaneReport fh =
                    focal_hyperplane(tsys, *rec.pair, fam, points, cfg.tol.hyperplane);
                focal_ok = focal_ok && fh.pass;
                focal.push_back(to_json(fh));
            }
            rj["focal_hyperplanes"] = focal;

            // Negative control: the untransformed system's focal families
            // stay away from hyperplanes.
            json neg = json::array();
            LawPair base_pair{in.named[0], in.named[1]};
            for (int fam = 0; fam < sys.n(); ++fam) {
                FocalHyperplaneReport fh =
                    focal_hyperplane(sys, base_pair, fam, base_points, cfg.tol.hyperplane);
                neg.push_back(json{{"family", fam}, {"residual", fh.residual}});
            }
            rj["untransformed_focal_residuals"] = neg;
        }
        rj["pass"] = laws_ok && triple && focal_ok;
        ok = ok && rj["pass"].get<bool>();
        stages["reciprocal"] = rj;

        // web suite on the transformed system
        {
            auto wpts = sample({&sys, &tsys}, cfg, std::max(cfg.gap, 1e-2));
            std::vector<ConservationLaw> candidates = tsys.canonical_laws();
            for (const auto& law : rec.mapped_laws) candidates.push_back(law);
            bool web_ok = false;
            stages["web"] = web_suite(tsys, candidates, wpts, cfg, web_ok, nullptr);
            ok = ok && web_ok;
        }

        // Temple bridge: the dual of the constant-speed system is a Temple
        // system, and the base system becomes Temple in the density
        // coordinates of its own law chain.
        if (rec.pair_refs) {
            json bridge;
            LawPair base_pair{in.named[0], in.named[1]};
            auto rows_matrix = transform_row_matrix(sys.n(), row_x, row_t,
                                                    rec.transform.carrier_refs,
                                                    rec.pair_refs->first,
                                                    rec.pair_refs->second);
            auto wpts = sample({&sys, &tsys}, cfg, std::max(cfg.gap, 1e-2));
            DualSystemResult dualT = dual_system_via_base(sys, base_pair, rows_matrix, wpts);
            auto bpts =
                sample({&sys, &tsys, &dualT.system}, cfg, std::max(cfg.gap, 1e-2));

            bool dual_laws_ok = true;
            json dlaws = json::array();
            for (const auto* law : {&dualT.pair.first, &dualT.pair.second}) {
                CheckLawReport rep = check_law(dualT.system, *law, bpts, cfg.tol.law);
                dual_laws_ok = dual_laws_ok && rep.pass;
                dlaws.push_back(to_json(rep));
            }
            bridge["dual_law_checks"] = dlaws;

            SharedFieldsReport shared = shared_char_fields_check(
                tsys, dualT.system, bpts, cfg.tol.shared_angle, cfg.tol.structure);
            bridge["shared_fields"] = to_json(shared);

            FamilyResidualReport tpl =
                temple_rectilinearity(dualT.system, bpts, 1e-5, cfg.tol.temple);
            bridge["temple_dual"] = to_json(tpl);

            // change of variables on the base system: densities from the
            // law chain (sum of canonical laws, then the named pair).
            json abc;
            bool abc_ok = false;
            try {
                Expr sum_dens = sys.densities()[0];
                Expr sum_flux = sys.fluxes()[0];
                for (int i = 1; i < sys.n(); ++i) {
                    sum_dens = sum_dens + sys.densities()[static_cast<std::size_t>(i)];
                    sum_flux = sum_flux + sys.fluxes()[static_cast<std::size_t>(i)];
                }
                ConservationLaw sum_law("chain", sum_dens, sum_flux, sys.n());
                std::vector<ConservationLaw> new_dens = {sum_law, in.named[0], in.named[1]};
                ParametricSystem chained = change_variables(sys, new_dens, base_points);
                FamilyResidualReport tpl2 =
                    temple_rectilinearity(chained, base_points, 1e-5, cfg.tol.temple);
                abc = to_json(tpl2);
                abc_ok = tpl2.pass;
            } catch (const std::exception& e) {
                abc = json{{"error", e.what()}};
            }
            bridge["temple_change_of_variables"] = abc;

            bridge["pass"] = dual_laws_ok && shared.pass && tpl.pass && abc_ok;
            ok = ok && bridge["pass"].get<bool>();
            stages["bridge"] = bridge;
        }
    }

    pass = ok;
    return json{{"stages", stages}, {"pass", pass}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conservation-law systems: characteristic fields, ruled-hypersurface "
                 "duality, Hamiltonian quadric checks, reciprocal transforms, web cubics"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string command;
    for (const auto& name : {"analyze", "dualize", "hamiltonian-check", "reciprocal",
                             "web-cubic", "all"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("input", cfg.input, "system file (.claw)")->required();
        sub->add_option("--seed", cfg.seed, "sampling seed");
        sub->add_option("--samples", cfg.samples, "sample count")
            ->check(CLI::Range(10, 100000));
        sub->add_option("--out", cfg.out, "report path (default stdout)");
        sub->add_option("--csv", cfg.csv, "CSV dump path");
        sub->add_option("--write", cfg.write_path, "write derived system file");
        sub->add_option("--rows", cfg.rows, "reciprocal rows 'a1,..,an,c,c~;b1,..'");
        sub->add_option("--law1", cfg.law1, "first pair law name");
        sub->add_option("--law2", cfg.law2, "second pair law name");
        sub->add_option("--gap", cfg.gap, "hyperbolicity gap for sampling")
            ->check(CLI::PositiveNumber);
        sub->add_option("--tol-law", cfg.tol.law, "exact-path tolerance")
            ->check(CLI::PositiveNumber);
        sub->add_option("--tol-fd", cfg.tol.fd, "finite-difference tolerance")
            ->check(CLI::PositiveNumber);
        sub->add_option("--tol-temple", cfg.tol.temple, "rectilinearity tolerance")
            ->check(CLI::PositiveNumber);
        sub->add_option("--tol-geom", cfg.tol.angle, "geometric angle tolerance")
            ->check(CLI::PositiveNumber);
        sub->add_option("--tol-structure", cfg.tol.structure, "structure agreement tolerance")
            ->check(CLI::PositiveNumber);
        sub->callback([&command, name]() { command = name; });
    }

    CLI11_PARSE(app, argc, argv);

    json report{{"report_version", "report_v1"}, {"command", command}, {"input", cfg.input}};
    report["config"] = config_json(cfg);

    int exit_code = 0;
    try {
        LoadedSystem in = load(cfg.input);
        report["system"] = system_json(in.system);
        bool pass = false;
        json body;
        if (command == "analyze") body = run_analyze(in, cfg, pass);
        else if (command == "dualize") body = run_dualize(in, cfg, pass);
        else if (command == "hamiltonian-check") body = run_hamiltonian(in, cfg, pass);
        else if (command == "reciprocal") body = run_reciprocal(in, cfg, pass);
        else if (command == "web-cubic") body = run_web_cubic(in, cfg, pass);
        else body = run_all(in, cfg, pass);
        report.update(body);
        exit_code = pass ? 0 : 1;
    } catch (const ParseError& e) {
        report["error"] = json{{"type", "parse_error"},
                               {"message", e.message},
                               {"line", e.line},
                               {"column", e.column}};
        report["pass"] = false;
        exit_code = 2;
    } catch (const std::exception& e) {
        report["error"] = json{{"type", "check_error"}, {"message", e.what()}};
        report["pass"] = false;
        exit_code = 1;
    }

    std::string text = report.dump(2) + "\n";
    if (cfg.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(cfg.out);
        out << text;
    }
    return exit_code;
}
