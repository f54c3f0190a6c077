#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "heatpot/grid.hpp"
#include "heatpot/inequality.hpp"
#include "heatpot/potential.hpp"
#include "oracles.hpp"

using namespace heatpot;

namespace {

CorpusSpec small_spec(CorpusFamily family, unsigned seed, int count = 4) {
    CorpusSpec spec;
    spec.seed = seed;
    spec.count = count;
    spec.family = family;
    return spec;
}

// The reducer's contract, recomputed from the published per-member ratios.
void check_report_consistency(const CheckReport& r) {
    REQUIRE(!r.ratios.empty());
    double worst = 0.0;
    std::string worst_id;
    for (const auto& m : r.ratios)
        if (m.ratio > worst) {
            worst = m.ratio;
            worst_id = m.id;
        }
    CHECK(r.worst_ratio == worst);
    CHECK(r.worst_case_id == worst_id);
    CHECK(r.corpus_size == static_cast<int>(r.ratios.size()));
}

void check_fitted_rule(const CheckReport& r) {
    size_t calib = (r.ratios.size() + 1) / 2;
    double fitted = 0.0, held = 0.0;
    for (size_t i = 0; i < calib; ++i) fitted = std::max(fitted, r.ratios[i].ratio);
    for (size_t i = calib; i < r.ratios.size(); ++i) held = std::max(held, r.ratios[i].ratio);
    CHECK(r.fitted_constant == fitted);
    CHECK(r.pass == (fitted > 0.0 && held <= 1.25 * fitted));
}

}  // namespace

TEST_CASE("corpus generation is deterministic and well formed") {
    for (CorpusFamily family : {CorpusFamily::bump_sums, CorpusFamily::gaussian_mixtures,
                                CorpusFamily::indicator_unions}) {
        CorpusSpec spec = small_spec(family, 17, 5);
        std::vector<CorpusMember> a = generate_corpus(spec);
        std::vector<CorpusMember> b = generate_corpus(spec);
        REQUIRE(a.size() == 5);
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].id == family_name(family) + "-" + std::to_string(i));
            CHECK((a[i].f.samples() == b[i].f.samples()).all());
            CHECK((a[i].f.samples() >= 0.0).all());
            CHECK(a[i].norm_l1 == lp_norm(a[i].f, LpExponent::finite(1.0)));
            CHECK(a[i].norm_linf == lp_norm(a[i].f, LpExponent::infinity()));
            CHECK(a[i].norm_l1 > 0.0);
        }
    }

    // Different seeds give different data.
    std::vector<CorpusMember> a = generate_corpus(small_spec(CorpusFamily::bump_sums, 1, 1));
    std::vector<CorpusMember> b = generate_corpus(small_spec(CorpusFamily::bump_sums, 2, 1));
    CHECK(!(a[0].f.samples() == b[0].f.samples()).all());

    // Unit amplitude range: indicator members peak at exactly 1.
    CorpusSpec unit = small_spec(CorpusFamily::indicator_unions, 23, 3);
    unit.amp_lo = unit.amp_hi = 1.0;
    for (const auto& m : generate_corpus(unit)) CHECK(m.norm_linf == 1.0);

    CorpusSpec bad = small_spec(CorpusFamily::bump_sums, 1);
    bad.count = 0;
    CHECK_THROWS_AS(generate_corpus(bad), std::invalid_argument);
}

TEST_CASE("corpus targets sit late in time on slab boundaries") {
    GridFunction f = generate_corpus(small_spec(CorpusFamily::bump_sums, 5, 1))[0].f;
    std::vector<SpaceTimePoint> targets = corpus_targets(f, 16);
    REQUIRE(targets.size() == 16);
    double t_mid = f.t_lo() + 0.5 * (f.t_hi() - f.t_lo());
    for (const auto& p : targets) {
        CHECK(p.t >= t_mid - 1e-12);
        CHECK(p.t <= f.t_hi() + 1e-12);
        CHECK(p.x[0] >= f.space_lo()[0]);
        CHECK(p.x[0] <= f.space_hi()[0]);
        // On a slab boundary the potential and the maximal see the same past.
        double steps = (p.t - f.t_lo()) / f.tau();
        CHECK(std::abs(steps - std::round(steps)) < 1e-12);
    }
}

TEST_CASE("layer-cake identity holds exactly on random trials") {
    CheckReport r = check_layer_cake(100, 7);
    CHECK(r.check_name == "layer_cake");
    CHECK(r.corpus_size == 100);
    CHECK(r.pass);
    CHECK(r.worst_ratio <= 1e-10);
    CHECK(r.tol == 1e-10);

    // Bit-for-bit reproducible.
    CHECK(report_json(check_layer_cake(100, 7)) == report_json(r));
    CHECK(check_layer_cake(100, 8).worst_ratio != r.worst_ratio);
}

TEST_CASE("hedberg check: finite grounded ratios and exact rescaling") {
    CorpusSpec spec = small_spec(CorpusFamily::bump_sums, 11);
    CheckReport r = check_hedberg(spec, 1, 2.0, 1.0);
    check_report_consistency(r);
    check_fitted_rule(r);
    CHECK(r.corpus_size == 4);
    for (const auto& m : r.ratios) {
        CHECK(std::isfinite(m.ratio));
        CHECK(m.ratio > 0.0);
    }
    // The ratio band guards against the maximal collapsing to bump tails at
    // some target, which once inflated the "constant" by five orders.
    CHECK(r.worst_ratio < 10.0);
    CHECK(r.scale_invariance_defect < 1e-3);
    CHECK(r.params.at("alpha") == 2.0);
    CHECK(r.params.at("p") == 1.0);

    // Same config twice gives identical bytes.
    CHECK(report_json(check_hedberg(spec, 1, 2.0, 1.0)) == report_json(r));

    CHECK_THROWS_AS(check_hedberg(spec, 1, 2.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(check_hedberg(spec, 1, 4.0, 1.0), std::invalid_argument);
    CorpusSpec wrong_dim = spec;
    wrong_dim.dim = 2;
    CHECK_THROWS_AS(check_hedberg(wrong_dim, 1, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("hedberg numerator agrees with an independent quadrature") {
    // One explicit centered bump, so the continuous profile is known here.
    auto profile = [](double y, double s) {
        double uy = y / 0.6, us = (s - 0.5) / 0.35;
        if (std::abs(uy) >= 1.0 || std::abs(us) >= 1.0) return 0.0;
        return std::exp(2.0 - 1.0 / (1.0 - uy * uy) - 1.0 / (1.0 - us * us));
    };
    GridFunction f = GridFunction::from_function(
        1, space_vec({-1.0}), 0.1, {20, 1, 1}, 0.0, 0.05, 20,
        [&](const SpaceVec& x, double t) { return profile(x[0], t); });

    std::vector<SpaceTimePoint> targets = corpus_targets(f, 16);
    std::vector<double> pots = heat_potential(f, 2.0, targets);
    for (size_t j = 0; j < targets.size(); j += 5) {
        double ref = oracle::heat_potential_1d(2.0, profile, -1.0, 1.0, 0.0, 1.0,
                                               targets[j].x[0], targets[j].t);
        if (ref > 1e-6) CHECK(pots[j] == doctest::Approx(ref).epsilon(2e-2));
    }

    // The full ratio at these targets is finite and positive.
    RadiusGrid ladder = default_radius_grid(f);
    double norm1 = lp_norm(f, LpExponent::finite(1.0));
    double theta = 2.0 * 1.0 / 3.0;
    for (size_t j = 0; j < targets.size(); ++j) {
        double m = maximal_M(f, targets[j], ladder).value;
        double rhs = std::pow(norm1, theta) * std::pow(m, 1.0 - theta);
        REQUIRE(rhs > 0.0);
        CHECK(std::isfinite(pots[j] / rhs));
    }
}

TEST_CASE("strong maximal check: sup case, baseline, and p = 1 rejection") {
    CorpusSpec spec = small_spec(CorpusFamily::indicator_unions, 31);

    // Averages never beat the sup.
    CheckReport sup = check_maximal_strong(spec, 1, LpExponent::infinity());
    check_report_consistency(sup);
    for (const auto& m : sup.ratios) CHECK(m.ratio <= 1.0 + 1e-12);
    CHECK(sup.params.count("p_infinite") == 1);

    CheckReport r = check_maximal_strong(spec, 1, LpExponent::finite(2.0));
    check_report_consistency(r);
    check_fitted_rule(r);
    for (const auto& m : r.ratios) CHECK(m.ratio > 0.0);
    CHECK(r.scale_invariance_defect < 1e-3);
    CHECK(report_json(check_maximal_strong(spec, 1, LpExponent::finite(2.0))) ==
          report_json(r));

    CHECK_THROWS_WITH_AS(check_maximal_strong(spec, 1, LpExponent::finite(1.0)),
                         doctest::Contains("p > 1"), std::invalid_argument);
}

TEST_CASE("weak maximal level-set bound holds with room to spare") {
    CorpusSpec spec = small_spec(CorpusFamily::gaussian_mixtures, 41, 6);
    CheckReport r = check_weak_maximal(spec, 1);
    check_report_consistency(r);
    CHECK(r.pass);
    CHECK(r.fitted_constant == 125.0);  // 5^(n+2) at n = 1
    CHECK(r.worst_ratio > 0.0);
    CHECK(r.worst_ratio < 125.0);
    CHECK(report_json(check_weak_maximal(spec, 1)) == report_json(r));

    // Full-box indicator: the maximal function is 1 everywhere on the grid,
    // the lambda ladder collapses to its sup, and nothing exceeds it.
    CorpusSpec box = small_spec(CorpusFamily::indicator_unions, 3, 2);
    box.amp_lo = box.amp_hi = 1.0;
    CheckReport rb = check_weak_maximal(box, 1);
    CHECK(rb.pass);
}

TEST_CASE("sobolev check: critical exponent arithmetic and invariance") {
    CorpusSpec spec = small_spec(CorpusFamily::bump_sums, 51);
    CheckReport r = check_sobolev(spec, 1, 2.0, 1.25);
    check_report_consistency(r);
    check_fitted_rule(r);
    CHECK(r.params.at("q") == doctest::Approx(7.5).epsilon(1e-14));
    for (const auto& m : r.ratios) CHECK(m.ratio > 0.0);
    CHECK(r.scale_invariance_defect < 1e-3);
    CHECK(report_json(check_sobolev(spec, 1, 2.0, 1.25)) == report_json(r));

    CHECK_THROWS_AS(check_sobolev(spec, 1, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(check_sobolev(spec, 1, 2.0, 1.5), std::invalid_argument);
}

TEST_CASE("nonlinear check: exponent bookkeeping and amplitude doubling") {
    int n = 1;
    PotentialParams params{2.0, 2.0, 3.0, LpExponent::finite(1.0)};
    // The two bound exponents sum to sigma.
    double r_val = params.r.value();
    double e_r = (params.alpha + params.beta * params.sigma) * r_val / (n + 2);
    double e_inf =
        (params.sigma * (n + 2 - params.beta * r_val) - params.alpha * r_val) / (n + 2);
    CHECK(e_r + e_inf == doctest::Approx(params.sigma).epsilon(1e-14));
    // Admissible: sigma = 3 > alpha/(n+2-beta) = 2 and r = 1 < 9/8.
    CHECK_NOTHROW(validate_potential_params(n, params));

    CorpusSpec spec = small_spec(CorpusFamily::bump_sums, 61);
    spec.cells_per_axis = 16;
    spec.time_cells = 16;
    CheckReport r = check_nonlinear(spec, n, params);
    check_report_consistency(r);
    check_fitted_rule(r);
    for (const auto& m : r.ratios) CHECK(m.ratio > 0.0);
    CHECK(r.scale_invariance_defect < 1e-6);

    PotentialParams bad_sigma{2.0, 2.0, 1.5, LpExponent::finite(1.0)};
    CHECK_THROWS_WITH_AS(check_nonlinear(spec, n, bad_sigma), doctest::Contains("sigma"),
                         std::invalid_argument);
    PotentialParams bad_r{2.0, 2.0, 3.0, LpExponent::finite(2.0)};
    CHECK_THROWS_WITH_AS(check_nonlinear(spec, n, bad_r), doctest::Contains("r <"),
                         std::invalid_argument);
}

TEST_CASE("checks run in two dimensions") {
    CorpusSpec spec = small_spec(CorpusFamily::gaussian_mixtures, 71, 2);
    spec.dim = 2;
    spec.cells_per_axis = 8;
    spec.time_cells = 8;
    CheckReport r = check_hedberg(spec, 2, 2.0, 1.0);
    check_report_consistency(r);
    for (const auto& m : r.ratios) CHECK(m.ratio > 0.0);
    CHECK(r.scale_invariance_defect < 1e-3);

    CheckReport w = check_weak_maximal(spec, 2);
    CHECK(w.pass);
    CHECK(w.fitted_constant == 625.0);
}

TEST_CASE("report serialization round trips and stays sorted") {
    CorpusSpec spec = small_spec(CorpusFamily::bump_sums, 81, 3);
    CheckReport r = check_maximal_strong(spec, 1, LpExponent::finite(2.0));

    std::string text = report_json(r);
    nlohmann::json j = nlohmann::json::parse(text);
    CHECK(j["check_name"] == "maximal_strong");
    CHECK(j["corpus_size"] == 3);
    CHECK(j["pass"] == r.pass);
    CHECK(j["worst_ratio"] == r.worst_ratio);
    CHECK(j["ratios"].size() == 3);
    CHECK(j["seed"] == 81);
    CHECK(j["params"]["p"] == 2.0);

    std::string csv = report_csv(r);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 members
    CHECK(csv.rfind("id,ratio\n", 0) == 0);
}
