#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "heatpot/grid.hpp"
#include "heatpot/kernel.hpp"
#include "heatpot/potential.hpp"
#include "oracles.hpp"

using namespace heatpot;

namespace {

// Smooth compactly supported source on [-1,1] x [0,1].
double smooth_source(double y, double s) {
    if (std::abs(y) >= 1.0) return 0.0;
    double c = std::cos(0.5 * kPi * y);
    return c * c * (1.0 + s);
}

GridFunction sampled_source(int cells_per_axis, int time_cells) {
    return GridFunction::from_function(
        1, space_vec({-1.0}), 2.0 / cells_per_axis, {cells_per_axis, 1, 1}, 0.0,
        1.0 / time_cells, time_cells,
        [](const SpaceVec& x, double t) { return smooth_source(x[0], t); });
}

GridFunction random_source(int n, int cells_per_axis, int time_cells, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::array<int, 3> cells{1, 1, 1};
    Eigen::Index size = time_cells;
    for (int d = 0; d < n; ++d) {
        cells[d] = cells_per_axis;
        size *= cells_per_axis;
    }
    Eigen::ArrayXd samples(size);
    for (Eigen::Index i = 0; i < size; ++i) samples[i] = unif(rng);
    return GridFunction(n, SpaceVec::Constant(n, -1.0), 2.0 / cells_per_axis, cells, 0.0,
                        1.0 / time_cells, time_cells, std::move(samples));
}

std::vector<SpaceTimePoint> grid_targets(const GridFunction& f, int count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::vector<SpaceTimePoint> targets;
    targets.reserve(count);
    for (int i = 0; i < count; ++i)
        targets.push_back(f.cell_center(static_cast<Eigen::Index>(rng() % f.size())));
    return targets;
}

}  // namespace

TEST_CASE("zero data, causality, and nonnegativity") {
    GridFunction z(1, space_vec({0.0}), 0.5, {4, 1, 1}, 0.0, 0.25, 4,
                   Eigen::ArrayXd::Zero(16));
    std::vector<SpaceTimePoint> targets = {make_point({0.7}, 0.6), make_point({0.0}, 2.0)};
    for (double v : heat_potential(z, 2.0, targets)) CHECK(v == 0.0);

    GridFunction f = random_source(1, 16, 16, 11);
    // Targets at or below the support's start see nothing.
    CHECK(heat_potential(f, 2.0, {make_point({0.3}, 0.0)})[0] == 0.0);
    CHECK(heat_potential(f, 2.0, {make_point({0.3}, -1.0)})[0] == 0.0);
    // Inside, values are strictly positive.
    CHECK(heat_potential(f, 2.0, {make_point({0.3}, 0.9)})[0] > 0.0);

    CHECK_THROWS_AS(heat_potential(f, 0.0, targets), std::invalid_argument);
    CHECK_THROWS_AS(heat_potential(f, 3.0, targets), std::invalid_argument);
}

TEST_CASE("per-target path agrees with the tabulated grid path") {
    for (int n : {1, 2}) {
        GridFunction f = random_source(n, n == 1 ? 32 : 10, n == 1 ? 32 : 10, 21 + n);
        for (double alpha : {2.0, 1.3}) {
            GridFunction u = heat_potential_grid(f, alpha);
            std::vector<SpaceTimePoint> targets = grid_targets(f, 25, 77 + n);
            std::vector<double> direct = heat_potential(f, alpha, targets);
            for (size_t i = 0; i < targets.size(); ++i) {
                Eigen::Index flat = 0;
                // Recover the flat index from the center coordinates.
                double dt = (targets[i].t - f.t_lo()) / f.tau() - 0.5;
                int k = static_cast<int>(std::lround(dt));
                std::array<int, 3> ix{0, 0, 0};
                for (int d = 0; d < n; ++d)
                    ix[d] = static_cast<int>(
                        std::lround((targets[i].x[d] - f.space_lo()[d]) / f.h() - 0.5));
                flat = f.flat_index(ix, k);
                CHECK(u.samples()[flat] ==
                      doctest::Approx(direct[i]).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("smooth-source oracle with second-order grid convergence") {
    std::vector<SpaceTimePoint> targets = {make_point({0.3}, 0.7), make_point({0.0}, 1.0)};
    for (double alpha : {2.0, 1.2}) {
        std::vector<double> reference;
        for (const auto& p : targets)
            reference.push_back(oracle::heat_potential_1d(alpha, smooth_source, -1.0, 1.0, 0.0,
                                                          1.0, p.x[0], p.t));
        double prev_err = 0.0;
        for (int level = 0; level < 2; ++level) {
            int m = 32 << level;
            GridFunction f = sampled_source(m, m);
            std::vector<double> values = heat_potential(f, alpha, targets);
            double err = 0.0;
            for (size_t i = 0; i < targets.size(); ++i)
                err = std::max(err, std::abs(values[i] - reference[i]) / reference[i]);
            if (level == 1) {
                CHECK(prev_err / err > 2.8);
                CHECK(err < 5e-4);
            }
            prev_err = err;
        }
    }
}

TEST_CASE("linearity and translation covariance") {
    GridFunction f = random_source(1, 24, 24, 31);
    GridFunction g = random_source(1, 24, 24, 32);
    std::vector<SpaceTimePoint> targets = grid_targets(f, 8, 5);

    GridFunction combo = add(scale(f, 2.5), scale(g, 0.5));
    std::vector<double> vc = heat_potential(combo, 2.0, targets);
    std::vector<double> vf = heat_potential(f, 2.0, targets);
    std::vector<double> vg = heat_potential(g, 2.0, targets);
    for (size_t i = 0; i < targets.size(); ++i)
        CHECK(vc[i] == doctest::Approx(2.5 * vf[i] + 0.5 * vg[i]).epsilon(1e-10));

    // Shift everything by (x0, t0): the convolution cannot tell.
    double x0 = 0.37, t0 = 1.91;
    GridFunction shifted(1, space_vec({f.space_lo()[0] + x0}), f.h(), f.cells(),
                         f.t_lo() + t0, f.tau(), f.time_cells(), f.samples());
    std::vector<SpaceTimePoint> shifted_targets;
    for (const auto& p : targets)
        shifted_targets.push_back(make_point({p.x[0] + x0}, p.t + t0));
    std::vector<double> vs = heat_potential(shifted, 2.0, shifted_targets);
    for (size_t i = 0; i < targets.size(); ++i)
        CHECK(vs[i] == doctest::Approx(vf[i]).epsilon(1e-10));
}

TEST_CASE("future samples never contribute") {
    GridFunction f = random_source(1, 24, 24, 41);
    double t_cut = f.cell_center_time(11) + 0.5 * f.tau();
    Eigen::ArrayXd muted = f.samples();
    for (int k = 12; k < f.time_cells(); ++k)
        muted.segment(static_cast<Eigen::Index>(k) * f.space_size(), f.space_size()) = 0.0;
    GridFunction g(1, f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(), f.time_cells(),
                   std::move(muted));
    std::vector<SpaceTimePoint> targets = {make_point({0.1}, t_cut),
                                           make_point({-0.5}, t_cut - 0.2)};
    std::vector<double> vf = heat_potential(f, 1.7, targets);
    std::vector<double> vg = heat_potential(g, 1.7, targets);
    for (size_t i = 0; i < targets.size(); ++i) CHECK(vf[i] == vg[i]);
}

TEST_CASE("parabolic scale covariance") {
    GridFunction f = random_source(1, 24, 24, 51);
    std::vector<SpaceTimePoint> targets = grid_targets(f, 6, 6);
    double r = 2.0;
    GridFunction fr = parabolic_dilate(f, r);
    std::vector<SpaceTimePoint> scaled;
    for (const auto& p : targets) scaled.push_back(make_point({p.x[0] * r}, p.t * r * r));
    for (double alpha : {2.0, 1.3}) {
        std::vector<double> base = heat_potential(f, alpha, targets);
        std::vector<double> dil = heat_potential(fr, alpha, scaled);
        for (size_t i = 0; i < targets.size(); ++i)
            CHECK(dil[i] == doctest::Approx(std::pow(r, alpha) * base[i]).epsilon(1e-8));
    }
}

TEST_CASE("Duhamel: residual of the alpha=2 potential reproduces the source") {
    double prev = 0.0;
    for (int level = 0; level < 2; ++level) {
        int m = 16 << level;
        GridFunction f = sampled_source(m, m);
        GridFunction u = heat_potential_grid(f, 2.0);
        GridFunction r = heat_residual(u);
        // Compare against f on the matching interior cells.
        double sup = 0.0;
        std::array<int, 3> ix{0, 0, 0};
        for (int k = 0; k < r.time_cells(); ++k)
            for (int i = 0; i < r.cells()[0]; ++i) {
                ix[0] = i;
                std::array<int, 3> fx{i + 1, 0, 0};
                sup = std::max(sup,
                               std::abs(r.value(ix, k) - f.value(fx, k + 1)));
            }
        if (level == 1) {
            double factor = prev / sup;
            CHECK(factor > 2.5);
            CHECK(factor < 6.0);
        }
        prev = sup;
    }
    CHECK(prev < 0.05);
}

TEST_CASE("local potential domains") {
    GridFunction f = random_source(1, 20, 20, 61);
    SpaceTimePoint center = make_point({0.1}, 0.8);
    std::vector<SpaceTimePoint> targets = {center, make_point({-0.3}, 0.95)};

    std::vector<double> whole = local_potential(f, PotentialDomain::whole(), 2.0, targets);
    std::vector<double> plain = heat_potential(f, 2.0, targets);
    for (size_t i = 0; i < targets.size(); ++i) CHECK(whole[i] == plain[i]);

    // Monotone in the domain scale, for both families.
    for (auto maker : {&PotentialDomain::past_ball, &PotentialDomain::heat_ball}) {
        double last = 0.0;
        for (double r : {0.05, 0.2, 0.8, 3.2}) {
            double v = local_potential(f, maker(center, r), 2.0, {center})[0];
            CHECK(v >= last);
            CHECK(v <= plain[0] * (1.0 + 1e-12));
            last = v;
        }
    }

    // alpha = n+2 turns the kernel off: the potential is the plain integral
    // over the domain, which an explicit cell scan reproduces exactly.
    double r = 0.5;
    double via_potential =
        local_potential(f, PotentialDomain::past_ball(center, r), 3.0, {center})[0];
    double direct = 0.0;
    for (Eigen::Index flat = 0; flat < f.size(); ++flat) {
        SpaceTimePoint c = f.cell_center(flat);
        if (in_past_ball_rescaled(center, r, c)) direct += f.samples()[flat] * f.cell_volume();
    }
    CHECK(via_potential == doctest::Approx(direct).epsilon(1e-12));

    // Same bookkeeping ties the heat-ball domain to the ball-mass helper.
    double hb = local_potential(f, PotentialDomain::heat_ball(center, r), 3.0, {center})[0];
    CHECK(hb == doctest::Approx(heat_ball_mass(f, center, std::sqrt(r)).mass).epsilon(1e-12));
}

TEST_CASE("hedberg split") {
    GridFunction f = random_source(1, 20, 20, 71);
    SpaceTimePoint target = make_point({0.0}, 0.9);
    double whole = heat_potential(f, 2.0, {target})[0];

    double last_near = 0.0;
    for (double rho : {0.05, 0.15, 0.5, 2.0, 50.0}) {
        HedbergSplit split = hedberg_split(f, 2.0, rho, target);
        CHECK(split.near + split.far == doctest::Approx(whole).epsilon(1e-12));
        CHECK(split.near >= last_near);
        last_near = split.near;
    }
    // The ball pinches to zero width at the target time, so swallowing every
    // in-past cell takes a scale far beyond the domain diameter; a tiny ball
    // misses every cell.
    CHECK(hedberg_split(f, 2.0, 2e4, target).far == 0.0);
    CHECK(hedberg_split(f, 2.0, 1e-4, target).near == 0.0);
}

TEST_CASE("slab potential and norm ratio") {
    GridFunction f = random_source(1, 20, 20, 81);
    std::vector<SpaceTimePoint> targets = {make_point({0.2}, 0.9)};

    std::vector<double> everything = slab_potential(f, 2.0, {-1.0, 2.0}, targets);
    CHECK(everything[0] == heat_potential(f, 2.0, targets)[0]);
    CHECK(slab_potential(f, 2.0, {5.0, 6.0}, targets)[0] == 0.0);

    double ratio = slab_norm_ratio(f, 2.0, LpExponent::finite(2.0), LpExponent::finite(2.0),
                                   {0.0, 1.0});
    CHECK(ratio > 0.0);
    CHECK(std::isfinite(ratio));

    // delta = 1/p - 1/q must stay below alpha/(n+2).
    CHECK_THROWS_WITH_AS(
        slab_norm_ratio(f, 2.0, LpExponent::finite(1.0), LpExponent::infinity(), {0.0, 1.0}),
        doctest::Contains("1/p - 1/q"), std::invalid_argument);
    CHECK_THROWS_AS(slab_norm_ratio(f, 2.0, LpExponent::finite(2.0), LpExponent::finite(1.0),
                                    {0.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(slab_norm_ratio(f, 2.0, LpExponent::finite(2.0), LpExponent::finite(2.0),
                                    {5.0, 6.0}),
                    std::invalid_argument);
}

TEST_CASE("nonlinear potential") {
    GridFunction f = random_source(1, 16, 16, 91);
    std::vector<SpaceTimePoint> targets = {make_point({0.0}, 0.9), make_point({0.4}, 1.4)};
    PotentialParams params{2.0, 2.0, 3.0, LpExponent::finite(1.0)};

    GridFunction z(1, f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(), f.time_cells(),
                   Eigen::ArrayXd::Zero(f.size()));
    for (double v : nonlinear_potential(z, params, targets)) CHECK(v == 0.0);

    // Doubling the source scales the output by exactly 2^sigma.
    NonlinearOptions opt;
    opt.pad_space = 2.0;
    std::vector<double> base = nonlinear_potential(f, params, targets, opt);
    std::vector<double> doubled = nonlinear_potential(scale(f, 2.0), params, targets, opt);
    for (size_t i = 0; i < targets.size(); ++i) {
        CHECK(base[i] > 0.0);
        CHECK(doubled[i] == doctest::Approx(8.0 * base[i]).epsilon(1e-12));
    }

    // sigma = 1 composes two linear potentials; replicate by hand with the
    // same padding and compare.
    PotentialParams lin{1.5, 2.0, 1.0, LpExponent::finite(1.0)};
    std::vector<double> composed = nonlinear_potential(f, lin, targets, opt);
    int pad_cells = static_cast<int>(std::ceil(opt.pad_space / f.h()));
    int big_nx = f.cells()[0] + 2 * pad_cells;
    int extra_time = static_cast<int>(
        std::ceil((targets[1].t - f.t_hi()) / f.tau() - 1e-12));
    int big_nt = f.time_cells() + extra_time;
    Eigen::ArrayXd big = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(big_nx) * big_nt);
    for (int k = 0; k < f.time_cells(); ++k)
        for (int i = 0; i < f.cells()[0]; ++i)
            big[static_cast<Eigen::Index>(k) * big_nx + i + pad_cells] = f.value({i, 0, 0}, k);
    GridFunction padded(1, space_vec({f.space_lo()[0] - pad_cells * f.h()}), f.h(),
                        {big_nx, 1, 1}, f.t_lo(), f.tau(), big_nt, std::move(big));
    GridFunction inner = heat_potential_grid(padded, 2.0);
    std::vector<double> manual = heat_potential(inner, 1.5, targets);
    for (size_t i = 0; i < targets.size(); ++i)
        CHECK(composed[i] == doctest::Approx(manual[i]).epsilon(1e-9));

    // The grid variant is the same composition evaluated at the padded
    // grid's own cell centers; spot-check it against per-target evaluation.
    GridFunction on_grid = nonlinear_potential_grid(f, params, opt);
    std::vector<SpaceTimePoint> centers;
    std::vector<Eigen::Index> flats;
    Eigen::Index space = on_grid.space_size();
    for (Eigen::Index j = 0; j < 5; ++j) {
        Eigen::Index flat =
            (on_grid.time_cells() - 1 - 2 * j) * space + (space / 6) * (j + 1);
        flats.push_back(flat);
        centers.push_back(on_grid.cell_center(flat));
    }
    std::vector<double> direct = nonlinear_potential(f, params, centers, opt);
    for (size_t i = 0; i < flats.size(); ++i)
        CHECK(on_grid.samples()[flats[i]] == doctest::Approx(direct[i]).epsilon(1e-8));

    // Estimate-parameter validation names the failed constraint.
    CHECK_NOTHROW(validate_potential_params(1, params));
    PotentialParams bad_sigma{2.0, 2.0, 1.5, LpExponent::finite(1.0)};
    CHECK_THROWS_WITH_AS(validate_potential_params(1, bad_sigma), doctest::Contains("sigma"),
                         std::invalid_argument);
    PotentialParams bad_r{2.0, 2.0, 3.0, LpExponent::finite(2.0)};
    CHECK_THROWS_WITH_AS(validate_potential_params(1, bad_r), doctest::Contains("r <"),
                         std::invalid_argument);
}

TEST_CASE("maximal functions: constants, indicators, and structure") {
    // Constants average to themselves for any ladder that catches some cells.
    for (int n : {1, 2}) {
        GridFunction c = scale(add_scalar(random_source(n, 8, 8, 0), 1.0), 0.0);
        GridFunction ones = add_scalar(c, 1.7);
        SpaceTimePoint target = ones.cell_center(ones.size() / 2);
        RadiusGrid ladder = default_radius_grid(ones);
        CHECK(maximal_M(ones, target, ladder).value == doctest::Approx(1.7).epsilon(1e-14));
        CHECK(maximal_Mhat(ones, target, ladder).value == doctest::Approx(1.7).epsilon(1e-14));
    }

    // Indicator data: every average lies in [0, 1].
    GridFunction ind = GridFunction::from_function(
        1, space_vec({-1.0}), 2.0 / 24, {24, 1, 1}, 0.0, 1.0 / 24, 24,
        [](const SpaceVec& x, double t) {
            return (std::abs(x[0] + 0.2) < 0.3 && t > 0.2 && t < 0.6) ? 1.0 : 0.0;
        });
    RadiusGrid ladder = default_radius_grid(ind);
    GridFunction mh = maximal_Mhat_grid(ind, ladder);
    CHECK(mh.samples().maxCoeff() <= 1.0 + 1e-12);
    CHECK(mh.samples().maxCoeff() == doctest::Approx(1.0));

    // The reported value dominates every individual ball average.
    GridFunction f = random_source(1, 24, 24, 101);
    SpaceTimePoint target = make_point({0.25}, 0.8);
    MaximalResult m = maximal_M(f, target, ladder);
    for (double r : ladder.radii) {
        BallMass bm = heat_ball_mass(f, target, r);
        if (bm.volume > 0.0) CHECK(bm.mass / bm.volume <= m.value * (1.0 + 1e-12));
    }
    // And the maximizing radius reproduces it.
    BallMass best = heat_ball_mass(f, target, m.radius);
    CHECK(best.mass / best.volume == doctest::Approx(m.value).epsilon(1e-12));
}

TEST_CASE("maximal function matches a dense-ladder scan") {
    GridFunction ind = GridFunction::from_function(
        1, space_vec({-1.0}), 2.0 / 32, {32, 1, 1}, 0.0, 1.0 / 32, 32,
        [](const SpaceVec& x, double t) {
            return (std::abs(x[0]) < 0.1 && t > 0.3 && t < 0.4) ? 1.0 : 0.0;
        });
    SpaceTimePoint target = make_point({0.03125}, 0.703125);
    RadiusGrid coarse = default_radius_grid(ind);
    RadiusGrid dense = RadiusGrid::geometric(coarse.radii.front(), coarse.radii.back(),
                                             64 * 10);
    double v_coarse = maximal_M(ind, target, coarse).value;
    double v_dense = 0.0;
    for (double r : dense.radii) {
        BallMass bm = heat_ball_mass(ind, target, r);
        if (bm.volume > 0.0) v_dense = std::max(v_dense, bm.mass / bm.volume);
    }
    CHECK(v_coarse == doctest::Approx(v_dense).epsilon(0.02));
}

TEST_CASE("heat-ball averages are dominated by cylinder averages") {
    GeometryConstants geo = geometry_constants(1);
    RadiusGrid ladder = RadiusGrid::geometric(0.05, 4.0, 40);
    RadiusGrid mapped = ladder;
    for (double& r : mapped.radii) r *= geo.r0;

    for (unsigned seed = 0; seed < 5; ++seed) {
        GridFunction f = random_source(1, 20, 20, 200 + seed);
        SpaceTimePoint target = f.cell_center(static_cast<Eigen::Index>(
            (seed * 977 + 311) % f.size()));
        // Structural half: each heat ball sits inside the matching cylinder,
        // so its measured mass can never exceed the cylinder's.
        for (double r : ladder.radii) {
            BallMass e = heat_ball_mass(f, target, r);
            BallMass q = metric_ball_mass(f, target, geo.r0 * r);
            CHECK(e.mass <= q.mass * (1.0 + 1e-12));
            CHECK(e.volume <= q.volume * (1.0 + 1e-12));
        }
        // Closed-form half: |E_r| / |Q_{r0 r}| is the fixed ratio C(n).
        double vol_ratio = ball_volume(BallKind::heat_ball, 1, 1.0).value /
                           ball_volume(BallKind::metric_ball, 1, geo.r0).value;
        CHECK(vol_ratio == doctest::Approx(geo.ball_cylinder_ratio).epsilon(1e-12));
        // Composite bound, with slack for the measured-volume normalization.
        double m = maximal_M(f, target, ladder).value;
        double mh = maximal_Mhat(f, target, mapped).value;
        if (m > 0.0) CHECK(m <= (1.0 / geo.ball_cylinder_ratio) * mh * 1.15);
    }
}

TEST_CASE("maximal grid variant and scale covariance") {
    GridFunction f = random_source(1, 16, 16, 301);
    RadiusGrid ladder = default_radius_grid(f);
    GridFunction mg = maximal_M_grid(f, ladder);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20; ++i) {
        Eigen::Index flat = static_cast<Eigen::Index>(rng() % f.size());
        CHECK(mg.samples()[flat] == maximal_M(f, f.cell_center(flat), ladder).value);
    }

    // Dilating data, target, and ladder together changes nothing.
    double r = 2.0;
    GridFunction fr = parabolic_dilate(f, r);
    RadiusGrid scaled = ladder;
    for (double& v : scaled.radii) v *= r;
    SpaceTimePoint p = f.cell_center(137);
    SpaceTimePoint pr = make_point({p.x[0] * r}, p.t * r * r);
    MaximalResult base = maximal_M(f, p, ladder);
    MaximalResult dil = maximal_M(fr, pr, scaled);
    CHECK(dil.value == doctest::Approx(base.value).epsilon(1e-12));
    CHECK(dil.radius == doctest::Approx(r * base.radius).epsilon(1e-12));
}
