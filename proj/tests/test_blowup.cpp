// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <heatpot/blowup.hpp>
#include <heatpot/grid.hpp>
#include <heatpot/kernel.hpp>

#include "oracles.hpp"

using namespace heatpot;

namespace {

// Independent recomputations, written before the implementation and frozen.

// Bump and ramp profiles longhand.
double hat(double u) {
    const double q = 1.0 - u * u;
    return q <= 0.0 ? 0.0 : std::exp(1.0 - 1.0 / q);
}

double ramp(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double rise = std::exp(-1.0 / u);
    return rise / (rise + std::exp(-1.0 / (1.0 - u)));
}

// Gaussian mass of the unit ball centered one unit off the origin, by three
// unrelated reductions: an error function, a Bessel angular integral, and a
// hyperbolic-sine angular integral.
double offset_ball_mass_1d() { return 0.5 * std::erf(2.0); }

double offset_ball_mass_2d() {
    const double radial = oracle::simpson(
        [](double rho) {
            return rho * std::exp(-rho * rho) * std::cyl_bessel_i(0.0, 2.0 * rho);
        },
        0.0, 1.0, 1 << 10);
    return 2.0 * std::exp(-1.0) * radial;
}

double offset_ball_mass_3d() {
    const double radial = oracle::simpson(
        [](double rho) { return rho * std::exp(-rho * rho) * std::sinh(2.0 * rho); }, 0.0, 1.0,
        1 << 10);
    return 2.0 / std::sqrt(oracle::kPi) * std::exp(-1.0) * radial;
}

// L^{3/2} norm of the 1-d kernel over a unit time window by raw 2-d
// quadrature; tau = sig^4 absorbs the endpoint singularity.
double kernel_norm_three_halves_direct() {
    auto slice = [](double tau) {
        const double reach = 20.0 * std::sqrt(tau);
        return oracle::simpson(
            [&](double x) { return std::pow(oracle::phi(1, x * x, tau), 1.5); }, -reach, reach,
            1 << 9);
    };
    const double integral = oracle::simpson(
        [&](double sig) { return 4.0 * sig * sig * sig * slice(std::pow(sig, 4.0)); }, 1e-8,
        1.0, 1 << 9);
    return std::pow(integral, 2.0 / 3.0);
}

// Kernel minimum over the closed window {|y|^2 <= 1/2, 1/2 <= s <= 1} by a
// corner-inclusive grid scan.
double kernel_window_floor_scan(int n) {
    double lowest = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i)
        for (int k = 0; k <= 200; ++k) {
            const double dist_sq = 0.5 * i / 200.0;
            const double s = 0.5 + 0.5 * k / 200.0;
            lowest = std::min(lowest, oracle::phi(n, dist_sq, s));
        }
    return lowest;
}

// Unit bump space-time mass by raw midpoint sums, no radial reduction.
double bump_mass_midpoint_1d() {
    const int N = 400;
    double total = 0.0;
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) {
            const double eta = -1.0 + 2.0 * (i + 0.5) / N;
            const double zeta = -1.0 + (k + 0.5) / N;
            total += hat(std::abs(eta)) * hat(2.0 * zeta + 1.0);
        }
    return total * (2.0 / N) * (1.0 / N);
}

double bump_mass_midpoint_2d() {
    const int N = 220;
    double spatial = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const double a = -1.0 + 2.0 * (i + 0.5) / N;
            const double b = -1.0 + 2.0 * (j + 0.5) / N;
            spatial += hat(std::sqrt(a * a + b * b));
        }
    spatial *= 4.0 / (double(N) * N);
    double gate = 0.0;
    for (int k = 0; k < N; ++k) {
        const double zeta = -1.0 + (k + 0.5) / N;
        gate += hat(2.0 * zeta + 1.0);
    }
    return spatial * gate / N;
}

// Kernel-weighted unit bump mass seen from its own apex, raw midpoint.
double apex_mass_midpoint_1d() {
    const int N = 600;
    double total = 0.0;
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) {
            const double y = -1.0 + 2.0 * (i + 0.5) / N;
            const double zeta = -1.0 + (k + 0.5) / N;
            total += oracle::phi(1, y * y, -zeta) * hat(std::abs(y)) * hat(2.0 * zeta + 1.0);
        }
    return total * (2.0 / N) * (1.0 / N);
}

// Tower solution by the generic 1-d potential oracle, one window at a time.
double tower_u_oracle(const ScheduleA& sch, double x, double t) {
    double total = 0.0;
    for (int j = 0; j < sch.count; ++j) {
        const double T = sch.T[j], r = sch.r[j], amp = sch.amplitude[j];
        const double sr = std::sqrt(r);
        auto f = [&](double y, double s) {
            return amp * hat(std::abs(y) / sr) * hat(2.0 * (s - T) / r + 1.0);
        };
        total += oracle::heat_potential_1d(2.0, f, -sr, sr, T - r, T, x, t);
    }
    return total;
}

// Coupled-chain solution by the same oracle; lower_pole picks the side.
double collar_pair_oracle(const ScheduleB& sch, bool lower_pole, double x, double t) {
    double total = 1.0 + sch.amplification * oracle::phi(1, x * x, t);
    const double expo = lower_pole ? sch.q : sch.p;
    for (int j = 0; j < sch.count; ++j) {
        const double T = sch.T[j], tj = sch.t[j], aj = sch.a[j], eps = sch.eps[j];
        auto f = [&](double y, double s) {
            const double cut = ramp((s - (tj - eps)) / (0.5 * eps)) *
                               ramp((aj + eps - s) / (0.5 * eps)) *
                               ramp((aj + eps - s - 0.25 * y * y) / (0.5 * eps));
            return cut * expo * std::pow(T - s, -expo - 1.0);
        };
        const double reach = 2.0 * std::sqrt(aj - tj + 2.0 * eps);
        total += oracle::heat_potential_1d(2.0, f, -reach, reach, tj - eps, aj + eps, x, t);
    }
    return total;
}

TimeProfile linear_decay() {
    return [](double t) { return t; };
}

TimeProfile log_growth() {
    return [](double t) { return std::log(1.0 / t); };
}

}  // namespace

TEST_CASE("bump profile and smooth ramp have the frozen shapes") {
    CHECK(mollifier(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mollifier(1.0) == 0.0);
    CHECK(mollifier(-1.0) == 0.0);
    CHECK(mollifier(2.5) == 0.0);
    CHECK(mollifier(0.5) == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)).epsilon(1e-15));
    for (double u : {0.05, 0.3, 0.62, 0.9, 0.999}) {
        CHECK(mollifier(u) == doctest::Approx(hat(u)).epsilon(1e-15));
        CHECK(mollifier(-u) == doctest::Approx(mollifier(u)).epsilon(1e-15));
    }
    CHECK(mollifier(0.2) > mollifier(0.4));
    CHECK(mollifier(0.4) > mollifier(0.8));

    CHECK(smooth_step(-1.0) == 0.0);
    CHECK(smooth_step(0.0) == 0.0);
    CHECK(smooth_step(1.0) == 1.0);
    CHECK(smooth_step(7.0) == 1.0);
    CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    for (double u : {0.1, 0.3, 0.7, 0.95}) {
        CHECK(smooth_step(u) == doctest::Approx(ramp(u)).epsilon(1e-15));
        CHECK(smooth_step(u) + smooth_step(1.0 - u) == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(smooth_step(0.2) < smooth_step(0.4));
    CHECK(smooth_step(0.4) < smooth_step(0.6));
}

TEST_CASE("bump window vanishes off its box and peaks at the apex center") {
    BumpProfile b{1, 1.0 / 16.0, 0.02, 3.0};
    CHECK(b.value(space_vec({0.0}), b.T - 0.5 * b.r) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(b.value(space_vec({0.0}), b.T) == 0.0);
    CHECK(b.value(space_vec({0.0}), b.T - b.r) == 0.0);
    CHECK(b.value(space_vec({0.0}), b.T + 1e-9) == 0.0);
    CHECK(b.value(space_vec({std::sqrt(b.r)}), b.T - 0.5 * b.r) == 0.0);
    CHECK(b.value(space_vec({0.5}), b.T - 0.5 * b.r) == 0.0);

    const double y = 0.07, s = b.T - 0.3 * b.r;
    const double expected =
        3.0 * hat(y / std::sqrt(b.r)) * hat(2.0 * (s - b.T) / b.r + 1.0);
    CHECK(b.value(space_vec({y}), s) == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(b.value(space_vec({0.0, 0.0}), s), std::invalid_argument);
}

TEST_CASE("off-center Gaussian ball mass matches three independent reductions") {
    const double a1 = gaussian_ball_constant(1);
    const double a2 = gaussian_ball_constant(2);
    const double a3 = gaussian_ball_constant(3);
    CHECK(a1 == doctest::Approx(offset_ball_mass_1d()).epsilon(1e-9));
    CHECK(a2 == doctest::Approx(offset_ball_mass_2d()).epsilon(1e-7));
    CHECK(a3 == doctest::Approx(offset_ball_mass_3d()).epsilon(1e-7));
    CHECK(a1 == doctest::Approx(0.4976611325094765).epsilon(1e-12));
    for (double a : {a1, a2, a3}) {
        CHECK(a > 0.0);
        CHECK(a < 1.0);
    }
    CHECK(a1 > a2);
    CHECK(a2 > a3);
    CHECK_THROWS_AS(gaussian_ball_constant(0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_ball_constant(4), std::invalid_argument);
}

TEST_CASE("kernel norm constant agrees with direct quadrature") {
    CHECK(potential_supnorm_constant(1) ==
          doctest::Approx(kernel_norm_three_halves_direct()).epsilon(1e-5));
    for (int n : {1, 2, 3}) {
        CHECK(potential_supnorm_constant(n) > 0.0);
        CHECK(potential_supnorm_constant(n) < 1.0);
    }
    CHECK_THROWS_AS(potential_supnorm_constant(0), std::invalid_argument);
}

TEST_CASE("tower schedule pins times, widths, heights, and constants") {
    const ScheduleA sch = build_schedule_A(1, 4.0, linear_decay(), 4);
    REQUIRE(sch.count == 4);
    double eps_sum = 0.0;
    for (int j = 0; j < 4; ++j) {
        CHECK(sch.T[j] == doctest::Approx(std::pow(8.0, -j) / 16.0).epsilon(1e-15));
        CHECK(sch.r[j] == doctest::Approx(std::pow(sch.T[j], 4.0 / 3.0)).epsilon(1e-14));
        CHECK(sch.eps[j] == doctest::Approx(std::sqrt(sch.T[j])).epsilon(1e-14));
        CHECK(sch.amplitude[j] ==
              doctest::Approx(sch.eps[j] / std::pow(sch.r[j], 1.5)).epsilon(1e-13));
        CHECK(sch.r[j] < 0.5 * sch.T[j]);
        CHECK(sch.eps[j] < 1.0);
        eps_sum += sch.eps[j];
        if (j > 0) CHECK(sch.T[j] < sch.T[j - 1] - sch.r[j - 1]);
    }
    CHECK(eps_sum <= 1.0);
    CHECK(sch.kernel_floor ==
          doctest::Approx(kernel_window_floor_scan(1)).epsilon(1e-12));
    CHECK(sch.profile_mass == doctest::Approx(bump_mass_midpoint_1d()).epsilon(1e-3));
    CHECK(sch.apex_weight == doctest::Approx(apex_mass_midpoint_1d()).epsilon(1e-3));
    CHECK(sch.apex_weight > 0.1);
    CHECK(sch.apex_weight < 0.4);

    const ScheduleA plane = build_schedule_A(2, 3.0, linear_decay(), 2);
    CHECK(plane.kernel_floor ==
          doctest::Approx(kernel_window_floor_scan(2)).epsilon(1e-12));
    CHECK(plane.profile_mass == doctest::Approx(bump_mass_midpoint_2d()).epsilon(1e-3));

    // A target that decays too slowly at the first seed forces halving.
    const ScheduleA slow = build_schedule_A(
        1, 4.0, [](double t) { return std::min(1.0, 100.0 * t); }, 4);
    CHECK(slow.T[0] == doctest::Approx(1.0 / 256.0).epsilon(1e-15));
    double slow_sum = 0.0;
    for (int j = 0; j < 4; ++j) slow_sum += slow.eps[j];
    CHECK(slow_sum <= 1.0);

    CHECK_THROWS_AS(build_schedule_A(1, 3.0, linear_decay(), 4), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_A(1, 2.9, linear_decay(), 4), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_A(0, 4.0, linear_decay(), 4), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_A(1, 4.0, linear_decay(), 0), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_A(1, 4.0, linear_decay(), 4, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_A(1, 4.0, TimeProfile{}, 4), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_A(1, 4.0, [](double t) { return 1.0 + t; }, 4),
                    std::invalid_argument);
    // Heights shaped like an inverse log never sum below 1 at any seed.
    CHECK_THROWS_AS(build_schedule_A(
                        1, 4.0, [](double t) { return 4.0 / (1.0 + std::abs(std::log(t))); }, 4),
                    ToleranceError);
}

TEST_CASE("tower potential matches the window-by-window oracle") {
    const ScheduleA sch = build_schedule_A(1, 4.0, linear_decay(), 4);
    const ConstructionOutput out = construct_A(sch);

    struct Probe {
        double x, t;
    };
    for (const Probe pr : {Probe{0.0, sch.T[0]}, Probe{0.05, 0.055}, Probe{0.0, 0.2},
                           Probe{0.0, sch.T[1]}}) {
        const double lib = out.u(space_vec({pr.x}), pr.t);
        const double ref = tower_u_oracle(sch, pr.x, pr.t);
        CHECK(lib == doctest::Approx(ref).epsilon(2e-3));
        CHECK(lib > 0.0);
    }

    // Below every window the potential has not switched on yet.
    CHECK(out.u(space_vec({0.0}), 1e-5) == 0.0);
    CHECK(out.u(space_vec({0.3}), -1.0) == 0.0);

    // The source is the bump sum itself.
    CHECK(out.Hu(space_vec({0.0}), sch.T[0] - 0.5 * sch.r[0]) ==
          doctest::Approx(sch.amplitude[0]).epsilon(1e-14));
    CHECK(out.Hu(space_vec({0.0}), 0.02) == 0.0);
    CHECK(out.Hv(space_vec({0.4}), 0.3) == 0.0);

    // The kernel quotient is singular only at the spacetime origin and
    // carries the exact axis power.
    CHECK_THROWS_AS(out.v(space_vec({0.0}), 0.0), std::domain_error);
    CHECK(out.v(space_vec({0.2}), 0.0) == 0.0);
    CHECK(out.v(space_vec({0.2}), -0.5) == 0.0);
    const double base = std::pow(4.0 * kPi, -0.5) / sch.kernel_floor;
    for (double t : {1e-6, 1e-2, 1.0}) {
        CHECK(out.v(space_vec({0.0}), t) * std::sqrt(t) ==
              doctest::Approx(base).epsilon(1e-12));
    }

    CHECK_THROWS_AS(out.u(space_vec({0.0, 0.0}), 0.1), std::invalid_argument);
    ScheduleA broken = sch;
    broken.T.pop_back();
    CHECK_THROWS_AS(construct_A(broken), std::invalid_argument);
}

TEST_CASE("tower certificate accepts the default build") {
    const ScheduleA sch = build_schedule_A(1, 4.0, linear_decay(), 4);
    const ConstructionOutput out = construct_A(sch);
    CertifySpec spec;
    spec.window_samples = 200;
    spec.ambient_samples = 1000;
    const CheckReport rep = certify_A(out, spec);

    CHECK(rep.check_name == "blowup-tower");
    CHECK(rep.pass);
    CHECK(rep.corpus_size == 4);
    REQUIRE(rep.ratios.size() == 4);
    for (std::size_t j = 1; j < rep.ratios.size(); ++j)
        CHECK(rep.ratios[j].ratio > rep.ratios[j - 1].ratio);
    CHECK(rep.ratios.back().ratio > 1.0);
    CHECK(rep.params.at("defeat_first_exceed") >= 1.0);
    CHECK(rep.params.at("defeat_first_exceed") <= 3.0);
    CHECK(rep.params.at("apex_margin_min") >= 0.95);
    CHECK(rep.params.at("domination_violations") == 0.0);
    CHECK(rep.params.at("windows_disjoint") == 1.0);
    CHECK(rep.params.at("schedule_ok") == 1.0);
    CHECK(rep.scale_invariance_defect <= 1e-10);
    CHECK(rep.worst_ratio > 0.0);
    CHECK(rep.worst_ratio < 0.26);
    CHECK(rep.fitted_constant == doctest::Approx(sch.apex_weight).epsilon(1e-15));
}

TEST_CASE("tower potential solves its equation on refining grids") {
    const ScheduleA sch = build_schedule_A(1, 4.0, linear_decay(), 4);
    const ConstructionOutput out = construct_A(sch, EvalOptions{1e-9, 16});

    // The box sits inside the first window's active span, clear of the
    // switch-on corner where the gate's flat tail makes high derivatives
    // spike before settling. The error is measured in the mean-square sense:
    // the sup norm is pinned to the source needle at the apex, which reaches
    // its asymptotic range only at resolutions too fine for a unit test.
    std::vector<double> errs;
    for (const auto [nx, nt] : std::vector<std::array<int, 2>>{{16, 12}, {32, 24}, {64, 48}}) {
        const GridFunction g = GridFunction::from_function(
            1, space_vec({-0.2}), 0.4 / nx, {nx, 1, 1}, 0.042, 0.024 / nt, nt, out.u,
            SampleSign::non_negative);
        const GridFunction res = heat_residual(g);
        double sq_sum = 0.0;
        long cells = 0;
        for (int i = 0; i < res.cells()[0]; ++i)
            for (int k = 0; k < res.time_cells(); ++k) {
                const SpaceVec xc = res.cell_center_space({i, 0, 0});
                const double tc = res.cell_center_time(k);
                const double e = res.value({i, 0, 0}, k) - out.Hu(xc, tc);
                sq_sum += e * e;
                ++cells;
            }
        errs.push_back(std::sqrt(sq_sum / cells));
    }
    REQUIRE(errs.size() == 3);
    const double order1 = std::log2(errs[0] / errs[1]);
    const double order2 = std::log2(errs[1] / errs[2]);
    CHECK(order1 >= 1.7);
    CHECK(order1 <= 2.3);
    CHECK(order2 >= 1.7);
    CHECK(order2 <= 2.3);
}

TEST_CASE("collar schedule pins exponents, times, and margins") {
    const ScheduleB sch = build_schedule_B(1, Rational(4), Rational(3), log_growth(), 3);
    REQUIRE(sch.count == 3);
    CHECK(sch.p_exact == Rational(5, 11));
    CHECK(sch.q_exact == Rational(4, 11));
    CHECK(sch.lambda * sch.q_exact == sch.p_exact + Rational(1));
    CHECK(sch.sigma * sch.p_exact == sch.q_exact + Rational(1));
    CHECK(sch.p == doctest::Approx(5.0 / 11.0).epsilon(1e-15));
    CHECK(sch.q == doctest::Approx(4.0 / 11.0).epsilon(1e-15));

    double need_max = 0.0;
    for (int j = 0; j < 3; ++j) {
        const double T = sch.T[j], tj = sch.t[j], aj = sch.a[j], eps = sch.eps[j];
        CHECK(0.0 < tj);
        CHECK(tj < aj);
        CHECK(aj < T);
        CHECK(aj + 2.0 * eps < T);
        CHECK(eps < 0.5 * tj);
        // matching time: the pole profile meets the kernel's axis power
        CHECK(std::pow(T - tj, -sch.p) ==
              doctest::Approx(std::pow(tj, -0.5)).epsilon(1e-10));
        // growth time: the lower profile already beats the indexed target
        CHECK(std::pow(T - aj, -sch.q) > (j + 1) * std::log(1.0 / aj));
        // the collar profiles stay within a factor 2 of the matching value
        CHECK(eps < (std::pow(2.0, 1.0 / sch.p) - 1.0) * (T - tj));
        CHECK(eps < (std::pow(2.0, 1.0 / sch.q) - 1.0) * (T - tj));
        // collar smallness certificate
        CHECK(sch.collar_norm[j] <= std::pow(T - tj, -sch.q) * (1.0 + 1e-12));
        const double beta = 4.0 * (aj + 2.0 * eps - tj) / (tj - eps);
        need_max = std::max(need_max, 2.0 * std::pow(tj, -0.5) *
                                          std::sqrt(4.0 * kPi * (aj + eps)) *
                                          std::exp(0.25 * beta));
        if (j > 0) {
            CHECK(sch.a[j] + sch.eps[j] < sch.t[j - 1] - sch.eps[j - 1]);
            CHECK(sch.T[j] ==
                  std::min(sch.T[j - 1] / 8.0, 0.5 * (sch.t[j - 1] - sch.eps[j - 1])));
        }
    }
    CHECK(sch.amplification == doctest::Approx(need_max).epsilon(1e-12));
    CHECK(sch.slice_constant == doctest::Approx(0.5 * std::erf(2.0)).epsilon(1e-9));
    CHECK(sch.holder_constant == potential_supnorm_constant(1));

    CHECK_THROWS_AS(build_schedule_B(1, Rational(4), Rational(1), log_growth(), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_B(1, Rational(2), Rational(1), log_growth(), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_B(1, Rational(4), Rational(11, 4), log_growth(), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_B(1, Rational(3), Rational(4), log_growth(), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_B(1, Rational(4), Rational(3), linear_decay(), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_B(1, Rational(4), Rational(3), log_growth(), 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_schedule_B(1, Rational(4), Rational(3), log_growth(), 3, 1.5),
                    std::invalid_argument);
    // A target too large for the lower pole profile to overtake.
    CHECK_THROWS_AS(
        build_schedule_B(
            1, Rational(4), Rational(3), [](double t) { return 1e7 * std::log(1.0 / t); }, 1),
        ToleranceError);
}

TEST_CASE("collar pair matches the oracle and its sources are the cutoffs") {
    const ScheduleB sch = build_schedule_B(1, Rational(4), Rational(3), log_growth(), 2);
    const ConstructionOutput out = construct_B(sch);

    struct Probe {
        double x, t;
    };
    const double mid = 0.5 * (sch.t[0] + sch.a[0]);
    for (const Probe pr : {Probe{0.0, sch.a[0]}, Probe{0.3, mid}}) {
        const double lib_u = out.u(space_vec({pr.x}), pr.t);
        const double lib_v = out.v(space_vec({pr.x}), pr.t);
        CHECK(lib_u == doctest::Approx(collar_pair_oracle(sch, false, pr.x, pr.t)).epsilon(2e-3));
        CHECK(lib_v == doctest::Approx(collar_pair_oracle(sch, true, pr.x, pr.t)).epsilon(2e-3));
        CHECK(lib_u > 1.0);
        CHECK(lib_v > 1.0);
    }

    // Inside the inner region the cutoff is exactly 1, so the sources are
    // the pole derivatives themselves.
    CHECK(out.Hu(space_vec({0.0}), mid) ==
          doctest::Approx(sch.p * std::pow(sch.T[0] - mid, -sch.p - 1.0)).epsilon(1e-14));
    CHECK(out.Hv(space_vec({0.0}), mid) ==
          doctest::Approx(sch.q * std::pow(sch.T[0] - mid, -sch.q - 1.0)).epsilon(1e-14));
    // Outside the outer region both sources vanish identically.
    CHECK(out.Hu(space_vec({0.0}), sch.t[0] - sch.eps[0]) == 0.0);
    CHECK(out.Hu(space_vec({3.0}), mid) == 0.0);
    CHECK(out.Hu(space_vec({0.0}), sch.T[0]) == 0.0);
    CHECK(out.Hv(space_vec({0.0}), sch.T[0]) == 0.0);

    // Before time zero the pair is exactly the constant 1.
    CHECK(out.u(space_vec({0.7}), -0.5) == 1.0);
    CHECK(out.v(space_vec({0.7}), -0.5) == 1.0);
    CHECK(out.u(space_vec({0.0}), 0.0) == 1.0);

    ScheduleB broken = sch;
    broken.a.pop_back();
    CHECK_THROWS_AS(construct_B(broken), std::invalid_argument);
}

TEST_CASE("collar certificate accepts the default build") {
    const ScheduleB sch = build_schedule_B(1, Rational(4), Rational(3), log_growth(), 3);
    const ConstructionOutput out = construct_B(sch);
    CertifySpec spec;
    spec.window_samples = 120;
    spec.ambient_samples = 400;
    const CheckReport rep = certify_B(out, spec);

    CHECK(rep.check_name == "blowup-coupled");
    CHECK(rep.pass);
    CHECK(rep.corpus_size == 3);
    REQUIRE(rep.ratios.size() == 3);
    for (std::size_t j = 1; j < rep.ratios.size(); ++j)
        CHECK(rep.ratios[j].ratio > rep.ratios[j - 1].ratio);
    CHECK(rep.params.at("identities_exact") == 1.0);
    CHECK(rep.params.at("lower_margin_min") >= 1.0 - 1e-6);
    CHECK(rep.params.at("domination_violations") == 0.0);
    CHECK(rep.params.at("ambient_source_violations") == 0.0);
    CHECK(rep.params.at("positivity_ok") == 1.0);
    CHECK(rep.params.at("growth_floor_margin") >= 1.0 - 1e-6);
    CHECK(rep.worst_ratio > 0.0);
    CHECK(rep.worst_ratio < 0.5);
    CHECK(rep.scale_invariance_defect < 1e-14);
}

TEST_CASE("certificates reject the other construction's output") {
    const ScheduleA tower_sch = build_schedule_A(1, 4.0, linear_decay(), 2);
    const ScheduleB collar_sch = build_schedule_B(1, Rational(4), Rational(3), log_growth(), 1);
    const ConstructionOutput tower = construct_A(tower_sch);
    const ConstructionOutput collar = construct_B(collar_sch);
    CHECK_THROWS_AS(certify_B(tower, CertifySpec{}), std::invalid_argument);
    CHECK_THROWS_AS(certify_A(collar, CertifySpec{}), std::invalid_argument);
}
