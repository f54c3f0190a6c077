// SPDX-License-Identifier: Apache-2.0
#include "heatpot/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace heatpot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class F>
double simpson(F&& f, double a, double b, int panels) {
    // panels must be even; classic composite Simpson.
    const double h = (b - a) / panels;
    double odd = 0.0, even = 0.0;
    for (int i = 1; i < panels; i += 2) odd += f(a + i * h);
    for (int i = 2; i < panels; i += 2) even += f(a + i * h);
    return (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0;
}

}  // namespace

double heat_kernel(const SpaceVec& x, double t) {
    if (!(t > 0.0)) return 0.0;
    const int n = static_cast<int>(x.size());
    require_dimension(n);
    return std::exp(-x.squaredNorm() / (4.0 * t)) / std::pow(4.0 * kPi * t, 0.5 * n);
}

double heat_kernel_log(const SpaceVec& x, double t) {
    if (!(t > 0.0)) return -kInf;
    const int n = static_cast<int>(x.size());
    require_dimension(n);
    return -0.5 * n * std::log(4.0 * kPi * t) - x.squaredNorm() / (4.0 * t);
}

double heat_kernel_pow(const SpaceVec& x, double t, double e) {
    if (!(t > 0.0)) return 0.0;
    return std::exp(e * heat_kernel_log(x, t));
}

double potential_exponent(int n, double alpha) {
    require_dimension(n);
    require(alpha > 0.0 && alpha < n + 2, "requires 0 < alpha < n+2");
    return (n + 2 - alpha) / n;
}

double fractional_kernel(const SpaceVec& x, double t, double alpha) {
    const int n = static_cast<int>(x.size());
    return heat_kernel_pow(x, t, potential_exponent(n, alpha));
}

double kernel_pow_slice_integral(int n, double beta, double tau) {
    require_dimension(n);
    require(beta > 0.0, "requires beta > 0");
    require(tau > 0.0, "requires tau > 0");
    const double e = 0.5 * n * (beta - 1.0);
    return std::exp(-e * std::log(4.0 * kPi) - 0.5 * n * std::log(beta) - e * std::log(tau));
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

bool in_heat_ball(const SpaceTimePoint& center, BallRadius r, const SpaceTimePoint& q) {
    require(center.dim() == q.dim(), "requires points of equal dimension");
    const double dt = center.t - q.t;
    if (r.is_infinite()) return dt > 0.0;
    const double rv = r.value();
    if (rv == 0.0) return false;
    const int n = center.dim();
    // Phi(x-y, t-s) > r^-n, compared in log space.
    return heat_kernel_log(SpaceVec(center.x - q.x), dt) > -n * std::log(rv);
}

bool in_metric_ball(const SpaceTimePoint& center, double r, const SpaceTimePoint& q) {
    require(r >= 0.0, "requires r >= 0");
    return parabolic_distance(center, q) < r;
}

bool in_past_metric_ball(const SpaceTimePoint& center, double r, const SpaceTimePoint& q) {
    return q.t < center.t && in_metric_ball(center, r, q);
}

bool in_past_ball_rescaled(const SpaceTimePoint& center, double r, const SpaceTimePoint& q) {
    require(r >= 0.0, "requires r >= 0");
    return in_past_metric_ball(center, std::sqrt(r), q);
}

bool in_heat_ball_rescaled(const SpaceTimePoint& center, double r, const SpaceTimePoint& q) {
    require(r >= 0.0, "requires r >= 0");
    return in_heat_ball(center, BallRadius(std::sqrt(r)), q);
}

double heat_ball_depth(double r) {
    require(r > 0.0 && std::isfinite(r), "requires finite r > 0");
    return r * r / (4.0 * kPi);
}

double heat_ball_slice_radius_sq(int n, double r, double tau) {
    require_dimension(n);
    if (!(tau > 0.0) || tau >= heat_ball_depth(r)) return 0.0;
    return 2.0 * n * tau * std::log(r * r / (4.0 * kPi * tau));
}

double heat_ball_max_radius(int n, double r) {
    require_dimension(n);
    // The slice radius 2 n tau log(r^2/(4 pi tau)) peaks at tau = r^2/(4 pi e).
    return r * std::sqrt(n / (2.0 * kPi * std::exp(1.0)));
}

// ---------------------------------------------------------------------------
// Volumes
// ---------------------------------------------------------------------------

namespace {

// |E_1(0,0)| by radial quadrature. Substituting 4 pi tau = exp(-w^2) turns the
// slice-volume integral into a smooth rapidly decaying integrand in w.
double unit_heat_ball_volume(int n) {
    const double wn = unit_ball_volume(n);
    auto g = [&](double w) {
        const double u = w * w;
        const double tau = std::exp(-u) / (4.0 * kPi);
        const double slice = wn * std::pow(2.0 * n * tau * u, 0.5 * n);
        return slice * tau * 2.0 * w;  // dtau = -tau du, du = 2 w dw
    };
    return simpson(g, 0.0, 11.0, 1 << 14);
}

const double& cached_vol_E1(int n) {
    require_dimension(n);
    static const double v1 = unit_heat_ball_volume(1);
    static const double v2 = unit_heat_ball_volume(2);
    static const double v3 = unit_heat_ball_volume(3);
    switch (n) {
        case 1: return v1;
        case 2: return v2;
        default: return v3;
    }
}

}  // namespace

VolumeEstimate ball_volume(BallKind kind, int n, double r) {
    require_dimension(n);
    require(r >= 0.0 && std::isfinite(r), "requires finite r >= 0");
    const double rpow = std::pow(r, n + 2);
    switch (kind) {
        case BallKind::metric_ball:
            return {2.0 * unit_ball_volume(n) * rpow, 0.0};
        case BallKind::past_metric_ball:
            return {unit_ball_volume(n) * rpow, 0.0};
        default:
            return {cached_vol_E1(n) * rpow, 1e-12 * cached_vol_E1(n) * rpow};
    }
}

VolumeEstimate ball_volume_mc(BallKind kind, int n, double r, long long samples,
                              unsigned long long seed) {
    require_dimension(n);
    require(r > 0.0 && std::isfinite(r), "requires finite r > 0");
    require(samples >= 1, "requires samples >= 1");

    // Bounding box of the region; membership test per sample.
    double half_space, t_lo, t_hi;
    if (kind == BallKind::heat_ball) {
        half_space = heat_ball_max_radius(n, r);
        t_lo = -heat_ball_depth(r);
        t_hi = 0.0;
    } else {
        half_space = r;
        t_lo = -r * r;
        t_hi = (kind == BallKind::past_metric_ball) ? 0.0 : r * r;
    }
    double box = (t_hi - t_lo);
    for (int d = 0; d < n; ++d) box *= 2.0 * half_space;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const SpaceTimePoint origin{SpaceVec::Zero(n), 0.0};
    SpaceTimePoint q{SpaceVec::Zero(n), 0.0};
    long long hits = 0;
    for (long long i = 0; i < samples; ++i) {
        for (int d = 0; d < n; ++d) q.x[d] = half_space * (2.0 * unit(rng) - 1.0);
        q.t = t_lo + (t_hi - t_lo) * unit(rng);
        bool in = false;
        switch (kind) {
            case BallKind::heat_ball:
                in = in_heat_ball(origin, BallRadius(r), q);
                break;
            case BallKind::metric_ball:
                in = in_metric_ball(origin, r, q);
                break;
            case BallKind::past_metric_ball:
                in = in_past_metric_ball(origin, r, q);
                break;
        }
        if (in) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    const double sigma = box * std::sqrt(std::max(p * (1.0 - p), 0.0) / samples);
    return {box * p, 3.0 * sigma};
}

// ---------------------------------------------------------------------------
// Annulus integrals
// ---------------------------------------------------------------------------

namespace {

// Integral of Phi(-eta,-zeta)^beta over the shell E_B \ E_A, 0 <= A < B < inf.
// Radial reduction: with tau = -zeta, the slice at depth tau is the spherical
// shell R_A(tau) <= |eta| < R_B(tau). The slice value behaves like
// (depth - tau)^(n/2) where a ball's radius vanishes, so each such endpoint is
// integrated under the chart tau = depth - w^2; the tau -> 0 end decays fast
// and is handled on a log scale.
double shell_integral_level(int n, double beta, double A, double B, int panels_u,
                            int panels_rho) {
    const double wn_surface = n * unit_ball_volume(n);  // |S^{n-1}|

    auto slice = [&](double tau) {
        const double r_hi_sq = heat_ball_slice_radius_sq(n, B, tau);
        if (r_hi_sq <= 0.0) return 0.0;
        const double r_lo_sq = (A > 0.0) ? heat_ball_slice_radius_sq(n, A, tau) : 0.0;
        if (r_lo_sq >= r_hi_sq) return 0.0;
        const double r_lo = std::sqrt(r_lo_sq), r_hi = std::sqrt(r_hi_sq);
        const double log_pref = -0.5 * n * beta * std::log(4.0 * kPi * tau);
        auto f = [&](double rho) {
            const double ex = log_pref - beta * rho * rho / (4.0 * tau);
            if (ex < -740.0) return 0.0;
            return std::exp(ex) * std::pow(rho, n - 1);
        };
        return wn_surface * simpson(f, r_lo, r_hi, panels_rho);
    };

    auto log_chart = [&](double tau_hi) {
        const double u_hi = std::log(tau_hi);
        auto g = [&](double u) {
            const double tau = std::exp(u);
            return slice(tau) * tau;
        };
        // Below u_hi - 45 the slice volume is smaller by e^(-45(n/2+1)); the
        // bulk of the mass sits in the top ten log units.
        return simpson(g, u_hi - 45.0, u_hi - 10.0, panels_u) +
               simpson(g, u_hi - 10.0, u_hi, panels_u);
    };
    auto cusp_chart = [&](double tau_lo, double tau_hi) {
        auto g = [&](double w) { return slice(tau_hi - w * w) * 2.0 * w; };
        return simpson(g, 0.0, std::sqrt(tau_hi - tau_lo), panels_u);
    };

    const double dB = heat_ball_depth(B);
    if (A > 0.0) {
        const double dA = heat_ball_depth(A);
        return log_chart(dA / 2.0) + cusp_chart(dA / 2.0, dA) + cusp_chart(dA, dB);
    }
    return log_chart(dB / 2.0) + cusp_chart(dB / 2.0, dB);
}

struct ShellValue {
    double value;
    double error;
};

ShellValue shell_integral(int n, double beta, double A, double B) {
    const double c = shell_integral_level(n, beta, A, B, 256, 128);
    const double f = shell_integral_level(n, beta, A, B, 512, 256);
    return {f, std::abs(f - c)};
}

// Walk dyadic shells produced by `next`, accumulating until the extrapolated
// tail falls below tolerance or the increments refuse to decay.
AnnulusResult run_shell_driver(int n, double beta, double start,
                               bool outward, const AnnulusOptions& opt) {
    AnnulusResult res;
    std::vector<double> increments;
    double edge = start;
    int stuck = 0;
    for (int k = 0; k < opt.max_shells; ++k) {
        const double lo = outward ? edge : edge / 2.0;
        const double hi = outward ? edge * 2.0 : edge;
        const ShellValue sv = shell_integral(n, beta, lo, hi);
        res.value += sv.value;
        res.error += sv.error;
        increments.push_back(sv.value);
        ++res.shells;
        edge = outward ? hi : lo;

        if (increments.size() >= 2) {
            const double prev = increments[increments.size() - 2];
            const double ratio = (prev > 0.0) ? sv.value / prev : 0.0;
            res.last_ratio = ratio;
            stuck = (ratio >= opt.divergence_ratio) ? stuck + 1 : 0;
            if (stuck >= opt.divergence_window) {
                res.diverged = true;
                res.value = kNaN;
                res.error = kNaN;
                return res;
            }
            if (ratio < opt.divergence_ratio) {
                const double tail = sv.value * ratio / (1.0 - ratio);
                if (tail <= opt.rel_tol * std::abs(res.value) || sv.value == 0.0) {
                    res.error += tail;
                    return res;
                }
            }
        }
    }
    throw ToleranceError("annulus integral did not meet tolerance within shell budget",
                         res.last_ratio);
}

}  // namespace

AnnulusResult annulus_integral(int n, double beta, double a, double b,
                               const AnnulusOptions& opt) {
    require_dimension(n);
    require(std::isfinite(beta), "requires finite beta");
    require(a >= 0.0 && std::isfinite(a), "requires finite a >= 0");
    require(b > a, "requires b > a");

    const bool b_inf = std::isinf(b);
    if (a == 0.0 && b_inf) {
        // One of the two ends diverges for every beta.
        AnnulusResult res;
        res.diverged = true;
        res.value = kNaN;
        res.error = kNaN;
        return res;
    }
    if (a == 0.0) return run_shell_driver(n, beta, b, /*outward=*/false, opt);
    if (b_inf) return run_shell_driver(n, beta, a, /*outward=*/true, opt);

    // Bounded annulus: dyadic chunks keep each quadrature span small.
    AnnulusResult res;
    double lo = a;
    while (lo < b) {
        const double hi = std::min(2.0 * lo, b);
        const ShellValue sv = shell_integral(n, beta, lo, hi);
        res.value += sv.value;
        res.error += sv.error;
        ++res.shells;
        lo = hi;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Containment and off-diagonal constants
// ---------------------------------------------------------------------------

double containment_radius(int n, double tol) {
    require_dimension(n);
    require(tol > 0.0, "requires tol > 0");
    // Squared slice radius of E_1 at depth tau; unimodal on (0, 1/(4 pi)).
    auto g = [&](double tau) { return 2.0 * n * tau * std::log(1.0 / (4.0 * kPi * tau)); };
    const double depth = 1.0 / (4.0 * kPi);
    double a = depth * 1e-12, b = depth * (1.0 - 1e-12);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 300 && b - a > tol * depth; ++it) {
        if (gc > gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    const double max_space = std::sqrt(std::max(gc, gd));
    const double max_time = std::sqrt(depth);
    return std::max(max_space, max_time);
}

double kernel_offdiag_constant(int n) {
    require_dimension(n);
    const double c = 3.0 - 2.0 * std::sqrt(2.0);  // (sqrt(2)-1)^2
    // sup over zeta > 0 of exp(-c zeta) (zeta/pi)^(n/2), attained at zeta = n/(2c).
    const double case_near = std::pow(n / (2.0 * c * kPi * std::exp(1.0)), 0.5 * n);
    const double case_far = std::pow(4.0 * kPi, -0.5 * n);
    return std::max(case_near, case_far);
}

namespace {

GeometryConstants make_geometry_constants(int n) {
    GeometryConstants g;
    g.n = n;
    g.vol_E1 = cached_vol_E1(n);
    g.vol_Q1 = 2.0 * unit_ball_volume(n);
    g.vol_P1 = unit_ball_volume(n);
    g.r0_min = containment_radius(n);
    g.r0 = 1.05 * g.r0_min;
    g.ball_cylinder_ratio = g.vol_E1 / (std::pow(g.r0, n + 2) * g.vol_Q1);
    g.offdiag_bound = kernel_offdiag_constant(n);
    return g;
}

}  // namespace

const GeometryConstants& geometry_constants(int n) {
    require_dimension(n);
    static const GeometryConstants g1 = make_geometry_constants(1);
    static const GeometryConstants g2 = make_geometry_constants(2);
    static const GeometryConstants g3 = make_geometry_constants(3);
    switch (n) {
        case 1: return g1;
        case 2: return g2;
        default: return g3;
    }
}

}  // namespace heatpot
