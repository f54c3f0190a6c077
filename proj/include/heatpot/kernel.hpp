// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "heatpot/point.hpp"

namespace heatpot {

// ---------------------------------------------------------------------------
// Gauss-Weierstrass kernel and its powers
// ---------------------------------------------------------------------------

/// Phi(x,t) = (4 pi t)^(-n/2) exp(-|x|^2 / (4t)) for t > 0, extended by 0
/// for t <= 0. n is the length of x.
double heat_kernel(const SpaceVec& x, double t);

inline double heat_kernel(const SpaceTimePoint& p) { return heat_kernel(p.x, p.t); }

/// log Phi(x,t); -inf for t <= 0. Safe against under/overflow of Phi itself.
double heat_kernel_log(const SpaceVec& x, double t);

/// Phi(x,t)^e evaluated in log space (0 for t <= 0, any e > 0).
double heat_kernel_pow(const SpaceVec& x, double t, double e);

/// Exponent (n+2-alpha)/n of the fractional kernel. Requires 0 < alpha < n+2.
double potential_exponent(int n, double alpha);

/// J_alpha(x,t) = Phi(x,t)^((n+2-alpha)/n).
double fractional_kernel(const SpaceVec& x, double t, double alpha);

/// Closed form of the spatial integral of Phi(.,tau)^beta over R^n:
///   (4 pi)^(-(beta-1) n/2) * beta^(-n/2) * tau^(-(beta-1) n/2),  tau > 0.
/// Requires beta > 0.
double kernel_pow_slice_integral(int n, double beta, double tau);

// ---------------------------------------------------------------------------
// Heat balls and parabolic metric balls
// ---------------------------------------------------------------------------

/// Radius of a heat ball: a finite nonnegative value or the tagged infinity.
/// r = 0 denotes the empty set; r = infinity the half-space {s < t}.
class BallRadius {
public:
    BallRadius(double r) : r_(r), inf_(false) {
        require(std::isfinite(r) && r >= 0.0, "requires a finite radius >= 0");
    }
    static BallRadius infinite() {
        BallRadius b(0.0);
        b.inf_ = true;
        return b;
    }

    bool is_infinite() const noexcept { return inf_; }
    double value() const {
        if (inf_) throw std::logic_error("finite value requested from infinite radius");
        return r_;
    }

private:
    double r_;
    bool inf_;
};

/// Membership in the heat ball E_r(center) = {(y,s) : Phi(x-y, t-s) > r^-n}.
bool in_heat_ball(const SpaceTimePoint& center, BallRadius r, const SpaceTimePoint& q);

/// Membership in the parabolic metric ball Q_r(center) = {d(center, .) < r}.
bool in_metric_ball(const SpaceTimePoint& center, double r, const SpaceTimePoint& q);

/// Lower half P_r(center) = Q_r(center) intersected with {s < t}.
bool in_past_metric_ball(const SpaceTimePoint& center, double r, const SpaceTimePoint& q);

/// Rescaled families: the r-indexed sets P_sqrt(r) and E_sqrt(r), under which
/// the natural dilation acts by (x,t) -> (c x, c^2 t) on the index r -> c^2 r.
bool in_past_ball_rescaled(const SpaceTimePoint& center, double r, const SpaceTimePoint& q);
bool in_heat_ball_rescaled(const SpaceTimePoint& center, double r, const SpaceTimePoint& q);

// Radial profile of the heat ball E_r(0,0) in backward time tau = -s:
// the slice at depth tau is the ball |y|^2 < 2 n tau log(r^2/(4 pi tau)),
// nonempty for 0 < tau < r^2/(4 pi).
double heat_ball_depth(double r);
double heat_ball_slice_radius_sq(int n, double r, double tau);
/// Largest |y| over E_r(0,0): r * sqrt(n / (2 pi e)).
double heat_ball_max_radius(int n, double r);

// ---------------------------------------------------------------------------
// Volumes
// ---------------------------------------------------------------------------

enum class BallKind { heat_ball, metric_ball, past_metric_ball };

struct VolumeEstimate {
    double value;
    double error;  // absolute; 3 sigma for Monte-Carlo, quadrature bound otherwise
};

/// Deterministic volume: |Q_r| = 2 omega_n r^(n+2), |P_r| = |Q_r|/2,
/// |E_r| = r^(n+2) |E_1| with |E_1| from a cached radial quadrature.
VolumeEstimate ball_volume(BallKind kind, int n, double r);

/// Monte-Carlo estimate over the bounding box of the region. samples >= 1.
VolumeEstimate ball_volume_mc(BallKind kind, int n, double r, long long samples,
                              unsigned long long seed);

// ---------------------------------------------------------------------------
// Annulus integrals of kernel powers
// ---------------------------------------------------------------------------

struct AnnulusOptions {
    double rel_tol = 1e-7;
    int max_shells = 220;
    // A dyadic shell sequence is declared divergent when this many consecutive
    // increments fail to decay below divergence_ratio.
    int divergence_window = 4;
    double divergence_ratio = 0.98;
};

struct AnnulusResult {
    double value = 0.0;
    double error = 0.0;   // quadrature + truncation bound
    bool diverged = false;
    int shells = 0;
    double last_ratio = 0.0;  // increment ratio per doubling, diagnostic
};

/// Integral of Phi(-eta, -zeta)^beta over E_b(0,0) \ E_a(0,0), 0 <= a < b <= inf.
/// Evaluated shell by shell over dyadic radii; unbounded configurations are
/// truncated adaptively and the truncation bound is reported in `error`.
/// Divergent configurations come back with `diverged` set instead of a value.
AnnulusResult annulus_integral(int n, double beta, double a, double b,
                               const AnnulusOptions& opt = {});

// ---------------------------------------------------------------------------
// Containment and off-diagonal constants
// ---------------------------------------------------------------------------

/// Minimal r0 with E_1(0,0) contained in Q_r0(0,0), found by maximizing the
/// parabolic distance to the origin over the heat-ball boundary. The deepest
/// time of E_1 is -1/(4 pi), so r0 >= (4 pi)^(-1/2) in every dimension.
double containment_radius(int n, double tol = 1e-10);

/// Uniform bound C(n) on r^(n/2) Phi(x-y, t-s) over configurations with
/// (x,t) in the closure of P_sqrt(r)(c) and (y,s) outside the closure of
/// P_sqrt(2r)(c):  max( (n / (2 (sqrt(2)-1)^2 pi e))^(n/2), (4 pi)^(-n/2) ).
double kernel_offdiag_constant(int n);

/// Per-dimension constants, computed once and cached.
struct GeometryConstants {
    int n;
    double vol_E1;               // |E_1(0,0)|
    double vol_Q1;               // 2 omega_n
    double vol_P1;               // omega_n
    double r0_min;               // minimal containment radius
    double r0;                   // r0_min with a 5% safety margin, used downstream
    double ball_cylinder_ratio;  // |E_1| / (r0^(n+2) |Q_1|)
    double offdiag_bound;        // kernel_offdiag_constant(n)
};

const GeometryConstants& geometry_constants(int n);

}  // namespace heatpot
