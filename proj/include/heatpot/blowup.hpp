// SPDX-License-Identifier: Apache-2.0
//
// Counterexample constructions: explicit pairs (u, v) solving differential
// inequalities of the form Hu <= v^lambda, Hv <= u^sigma (H the heat
// operator) whose growth at a spacetime point defeats any prescribed rate.
// Two families are built here.
//
//   A  A tower of smooth bumps stacked along the time axis against a scaled
//      kernel. Defeats pointwise rates phi(t) -> 0 for a single inequality
//      with exponent lambda above the kernel threshold (n+2)/n.
//
//   B  A chain of widening parabolic collars carrying the mutually coupled
//      pair, built only when (lambda, sigma) lies in the region where no
//      rate bound is admissible. Defeats rates phi(t) -> infinity.
//
// Both builders produce a finite prefix of the infinite construction: every
// certificate below is a statement about the built windows, not the tail.
#pragma once

#include <functional>
#include <vector>

#include <heatpot/common.hpp>
#include <heatpot/inequality.hpp>
#include <heatpot/point.hpp>
#include <heatpot/regions.hpp>

namespace heatpot {

// exp(1 - 1/(1-u^2)) on |u| < 1, zero outside. Smooth, peak value 1 at 0.
double mollifier(double u);

// C-infinity monotone ramp: 0 for u <= 0, 1 for u >= 1.
double smooth_step(double u);

// Decay or growth target for the defeat certificates, evaluated at t > 0.
using TimeProfile = std::function<double(double)>;

// One smooth bump supported on the closed box |y| <= sqrt(r),
// T - r <= s <= T: amplitude * mollifier(|y|/sqrt(r)) * mollifier(2(s-T)/r + 1).
struct BumpProfile {
    int n = 1;
    double T = 0.0;
    double r = 0.0;
    double amplitude = 1.0;

    double value(const SpaceVec& y, double s) const;
};

// Construction A. Window j sits at apex time T[j] with time thickness r[j],
// spatial radius sqrt(r[j]), and height amplitude[j] = eps[j] / r[j]^((n+2)/2).
struct ScheduleA {
    int n = 1;
    double lambda = 0.0;
    TimeProfile phi;
    int count = 0;
    std::vector<double> T;          // apex times, strictly decreasing
    std::vector<double> eps;        // sqrt(phi(T[j])), summable prefix
    std::vector<double> r;          // T[j]^(n lambda / (n+2)), below T[j]/2
    std::vector<double> amplitude;  // bump heights
    double kernel_floor = 0.0;      // min of the kernel over the closed
                                    // window |y|^2 <= 1/2, 1/2 <= s <= 1
    double profile_mass = 0.0;      // integral of the unit bump
    double apex_weight = 0.0;       // kernel-weighted unit bump mass,
                                    // evaluated from the bump's own apex
};

// Builds the bump tower for exponent lambda > (n+2)/n against a decay target
// phi with phi(t) -> 0 as t -> 0+. T1 seeds the apex sequence T[j] =
// T1 8^(1-j) and is halved until every window invariant holds. Throws
// std::invalid_argument on parameters outside the admissible range and
// ToleranceError when no admissible T1 is found.
ScheduleA build_schedule_A(int n, double lambda, TimeProfile phi, int count,
                           double T1 = 1.0 / 16.0);

// Controls the quadrature behind the on-demand evaluators.
struct EvalOptions {
    double rel_tol = 1e-7;
    int max_depth = 14;  // adaptive bisection depth per axis
};

// Construction B. Window j lives on the time interval (t[j] - eps[j],
// a[j] + eps[j]) just below the pole time T[j]; the pair of source profiles
// (T[j]-s)^(-p-1), (T[j]-s)^(-q-1) is cut off by a smooth collar there.
struct ScheduleB {
    int n = 1;
    Rational lambda;
    Rational sigma;
    TimeProfile phi;
    int count = 0;
    Rational p_exact;  // (lambda+1)/(lambda sigma - 1)
    Rational q_exact;  // (sigma+1)/(lambda sigma - 1)
    double p = 0.0;
    double q = 0.0;
    std::vector<double> T;    // pole times, strictly decreasing
    std::vector<double> t;    // matching times: (T-t)^(-p) = t^(-n/2)
    std::vector<double> a;    // growth times: z_j(a) > j phi(a)
    std::vector<double> eps;  // collar half-widths
    double slice_constant = 0.0;   // Gaussian mass of the offset unit ball
    double amplification = 0.0;    // kernel multiple covering every window
    double holder_constant = 0.0;  // sup-norm constant of the heat potential
                                   // against the L^(n+2) norm of the source
    std::vector<double> collar_norm;  // certified collar smallness, window j:
                                      // holder_constant * ||w_j'||_(n+2) on
                                      // the collar, at most z_j(t[j])
};

// Builds the collar chain for a pair (lambda, sigma) in the no-bound region,
// against a growth target phi with phi(t) -> infinity as t -> 0+. T1 seeds
// the pole sequence; later poles are thinned until the windows are pairwise
// disjoint. Throws std::invalid_argument on parameters outside the no-bound
// region and ToleranceError when a growth or collar target is unreachable.
ScheduleB build_schedule_B(int n, const Rational& lambda, const Rational& sigma,
                           TimeProfile phi, int count, double T1 = 0.25);

// A built pair. u and v evaluate by on-demand quadrature over the source
// windows; Hu and Hv are the closed-form sources (exactly the right-hand
// sides the certificates compare against). Exactly one schedule is engaged.
struct ConstructionOutput {
    int n = 1;
    bool tower = false;  // true for construction A, false for B
    ScheduleA schedule_A;
    ScheduleB schedule_B;
    std::function<double(const SpaceVec&, double)> u;
    std::function<double(const SpaceVec&, double)> v;
    std::function<double(const SpaceVec&, double)> Hu;
    std::function<double(const SpaceVec&, double)> Hv;
};

ConstructionOutput construct_A(const ScheduleA& schedule, const EvalOptions& opt = {});
ConstructionOutput construct_B(const ScheduleB& schedule, const EvalOptions& opt = {});

// Sampling plan for the certificates.
struct CertifySpec {
    int window_samples = 1000;    // points drawn inside each window
    int ambient_samples = 4000;   // points drawn over the surrounding box
    unsigned seed = 1;
    EvalOptions quad;
    double apex_slack = 0.05;     // accepted shortfall of u below its
                                  // certified window lower bound
};

// Checks construction A: schedule invariants, disjoint windows, the apex
// lower bound u(0, T[j]) >= eps[j] apex_weight / r[j]^(n/2), a strictly
// increasing defeat ratio u(0,T[j]) T[j]^(n^2 lambda/(2(n+2))) / phi(T[j])
// that ends above 1, the pointwise domination Hu <= v^lambda at every
// sampled point, and constancy of v(0,t) t^(n/2). The report's ratios are
// the per-window defeat ratios; params carries the individual flags.
CheckReport certify_A(const ConstructionOutput& out, const CertifySpec& spec = {});

// Checks construction B: the exact exponent identities lambda q = p + 1 and
// sigma p = q + 1, disjoint windows, the sampled lower bounds
// u >= slice_constant w_j and v >= slice_constant z_j on window j, the
// coupled domination Hu <= p (v/slice_constant)^lambda and
// Hv <= q (u/slice_constant)^sigma at every sampled point, vanishing sources
// outside the windows, and a strictly increasing growth ratio
// min(u,v)(0,a[j]) / phi(a[j]). The report's ratios are the per-window
// growth ratios.
CheckReport certify_B(const ConstructionOutput& out, const CertifySpec& spec = {});

// Gaussian mass pi^(-n/2) integral of exp(-|z|^2) over the unit ball centered
// at the first basis vector. Lower bound for the kernel mass captured by any
// slice ball that contains the kernel's center at matching scale; strictly
// between 0 and 1.
double gaussian_ball_constant(int n);

// Smallest constant C with sup |potential of g| <= C ||g||_(n+2) obtainable
// by pairing the kernel against its dual-exponent norm over a unit time span:
// the L^((n+2)/(n+1)) norm of the kernel over R^n x (0,1). Valid for sources
// supported in a time window of length at most 1 and targets within 1 of it.
double potential_supnorm_constant(int n);

}  // namespace heatpot
