#pragma once

#include <vector>

#include "heatpot/grid.hpp"
#include "heatpot/kernel.hpp"
#include "heatpot/point.hpp"

namespace heatpot {

// Quadrature controls for the potential operators. Each source cell's kernel
// mass is integrated to the requested relative accuracy; since all data is
// nonnegative, per-cell relative control gives global relative control.
struct PotentialOptions {
    double rel_tol = 1e-10;
    int max_depth = 12;  // interval-halving cap inside one cell's time integral
};

// Space-time convolution of f (taken as cellwise constant) with the kernel
// power mapped from alpha: exponent (n+2-alpha)/n, alpha in (0, n+2).
std::vector<double> heat_potential(const GridFunction& f, double alpha,
                                   const std::vector<SpaceTimePoint>& targets,
                                   const PotentialOptions& opt = {});

// Same operator sampled at every cell center of f's own grid. Kernel cell
// masses depend only on the lattice offset, so they are tabulated once and
// reused across targets; exact (to quadrature tolerance) for the cellwise
// constant data, like the per-target path.
GridFunction heat_potential_grid(const GridFunction& f, double alpha,
                                 const PotentialOptions& opt = {});

// Integration domain for localized potentials. past_ball(r) is the rescaled
// lower metric ball (radius sqrt(r), past half); heat_ball(r) the rescaled
// heat ball with the same r^{1/2} convention; whole() drops the restriction.
struct PotentialDomain {
    enum class Kind { whole, past_ball, heat_ball };
    Kind kind = Kind::whole;
    SpaceTimePoint center{};
    double r = 0.0;

    static PotentialDomain whole();
    static PotentialDomain past_ball(const SpaceTimePoint& center, double r);
    static PotentialDomain heat_ball(const SpaceTimePoint& center, double r);
    bool contains(const SpaceTimePoint& q) const;
};

// Heat potential with integration restricted to the domain; cells enter by the
// membership of their centers, so nested domains split the cell set exactly.
// alpha may equal n+2 here (kernel power zero: plain integral over the domain).
std::vector<double> local_potential(const GridFunction& f, const PotentialDomain& domain,
                                    double alpha, const std::vector<SpaceTimePoint>& targets,
                                    const PotentialOptions& opt = {});

// Near/far decomposition of the potential at one target: near integrates over
// the heat ball of radius rho about the target, far is the complement.
struct HedbergSplit {
    double near = 0.0;
    double far = 0.0;
};
HedbergSplit hedberg_split(const GridFunction& f, double alpha, double rho,
                           const SpaceTimePoint& target, const PotentialOptions& opt = {});

// Time slab (a, b); the spatial extent comes from the caller's grid.
struct SlabSpec {
    double a = 0.0;
    double b = 0.0;
};

// Potential of f restricted to the slab.
std::vector<double> slab_potential(const GridFunction& f, double alpha, const SlabSpec& slab,
                                   const std::vector<SpaceTimePoint>& targets,
                                   const PotentialOptions& opt = {});

// ||V_alpha f||_q / ||f||_p with both norms over the slab. Requires
// 0 <= 1/p - 1/q < alpha/(n+2) < 1 and f not identically zero on the slab.
double slab_norm_ratio(const GridFunction& f, double alpha, const LpExponent& p,
                       const LpExponent& q, const SlabSpec& slab,
                       const PotentialOptions& opt = {});

// Parameters of the composed potential outer_alpha * ((inner_beta * f)^sigma)
// together with the norm exponent r used by the sup-norm estimate check.
struct PotentialParams {
    double alpha = 2.0;
    double beta = 2.0;
    double sigma = 1.0;
    LpExponent r = LpExponent::finite(1.0);
};

// Throws unless sigma > alpha/(n+2-beta) and 1 <= r < (n+2)sigma/(alpha+beta*sigma),
// the admissible range of the sup-norm estimate.
void validate_potential_params(int n, const PotentialParams& params);

// Shape of the intermediate grid holding the inner potential: f's grid padded
// by pad_space on every spatial side and extended in time to cover all targets.
struct NonlinearOptions {
    double pad_space = -1.0;  // < 0: twice the parabolic diameter of f's box
    PotentialOptions quadrature{};
};

// Composed potential at the targets. Only the range preconditions on alpha,
// beta, sigma are enforced here; the estimate-specific constraints live in
// validate_potential_params.
std::vector<double> nonlinear_potential(const GridFunction& f, const PotentialParams& params,
                                        const std::vector<SpaceTimePoint>& targets,
                                        const NonlinearOptions& opt = {});

// Composed potential on the padded intermediate grid itself. Both passes run
// through the tabulated convolution, so sampling the sup norm over the padded
// box costs far less than per-target evaluation at every cell.
GridFunction nonlinear_potential_grid(const GridFunction& f, const PotentialParams& params,
                                      const NonlinearOptions& opt = {});

// Geometric radius ladder for the maximal operators.
struct RadiusGrid {
    std::vector<double> radii;  // ascending, positive
    static RadiusGrid geometric(double r_min, double r_max, int count);
};

// Default ladder: 64 radii spanning [h, 4x the parabolic diameter of f's box].
RadiusGrid default_radius_grid(const GridFunction& f);

struct MaximalResult {
    double value = 0.0;
    double radius = 0.0;  // maximizing ladder radius; 0 when every ball was empty
};

// Heat-ball maximal function: max over the ladder of the average of f on
// E_r(target). Averages are ratios of measured mass to measured ball volume
// (cells enter by their centers), so constants average to themselves exactly.
MaximalResult maximal_M(const GridFunction& f, const SpaceTimePoint& target,
                        const RadiusGrid& radii);

// Metric-ball analog with the full (two-sided) cylinders Q_r.
MaximalResult maximal_Mhat(const GridFunction& f, const SpaceTimePoint& target,
                           const RadiusGrid& radii);

// Maximal functions sampled at every cell center of f's grid.
GridFunction maximal_M_grid(const GridFunction& f, const RadiusGrid& radii);
GridFunction maximal_Mhat_grid(const GridFunction& f, const RadiusGrid& radii);

// Mass of f over one ball of the given family, measured by cell-center
// membership, together with the measured volume. Exposed because the proof
// chain behind the M-to-Mhat comparison constrains these masses directly.
struct BallMass {
    double mass = 0.0;
    double volume = 0.0;
};
BallMass heat_ball_mass(const GridFunction& f, const SpaceTimePoint& target, double r);
BallMass metric_ball_mass(const GridFunction& f, const SpaceTimePoint& target, double r);

}  // namespace heatpot
