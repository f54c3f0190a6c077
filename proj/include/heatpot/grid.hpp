#pragma once

#include <array>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "heatpot/common.hpp"
#include "heatpot/point.hpp"

namespace heatpot {

// Whether a grid's samples are constrained to be nonnegative. Almost every
// field in this library is a nonnegative density; the signed case exists for
// residuals.
enum class SampleSign { non_negative, any };

// Piecewise view of a space-time function: samples taken at cell centers of a
// uniform box grid. Spatial cells have edge h, temporal cells have edge tau.
// Storage is time-major, space row-major with the last spatial axis fastest.
// Instances are immutable; operations return new grids.
class GridFunction {
public:
    GridFunction(int n, const SpaceVec& space_lo, double h, const std::array<int, 3>& cells,
                 double t_lo, double tau, int time_cells, Eigen::ArrayXd samples,
                 SampleSign sign = SampleSign::non_negative);

    // Samples f at every cell center.
    static GridFunction from_function(int n, const SpaceVec& space_lo, double h,
                                      const std::array<int, 3>& cells, double t_lo, double tau,
                                      int time_cells,
                                      const std::function<double(const SpaceVec&, double)>& f,
                                      SampleSign sign = SampleSign::non_negative);

    int dim() const { return n_; }
    double h() const { return h_; }
    double tau() const { return tau_; }
    const std::array<int, 3>& cells() const { return cells_; }
    int time_cells() const { return time_cells_; }
    const SpaceVec& space_lo() const { return space_lo_; }
    SpaceVec space_hi() const;
    double t_lo() const { return t_lo_; }
    double t_hi() const { return t_lo_ + tau_ * time_cells_; }
    SampleSign sign() const { return sign_; }

    Eigen::Index space_size() const { return space_size_; }
    Eigen::Index size() const { return samples_.size(); }
    const Eigen::ArrayXd& samples() const { return samples_; }
    double cell_volume() const;

    Eigen::Index flat_index(const std::array<int, 3>& ix, int k) const;
    SpaceVec cell_center_space(const std::array<int, 3>& ix) const;
    double cell_center_time(int k) const;
    SpaceTimePoint cell_center(Eigen::Index flat) const;
    double value(const std::array<int, 3>& ix, int k) const;

    bool same_geometry(const GridFunction& other) const;

private:
    int n_;
    SpaceVec space_lo_;
    double h_;
    std::array<int, 3> cells_;
    double t_lo_;
    double tau_;
    int time_cells_;
    Eigen::Index space_size_;
    Eigen::ArrayXd samples_;
    SampleSign sign_;
};

// Midpoint-rule integral over the full space-time box.
double integrate(const GridFunction& f);

// Midpoint-rule L^p norm over the grid box; p may be infinite.
double lp_norm(const GridFunction& f, const LpExponent& p);

// Pointwise |f|^sigma with sigma > 0. The input must be nonnegative.
GridFunction power(const GridFunction& f, double sigma);

GridFunction add(const GridFunction& f, const GridFunction& g);
GridFunction add_scalar(const GridFunction& f, double c);
GridFunction scale(const GridFunction& f, double c);

// Adds t^{-n/2} (the decay profile of the kernel's spatial maximum) to every
// sample at that time level. Requires t_lo > 0 so the floor is finite.
GridFunction offset_heat_floor(const GridFunction& f);

// Centered-difference heat operator d_t f - Laplace f on interior cells. The
// returned grid shrinks by one cell on every face and carries signed samples.
GridFunction heat_residual(const GridFunction& f);

// Restriction to time levels [k_lo, k_lo + count).
GridFunction time_slice(const GridFunction& f, int k_lo, int count);

// The grid of (x,t) -> f(x/r, t/r^2): geometry stretched about the origin by
// (r, r^2), samples untouched. Powers of two keep cell centers exact.
GridFunction parabolic_dilate(const GridFunction& f, double r);

// Serialization. Paths ending in ".json" use a self-describing text format;
// any other extension gets a one-line JSON header followed by raw
// little-endian doubles.
void write_grid(const std::string& path, const GridFunction& f);
GridFunction read_grid(const std::string& path);

}  // namespace heatpot
