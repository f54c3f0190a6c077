// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "heatpot/common.hpp"

namespace heatpot {

/// Spatial point in R^n, n <= 3. Dynamically sized but stack-allocated.
using SpaceVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

inline SpaceVec space_vec(std::initializer_list<double> xs) {
    SpaceVec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Point (x, t) of the parabolic space R^n x R.
struct SpaceTimePoint {
    SpaceVec x;
    double t = 0.0;

    int dim() const { return static_cast<int>(x.size()); }
};

inline SpaceTimePoint make_point(std::initializer_list<double> xs, double t) {
    return SpaceTimePoint{space_vec(xs), t};
}

/// Parabolic distance d((x,t),(y,s)) = max(|x-y|, sqrt(|t-s|)).
inline double parabolic_distance(const SpaceTimePoint& p, const SpaceTimePoint& q) {
    require(p.dim() == q.dim(), "requires points of equal dimension");
    return std::max((p.x - q.x).norm(), std::sqrt(std::abs(p.t - q.t)));
}

}  // namespace heatpot
