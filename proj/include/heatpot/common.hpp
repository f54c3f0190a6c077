// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace heatpot {

/// Thrown when an iterative routine cannot reach its requested tolerance.
/// `achieved` carries the best error bound obtained before giving up.
class ToleranceError : public std::runtime_error {
public:
    ToleranceError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved bound " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// Spatial dimensions are restricted to 1..3: quadrature cost grows as 2^(n+1)
// per subdivision level and the fixed-capacity point type holds 3 coordinates.
inline constexpr int kMaxDim = 3;

inline void require_dimension(int n) {
    if (n < 1 || n > kMaxDim)
        throw std::invalid_argument("requires 1 <= n <= 3, got n = " + std::to_string(n));
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

/// Volume of the unit ball in R^n (n = 1..3).
inline double unit_ball_volume(int n) {
    require_dimension(n);
    constexpr double pi = 3.14159265358979323846;
    switch (n) {
        case 1: return 2.0;
        case 2: return pi;
        default: return 4.0 * pi / 3.0;
    }
}

inline constexpr double kPi = 3.14159265358979323846;

/// x^k for small integer k without going through pow().
inline double pow_int(double x, int k) {
    if (k < 0) return 1.0 / pow_int(x, -k);
    double r = 1.0;
    while (k-- > 0) r *= x;
    return r;
}

/// L^p exponent with a tagged infinity; p = +inf never travels as a big float.
class LpExponent {
public:
    static LpExponent finite(double p) {
        require(p >= 1.0, "requires p >= 1");
        return LpExponent(p, false);
    }
    static LpExponent infinity() { return LpExponent(0.0, true); }

    bool is_infinite() const noexcept { return inf_; }
    double value() const {
        if (inf_) throw std::logic_error("finite exponent requested from p = infinity");
        return p_;
    }
    /// 1/p, with 1/inf = 0.
    double reciprocal() const noexcept { return inf_ ? 0.0 : 1.0 / p_; }

private:
    LpExponent(double p, bool inf) : p_(p), inf_(inf) {}
    double p_;
    bool inf_;
};

}  // namespace heatpot
