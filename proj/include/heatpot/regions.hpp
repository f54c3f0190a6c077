#pragma once

#include <heatpot/common.hpp>

#include <string>
#include <utility>
#include <vector>

namespace heatpot {

// Exact rational arithmetic for boundary-curve classification. Values are
// kept reduced with a positive denominator; intermediates widen to 128 bits,
// so arithmetic on reduced operands either narrows back exactly or throws.
class Rational {
public:
    Rational() = default;
    Rational(long long num, long long den = 1);

    long long num() const { return num_; }
    long long den() const { return den_; }
    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);

    friend bool operator==(const Rational& a, const Rational& b);
    friend bool operator!=(const Rational& a, const Rational& b);
    friend bool operator<(const Rational& a, const Rational& b);
    friend bool operator<=(const Rational& a, const Rational& b);
    friend bool operator>(const Rational& a, const Rational& b);
    friend bool operator>=(const Rational& a, const Rational& b);

private:
    long long num_ = 0;
    long long den_ = 1;
};

// Exponent regions of the coupled system, for ordered pairs sigma <= lambda:
// A is the closed box lambda <= (n+2)/n; past it, the curve
// sigma = 2/n + (n+2)/(n lambda) separates B (below, open) from C (above),
// and is itself region D.
enum class Region { A, B, C, D };

std::string region_name(Region r);

// Growth classes for max over a compact set as t -> 0+, as powers of
// 1/sqrt(t). none: no pointwise bound exists. unresolved: no verdict.
enum class BoundKind { big_O, little_o, none, unresolved };

std::string bound_kind_name(BoundKind k);

// The exponent is meaningful only for big_O and little_o, and is then at
// least n, the floor set by the kernel itself.
struct BoundDescriptor {
    BoundKind kind = BoundKind::unresolved;
    double exponent = 0.0;
};

// lambda and sigma are stored in normalized order (sigma <= lambda);
// swapped records that the caller's inputs arrived the other way around.
// bound_u and bound_v always refer to the caller's original components.
struct RegionVerdict {
    Region region = Region::A;
    int n = 1;
    double lambda = 0.0;
    double sigma = 0.0;
    bool swapped = false;
    BoundDescriptor bound_u;
    BoundDescriptor bound_v;
};

// Float classification. Membership on the separating curve is decided within
// relative tolerance 1e-12; a pair meant to sit exactly on the measure-zero
// curve needs the rational overload for a reliable D verdict.
RegionVerdict classify(int n, double lambda, double sigma);

// Exact classification; the curve test is an equality of rationals.
RegionVerdict classify(int n, const Rational& lambda, const Rational& sigma);

// Bounds implied by the verdict, in the caller's original component order.
std::pair<BoundDescriptor, BoundDescriptor> predicted_bounds(const RegionVerdict& verdict);

// Growth of a single solution whose defect is forced by (1/sqrt(t))^gamma:
// o((1/sqrt(t))^{gamma n/(n+2)}) past gamma = n+2, the kernel floor below.
BoundDescriptor scalar_bound(int n, double gamma);

// Growth of the second component when only sigma is known: the kernel-floor
// bound for sigma < 2/n, no verdict otherwise.
BoundDescriptor sigma_only_bound(int n, double sigma);

// Samples of a max over a compact set along times decreasing toward 0.
struct RateSample {
    std::vector<std::pair<double, double>> points;  // (t_i, m_i)
};

struct RateFit {
    double exponent = 0.0;  // power of 1/sqrt(t)
    double r_squared = 0.0;
};

// Log-log least squares of m against 1/sqrt(t). Only the trailing window of
// smallest times enters the fit (default: the later half, rounded up), which
// suppresses transients at the large-t end. Throws unless the window holds
// at least 4 samples with positive m.
RateFit fit_rate(const RateSample& sample, int window = -1);

}  // namespace heatpot
