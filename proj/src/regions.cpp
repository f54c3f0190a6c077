#include <heatpot/regions.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace heatpot {

namespace {

using int128 = __int128;

int128 abs128(int128 v) { return v < 0 ? -v : v; }

int128 gcd128(int128 a, int128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        int128 r = a % b;
        a = b;
        b = r;
    }
    return a;
}

long long narrow(int128 v) {
    if (v > std::numeric_limits<long long>::max() || v < std::numeric_limits<long long>::min())
        throw std::overflow_error("rational arithmetic overflow");
    return static_cast<long long>(v);
}

// Normalizes in 128 bits, then narrows; the constructor re-reduces an
// already-reduced pair at trivial cost.
Rational reduced(int128 num, int128 den) {
    if (den == 0) throw std::invalid_argument("rational denominator must be nonzero");
    if (den < 0) {
        den = -den;
        num = -num;
    }
    int128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(long long num, long long den) {
    if (den == 0) throw std::invalid_argument("rational denominator must be nonzero");
    int128 n = num;
    int128 d = den;
    if (d < 0) {
        d = -d;
        n = -n;
    }
    int128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    num_ = narrow(n);
    den_ = narrow(d);
}

Rational operator+(const Rational& a, const Rational& b) {
    return reduced(int128(a.num_) * b.den_ + int128(b.num_) * a.den_, int128(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
    return reduced(int128(a.num_) * b.den_ - int128(b.num_) * a.den_, int128(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
    return reduced(int128(a.num_) * b.num_, int128(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::invalid_argument("rational division by zero");
    return reduced(int128(a.num_) * b.den_, int128(a.den_) * b.num_);
}

bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
}

bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

bool operator<(const Rational& a, const Rational& b) {
    return int128(a.num_) * b.den_ < int128(b.num_) * a.den_;
}

bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
bool operator>(const Rational& a, const Rational& b) { return b < a; }
bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

std::string region_name(Region r) {
    switch (r) {
        case Region::A: return "A";
        case Region::B: return "B";
        case Region::C: return "C";
        case Region::D: return "D";
    }
    throw std::logic_error("unknown region");
}

std::string bound_kind_name(BoundKind k) {
    switch (k) {
        case BoundKind::big_O: return "big_O";
        case BoundKind::little_o: return "little_o";
        case BoundKind::none: return "none";
        case BoundKind::unresolved: return "unresolved";
    }
    throw std::logic_error("unknown bound kind");
}

std::pair<BoundDescriptor, BoundDescriptor> predicted_bounds(const RegionVerdict& verdict) {
    int n = verdict.n;
    BoundDescriptor first;   // the component driven by the lambda power
    BoundDescriptor second;  // the component driven by the sigma power
    switch (verdict.region) {
        case Region::A:
            first = {BoundKind::big_O, double(n)};
            second = {BoundKind::big_O, double(n)};
            break;
        case Region::B:
            first = {BoundKind::little_o, double(n) * n * verdict.lambda / (n + 2)};
            second = {BoundKind::big_O, double(n)};
            break;
        case Region::C:
            first = {BoundKind::none, 0.0};
            second = {BoundKind::none, 0.0};
            break;
        case Region::D:
            first = {BoundKind::unresolved, 0.0};
            second = {BoundKind::unresolved, 0.0};
            break;
    }
    if (verdict.swapped) std::swap(first, second);
    return {first, second};
}

namespace {

void validate_classify_inputs(int n) {
    require(n >= 1, "dimension must be at least 1");
}

void finish_verdict(RegionVerdict& v) {
    auto [bu, bv] = predicted_bounds(v);
    v.bound_u = bu;
    v.bound_v = bv;
}

}  // namespace

RegionVerdict classify(int n, double lambda, double sigma) {
    validate_classify_inputs(n);
    require(std::isfinite(lambda) && std::isfinite(sigma), "exponents must be finite");
    require(lambda >= 0.0 && sigma >= 0.0, "exponents must be nonnegative");
    RegionVerdict v;
    v.n = n;
    v.swapped = sigma > lambda;
    v.lambda = v.swapped ? sigma : lambda;
    v.sigma = v.swapped ? lambda : sigma;
    if (v.lambda <= double(n + 2) / n) {
        v.region = Region::A;  // closed edge: the threshold itself belongs to A
    } else {
        double curve = 2.0 / n + double(n + 2) / (n * v.lambda);
        if (std::abs(v.sigma - curve) <= 1e-12 * std::max(1.0, curve))
            v.region = Region::D;
        else
            v.region = v.sigma < curve ? Region::B : Region::C;
    }
    finish_verdict(v);
    return v;
}

RegionVerdict classify(int n, const Rational& lambda, const Rational& sigma) {
    validate_classify_inputs(n);
    Rational zero(0);
    require(lambda >= zero && sigma >= zero, "exponents must be nonnegative");
    RegionVerdict v;
    v.n = n;
    v.swapped = sigma > lambda;
    const Rational& lam = v.swapped ? sigma : lambda;
    const Rational& sig = v.swapped ? lambda : sigma;
    v.lambda = lam.value();
    v.sigma = sig.value();
    if (lam <= Rational(n + 2, n)) {
        v.region = Region::A;
    } else {
        Rational curve = Rational(2, n) + Rational(n + 2, n) / lam;
        if (sig == curve)
            v.region = Region::D;
        else
            v.region = sig < curve ? Region::B : Region::C;
    }
    finish_verdict(v);
    return v;
}

BoundDescriptor scalar_bound(int n, double gamma) {
    require(n >= 1, "dimension must be at least 1");
    require(std::isfinite(gamma), "gamma must be finite");
    if (gamma > n + 2) return {BoundKind::little_o, gamma * n / (n + 2)};
    return {BoundKind::big_O, double(n)};
}

BoundDescriptor sigma_only_bound(int n, double sigma) {
    require(n >= 1, "dimension must be at least 1");
    require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and nonnegative");
    if (sigma < 2.0 / n) return {BoundKind::big_O, double(n)};
    return {BoundKind::unresolved, 0.0};
}

RateFit fit_rate(const RateSample& sample, int window) {
    const auto& pts = sample.points;
    int size = static_cast<int>(pts.size());
    require(size >= 4, "rate sample needs at least 4 points");
    for (int i = 0; i < size; ++i) {
        require(pts[i].first > 0.0, "sample times must be positive");
        require(pts[i].second >= 0.0, "sample values must be nonnegative");
        if (i > 0) require(pts[i].first < pts[i - 1].first, "sample times must decrease");
    }
    if (window < 0) window = (size + 1) / 2;
    require(window <= size, "fit window exceeds the sample");

    // Fit log m = a + e * log(1/sqrt(t)) over the window's positive values.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    std::vector<std::pair<double, double>> xy;
    for (int i = size - window; i < size; ++i) {
        if (pts[i].second <= 0.0) continue;
        double x = -0.5 * std::log(pts[i].first);
        double y = std::log(pts[i].second);
        xy.emplace_back(x, y);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 4)
        throw std::invalid_argument("rate fit needs at least 4 samples with positive values");

    double denom = count * sxx - sx * sx;
    require(denom > 0.0, "sample times are too close to fit a rate");
    RateFit fit;
    fit.exponent = (count * sxy - sx * sy) / denom;
    double intercept = (sy - fit.exponent * sx) / count;

    double ss_res = 0.0, ss_tot = 0.0;
    double mean_y = sy / count;
    for (const auto& [x, y] : xy) {
        double r = y - (intercept + fit.exponent * x);
        ss_res += r * r;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    // Residuals at rounding level mean an exact fit even when the data is
    // flat and ss_tot is itself rounding residue.
    if (ss_res <= 1e-28 * count * (1.0 + mean_y * mean_y))
        fit.r_squared = 1.0;
    else
        fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

}  // namespace heatpot
