#include "heatpot/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace heatpot {

namespace {

struct Quad {
    double value = 0.0;
    double error = 0.0;
};

// One cell's kernel mass reduces to a 1-D integral in backward time: the
// spatial factor of exp(-e|z|^2/(4 tau)) over a box is a product of erf
// differences per axis.
struct CellGeometry {
    int n = 0;
    double e = 0.0;            // kernel exponent (n+2-alpha)/n
    double z_lo[kMaxDim] = {}; // z = x - y over the cell, per axis
    double z_hi[kMaxDim] = {};

    double spatial_factor(double tau) const {
        double inv_width = 0.5 * std::sqrt(e / tau);
        double scale = std::sqrt(kPi * tau / e);
        double prod = 1.0;
        for (int d = 0; d < n; ++d)
            prod *= scale * (std::erf(z_hi[d] * inv_width) - std::erf(z_lo[d] * inv_width));
        return prod;
    }

    double integrand(double tau) const {
        if (tau <= 0.0) return 0.0;
        return std::pow(4.0 * kPi * tau, -0.5 * e * n) * spatial_factor(tau);
    }

    // Squared distance from the target to the cell's spatial box.
    double dist_sq() const {
        double d2 = 0.0;
        for (int d = 0; d < n; ++d) {
            double nearest = 0.0;
            if (z_lo[d] > 0.0) nearest = z_lo[d];
            else if (z_hi[d] < 0.0) nearest = z_hi[d];
            d2 += nearest * nearest;
        }
        return d2;
    }

    double box_volume() const {
        double v = 1.0;
        for (int d = 0; d < n; ++d) v *= z_hi[d] - z_lo[d];
        return v;
    }
};

template <class F>
void adapt_simpson(const F& f, double a, double m, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth, int max_depth, Quad& out) {
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double err = (left + right - whole) / 15.0;
    if (std::abs(err) <= tol || depth >= max_depth) {
        out.value += left + right + err;
        // After the Richardson correction the residual is another order down;
        // a cap-forced acceptance keeps the full estimate as a stall record.
        out.error += std::abs(err) <= tol ? std::abs(err) / 15.0 : std::abs(err);
        return;
    }
    adapt_simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth, out);
    adapt_simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth, out);
}

template <class F>
Quad adaptive_integral(const F& f, double a, double b, double rel_tol, int max_depth) {
    if (!(b > a)) return {};
    // Seed with four panels so a symmetric integrand cannot fool the first
    // error estimate, then refine each panel adaptively.
    double x[5], v[5];
    for (int i = 0; i <= 4; ++i) {
        x[i] = a + (b - a) * i / 4.0;
        v[i] = f(x[i]);
    }
    double coarse = 0.0;
    for (int i = 0; i < 4; ++i) coarse += (x[i + 1] - x[i]) / 6.0 * (v[i] + 4.0 * f(0.5 * (x[i] + x[i + 1])) + v[i + 1]);
    double tol = rel_tol * std::abs(coarse);
    if (tol <= 0.0) tol = 1e-300;
    Quad out;
    for (int i = 0; i < 4; ++i) {
        double m = 0.5 * (x[i] + x[i + 1]);
        double fm = f(m);
        double whole = (x[i + 1] - x[i]) / 6.0 * (v[i] + 4.0 * fm + v[i + 1]);
        adapt_simpson(f, x[i], m, x[i + 1], v[i], fm, v[i + 1], whole, 0.25 * tol, 0, max_depth,
                      out);
    }
    return out;
}

// Kernel mass of one source cell relative to a target: integral over the cell
// of Phi(x-y, t-s)^e, with tau = t-s running over [tau_lo, tau_hi].
Quad cell_kernel_mass(const CellGeometry& g, double tau_lo, double tau_hi,
                      const PotentialOptions& opt) {
    if (!(tau_hi > 0.0)) return {};
    tau_lo = std::max(tau_lo, 0.0);

    if (g.e == 0.0) return {g.box_volume() * (tau_hi - tau_lo), 0.0};

    // The Gaussian factor underflows once e*d^2/(4 tau) passes ~700; clip the
    // dead part of the tau range away (it contributes exactly 0 in doubles).
    double d2 = g.dist_sq();
    if (d2 > 0.0) {
        double tau_cut = g.e * d2 / 2800.0;
        if (tau_cut >= tau_hi) return {};
        tau_lo = std::max(tau_lo, tau_cut);
    }

    if (tau_lo > 0.0) {
        // Integrate in log time: the Gaussian onset and the power decay both
        // vary gently per unit of log tau, so the halving cap is never the
        // accuracy limit.
        return adaptive_integral(
            [&](double u) {
                double tau = std::exp(u);
                return g.integrand(tau) * tau;
            },
            std::log(tau_lo), std::log(tau_hi), opt.rel_tol, opt.max_depth);
    }

    // tau_lo == 0 with the target over the cell: the integrand behaves like
    // tau^{(alpha-2)/2}; tau = tau_hi v^{2/alpha} makes it smooth in v.
    double alpha = g.n + 2 - g.e * g.n;
    double p = 2.0 / alpha;
    // The substituted integrand has a finite v -> 0 limit (the tau powers
    // cancel by choice of p, and each erf difference tends to 2, 1, or 0 as
    // the Gaussian width collapses inside, on, or off the box face).
    double kappa = 1.0;
    for (int d = 0; d < g.n; ++d) {
        if (g.z_lo[d] > 0.0 || g.z_hi[d] < 0.0) kappa = 0.0;
        else if (g.z_lo[d] < 0.0 && g.z_hi[d] > 0.0) kappa *= 2.0;
    }
    double at_zero = std::pow(4.0 * kPi * tau_hi, -0.5 * g.e * g.n) *
                     std::pow(kPi * tau_hi / g.e, 0.5 * g.n) * kappa * p * tau_hi;
    auto sub = [&](double v) {
        if (v <= 0.0) return at_zero;
        double tau = tau_hi * std::pow(v, p);
        return g.integrand(tau) * tau_hi * p * std::pow(v, p - 1.0);
    };
    return adaptive_integral(sub, 0.0, 1.0, opt.rel_tol, opt.max_depth);
}

struct SourceGrid {
    const GridFunction* f;
    int n;
    double e;

    CellGeometry cell_geometry(const SpaceVec& x, const std::array<int, 3>& ix) const {
        CellGeometry g;
        g.n = n;
        g.e = e;
        // A target sitting on a cell face lands O(ulp) off it after the
        // subtraction; snap sub-resolution offsets to the face so they do not
        // masquerade as integrand features at tau ~ 1e-32.
        double snap = 1e-11 * f->h();
        for (int d = 0; d < n; ++d) {
            double y_lo = f->space_lo()[d] + ix[d] * f->h();
            g.z_lo[d] = x[d] - (y_lo + f->h());
            g.z_hi[d] = x[d] - y_lo;
            if (std::abs(g.z_lo[d]) <= snap) g.z_lo[d] = 0.0;
            if (std::abs(g.z_hi[d]) <= snap) g.z_hi[d] = 0.0;
        }
        return g;
    }
};

// Walks every source cell once; `accept` filters by the cell-center point and
// `mass` receives (flat sample index, kernel mass of the cell).
template <class Accept>
Quad accumulate_potential(const GridFunction& f, double e, const SpaceTimePoint& target,
                          const Accept& accept, const PotentialOptions& opt) {
    SourceGrid src{&f, f.dim(), e};
    Quad total;
    std::array<int, 3> ix{0, 0, 0};
    const auto& cells = f.cells();
    Eigen::Index flat_space = 0;
    // Spatial geometry is shared across time levels; cache per spatial cell.
    for (ix[0] = 0; ix[0] < cells[0]; ++ix[0]) {
        for (ix[1] = 0; ix[1] < cells[1]; ++ix[1]) {
            for (ix[2] = 0; ix[2] < cells[2]; ++ix[2], ++flat_space) {
                CellGeometry g = src.cell_geometry(target.x, ix);
                SpaceVec center = f.cell_center_space(ix);
                for (int k = 0; k < f.time_cells(); ++k) {
                    double s_lo = f.t_lo() + k * f.tau();
                    double tau_hi = target.t - s_lo;
                    if (tau_hi <= 0.0) break;  // later cells are even deeper in the future
                    double value = f.samples()[k * f.space_size() + flat_space];
                    if (value == 0.0) continue;
                    if (!accept(SpaceTimePoint{center, f.cell_center_time(k)})) continue;
                    // Same snap in time: a target on a time level must see
                    // tau_lo = 0 exactly, not arithmetic residue.
                    double tau_lo = tau_hi - f.tau();
                    if (std::abs(tau_lo) <= 1e-11 * f.tau()) tau_lo = 0.0;
                    Quad m = cell_kernel_mass(g, tau_lo, tau_hi, opt);
                    total.value += value * m.value;
                    total.error += value * m.error;
                }
            }
        }
    }
    return total;
}

void require_target_dim(const GridFunction& f, const std::vector<SpaceTimePoint>& targets) {
    for (const auto& p : targets)
        require(p.dim() == f.dim(), "target dimension must match the grid");
}

}  // namespace

std::vector<double> heat_potential(const GridFunction& f, double alpha,
                                   const std::vector<SpaceTimePoint>& targets,
                                   const PotentialOptions& opt) {
    require(f.sign() == SampleSign::non_negative, "heat potential requires nonnegative data");
    double e = potential_exponent(f.dim(), alpha);
    require_target_dim(f, targets);
    std::vector<double> out;
    out.reserve(targets.size());
    for (const auto& target : targets) {
        Quad q = accumulate_potential(f, e, target, [](const SpaceTimePoint&) { return true; },
                                      opt);
        if (q.error > 10.0 * opt.rel_tol * q.value + 1e-290)
            throw ToleranceError("heat potential quadrature missed its tolerance",
                                 q.value > 0.0 ? q.error / q.value : q.error);
        out.push_back(q.value);
    }
    return out;
}

namespace {

// Tabulated kernel masses per lattice offset for the aligned full-grid path.
struct KernelTable {
    Eigen::Index space_size = 0;
    std::vector<double> w;  // [dk * space_size + orthant offset]

    static KernelTable build(const GridFunction& f, double e, const PotentialOptions& opt) {
        KernelTable table;
        table.space_size = f.space_size();
        table.w.assign(static_cast<size_t>(f.time_cells()) * f.space_size(), 0.0);
        std::array<int, 3> off{0, 0, 0};
        const auto& cells = f.cells();
        for (int dk = 0; dk < f.time_cells(); ++dk) {
            double tau_hi = (dk + 0.5) * f.tau();
            double tau_lo = tau_hi - f.tau();
            size_t pos = static_cast<size_t>(dk) * f.space_size();
            for (off[0] = 0; off[0] < cells[0]; ++off[0])
                for (off[1] = 0; off[1] < cells[1]; ++off[1])
                    for (off[2] = 0; off[2] < cells[2]; ++off[2], ++pos) {
                        CellGeometry g;
                        g.n = f.dim();
                        g.e = e;
                        for (int d = 0; d < f.dim(); ++d) {
                            g.z_lo[d] = (off[d] - 0.5) * f.h();
                            g.z_hi[d] = (off[d] + 0.5) * f.h();
                        }
                        table.w[pos] = cell_kernel_mass(g, tau_lo, tau_hi, opt).value;
                    }
        }
        return table;
    }
};

// Orthant index of |i - j| for every spatial pair, shared by all time levels.
std::vector<int32_t> pair_offsets(const GridFunction& f) {
    Eigen::Index s = f.space_size();
    require(s * s <= (Eigen::Index{1} << 26),
            "grid too large for the tabulated convolution path");
    int n = f.dim();
    const auto& cells = f.cells();
    std::vector<int32_t> map(static_cast<size_t>(s) * s);
    std::array<int, 3> mi{0, 0, 0}, mj{0, 0, 0};
    for (Eigen::Index i = 0; i < s; ++i) {
        Eigen::Index rem = i;
        for (int d = n - 1; d >= 0; --d) {
            mi[d] = static_cast<int>(rem % cells[d]);
            rem /= cells[d];
        }
        for (Eigen::Index j = 0; j < s; ++j) {
            rem = j;
            for (int d = n - 1; d >= 0; --d) {
                mj[d] = static_cast<int>(rem % cells[d]);
                rem /= cells[d];
            }
            Eigen::Index idx = 0;
            for (int d = 0; d < n; ++d) idx = idx * cells[d] + std::abs(mi[d] - mj[d]);
            map[static_cast<size_t>(i) * s + j] = static_cast<int32_t>(idx);
        }
    }
    return map;
}

}  // namespace

GridFunction heat_potential_grid(const GridFunction& f, double alpha,
                                 const PotentialOptions& opt) {
    require(f.sign() == SampleSign::non_negative, "heat potential requires nonnegative data");
    double e = potential_exponent(f.dim(), alpha);
    KernelTable table = KernelTable::build(f, e, opt);
    std::vector<int32_t> pairs = pair_offsets(f);

    Eigen::Index s = f.space_size();
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(f.size());
    const double* fs = f.samples().data();
    for (int k = 0; k < f.time_cells(); ++k) {
        for (int m = 0; m <= k; ++m) {
            const double* wrow = &table.w[static_cast<size_t>(k - m) * s];
            const double* frow = fs + static_cast<Eigen::Index>(m) * s;
            double* urow = out.data() + static_cast<Eigen::Index>(k) * s;
            for (Eigen::Index i = 0; i < s; ++i) {
                const int32_t* prow = &pairs[static_cast<size_t>(i) * s];
                double acc = 0.0;
                for (Eigen::Index j = 0; j < s; ++j) acc += frow[j] * wrow[prow[j]];
                urow[i] += acc;
            }
        }
    }
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(),
                        f.time_cells(), std::move(out), SampleSign::non_negative);
}

PotentialDomain PotentialDomain::whole() { return {}; }

PotentialDomain PotentialDomain::past_ball(const SpaceTimePoint& center, double r) {
    require(std::isfinite(r) && r > 0.0, "domain scale must be positive");
    return {Kind::past_ball, center, r};
}

PotentialDomain PotentialDomain::heat_ball(const SpaceTimePoint& center, double r) {
    require(std::isfinite(r) && r > 0.0, "domain scale must be positive");
    return {Kind::heat_ball, center, r};
}

bool PotentialDomain::contains(const SpaceTimePoint& q) const {
    switch (kind) {
        case Kind::whole: return true;
        case Kind::past_ball: return in_past_ball_rescaled(center, r, q);
        case Kind::heat_ball: return in_heat_ball_rescaled(center, r, q);
    }
    return false;
}

std::vector<double> local_potential(const GridFunction& f, const PotentialDomain& domain,
                                    double alpha, const std::vector<SpaceTimePoint>& targets,
                                    const PotentialOptions& opt) {
    require(f.sign() == SampleSign::non_negative, "heat potential requires nonnegative data");
    require(std::isfinite(alpha) && alpha > 0.0 && alpha <= f.dim() + 2,
            "localized potential requires alpha in (0, n+2]");
    double e = alpha == f.dim() + 2 ? 0.0 : potential_exponent(f.dim(), alpha);
    require_target_dim(f, targets);
    if (domain.kind != PotentialDomain::Kind::whole)
        require(domain.center.dim() == f.dim(), "domain center dimension must match the grid");
    std::vector<double> out;
    out.reserve(targets.size());
    for (const auto& target : targets) {
        Quad q = accumulate_potential(
            f, e, target, [&](const SpaceTimePoint& c) { return domain.contains(c); }, opt);
        out.push_back(q.value);
    }
    return out;
}

HedbergSplit hedberg_split(const GridFunction& f, double alpha, double rho,
                           const SpaceTimePoint& target, const PotentialOptions& opt) {
    require(std::isfinite(rho) && rho > 0.0, "split radius must be positive");
    double whole = heat_potential(f, alpha, {target}, opt)[0];
    // The heat ball of radius rho is the rescaled family's member at rho^2.
    double near =
        local_potential(f, PotentialDomain::heat_ball(target, rho * rho), alpha, {target},
                        opt)[0];
    return {near, std::max(whole - near, 0.0)};
}

std::vector<double> slab_potential(const GridFunction& f, double alpha, const SlabSpec& slab,
                                   const std::vector<SpaceTimePoint>& targets,
                                   const PotentialOptions& opt) {
    require(f.sign() == SampleSign::non_negative, "heat potential requires nonnegative data");
    require(std::isfinite(slab.a) && std::isfinite(slab.b) && slab.a < slab.b,
            "slab must have positive width");
    double e = potential_exponent(f.dim(), alpha);
    require_target_dim(f, targets);
    std::vector<double> out;
    out.reserve(targets.size());
    for (const auto& target : targets) {
        Quad q = accumulate_potential(
            f, e, target,
            [&](const SpaceTimePoint& c) { return c.t > slab.a && c.t < slab.b; }, opt);
        out.push_back(q.value);
    }
    return out;
}

double slab_norm_ratio(const GridFunction& f, double alpha, const LpExponent& p,
                       const LpExponent& q, const SlabSpec& slab, const PotentialOptions& opt) {
    require(std::isfinite(slab.a) && std::isfinite(slab.b) && slab.a < slab.b,
            "slab must have positive width");
    double delta = p.reciprocal() - q.reciprocal();
    double ratio_cap = alpha / (f.dim() + 2);
    if (!(delta >= 0.0 && delta < ratio_cap)) {
        std::ostringstream msg;
        msg << "slab exponents must satisfy 0 <= 1/p - 1/q < alpha/(n+2): got 1/p - 1/q = "
            << delta << " and alpha/(n+2) = " << ratio_cap;
        throw std::invalid_argument(msg.str());
    }
    int k_lo = f.time_cells(), k_hi = 0;
    for (int k = 0; k < f.time_cells(); ++k) {
        double t = f.cell_center_time(k);
        if (t > slab.a && t < slab.b) {
            k_lo = std::min(k_lo, k);
            k_hi = std::max(k_hi, k + 1);
        }
    }
    require(k_lo < k_hi, "slab contains no grid time levels");
    GridFunction f_slab = time_slice(f, k_lo, k_hi - k_lo);
    double norm_p = lp_norm(f_slab, p);
    require(norm_p > 0.0, "slab norm ratio requires nonzero data on the slab");
    GridFunction v = heat_potential_grid(f_slab, alpha, opt);
    return lp_norm(v, q) / norm_p;
}

void validate_potential_params(int n, const PotentialParams& params) {
    require(std::isfinite(params.alpha) && params.alpha > 0.0 && params.alpha < n + 2,
            "alpha must lie in (0, n+2)");
    require(std::isfinite(params.beta) && params.beta > 0.0 && params.beta < n + 2,
            "beta must lie in (0, n+2)");
    double sigma_floor = params.alpha / (n + 2 - params.beta);
    if (!(params.sigma > sigma_floor)) {
        std::ostringstream msg;
        msg << "sup-norm estimate requires sigma > alpha/(n+2-beta) = " << sigma_floor
            << ": got sigma = " << params.sigma;
        throw std::invalid_argument(msg.str());
    }
    double r_cap = (n + 2) * params.sigma / (params.alpha + params.beta * params.sigma);
    if (params.r.is_infinite() || !(params.r.value() < r_cap)) {
        std::ostringstream msg;
        msg << "sup-norm estimate requires 1 <= r < (n+2)sigma/(alpha+beta*sigma) = " << r_cap;
        throw std::invalid_argument(msg.str());
    }
}

namespace {

// f's samples dropped into a larger aligned grid: pad_cells extra cells on
// every spatial side, extra_time extra levels at the top.
GridFunction embed_padded(const GridFunction& f, int pad_cells, int extra_time) {
    int n = f.dim();
    std::array<int, 3> cells{1, 1, 1};
    for (int d = 0; d < n; ++d) cells[d] = f.cells()[d] + 2 * pad_cells;
    int nt = f.time_cells() + extra_time;
    Eigen::Index space = 1;
    for (int d = 0; d < n; ++d) space *= cells[d];
    Eigen::ArrayXd samples = Eigen::ArrayXd::Zero(space * nt);

    std::array<int, 3> ix{0, 0, 0};
    for (int k = 0; k < f.time_cells(); ++k) {
        for (ix[0] = 0; ix[0] < f.cells()[0]; ++ix[0])
            for (ix[1] = 0; ix[1] < f.cells()[1]; ++ix[1])
                for (ix[2] = 0; ix[2] < f.cells()[2]; ++ix[2]) {
                    Eigen::Index dst = k;
                    for (int d = 0; d < n; ++d) dst = dst * cells[d] + ix[d] + pad_cells;
                    samples[dst] = f.value(ix, k);
                }
    }
    SpaceVec lo = f.space_lo();
    for (int d = 0; d < n; ++d) lo[d] -= pad_cells * f.h();
    return GridFunction(n, lo, f.h(), cells, f.t_lo(), f.tau(), nt, std::move(samples),
                        SampleSign::non_negative);
}

double parabolic_diameter(const GridFunction& f) {
    double diag = (f.space_hi() - f.space_lo()).norm();
    return std::max(diag, std::sqrt(f.t_hi() - f.t_lo()));
}

}  // namespace

std::vector<double> nonlinear_potential(const GridFunction& f, const PotentialParams& params,
                                        const std::vector<SpaceTimePoint>& targets,
                                        const NonlinearOptions& opt) {
    require(std::isfinite(params.sigma) && params.sigma > 0.0, "sigma must be positive");
    potential_exponent(f.dim(), params.alpha);
    potential_exponent(f.dim(), params.beta);
    require_target_dim(f, targets);

    double pad = opt.pad_space >= 0.0 ? opt.pad_space : 2.0 * parabolic_diameter(f);
    int pad_cells = static_cast<int>(std::ceil(pad / f.h()));
    double t_need = f.t_hi();
    for (const auto& target : targets) t_need = std::max(t_need, target.t);
    int extra_time = static_cast<int>(std::ceil((t_need - f.t_hi()) / f.tau() - 1e-12));
    extra_time = std::max(extra_time, 0);

    GridFunction padded = embed_padded(f, pad_cells, extra_time);
    GridFunction inner = heat_potential_grid(padded, params.beta, opt.quadrature);
    GridFunction inner_pow = power(inner, params.sigma);
    return heat_potential(inner_pow, params.alpha, targets, opt.quadrature);
}

GridFunction nonlinear_potential_grid(const GridFunction& f, const PotentialParams& params,
                                      const NonlinearOptions& opt) {
    require(std::isfinite(params.sigma) && params.sigma > 0.0, "sigma must be positive");
    potential_exponent(f.dim(), params.alpha);
    potential_exponent(f.dim(), params.beta);

    double pad = opt.pad_space >= 0.0 ? opt.pad_space : 2.0 * parabolic_diameter(f);
    int pad_cells = static_cast<int>(std::ceil(pad / f.h()));
    GridFunction padded = embed_padded(f, pad_cells, 0);
    GridFunction inner = heat_potential_grid(padded, params.beta, opt.quadrature);
    GridFunction inner_pow = power(inner, params.sigma);
    return heat_potential_grid(inner_pow, params.alpha, opt.quadrature);
}

RadiusGrid RadiusGrid::geometric(double r_min, double r_max, int count) {
    require(std::isfinite(r_min) && r_min > 0.0 && r_max >= r_min,
            "radius ladder needs 0 < r_min <= r_max");
    require(count >= 1, "radius ladder needs at least one radius");
    RadiusGrid grid;
    grid.radii.resize(count);
    if (count == 1) {
        grid.radii[0] = r_min;
        return grid;
    }
    double log_lo = std::log(r_min);
    double step = (std::log(r_max) - log_lo) / (count - 1);
    for (int i = 0; i < count; ++i) grid.radii[i] = std::exp(log_lo + i * step);
    return grid;
}

RadiusGrid default_radius_grid(const GridFunction& f) {
    return RadiusGrid::geometric(f.h(), 4.0 * parabolic_diameter(f), 64);
}

namespace {

enum class BallShape { heat, metric };

// Per-cell entry radii binned against the ladder; prefix sums then give the
// mass and measured volume of every ball in one pass over the grid.
struct BallAverages {
    std::vector<double> mass;
    std::vector<double> volume;
};

BallAverages ball_averages(const GridFunction& f, const SpaceTimePoint& target,
                           const std::vector<double>& radii, BallShape shape) {
    int count = static_cast<int>(radii.size());
    BallAverages out;
    out.mass.assign(count, 0.0);
    out.volume.assign(count, 0.0);
    double vol = f.cell_volume();
    int n = f.dim();
    for (Eigen::Index flat = 0; flat < f.size(); ++flat) {
        SpaceTimePoint c = f.cell_center(flat);
        double entry;  // smallest radius whose ball admits this cell
        if (shape == BallShape::heat) {
            double lp = heat_kernel_log(target.x - c.x, target.t - c.t);
            if (lp == -std::numeric_limits<double>::infinity()) continue;
            entry = std::exp(-lp / n);
        } else {
            entry = parabolic_distance(target, c);
        }
        auto it = std::upper_bound(radii.begin(), radii.end(), entry);
        if (it == radii.end()) continue;
        int idx = static_cast<int>(it - radii.begin());
        out.mass[idx] += f.samples()[flat] * vol;
        out.volume[idx] += vol;
    }
    for (int i = 1; i < count; ++i) {
        out.mass[i] += out.mass[i - 1];
        out.volume[i] += out.volume[i - 1];
    }
    return out;
}

MaximalResult maximal_from_averages(const BallAverages& avg, const std::vector<double>& radii) {
    MaximalResult best;
    for (size_t i = 0; i < radii.size(); ++i) {
        if (avg.volume[i] <= 0.0) continue;
        double value = avg.mass[i] / avg.volume[i];
        if (value > best.value) {
            best.value = value;
            best.radius = radii[i];
        }
    }
    return best;
}

MaximalResult maximal_at(const GridFunction& f, const SpaceTimePoint& target,
                         const RadiusGrid& radii, BallShape shape) {
    require(target.dim() == f.dim(), "target dimension must match the grid");
    require(!radii.radii.empty(), "radius ladder must be nonempty");
    require(std::is_sorted(radii.radii.begin(), radii.radii.end()),
            "radius ladder must be ascending");
    return maximal_from_averages(ball_averages(f, target, radii.radii, shape), radii.radii);
}

GridFunction maximal_grid(const GridFunction& f, const RadiusGrid& radii, BallShape shape) {
    Eigen::ArrayXd out(f.size());
    for (Eigen::Index flat = 0; flat < f.size(); ++flat)
        out[flat] = maximal_at(f, f.cell_center(flat), radii, shape).value;
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(),
                        f.time_cells(), std::move(out), SampleSign::non_negative);
}

}  // namespace

MaximalResult maximal_M(const GridFunction& f, const SpaceTimePoint& target,
                        const RadiusGrid& radii) {
    return maximal_at(f, target, radii, BallShape::heat);
}

MaximalResult maximal_Mhat(const GridFunction& f, const SpaceTimePoint& target,
                           const RadiusGrid& radii) {
    return maximal_at(f, target, radii, BallShape::metric);
}

GridFunction maximal_M_grid(const GridFunction& f, const RadiusGrid& radii) {
    return maximal_grid(f, radii, BallShape::heat);
}

GridFunction maximal_Mhat_grid(const GridFunction& f, const RadiusGrid& radii) {
    return maximal_grid(f, radii, BallShape::metric);
}

BallMass heat_ball_mass(const GridFunction& f, const SpaceTimePoint& target, double r) {
    require(target.dim() == f.dim(), "target dimension must match the grid");
    require(std::isfinite(r) && r > 0.0, "ball radius must be positive");
    BallMass out;
    double vol = f.cell_volume();
    BallRadius radius(r);
    for (Eigen::Index flat = 0; flat < f.size(); ++flat) {
        SpaceTimePoint c = f.cell_center(flat);
        if (!in_heat_ball(target, radius, c)) continue;
        out.mass += f.samples()[flat] * vol;
        out.volume += vol;
    }
    return out;
}

BallMass metric_ball_mass(const GridFunction& f, const SpaceTimePoint& target, double r) {
    require(target.dim() == f.dim(), "target dimension must match the grid");
    require(std::isfinite(r) && r > 0.0, "ball radius must be positive");
    BallMass out;
    double vol = f.cell_volume();
    for (Eigen::Index flat = 0; flat < f.size(); ++flat) {
        SpaceTimePoint c = f.cell_center(flat);
        if (!in_metric_ball(target, r, c)) continue;
        out.mass += f.samples()[flat] * vol;
        out.volume += vol;
    }
    return out;
}

}  // namespace heatpot
