#include "heatpot/grid.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace heatpot {

namespace {

// Caps total sample count at 2^26 (512 MiB of doubles is already past what
// any routine here needs).
constexpr Eigen::Index kMaxSamples = Eigen::Index{1} << 26;

Eigen::Index checked_space_size(int n, const std::array<int, 3>& cells) {
    Eigen::Index size = 1;
    for (int d = 0; d < n; ++d) {
        require(cells[d] >= 1, "grid must have at least one cell per axis");
        size *= cells[d];
    }
    for (int d = n; d < 3; ++d)
        require(cells[d] == 1, "cell counts beyond the grid dimension must be 1");
    return size;
}

}  // namespace

GridFunction::GridFunction(int n, const SpaceVec& space_lo, double h,
                           const std::array<int, 3>& cells, double t_lo, double tau,
                           int time_cells, Eigen::ArrayXd samples, SampleSign sign)
    : n_(n),
      space_lo_(space_lo),
      h_(h),
      cells_(cells),
      t_lo_(t_lo),
      tau_(tau),
      time_cells_(time_cells),
      space_size_(0),
      samples_(std::move(samples)),
      sign_(sign) {
    require_dimension(n_);
    require(space_lo_.size() == n_, "space_lo length must equal the grid dimension");
    require(std::isfinite(h_) && h_ > 0.0, "spatial cell size must be positive");
    require(std::isfinite(tau_) && tau_ > 0.0, "temporal cell size must be positive");
    require(std::isfinite(t_lo_), "grid start time must be finite");
    require(space_lo_.allFinite(), "grid corner must be finite");
    require(time_cells_ >= 1, "grid must have at least one time level");
    space_size_ = checked_space_size(n_, cells_);
    require(space_size_ * time_cells_ <= kMaxSamples, "grid exceeds the sample budget");
    require(samples_.size() == space_size_ * time_cells_,
            "sample count must match the grid shape");
    if (!samples_.allFinite()) throw std::domain_error("grid samples must be finite");
    if (sign_ == SampleSign::non_negative && samples_.size() > 0 && samples_.minCoeff() < 0.0)
        throw std::domain_error("grid samples must be nonnegative");
}

GridFunction GridFunction::from_function(int n, const SpaceVec& space_lo, double h,
                                         const std::array<int, 3>& cells, double t_lo, double tau,
                                         int time_cells,
                                         const std::function<double(const SpaceVec&, double)>& f,
                                         SampleSign sign) {
    Eigen::Index space_size = checked_space_size(n, cells);
    Eigen::ArrayXd samples(space_size * time_cells);
    SpaceVec x(n);
    Eigen::Index pos = 0;
    for (int k = 0; k < time_cells; ++k) {
        double t = t_lo + (k + 0.5) * tau;
        for (int i0 = 0; i0 < cells[0]; ++i0) {
            x[0] = space_lo[0] + (i0 + 0.5) * h;
            for (int i1 = 0; i1 < cells[1]; ++i1) {
                if (n >= 2) x[1] = space_lo[1] + (i1 + 0.5) * h;
                for (int i2 = 0; i2 < cells[2]; ++i2) {
                    if (n >= 3) x[2] = space_lo[2] + (i2 + 0.5) * h;
                    samples[pos++] = f(x, t);
                }
            }
        }
    }
    return GridFunction(n, space_lo, h, cells, t_lo, tau, time_cells, std::move(samples), sign);
}

SpaceVec GridFunction::space_hi() const {
    SpaceVec hi(n_);
    for (int d = 0; d < n_; ++d) hi[d] = space_lo_[d] + h_ * cells_[d];
    return hi;
}

double GridFunction::cell_volume() const { return pow_int(h_, n_) * tau_; }

Eigen::Index GridFunction::flat_index(const std::array<int, 3>& ix, int k) const {
    Eigen::Index flat = k;
    for (int d = 0; d < n_; ++d) flat = flat * cells_[d] + ix[d];
    return flat;
}

SpaceVec GridFunction::cell_center_space(const std::array<int, 3>& ix) const {
    SpaceVec x(n_);
    for (int d = 0; d < n_; ++d) x[d] = space_lo_[d] + (ix[d] + 0.5) * h_;
    return x;
}

double GridFunction::cell_center_time(int k) const { return t_lo_ + (k + 0.5) * tau_; }

SpaceTimePoint GridFunction::cell_center(Eigen::Index flat) const {
    std::array<int, 3> ix{0, 0, 0};
    for (int d = n_ - 1; d >= 0; --d) {
        ix[d] = static_cast<int>(flat % cells_[d]);
        flat /= cells_[d];
    }
    return {cell_center_space(ix), cell_center_time(static_cast<int>(flat))};
}

double GridFunction::value(const std::array<int, 3>& ix, int k) const {
    return samples_[flat_index(ix, k)];
}

bool GridFunction::same_geometry(const GridFunction& other) const {
    return n_ == other.n_ && space_lo_ == other.space_lo_ && h_ == other.h_ &&
           cells_ == other.cells_ && t_lo_ == other.t_lo_ && tau_ == other.tau_ &&
           time_cells_ == other.time_cells_;
}

double integrate(const GridFunction& f) { return f.samples().sum() * f.cell_volume(); }

double lp_norm(const GridFunction& f, const LpExponent& p) {
    if (f.size() == 0) return 0.0;
    if (p.is_infinite()) return f.samples().abs().maxCoeff();
    double pv = p.value();
    if (pv == 1.0) return f.samples().abs().sum() * f.cell_volume();
    // Scale by the max first so the powers stay in range.
    double peak = f.samples().abs().maxCoeff();
    if (peak == 0.0) return 0.0;
    double sum = (f.samples().abs() / peak).pow(pv).sum();
    return peak * std::pow(sum * f.cell_volume(), 1.0 / pv);
}

GridFunction power(const GridFunction& f, double sigma) {
    require(std::isfinite(sigma) && sigma > 0.0, "pointwise power exponent must be positive");
    require(f.sign() == SampleSign::non_negative,
            "pointwise power requires nonnegative samples");
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(),
                        f.time_cells(), f.samples().pow(sigma), SampleSign::non_negative);
}

GridFunction add(const GridFunction& f, const GridFunction& g) {
    require(f.same_geometry(g), "grid sum requires identical grids");
    SampleSign sign = (f.sign() == SampleSign::non_negative && g.sign() == SampleSign::non_negative)
                          ? SampleSign::non_negative
                          : SampleSign::any;
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(),
                        f.time_cells(), f.samples() + g.samples(), sign);
}

GridFunction add_scalar(const GridFunction& f, double c) {
    require(std::isfinite(c), "grid shift must be finite");
    SampleSign sign = (f.sign() == SampleSign::non_negative && c >= 0.0)
                          ? SampleSign::non_negative
                          : SampleSign::any;
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(),
                        f.time_cells(), f.samples() + c, sign);
}

GridFunction scale(const GridFunction& f, double c) {
    require(std::isfinite(c), "grid scale factor must be finite");
    SampleSign sign = (f.sign() == SampleSign::non_negative && c >= 0.0)
                          ? SampleSign::non_negative
                          : SampleSign::any;
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(),
                        f.time_cells(), f.samples() * c, sign);
}

GridFunction offset_heat_floor(const GridFunction& f) {
    require(f.t_lo() > 0.0, "heat floor requires the grid to start at a positive time");
    Eigen::ArrayXd out = f.samples();
    for (int k = 0; k < f.time_cells(); ++k) {
        double floor = std::pow(f.cell_center_time(k), -0.5 * f.dim());
        out.segment(static_cast<Eigen::Index>(k) * f.space_size(), f.space_size()) += floor;
    }
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo(), f.tau(),
                        f.time_cells(), std::move(out), f.sign());
}

GridFunction heat_residual(const GridFunction& f) {
    int n = f.dim();
    require(f.time_cells() >= 3, "heat residual needs at least three time levels");
    std::array<int, 3> inner{1, 1, 1};
    for (int d = 0; d < n; ++d) {
        require(f.cells()[d] >= 3, "heat residual needs at least three cells per axis");
        inner[d] = f.cells()[d] - 2;
    }
    int inner_nt = f.time_cells() - 2;
    Eigen::Index inner_space = 1;
    for (int d = 0; d < n; ++d) inner_space *= inner[d];
    Eigen::ArrayXd out(inner_space * inner_nt);

    double inv_2tau = 1.0 / (2.0 * f.tau());
    double inv_h2 = 1.0 / (f.h() * f.h());
    std::array<int, 3> ix{0, 0, 0};
    Eigen::Index pos = 0;
    for (int k = 1; k + 1 < f.time_cells(); ++k) {
        for (int i0 = 1; i0 + 1 < f.cells()[0]; ++i0) {
            for (int i1 = (n >= 2 ? 1 : 0); i1 + 1 < (n >= 2 ? f.cells()[1] : 2); ++i1) {
                for (int i2 = (n >= 3 ? 1 : 0); i2 + 1 < (n >= 3 ? f.cells()[2] : 2); ++i2) {
                    ix = {i0, i1, i2};
                    double center = f.value(ix, k);
                    double dt = (f.value(ix, k + 1) - f.value(ix, k - 1)) * inv_2tau;
                    double lap = 0.0;
                    for (int d = 0; d < n; ++d) {
                        std::array<int, 3> lo = ix, hi = ix;
                        --lo[d];
                        ++hi[d];
                        lap += (f.value(lo, k) - 2.0 * center + f.value(hi, k)) * inv_h2;
                    }
                    out[pos++] = dt - lap;
                }
            }
        }
    }

    SpaceVec lo = f.space_lo();
    for (int d = 0; d < n; ++d) lo[d] += f.h();
    return GridFunction(n, lo, f.h(), inner, f.t_lo() + f.tau(), f.tau(), inner_nt,
                        std::move(out), SampleSign::any);
}

GridFunction time_slice(const GridFunction& f, int k_lo, int count) {
    require(k_lo >= 0 && count >= 1 && k_lo + count <= f.time_cells(),
            "time slice must lie inside the grid");
    Eigen::ArrayXd out =
        f.samples().segment(static_cast<Eigen::Index>(k_lo) * f.space_size(),
                            static_cast<Eigen::Index>(count) * f.space_size());
    return GridFunction(f.dim(), f.space_lo(), f.h(), f.cells(), f.t_lo() + k_lo * f.tau(),
                        f.tau(), count, std::move(out), f.sign());
}

GridFunction parabolic_dilate(const GridFunction& f, double r) {
    require(std::isfinite(r) && r > 0.0, "dilation factor must be positive");
    SpaceVec lo = f.space_lo() * r;
    return GridFunction(f.dim(), lo, f.h() * r, f.cells(), f.t_lo() * r * r, f.tau() * r * r,
                        f.time_cells(), f.samples(), f.sign());
}

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

nlohmann::json grid_header(const GridFunction& f) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "grid_function";
    j["n"] = f.dim();
    j["space_lo"] = std::vector<double>(f.space_lo().data(), f.space_lo().data() + f.dim());
    j["h"] = f.h();
    std::vector<int> cells(f.cells().begin(), f.cells().begin() + f.dim());
    j["cells"] = cells;
    j["t_lo"] = f.t_lo();
    j["tau"] = f.tau();
    j["time_cells"] = f.time_cells();
    j["sign"] = f.sign() == SampleSign::non_negative ? "non_negative" : "any";
    j["order"] = "time-major;space-row-major;last-axis-fastest";
    return j;
}

GridFunction grid_from_header(const nlohmann::json& j, Eigen::ArrayXd samples) {
    if (j.value("kind", "") != std::string("grid_function"))
        throw std::runtime_error("grid file header has the wrong kind");
    if (j.value("schema_version", 0) != 1)
        throw std::runtime_error("unsupported grid file schema version");
    int n = j.at("n").get<int>();
    require_dimension(n);
    std::vector<double> lo_v = j.at("space_lo").get<std::vector<double>>();
    std::vector<int> cells_v = j.at("cells").get<std::vector<int>>();
    require(static_cast<int>(lo_v.size()) == n && static_cast<int>(cells_v.size()) == n,
            "grid file header shape fields disagree with n");
    SpaceVec lo(n);
    for (int d = 0; d < n; ++d) lo[d] = lo_v[d];
    std::array<int, 3> cells{1, 1, 1};
    for (int d = 0; d < n; ++d) cells[d] = cells_v[d];
    SampleSign sign = j.at("sign").get<std::string>() == "any" ? SampleSign::any
                                                               : SampleSign::non_negative;
    return GridFunction(n, lo, j.at("h").get<double>(), cells, j.at("t_lo").get<double>(),
                        j.at("tau").get<double>(), j.at("time_cells").get<int>(),
                        std::move(samples), sign);
}

}  // namespace

void write_grid(const std::string& path, const GridFunction& f) {
    nlohmann::json header = grid_header(f);
    if (has_suffix(path, ".json")) {
        header["samples"] = std::vector<double>(f.samples().data(),
                                                f.samples().data() + f.size());
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open grid file for writing: " + path);
        out << header.dump(2) << '\n';
        if (!out) throw std::runtime_error("failed writing grid file: " + path);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open grid file for writing: " + path);
    out << header.dump() << '\n';
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(f.samples().data()),
              static_cast<std::streamsize>(f.size()) * 8);
    if (!out) throw std::runtime_error("failed writing grid file: " + path);
}

GridFunction read_grid(const std::string& path) {
    if (has_suffix(path, ".json")) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open grid file: " + path);
        nlohmann::json j = nlohmann::json::parse(in);
        std::vector<double> samples_v = j.at("samples").get<std::vector<double>>();
        Eigen::ArrayXd samples =
            Eigen::Map<const Eigen::ArrayXd>(samples_v.data(), samples_v.size());
        return grid_from_header(j, std::move(samples));
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open grid file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line))
        throw std::runtime_error("grid file is missing its header line: " + path);
    nlohmann::json j = nlohmann::json::parse(header_line);
    int n = j.at("n").get<int>();
    require_dimension(n);
    Eigen::Index count = j.at("time_cells").get<Eigen::Index>();
    for (int d = 0; d < n; ++d) count *= j.at("cells").at(d).get<Eigen::Index>();
    Eigen::ArrayXd samples(count);
    in.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(count) * 8);
    if (in.gcount() != static_cast<std::streamsize>(count) * 8)
        throw std::runtime_error("grid file sample block is truncated: " + path);
    return grid_from_header(j, std::move(samples));
}

}  // namespace heatpot
