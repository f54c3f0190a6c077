// SPDX-License-Identifier: Apache-2.0

#include "heatpot/run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <utility>

#include "heatpot/blowup.hpp"
#include "heatpot/grid.hpp"
#include "heatpot/inequality.hpp"
#include "heatpot/kernel.hpp"
#include "heatpot/potential.hpp"
#include "heatpot/regions.hpp"

namespace heatpot {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void usage_error(const std::string& msg) { throw std::invalid_argument(msg); }

// ---- exponent parsing: decimals and exact fractions ----

bool has_slash(const std::string& s) { return s.find('/') != std::string::npos; }

long long parse_integer(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        usage_error(what + " must be an integer, got '" + text + "'");
    }
}

// "p/q", "-3", or a plain decimal, all mapped exactly. Decimals become
// num/10^k, so "2.75" and "11/4" land on the same rational.
Rational parse_fraction(const std::string& text, const std::string& what) {
    if (text.empty()) usage_error(what + " is required");
    auto cut = text.find('/');
    if (cut != std::string::npos) {
        long long num = parse_integer(text.substr(0, cut), what + " numerator");
        long long den = parse_integer(text.substr(cut + 1), what + " denominator");
        if (den == 0) usage_error(what + " denominator must be nonzero");
        return Rational(num, den);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(parse_integer(text, what));
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::string frac = text.substr(dot + 1);
    if (frac.size() > 15)
        usage_error(what + " has more than 15 decimal places; write it as a fraction");
    long long num = parse_integer(digits, what);
    long long den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    return Rational(num, den);
}

double parse_scalar(const std::string& text, const std::string& what) {
    if (text.empty()) usage_error(what + " is required");
    if (has_slash(text)) return parse_fraction(text, what).value();
    try {
        std::size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        usage_error(what + " must be a number or a fraction like 11/4, got '" + text + "'");
    }
}

std::string fraction_text(const Rational& q) {
    return std::to_string(q.num()) + "/" + std::to_string(q.den());
}

// ---- rate targets ----

// Nodes are (t, value) pairs with strictly increasing positive t and positive
// values; evaluation interpolates linearly in (log t, log value) and clamps
// beyond the ends. A decay or growth demand on the table is the
// construction's to enforce.
TimeProfile load_phi_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read phi table " + path);
    auto nodes = std::make_shared<std::vector<std::pair<double, double>>>();
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cut = line.find(',');
        if (cut == std::string::npos)
            usage_error("phi table " + path + " needs two comma-separated columns per row");
        double t = 0.0, value = 0.0;
        try {
            t = std::stod(line.substr(0, cut));
            value = std::stod(line.substr(cut + 1));
        } catch (const std::exception&) {
            if (first) {
                first = false;  // header row
                continue;
            }
            usage_error("phi table " + path + " has a non-numeric row: " + line);
        }
        first = false;
        if (!(t > 0.0) || !(value > 0.0))
            usage_error("phi table " + path + " needs positive times and values");
        if (!nodes->empty() && t <= nodes->back().first)
            usage_error("phi table " + path + " needs strictly increasing times");
        nodes->emplace_back(t, value);
    }
    if (nodes->size() < 2) usage_error("phi table " + path + " needs at least 2 rows");
    return [nodes](double t) {
        const auto& tab = *nodes;
        if (t <= tab.front().first) return tab.front().second;
        if (t >= tab.back().first) return tab.back().second;
        auto it = std::upper_bound(tab.begin(), tab.end(), t,
                                   [](double x, const auto& node) { return x < node.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        double w = (std::log(t) - std::log(lo.first)) / (std::log(hi.first) - std::log(lo.first));
        return std::exp((1.0 - w) * std::log(lo.second) + w * std::log(hi.second));
    };
}

TimeProfile make_phi(const RunConfig& cfg, const std::string& fallback, std::string& name_out) {
    std::string name = cfg.phi.empty() ? fallback : cfg.phi;
    name_out = name;
    if (name == "t") return [](double t) { return t; };
    if (name == "sqrt") return [](double t) { return std::sqrt(t); };
    if (name == "log") return [](double t) { return std::log(1.0 / t); };
    if (name == "custom-table") {
        if (cfg.phi_table.empty()) usage_error("--phi custom-table needs --phi-table FILE");
        return load_phi_table(cfg.phi_table);
    }
    usage_error("unknown phi '" + name + "'; choose t, sqrt, log, or custom-table");
}

// ---- artifact plumbing ----

std::string canonical(const json& j) { return j.dump(2) + "\n"; }

void ensure_parent(const fs::path& path) {
    if (!path.has_parent_path()) return;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec)
        throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " +
                                 ec.message());
}

void write_file(const fs::path& path, const std::string& content) {
    ensure_parent(path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write to " + path.string() + " failed");
}

struct OutputPlan {
    fs::path report;
    fs::path trace;
    fs::path snapshot;  // empty = none requested
};

OutputPlan plan_outputs(const RunConfig& cfg, const std::string& slug) {
    std::string dir = cfg.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("HEATPOT_OUT_DIR");
        dir = (env != nullptr && *env != '\0') ? env : ".";
    }
    fs::path base(dir);
    auto resolve = [&base](const std::string& given, const std::string& fallback) {
        fs::path p = given.empty() ? fs::path(fallback) : fs::path(given);
        return p.is_absolute() ? p : base / p;
    };
    OutputPlan plan;
    plan.report = resolve(cfg.report_path, slug + "_report.json");
    plan.trace = resolve(cfg.trace_path, slug + "_trace.csv");
    if (!cfg.snapshot_path.empty()) plan.snapshot = resolve(cfg.snapshot_path, "");
    return plan;
}

int emit(const json& report, const OutputPlan& plan, const std::string& trace, std::ostream& out,
         int code) {
    std::string text = canonical(report);
    write_file(plan.report, text);
    if (!trace.empty()) write_file(plan.trace, trace);
    out << text;
    return code;
}

json bound_json(const BoundDescriptor& b) {
    json j;
    j["kind"] = bound_kind_name(b.kind);
    if (b.kind == BoundKind::big_O || b.kind == BoundKind::little_o) j["exponent"] = b.exponent;
    return j;
}

json grid_json(const GridFunction& g) {
    json j;
    j["n"] = g.dim();
    json lo = json::array();
    json cells = json::array();
    for (int d = 0; d < g.dim(); ++d) {
        lo.push_back(g.space_lo()[d]);
        cells.push_back(g.cells()[d]);
    }
    j["space_lo"] = lo;
    j["cells"] = cells;
    j["h"] = g.h();
    j["t_lo"] = g.t_lo();
    j["tau"] = g.tau();
    j["time_cells"] = g.time_cells();
    return j;
}

// Cell-center rows for grids sharing one geometry; one value column each.
std::string grid_csv(const std::vector<std::pair<std::string, const GridFunction*>>& columns) {
    const GridFunction& g = *columns.front().second;
    std::ostringstream os;
    os.precision(17);
    for (int d = 0; d < g.dim(); ++d) os << "x" << (d + 1) << ",";
    os << "t";
    for (const auto& c : columns) os << "," << c.first;
    os << "\n";
    const std::array<int, 3>& cells = g.cells();
    for (int k = 0; k < g.time_cells(); ++k)
        for (int i0 = 0; i0 < cells[0]; ++i0)
            for (int i1 = 0; i1 < cells[1]; ++i1)
                for (int i2 = 0; i2 < cells[2]; ++i2) {
                    std::array<int, 3> ix{i0, i1, i2};
                    SpaceVec x = g.cell_center_space(ix);
                    for (int d = 0; d < g.dim(); ++d) os << x[d] << ",";
                    os << g.cell_center_time(k);
                    for (const auto& c : columns) os << "," << c.second->value(ix, k);
                    os << "\n";
                }
    return os.str();
}

// ---- shared option blocks ----

CorpusSpec corpus_spec(const RunConfig& cfg, int count) {
    CorpusSpec sp;
    sp.seed = cfg.seed;
    sp.count = count;
    sp.dim = cfg.n;
    if (cfg.cells > 0) sp.cells_per_axis = cfg.cells;
    if (cfg.time_cells > 0) sp.time_cells = cfg.time_cells;
    return sp;
}

PotentialOptions quad_options(const RunConfig& cfg) {
    PotentialOptions opt;
    if (cfg.quad_tol > 0.0) opt.rel_tol = cfg.quad_tol;
    if (cfg.quad_depth > 0) opt.max_depth = cfg.quad_depth;
    return opt;
}

EvalOptions eval_options(const RunConfig& cfg) {
    EvalOptions opt;
    if (cfg.quad_tol > 0.0) opt.rel_tol = cfg.quad_tol;
    if (cfg.quad_depth > 0) opt.max_depth = cfg.quad_depth;
    return opt;
}

// ---- commands ----

int cmd_classify(const RunConfig& cfg, std::ostream& out) {
    if (cfg.lambda.empty() || cfg.sigma.empty()) usage_error("classify needs --lambda and --sigma");
    bool exact = has_slash(cfg.lambda) || has_slash(cfg.sigma);
    RegionVerdict v =
        exact ? classify(cfg.n, parse_fraction(cfg.lambda, "lambda"),
                         parse_fraction(cfg.sigma, "sigma"))
              : classify(cfg.n, parse_scalar(cfg.lambda, "lambda"), parse_scalar(cfg.sigma, "sigma"));
    json j;
    j["schema_version"] = 1;
    j["command"] = "classify";
    j["exact"] = exact;
    j["n"] = v.n;
    j["lambda"] = v.lambda;
    j["sigma"] = v.sigma;
    j["swapped"] = v.swapped;
    j["region"] = region_name(v.region);
    j["bound_u"] = bound_json(v.bound_u);
    j["bound_v"] = bound_json(v.bound_v);
    return emit(j, plan_outputs(cfg, "classify"), "", out, 0);
}

int cmd_bounds(const RunConfig& cfg, std::ostream& out) {
    if (cfg.gamma.empty() && cfg.sigma.empty())
        usage_error("bounds needs --gamma (defect power) and/or --sigma (second exponent)");
    json j;
    j["schema_version"] = 1;
    j["command"] = "bounds";
    j["n"] = cfg.n;
    if (!cfg.gamma.empty()) {
        double g = parse_scalar(cfg.gamma, "gamma");
        j["gamma"] = g;
        j["gamma_bound"] = bound_json(scalar_bound(cfg.n, g));
    }
    if (!cfg.sigma.empty()) {
        double s = parse_scalar(cfg.sigma, "sigma");
        j["sigma"] = s;
        j["sigma_bound"] = bound_json(sigma_only_bound(cfg.n, s));
    }
    return emit(j, plan_outputs(cfg, "bounds"), "", out, 0);
}

int cmd_constants(const RunConfig& cfg, std::ostream& out) {
    const GeometryConstants& g = geometry_constants(cfg.n);
    json j;
    j["schema_version"] = 1;
    j["command"] = "constants";
    j["n"] = cfg.n;
    j["vol_E1"] = g.vol_E1;
    j["vol_Q1"] = g.vol_Q1;
    j["vol_P1"] = g.vol_P1;
    j["r0_min"] = g.r0_min;
    j["r0"] = g.r0;
    j["ball_cylinder_ratio"] = g.ball_cylinder_ratio;
    j["kernel_offdiag_constant"] = g.offdiag_bound;
    j["gaussian_ball_constant"] = gaussian_ball_constant(cfg.n);
    j["potential_supnorm_constant"] = potential_supnorm_constant(cfg.n);
    return emit(j, plan_outputs(cfg, "constants"), "", out, 0);
}

int cmd_potential(const RunConfig& cfg, std::ostream& out) {
    auto corpus = generate_corpus(corpus_spec(cfg, 1));
    const CorpusMember& m = corpus.front();
    GridFunction pot = heat_potential_grid(m.f, cfg.alpha, quad_options(cfg));
    json j;
    j["schema_version"] = 1;
    j["command"] = "potential";
    j["n"] = cfg.n;
    j["alpha"] = cfg.alpha;
    j["seed"] = cfg.seed;
    j["member"] = m.id;
    j["source_l1"] = m.norm_l1;
    j["source_linf"] = m.norm_linf;
    j["grid"] = grid_json(pot);
    j["sup"] = lp_norm(pot, LpExponent::infinity());
    j["l1"] = lp_norm(pot, LpExponent::finite(1.0));
    j["l2"] = lp_norm(pot, LpExponent::finite(2.0));
    OutputPlan plan = plan_outputs(cfg, "potential");
    if (!plan.snapshot.empty()) {
        ensure_parent(plan.snapshot);
        write_grid(plan.snapshot.string(), pot);
    }
    return emit(j, plan, grid_csv({{"value", &pot}}), out, 0);
}

int cmd_maximal(const RunConfig& cfg, std::ostream& out) {
    auto corpus = generate_corpus(corpus_spec(cfg, 1));
    const CorpusMember& m = corpus.front();
    RadiusGrid radii = default_radius_grid(m.f);
    GridFunction big = maximal_M_grid(m.f, radii);
    GridFunction hat = maximal_Mhat_grid(m.f, radii);
    json j;
    j["schema_version"] = 1;
    j["command"] = "maximal";
    j["n"] = cfg.n;
    j["seed"] = cfg.seed;
    j["member"] = m.id;
    j["source_l1"] = m.norm_l1;
    j["source_linf"] = m.norm_linf;
    json rj;
    rj["count"] = static_cast<int>(radii.radii.size());
    rj["r_min"] = radii.radii.front();
    rj["r_max"] = radii.radii.back();
    j["radii"] = rj;
    j["sup_M"] = lp_norm(big, LpExponent::infinity());
    j["sup_Mhat"] = lp_norm(hat, LpExponent::infinity());
    std::string csv = grid_csv({{"f", &m.f}, {"M", &big}, {"Mhat", &hat}});
    return emit(j, plan_outputs(cfg, "maximal"), csv, out, 0);
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
    const std::string& name = cfg.check_name;
    CheckReport rep;
    if (name == "layer-cake") {
        rep = check_layer_cake(cfg.trials, cfg.seed);
    } else if (name == "hedberg") {
        double p = cfg.p > 0.0 ? cfg.p : 1.0;
        rep = check_hedberg(corpus_spec(cfg, cfg.count), cfg.n, cfg.alpha, p, quad_options(cfg));
    } else if (name == "sobolev") {
        double p = cfg.p > 0.0 ? cfg.p : 1.25;
        rep = check_sobolev(corpus_spec(cfg, cfg.count), cfg.n, cfg.alpha, p, quad_options(cfg));
    } else if (name == "maximal") {
        double p = cfg.p > 0.0 ? cfg.p : 2.0;
        rep = check_maximal_strong(corpus_spec(cfg, cfg.count), cfg.n, LpExponent::finite(p));
    } else if (name == "weak-maximal") {
        rep = check_weak_maximal(corpus_spec(cfg, cfg.count), cfg.n);
    } else if (name == "nonlinear") {
        PotentialParams params;
        params.alpha = cfg.alpha;
        params.beta = cfg.beta;
        params.sigma = cfg.sigma.empty() ? 3.0 : parse_scalar(cfg.sigma, "sigma");
        params.r = LpExponent::finite(cfg.r);
        NonlinearOptions opt;
        opt.quadrature = quad_options(cfg);
        rep = check_nonlinear(corpus_spec(cfg, cfg.count), cfg.n, params, opt);
    } else {
        usage_error((name.empty() ? std::string("check needs a name")
                                  : "unknown check '" + name + "'") +
                    "; choose layer-cake, hedberg, sobolev, maximal, weak-maximal, or nonlinear");
    }
    json j = json::parse(report_json(rep));
    j["schema_version"] = 1;
    j["command"] = "check";
    std::string slug = "check_" + name;
    std::replace(slug.begin(), slug.end(), '-', '_');
    return emit(j, plan_outputs(cfg, slug), report_csv(rep), out, rep.pass ? 0 : 2);
}

json schedule_json(const ScheduleA& s) {
    json j;
    j["count"] = s.count;
    j["T"] = s.T;
    j["eps"] = s.eps;
    j["r"] = s.r;
    j["amplitude"] = s.amplitude;
    j["kernel_floor"] = s.kernel_floor;
    j["profile_mass"] = s.profile_mass;
    j["apex_weight"] = s.apex_weight;
    return j;
}

json schedule_json(const ScheduleB& s) {
    json j;
    j["count"] = s.count;
    j["p"] = s.p;
    j["q"] = s.q;
    j["p_exact"] = fraction_text(s.p_exact);
    j["q_exact"] = fraction_text(s.q_exact);
    j["T"] = s.T;
    j["t"] = s.t;
    j["a"] = s.a;
    j["eps"] = s.eps;
    j["slice_constant"] = s.slice_constant;
    j["amplification"] = s.amplification;
    j["holder_constant"] = s.holder_constant;
    j["collar_norm"] = s.collar_norm;
    return j;
}

// u sampled over the first window's neighborhood, in the documented grid
// format. The box stays strictly inside t > 0 because r_1 < T_1/2 for the
// tower and t_1 > eps_1 for the collar chain.
void write_snapshot(const fs::path& path, const ConstructionOutput& co, int cells, int tcells) {
    double x_half = 0.0, t_lo = 0.0, t_hi = 0.0;
    if (co.tower) {
        double T1 = co.schedule_A.T[0], r1 = co.schedule_A.r[0];
        x_half = 2.0 * std::sqrt(r1);
        t_lo = T1 - 2.0 * r1;
        t_hi = T1 + r1;
    } else {
        const ScheduleB& s = co.schedule_B;
        t_lo = s.t[0] - s.eps[0];
        t_hi = s.a[0] + s.eps[0];
        x_half = 2.0 * std::sqrt(s.a[0] + 2.0 * s.eps[0] - t_lo);
    }
    SpaceVec lo = SpaceVec::Constant(co.n, -x_half);
    std::array<int, 3> c{cells, co.n > 1 ? cells : 1, co.n > 2 ? cells : 1};
    GridFunction g = GridFunction::from_function(
        co.n, lo, 2.0 * x_half / cells, c, t_lo, (t_hi - t_lo) / tcells, tcells,
        [&co](const SpaceVec& x, double t) { return co.u(x, t); });
    ensure_parent(path);
    write_grid(path.string(), g);
}

int cmd_blowup(const RunConfig& cfg, std::ostream& out) {
    if (cfg.region.empty()) usage_error("blowup needs --region B (tower) or --region C (coupled pair)");
    if (cfg.region != "B" && cfg.region != "C")
        usage_error("unknown region '" + cfg.region +
                    "'; the constructions cover B (tower) and C (coupled pair)");
    if (cfg.lambda.empty()) usage_error("blowup needs --lambda");
    int count = cfg.bumps > 0 ? cfg.bumps : 4;

    CertifySpec spec;
    spec.seed = cfg.seed;
    spec.quad = eval_options(cfg);
    if (cfg.samples > 0) spec.window_samples = cfg.samples;
    if (cfg.ambient_samples > 0) spec.ambient_samples = cfg.ambient_samples;

    std::string phi_name;
    ConstructionOutput co;
    json j;
    if (cfg.region == "B") {
        TimeProfile phi = make_phi(cfg, "t", phi_name);
        double lambda = parse_scalar(cfg.lambda, "lambda");
        ScheduleA sch = build_schedule_A(cfg.n, lambda, phi, count,
                                         cfg.t1 > 0.0 ? cfg.t1 : 1.0 / 16.0);
        co = construct_A(sch, eval_options(cfg));
        CheckReport cert = certify_A(co, spec);
        j = json::parse(report_json(cert));
        j["lambda"] = lambda;
        j["schedule"] = schedule_json(sch);
    } else {
        if (cfg.sigma.empty())
            usage_error("blowup --region C needs --sigma; the coupled pair uses both exponents");
        TimeProfile phi = make_phi(cfg, "log", phi_name);
        Rational lambda = parse_fraction(cfg.lambda, "lambda");
        Rational sigma = parse_fraction(cfg.sigma, "sigma");
        ScheduleB sch = build_schedule_B(cfg.n, lambda, sigma, phi, count,
                                         cfg.t1 > 0.0 ? cfg.t1 : 0.25);
        co = construct_B(sch, eval_options(cfg));
        CheckReport cert = certify_B(co, spec);
        j = json::parse(report_json(cert));
        j["lambda"] = lambda.value();
        j["sigma"] = sigma.value();
        j["schedule"] = schedule_json(sch);
    }
    j["schema_version"] = 1;
    j["command"] = "blowup";
    j["region"] = cfg.region;
    j["n"] = cfg.n;
    j["phi"] = phi_name;
    j["bumps"] = count;

    // Trace: the certified sequence at the origin. Tower entries peak at the
    // apex times; the coupled pair is read at its growth times.
    SpaceVec origin = SpaceVec::Zero(cfg.n);
    std::ostringstream os;
    os.precision(17);
    os << "t,value,defeat_ratio\n";
    for (int k = 0; k < count; ++k) {
        double time = co.tower ? co.schedule_A.T[k] : co.schedule_B.a[k];
        double value = co.tower ? co.u(origin, time)
                                : std::min(co.u(origin, time), co.v(origin, time));
        os << time << "," << value << "," << j["ratios"][k]["ratio"].get<double>() << "\n";
    }

    OutputPlan plan = plan_outputs(cfg, "blowup");
    if (!plan.snapshot.empty())
        write_snapshot(plan.snapshot, co, cfg.cells > 0 ? cfg.cells : 24,
                       cfg.time_cells > 0 ? cfg.time_cells : 12);
    return emit(j, plan, os.str(), out, j["pass"].get<bool>() ? 0 : 2);
}

int cmd_rates(const RunConfig& cfg, std::ostream& out) {
    if (cfg.lambda.empty()) usage_error("rates needs --lambda");
    int count = cfg.bumps > 0 ? cfg.bumps : 8;
    if (count < 7)
        usage_error("rates needs at least 7 windows: the fit reads the trailing half and wants 4 samples");
    std::string phi_name;
    TimeProfile phi = make_phi(cfg, "t", phi_name);
    double lambda = parse_scalar(cfg.lambda, "lambda");
    ScheduleA sch =
        build_schedule_A(cfg.n, lambda, phi, count, cfg.t1 > 0.0 ? cfg.t1 : 1.0 / 16.0);
    ConstructionOutput co = construct_A(sch, eval_options(cfg));

    SpaceVec origin = SpaceVec::Zero(cfg.n);
    double defeat_exp = double(cfg.n) * cfg.n * lambda / (2.0 * (cfg.n + 2.0));
    RateSample sample;
    std::vector<double> values(count), ratios(count);
    for (int k = 0; k < count; ++k) {
        values[k] = co.u(origin, sch.T[k]);
        ratios[k] = values[k] * std::pow(sch.T[k], defeat_exp) / phi(sch.T[k]);
        sample.points.emplace_back(sch.T[k], values[k]);
    }
    RateFit fit = fit_rate(sample);
    BoundDescriptor predicted = scalar_bound(cfg.n, cfg.n * lambda);

    bool increasing = true;
    for (int k = 1; k < count; ++k)
        if (!(ratios[k] > ratios[k - 1])) increasing = false;
    int first_exceed = 0;
    for (int k = count - 1; k >= 0 && ratios[k] > 1.0; --k) first_exceed = k + 1;
    bool pass = increasing && first_exceed > 0 && fit.r_squared >= 0.999;

    json j;
    j["schema_version"] = 1;
    j["command"] = "rates";
    j["n"] = cfg.n;
    j["lambda"] = lambda;
    j["phi"] = phi_name;
    j["bumps"] = count;
    j["fitted_exponent"] = fit.exponent;
    j["r_squared"] = fit.r_squared;
    j["predicted"] = bound_json(predicted);
    j["defeat_ratio"] = ratios;
    j["defeat_increasing"] = increasing;
    j["defeat_first_exceed"] = first_exceed;
    j["pass"] = pass;

    std::ostringstream os;
    os.precision(17);
    os << "t,value,predicted_exponent,defeat_ratio\n";
    for (int k = 0; k < count; ++k)
        os << sch.T[k] << "," << values[k] << "," << predicted.exponent << "," << ratios[k]
           << "\n";
    return emit(j, plan_outputs(cfg, "rates"), os.str(), out, pass ? 0 : 2);
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
    if (cfg.command == "classify") return cmd_classify(cfg, out);
    if (cfg.command == "bounds") return cmd_bounds(cfg, out);
    if (cfg.command == "constants") return cmd_constants(cfg, out);
    if (cfg.command == "potential") return cmd_potential(cfg, out);
    if (cfg.command == "maximal") return cmd_maximal(cfg, out);
    if (cfg.command == "check") return cmd_check(cfg, out);
    if (cfg.command == "blowup") return cmd_blowup(cfg, out);
    if (cfg.command == "rates") return cmd_rates(cfg, out);
    usage_error(cfg.command.empty() ? "no command given; see --help"
                                    : "unknown command '" + cfg.command + "'");
}

const CLI::App* deepest_parsed(const CLI::App& app) {
    const CLI::App* cur = &app;
    while (true) {
        auto subs = cur->get_subcommands();
        if (subs.empty()) return cur;
        cur = subs.front();
    }
}

}  // namespace

void apply_config_json(const std::string& text, RunConfig& cfg) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        usage_error(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) usage_error("config file must hold a JSON object");
    auto text_of = [](const json& v, const std::string& key) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return v.dump();
        usage_error("config key '" + key + "' must be a number or string");
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        try {
            if (k == "command") cfg.command = v.get<std::string>();
            else if (k == "check") cfg.check_name = v.get<std::string>();
            else if (k == "n") cfg.n = v.get<int>();
            else if (k == "lambda") cfg.lambda = text_of(v, k);
            else if (k == "sigma") cfg.sigma = text_of(v, k);
            else if (k == "gamma") cfg.gamma = text_of(v, k);
            else if (k == "alpha") cfg.alpha = v.get<double>();
            else if (k == "beta") cfg.beta = v.get<double>();
            else if (k == "p") cfg.p = v.get<double>();
            else if (k == "r") cfg.r = v.get<double>();
            else if (k == "trials") cfg.trials = v.get<int>();
            else if (k == "count") cfg.count = v.get<int>();
            else if (k == "seed") cfg.seed = v.get<unsigned>();
            else if (k == "region") cfg.region = v.get<std::string>();
            else if (k == "phi") cfg.phi = v.get<std::string>();
            else if (k == "phi_table") cfg.phi_table = v.get<std::string>();
            else if (k == "bumps") cfg.bumps = v.get<int>();
            else if (k == "t1") cfg.t1 = v.get<double>();
            else if (k == "samples") cfg.samples = v.get<int>();
            else if (k == "ambient_samples") cfg.ambient_samples = v.get<int>();
            else if (k == "cells") cfg.cells = v.get<int>();
            else if (k == "time_cells") cfg.time_cells = v.get<int>();
            else if (k == "quad_tol") cfg.quad_tol = v.get<double>();
            else if (k == "quad_depth") cfg.quad_depth = v.get<int>();
            else if (k == "out_dir") cfg.out_dir = v.get<std::string>();
            else if (k == "report") cfg.report_path = v.get<std::string>();
            else if (k == "trace") cfg.trace_path = v.get<std::string>();
            else if (k == "snapshot") cfg.snapshot_path = v.get<std::string>();
            else usage_error("unknown config key '" + k + "'");
        } catch (const json::exception& e) {
            usage_error("config key '" + k + "': " + e.what());
        }
    }
}

std::optional<RunConfig> parse_args(const std::vector<std::string>& args, std::string& help) {
    std::vector<std::string> rest;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config") {
            if (i + 1 >= args.size()) usage_error("--config needs a file path");
            config_path = args[++i];
        } else if (a.rfind("--config=", 0) == 0) {
            config_path = a.substr(9);
        } else {
            rest.push_back(a);
        }
    }

    RunConfig cfg;
    if (!config_path.empty()) {
        std::ifstream is(config_path, std::ios::binary);
        if (!is) usage_error("cannot read config file " + config_path);
        std::ostringstream ss;
        ss << is.rdbuf();
        apply_config_json(ss.str(), cfg);
    }

    CLI::App app{"heat potential toolkit: region verdicts, estimate checks, and defeat certificates"};
    app.name("heatpot");
    app.require_subcommand(0, 1);

    auto out_opts = [&cfg](CLI::App* s, bool trace) {
        s->add_option("--out", cfg.out_dir, "output directory (default $HEATPOT_OUT_DIR, else .)");
        s->add_option("--report", cfg.report_path, "JSON report path");
        if (trace) s->add_option("--trace", cfg.trace_path, "CSV trace path");
    };
    auto corpus_opts = [&cfg](CLI::App* s) {
        s->add_option("--count", cfg.count, "corpus size");
        s->add_option("--seed", cfg.seed, "seed for every random draw");
        s->add_option("--cells", cfg.cells, "grid cells per spatial axis");
        s->add_option("--time-cells", cfg.time_cells, "grid cells in time");
    };
    auto quad_opts = [&cfg](CLI::App* s) {
        s->add_option("--quad-tol", cfg.quad_tol, "quadrature relative tolerance");
        s->add_option("--quad-depth", cfg.quad_depth, "quadrature subdivision cap");
    };
    auto phi_opts = [&cfg](CLI::App* s) {
        s->add_option("--phi", cfg.phi, "rate target: t, sqrt, log, custom-table");
        s->add_option("--phi-table", cfg.phi_table, "CSV of t,value nodes for custom-table");
        s->add_option("--bumps", cfg.bumps, "windows to build");
        s->add_option("--t1", cfg.t1, "seed time for the window schedule");
    };

    CLI::App* classify_cmd = app.add_subcommand("classify", "region verdict for an exponent pair");
    classify_cmd->add_option("--n", cfg.n, "spatial dimension");
    classify_cmd->add_option("--lambda", cfg.lambda, "first exponent (decimal or fraction)");
    classify_cmd->add_option("--sigma", cfg.sigma, "second exponent (decimal or fraction)");
    out_opts(classify_cmd, false);

    CLI::App* bounds_cmd = app.add_subcommand("bounds", "single-exponent growth bounds");
    bounds_cmd->add_option("--n", cfg.n, "spatial dimension");
    bounds_cmd->add_option("--gamma", cfg.gamma, "defect power of 1/sqrt(t)");
    bounds_cmd->add_option("--sigma", cfg.sigma, "second exponent alone");
    out_opts(bounds_cmd, false);

    CLI::App* constants_cmd = app.add_subcommand("constants", "cached geometry and kernel constants");
    constants_cmd->add_option("--n", cfg.n, "spatial dimension");
    out_opts(constants_cmd, false);

    CLI::App* potential_cmd =
        app.add_subcommand("potential", "heat potential of a seeded corpus function");
    potential_cmd->add_option("--n", cfg.n, "spatial dimension");
    potential_cmd->add_option("--alpha", cfg.alpha, "kernel power parameter");
    corpus_opts(potential_cmd);
    quad_opts(potential_cmd);
    potential_cmd->add_option("--snapshot", cfg.snapshot_path, "grid snapshot path");
    out_opts(potential_cmd, true);

    CLI::App* maximal_cmd =
        app.add_subcommand("maximal", "maximal functions of a seeded corpus function");
    maximal_cmd->add_option("--n", cfg.n, "spatial dimension");
    corpus_opts(maximal_cmd);
    out_opts(maximal_cmd, true);

    CLI::App* check_cmd = app.add_subcommand("check", "run one estimate check");
    check_cmd->require_subcommand(0, 1);
    {
        CLI::App* s = check_cmd->add_subcommand("layer-cake", "exact level-set identity");
        s->add_option("--trials", cfg.trials, "random data sets");
        s->add_option("--seed", cfg.seed, "seed for every random draw");
        out_opts(s, true);

        s = check_cmd->add_subcommand("hedberg", "pointwise potential bound");
        s->add_option("--n", cfg.n, "spatial dimension");
        s->add_option("--alpha", cfg.alpha, "kernel power parameter");
        s->add_option("--p", cfg.p, "Lebesgue exponent (default 1)");
        corpus_opts(s);
        quad_opts(s);
        out_opts(s, true);

        s = check_cmd->add_subcommand("sobolev", "norm bound at the critical exponent");
        s->add_option("--n", cfg.n, "spatial dimension");
        s->add_option("--alpha", cfg.alpha, "kernel power parameter");
        s->add_option("--p", cfg.p, "Lebesgue exponent (default 5/4)");
        corpus_opts(s);
        quad_opts(s);
        out_opts(s, true);

        s = check_cmd->add_subcommand("maximal", "strong maximal bound, p > 1");
        s->add_option("--n", cfg.n, "spatial dimension");
        s->add_option("--p", cfg.p, "Lebesgue exponent (default 2)");
        corpus_opts(s);
        out_opts(s, true);

        s = check_cmd->add_subcommand("weak-maximal", "level-set maximal bound");
        s->add_option("--n", cfg.n, "spatial dimension");
        corpus_opts(s);
        out_opts(s, true);

        s = check_cmd->add_subcommand("nonlinear", "sup bound of the composed potential");
        s->add_option("--n", cfg.n, "spatial dimension");
        s->add_option("--alpha", cfg.alpha, "outer kernel power");
        s->add_option("--beta", cfg.beta, "inner kernel power");
        s->add_option("--sigma", cfg.sigma, "power applied between the passes");
        s->add_option("--r", cfg.r, "norm exponent of the source");
        corpus_opts(s);
        quad_opts(s);
        out_opts(s, true);
    }

    CLI::App* blowup_cmd = app.add_subcommand("blowup", "build and certify a defeat construction");
    blowup_cmd->add_option("--region", cfg.region, "B (tower) or C (coupled pair)");
    blowup_cmd->add_option("--n", cfg.n, "spatial dimension");
    blowup_cmd->add_option("--lambda", cfg.lambda, "first exponent");
    blowup_cmd->add_option("--sigma", cfg.sigma, "second exponent (region C)");
    phi_opts(blowup_cmd);
    blowup_cmd->add_option("--samples", cfg.samples, "certificate samples per window");
    blowup_cmd->add_option("--ambient-samples", cfg.ambient_samples,
                           "certificate samples off the windows");
    blowup_cmd->add_option("--seed", cfg.seed, "seed for every random draw");
    quad_opts(blowup_cmd);
    blowup_cmd->add_option("--cells", cfg.cells, "snapshot cells per spatial axis");
    blowup_cmd->add_option("--time-cells", cfg.time_cells, "snapshot cells in time");
    blowup_cmd->add_option("--snapshot", cfg.snapshot_path, "grid snapshot path");
    out_opts(blowup_cmd, true);

    CLI::App* rates_cmd = app.add_subcommand("rates", "fit the tower's growth law");
    rates_cmd->add_option("--n", cfg.n, "spatial dimension");
    rates_cmd->add_option("--lambda", cfg.lambda, "first exponent");
    phi_opts(rates_cmd);
    quad_opts(rates_cmd);
    out_opts(rates_cmd, true);

    std::vector<const char*> argv;
    argv.reserve(rest.size() + 1);
    argv.push_back("heatpot");
    for (const std::string& s : rest) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        help = deepest_parsed(app)->help();
        return std::nullopt;
    } catch (const CLI::CallForAllHelp&) {
        help = app.help("", CLI::AppFormatMode::All);
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        usage_error(e.what());
    }

    auto subs = app.get_subcommands();
    if (!subs.empty()) {
        cfg.command = subs.front()->get_name();
        auto inner = subs.front()->get_subcommands();
        if (!inner.empty()) cfg.check_name = inner.front()->get_name();
    }
    return cfg;
}

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(cfg, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        std::string help;
        std::optional<RunConfig> cfg = parse_args(args, help);
        if (!cfg) {
            std::cout << help;
            return 0;
        }
        return run_command(*cfg, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace heatpot
