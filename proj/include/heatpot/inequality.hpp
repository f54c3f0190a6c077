#pragma once

#include <map>
#include <string>
#include <vector>

#include "heatpot/grid.hpp"
#include "heatpot/potential.hpp"

namespace heatpot {

enum class CorpusFamily { bump_sums, gaussian_mixtures, indicator_unions };

std::string family_name(CorpusFamily family);

// Deterministic test-function generator: `count` nonnegative functions
// compactly supported in the box, sampled onto one shared grid. The same seed
// always reproduces the same corpus.
struct CorpusSpec {
    unsigned seed = 1;
    int count = 8;
    CorpusFamily family = CorpusFamily::bump_sums;
    int dim = 1;
    double space_lo = -1.0;  // box per spatial axis
    double space_hi = 1.0;
    double t_lo = 0.0;
    double t_hi = 1.0;
    int cells_per_axis = 20;
    int time_cells = 20;
    double amp_lo = 0.5;  // component amplitude range
    double amp_hi = 2.0;
};

struct CorpusMember {
    std::string id;
    GridFunction f;
    double norm_l1 = 0.0;
    double norm_linf = 0.0;
};

std::vector<CorpusMember> generate_corpus(const CorpusSpec& spec);

// Evaluation points for the pointwise checks: cell centers stratified across
// space, with times on slab boundaries in the upper half of the range so
// every target has past cells to average over and the potential quadrature
// and the cell-binned maximal agree on which slabs lie in the past.
std::vector<SpaceTimePoint> corpus_targets(const GridFunction& f, int count);

struct MemberRatio {
    std::string id;
    double ratio = 0.0;
};

// Outcome of one empirical estimate check. fitted_constant is the worst ratio
// over the calibration half of the corpus; pass means the held-out half stays
// within 25% of it (the slack absorbs quadrature and grid discretization).
// Members whose bound side is zero are excluded throughout.
struct CheckReport {
    std::string check_name;
    std::map<std::string, double> params;
    int corpus_size = 0;
    double worst_ratio = 0.0;
    std::string worst_case_id;
    double fitted_constant = 0.0;
    double scale_invariance_defect = 0.0;
    bool pass = false;
    double tol = 0.0;  // quadrature tolerance behind the ratios, 0 if exact
    unsigned seed = 0;
    std::string grid_spec;
    std::vector<MemberRatio> ratios;
};

// JSON object with sorted keys; floats serialize to their shortest
// round-trip form, so identical reports give identical bytes.
std::string report_json(const CheckReport& report);

// One "id,ratio" line per member, for external plotting.
std::string report_csv(const CheckReport& report);

// Pointwise bound of the potential by ||f||_p^{alpha p/(n+2)} times the
// heat-ball maximal function to the complementary power, evaluated at 16
// stratified targets per member. Requires 0 < alpha < n+2 and
// 1 <= p < (n+2)/alpha. scale_invariance_defect is the worst relative change
// of a member's ratio under the exact parabolic rescaling with r = 2.
CheckReport check_hedberg(const CorpusSpec& corpus, int n, double alpha, double p,
                          const PotentialOptions& opt = {});

// ||Mf||_p <= C ||f||_p with the heat-ball maximal function sampled on f's
// own grid; requires p > 1 (the strong bound fails at p = 1, where only the
// weak level-set bound survives).
CheckReport check_maximal_strong(const CorpusSpec& corpus, int n, const LpExponent& p);

// Level-set bound |{Mhat g > lambda}| <= 5^{n+2} ||g||_1 / lambda, measured
// on the grid at 32 geometric lambdas spanning [||g||_1/|box|, ||g||_inf].
// worst_ratio is the tightness probe max(lambda * volume / ||g||_1); pass
// means no lambda point violated the bound.
CheckReport check_weak_maximal(const CorpusSpec& corpus, int n);

// ||J_alpha f||_q <= C ||f||_p at the scale-critical exponent
// q = (n+2)p/(n+2-alpha*p); requires 1 < p < (n+2)/alpha.
CheckReport check_sobolev(const CorpusSpec& corpus, int n, double alpha, double p,
                          const PotentialOptions& opt = {});

// Sup bound of the composed potential by ||f||_r and ||f||_inf powers whose
// exponents sum to sigma. scale_invariance_defect here is the relative change
// of the ratio when f's amplitude doubles, which the exponent sum cancels.
CheckReport check_nonlinear(const CorpusSpec& corpus, int n, const PotentialParams& params,
                            const NonlinearOptions& opt = {});

// Exact layer-cake identity on random piecewise-constant data: for a > -1,
// b >= 0, c > 0, (c^{a+1}/(a+1)) sum g^{a+b+1} equals the lambda integral of
// lambda^a times the level-restricted sum of g^b. Both sides are finite sums;
// worst_ratio reports the largest relative defect across trials.
CheckReport check_layer_cake(int trials, unsigned seed);

}  // namespace heatpot
