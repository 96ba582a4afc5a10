#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pgw/fw_solver.hpp"
#include "pgw/types.hpp"

// Desk-scale experiment drivers: 2D/3D shape matching on square/circle and
// cube/sphere mixtures, a synthetic positive-unlabeled task, and the
// wall-clock benchmark on uniform point clouds. All randomness flows through
// std::mt19937_64 seeded from the configs, so outputs are reproducible.

namespace pgw {

struct ShapeConfig {
    int n_per_shape = 60;
    std::array<double, 2> mixture_2d{0.3, 0.7};  // (square, circle) mass; must sum to 1
    std::array<double, 2> mixture_3d{0.5, 0.5};  // (cube, sphere) mass
    std::uint64_t seed = 0;
};

/// Components: 0 = square / cube, 1 = circle / sphere. A component with zero
/// mixture weight is omitted entirely rather than kept at zero mass.
struct ShapePair {
    MmSpace<double> space_2d;
    MmSpace<double> space_3d;
    std::vector<int> components_2d;
    std::vector<int> components_3d;
};

ShapePair gen_shapes(const ShapeConfig& config);

struct Correspondence {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    double mass = 0;
};

struct MatchResult {
    std::vector<Correspondence> pairs;  // entries of the plan above the threshold
    Eigen::Matrix2d component_mass;     // transported mass per (2d component, 3d component)
    double pgw_value = 0;
    double transported_mass = 0;
    SolveReport<double> report;
};

/// Runs the solver on the pair and extracts correspondences with plan mass
/// above mass_threshold (default 0.5 / (n m)).
MatchResult match_shapes(const ShapePair& shapes, double lambda, const FwConfig<double>& config,
                         double mass_threshold = -1);

/// Lower-bound warm start usable across spaces of different dimension:
/// squared-eccentricity features s(i) = sum_i' C(i,i') w(i'), linear cost
/// |s_x(i) - s_y(j)|^2, solved as a partial transport with penalty lambda.
TransportPlan<double> flb_pot_init(const MmSpace<double>& source, const MmSpace<double>& target,
                                   double lambda);

/// Labels the (1-pi) upper quantile of the column marginal as positive;
/// ties break by index order, so exactly ceil(pi * m) entries get label 1.
std::vector<int> pu_classify(const Eigen::VectorXd& col_marginal, double pi);

enum class PuInit { product, flb_pot };

struct PuConfig {
    int n_positive = 100;
    int m_unlabeled = 500;
    double pi = 0.2;  // positive-class prior, in (0, 1)
    PuInit init = PuInit::flb_pot;
    double lambda = 10.0;  // generous, so the matched mass saturates at pi
    std::uint64_t seed = 0;
};

/// Synthetic SCAR task: the labeled set is drawn from the positive cluster,
/// the unlabeled set mixes round(pi * m) positives with negatives from a
/// concentric but much wider cluster. Source points are 2D, targets 3D.
struct PuTask {
    MmSpace<double> source;
    MmSpace<double> target;
    std::vector<int> labels;  // ground truth for the unlabeled points
};

PuTask make_pu_task(const PuConfig& config);

struct PuResult {
    double accuracy = 0;
    std::vector<int> predicted;
    SolveReport<double> report;
};

PuResult run_pu_demo(const PuConfig& config, const FwConfig<double>& fw);

struct BenchRow {
    int n = 0;
    int m = 0;
    double lambda = 0;
    SolverVariant variant = SolverVariant::v1;
    long iterations = 0;
    double seconds = 0;
    double pgw_value = 0;
    double mass = 0;
};

struct BenchConfig {
    std::vector<int> sizes{10, 50, 100};
    std::vector<double> lambdas{0.2, 1.0, 10.0};
    FwConfig<double> fw;  // variant is overridden, both run per cell
    std::uint64_t seed = 0;
    bool parallel = false;  // run (n, lambda) cells concurrently
    int max_threads = 0;    // 0 means hardware concurrency
};

/// Uniform clouds on [0,2]^2 and [0,2]^3 with m = n + 100, p = 1_n/m and
/// q = 1_m/m; times both solver variants for every (n, lambda) cell.
std::vector<BenchRow> run_benchmark(const BenchConfig& config);

}  // namespace pgw
