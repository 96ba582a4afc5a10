#include "pgw/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "pgw/transport_lp.hpp"

namespace pgw {

namespace {

void check_mixture(const std::array<double, 2>& mix, const char* name) {
    if (mix[0] < 0 || mix[1] < 0 || std::abs(mix[0] + mix[1] - 1.0) > 1e-12)
        throw std::invalid_argument(std::string("gen_shapes: ") + name +
                                    " weights must be nonnegative and sum to 1");
}

}  // namespace

ShapePair gen_shapes(const ShapeConfig& config) {
    if (config.n_per_shape < 1)
        throw std::invalid_argument("gen_shapes: n_per_shape must be >= 1");
    check_mixture(config.mixture_2d, "mixture_2d");
    check_mixture(config.mixture_3d, "mixture_3d");

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = config.n_per_shape;

    std::vector<Eigen::RowVector2d> pts2;
    std::vector<int> comp2;
    std::vector<double> w2;
    if (config.mixture_2d[0] > 0) {
        for (int i = 0; i < n; ++i) {
            pts2.push_back({box(rng), box(rng)});
            comp2.push_back(0);
            w2.push_back(config.mixture_2d[0] / n);
        }
    }
    if (config.mixture_2d[1] > 0) {
        for (int i = 0; i < n; ++i) {
            const double t = angle(rng);
            pts2.push_back({5.0 + std::cos(t), std::sin(t)});
            comp2.push_back(1);
            w2.push_back(config.mixture_2d[1] / n);
        }
    }

    std::vector<Eigen::RowVector3d> pts3;
    std::vector<int> comp3;
    std::vector<double> w3;
    if (config.mixture_3d[0] > 0) {
        for (int i = 0; i < n; ++i) {
            pts3.push_back({box(rng), box(rng), box(rng)});
            comp3.push_back(0);
            w3.push_back(config.mixture_3d[0] / n);
        }
    }
    if (config.mixture_3d[1] > 0) {
        for (int i = 0; i < n; ++i) {
            Eigen::RowVector3d g{gauss(rng), gauss(rng), gauss(rng)};
            while (g.norm() < 1e-12)
                g = {gauss(rng), gauss(rng), gauss(rng)};
            g /= g.norm();
            pts3.push_back({5.0 + g[0], g[1], g[2]});
            comp3.push_back(1);
            w3.push_back(config.mixture_3d[1] / n);
        }
    }

    Eigen::MatrixXd p2(static_cast<Eigen::Index>(pts2.size()), 2);
    Eigen::VectorXd v2(static_cast<Eigen::Index>(pts2.size()));
    for (std::size_t i = 0; i < pts2.size(); ++i) {
        p2.row(static_cast<Eigen::Index>(i)) = pts2[i];
        v2[static_cast<Eigen::Index>(i)] = w2[i];
    }
    Eigen::MatrixXd p3(static_cast<Eigen::Index>(pts3.size()), 3);
    Eigen::VectorXd v3(static_cast<Eigen::Index>(pts3.size()));
    for (std::size_t i = 0; i < pts3.size(); ++i) {
        p3.row(static_cast<Eigen::Index>(i)) = pts3[i];
        v3[static_cast<Eigen::Index>(i)] = w3[i];
    }

    // Rescale each cloud to mean squared pairwise distance 1.5. Raw
    // coordinates put the square/circle offset into every cost entry, so a
    // unit penalty weight either destroys all mass (no rescale) or tolerates
    // cross-component mismatches (unit mean); this scale prices component
    // mismatches above the 2-lambda band at lambda near 1 while keeping
    // matched pairs well inside it.
    auto normalize = [](Eigen::MatrixXd& pts) {
        const Eigen::Index n = pts.rows();
        double sum = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                sum += (pts.row(i) - pts.row(j)).squaredNorm();
        const double mean = sum / (static_cast<double>(n) * static_cast<double>(n));
        if (mean > 0)
            pts *= std::sqrt(1.5 / mean);
    };
    normalize(p2);
    normalize(p3);

    return ShapePair{build_mm_space<double>(p2, v2, 2.0), build_mm_space<double>(p3, v3, 2.0),
                     std::move(comp2), std::move(comp3)};
}

MatchResult match_shapes(const ShapePair& shapes, double lambda, const FwConfig<double>& config,
                         double mass_threshold) {
    const Eigen::Index n = shapes.space_2d.size();
    const Eigen::Index m = shapes.space_3d.size();
    if (mass_threshold < 0)
        mass_threshold = 0.5 / (static_cast<double>(n) * static_cast<double>(m));

    PgwProblem<double> problem(shapes.space_2d, shapes.space_3d, lambda);
    MatchResult result;
    result.report = solve(problem, config);
    result.pgw_value = result.report.pgw_value;
    result.transported_mass = result.report.transported_mass;
    result.component_mass.setZero();
    const Eigen::MatrixXd& plan = result.report.plan.matrix();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double mass = plan(i, j);
            result.component_mass(shapes.components_2d[static_cast<std::size_t>(i)],
                                  shapes.components_3d[static_cast<std::size_t>(j)]) += mass;
            if (mass > mass_threshold)
                result.pairs.push_back({i, j, mass});
        }
    }
    return result;
}

TransportPlan<double> flb_pot_init(const MmSpace<double>& source, const MmSpace<double>& target,
                                   double lambda) {
    if (!(lambda > 0))
        throw std::invalid_argument("flb_pot_init: lambda must be positive");
    const Eigen::VectorXd sx = source.cost() * source.weights();
    const Eigen::VectorXd sy = target.cost() * target.weights();
    Eigen::MatrixXd cost(source.size(), target.size());
    for (Eigen::Index i = 0; i < source.size(); ++i) {
        const double si = sx[i];
        for (Eigen::Index j = 0; j < target.size(); ++j) {
            const double d = si - sy[j];
            cost(i, j) = d * d;
        }
    }
    cost.array() -= 2.0 * lambda;  // partial problem as a shifted linear one
    return solve_pot_linear(cost, source.weights(), target.weights()).plan;
}

std::vector<int> pu_classify(const Eigen::VectorXd& col_marginal, double pi) {
    if (!(pi > 0) || !(pi < 1))
        throw std::invalid_argument("pu_classify: pi must lie in (0, 1)");
    const Eigen::Index m = col_marginal.size();
    const auto positives =
        static_cast<Eigen::Index>(std::ceil(pi * static_cast<double>(m) - 1e-12));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return col_marginal[a] > col_marginal[b];
    });
    std::vector<int> labels(static_cast<std::size_t>(m), 0);
    for (Eigen::Index t = 0; t < positives; ++t)
        labels[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = 1;
    return labels;
}

PuTask make_pu_task(const PuConfig& config) {
    if (config.n_positive < 1 || config.m_unlabeled < 1)
        throw std::invalid_argument("make_pu_task: sample counts must be positive");
    if (!(config.pi > 0) || !(config.pi < 1))
        throw std::invalid_argument("make_pu_task: pi must lie in (0, 1)");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = config.n_positive;
    const int m = config.m_unlabeled;
    const int m_pos = static_cast<int>(std::lround(config.pi * m));

    // Labeled positives live in 2D, the unlabeled pool in 3D. Both positive
    // clusters share the same intra-cluster distance profile (matched mean
    // squared distance); the negatives sit in a concentric but much wider
    // cluster, so class is carried by distance structure rather than by any
    // cross-space feature.
    const double sigma_src = 0.1;                          // 2D: E d^2 = 4 sigma^2
    const double sigma_pos = 0.1 * std::sqrt(4.0 / 6.0);   // 3D: E d^2 = 6 sigma^2
    const double sigma_neg = 0.5;

    Eigen::MatrixXd src(n, 2);
    for (int i = 0; i < n; ++i)
        src.row(i) << sigma_src * gauss(rng), sigma_src * gauss(rng);

    Eigen::MatrixXd tgt(m, 3);
    std::vector<int> labels(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < m; ++j) {
        const double sigma = j < m_pos ? sigma_pos : sigma_neg;
        tgt.row(j) << sigma * gauss(rng), sigma * gauss(rng), sigma * gauss(rng);
        if (j < m_pos)
            labels[static_cast<std::size_t>(j)] = 1;
    }
    // Shuffle unlabeled points so class is not encoded in the index.
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd tgt_shuffled(m, 3);
    std::vector<int> labels_shuffled(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        tgt_shuffled.row(j) = tgt.row(perm[static_cast<std::size_t>(j)]);
        labels_shuffled[static_cast<std::size_t>(j)] =
            labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    }

    const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, config.pi / n);
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(m, 1.0 / m);
    return PuTask{build_mm_space<double>(src, p, 2.0), build_mm_space<double>(tgt_shuffled, q, 2.0),
                  std::move(labels_shuffled)};
}

PuResult run_pu_demo(const PuConfig& config, const FwConfig<double>& fw) {
    const PuTask task = make_pu_task(config);
    PgwProblem<double> problem(task.source, task.target, config.lambda);

    PuResult result;
    if (config.init == PuInit::flb_pot) {
        const TransportPlan<double> init = flb_pot_init(task.source, task.target, config.lambda);
        result.report = solve(problem, fw, &init);
    } else {
        result.report = solve(problem, fw);
    }
    result.predicted = pu_classify(result.report.plan.col_marginal(), config.pi);
    long correct = 0;
    for (std::size_t j = 0; j < result.predicted.size(); ++j)
        correct += result.predicted[j] == task.labels[j];
    result.accuracy = static_cast<double>(correct) / static_cast<double>(result.predicted.size());
    return result;
}

namespace {

struct BenchCell {
    int n;
    double lambda;
    std::uint64_t seed;
};

std::array<BenchRow, 2> run_bench_cell(const BenchCell& cell, const FwConfig<double>& base) {
    std::mt19937_64 rng(cell.seed);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    const int n = cell.n;
    const int m = n + 100;
    Eigen::MatrixXd src(n, 2);
    for (int i = 0; i < n; ++i)
        src.row(i) << unif(rng), unif(rng);
    Eigen::MatrixXd tgt(m, 3);
    for (int j = 0; j < m; ++j)
        tgt.row(j) << unif(rng), unif(rng), unif(rng);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / m);
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(m, 1.0 / m);
    const PgwProblem<double> problem(build_mm_space<double>(src, p, 2.0),
                                     build_mm_space<double>(tgt, q, 2.0), cell.lambda);

    std::array<BenchRow, 2> rows;
    for (int v = 0; v < 2; ++v) {
        FwConfig<double> cfg = base;
        cfg.variant = v == 0 ? SolverVariant::v1 : SolverVariant::v2;
        const SolveReport<double> report = solve(problem, cfg);
        rows[static_cast<std::size_t>(v)] =
            BenchRow{n,      m,           cell.lambda,      cfg.variant,
                     report.iterations, report.wall_seconds, report.pgw_value,
                     report.transported_mass};
    }
    return rows;
}

}  // namespace

std::vector<BenchRow> run_benchmark(const BenchConfig& config) {
    for (std::size_t t = 1; t < config.sizes.size(); ++t)
        if (config.sizes[t] < config.sizes[t - 1])
            throw std::invalid_argument("run_benchmark: sizes must be ascending");

    std::vector<BenchCell> cells;
    for (const int n : config.sizes)
        for (const double lambda : config.lambdas)
            cells.push_back({n, lambda, config.seed + static_cast<std::uint64_t>(n)});

    std::vector<std::array<BenchRow, 2>> results(cells.size());
    if (config.parallel && cells.size() > 1) {
        const int hw = static_cast<int>(std::thread::hardware_concurrency());
        const int threads = std::max(1, config.max_threads > 0 ? config.max_threads : hw);
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t idx = next.fetch_add(1);
                    if (idx >= cells.size())
                        return;
                    results[idx] = run_bench_cell(cells[idx], config.fw);
                }
            });
        }
        for (auto& th : pool)
            th.join();
    } else {
        for (std::size_t idx = 0; idx < cells.size(); ++idx)
            results[idx] = run_bench_cell(cells[idx], config.fw);
    }

    std::vector<BenchRow> rows;
    rows.reserve(results.size() * 2);
    for (const auto& pair : results) {
        rows.push_back(pair[0]);
        rows.push_back(pair[1]);
    }
    return rows;
}

}  // namespace pgw
