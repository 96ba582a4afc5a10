#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "pgw/experiments.hpp"
#include "pgw/fw_solver.hpp"
#include "pgw/io.hpp"
#include "pgw/oracle.hpp"

namespace {

struct CommonOptions {
    double lambda = 1.0;
    std::string solver = "v1";
    long max_iters = 1000;
    double tol = 1e-5;
    std::uint64_t seed = 0;
    std::string init = "product";
    std::string reduction = "on";
    std::string line_search = "exact";
    std::string out;
    std::string format = "json";
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--lambda", opt.lambda, "mass-destruction penalty weight (> 0)");
    cmd->add_option("--solver", opt.solver, "solver variant")->check(CLI::IsMember({"v1", "v2"}));
    cmd->add_option("--max-iters", opt.max_iters, "Frank-Wolfe iteration cap");
    cmd->add_option("--tol", opt.tol, "convergence tolerance (objective change and FW gap)");
    cmd->add_option("--seed", opt.seed, "random seed");
    cmd->add_option("--init", opt.init, "initial plan")->check(CLI::IsMember({"product", "flb-pot"}));
    cmd->add_option("--reduction", opt.reduction, "row/column reduction in the direction solve")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--line-search", opt.line_search, "line search rule")
        ->check(CLI::IsMember({"exact", "unit"}));
    cmd->add_option("--out", opt.out, "output file (stdout when omitted)");
    cmd->add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
}

pgw::FwConfig<double> make_fw_config(const CommonOptions& opt) {
    pgw::FwConfig<double> cfg;
    cfg.variant = opt.solver == "v2" ? pgw::SolverVariant::v2 : pgw::SolverVariant::v1;
    cfg.max_iters = opt.max_iters;
    cfg.tol = opt.tol;
    cfg.reduction = opt.reduction == "on";
    cfg.line_search =
        opt.line_search == "unit" ? pgw::LineSearchMode::fixed_unit : pgw::LineSearchMode::exact;
    cfg.seed = opt.seed;
    return cfg;
}

int exit_code_for(const pgw::SolveReport<double>& report) {
    return report.termination == pgw::Termination::converged ? 0 : 2;
}

int env_thread_cap() {
    if (const char* env = std::getenv("PGW_NUM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0)
            return cap;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partial Gromov-Wasserstein solver"};
    app.require_subcommand(1);

    const int thread_cap = env_thread_cap();
    if (thread_cap > 0)
        Eigen::setNbThreads(thread_cap);

    CommonOptions solve_opt;
    std::string source_path, target_path;
    bool csv_weights = false;
    double exponent = 2.0;
    auto* cmd_solve = app.add_subcommand("solve", "solve a PGW instance between two point clouds");
    cmd_solve->add_option("source", source_path, "source point cloud (CSV or JSON)")->required();
    cmd_solve->add_option("target", target_path, "target point cloud (CSV or JSON)")->required();
    cmd_solve->add_flag("--csv-weights", csv_weights, "treat the last CSV column as weights");
    cmd_solve->add_option("--exponent", exponent, "ground-cost exponent q (>= 1)");
    add_common_flags(cmd_solve, solve_opt);

    CommonOptions match_opt;
    int n_per_shape = 60;
    std::vector<double> mix2{0.3, 0.7}, mix3{0.5, 0.5};
    double threshold = -1;
    auto* cmd_match = app.add_subcommand("match-shapes", "2D/3D mixture shape matching");
    cmd_match->add_option("--n-per-shape", n_per_shape, "points per shape component");
    cmd_match->add_option("--mix2d", mix2, "2D mixture weights (square, circle)")->expected(2);
    cmd_match->add_option("--mix3d", mix3, "3D mixture weights (cube, sphere)")->expected(2);
    cmd_match->add_option("--threshold", threshold,
                          "correspondence mass threshold (default 0.5 / (n m))");
    add_common_flags(cmd_match, match_opt);

    CommonOptions pu_opt;
    pu_opt.lambda = 10.0;
    pu_opt.init = "flb-pot";
    pu_opt.line_search = "unit";  // the PU pipeline runs fixed unit steps
    int pu_n = 100, pu_m = 500;
    double pu_pi = 0.2;
    auto* cmd_pu = app.add_subcommand("pu-demo", "synthetic positive-unlabeled pipeline");
    cmd_pu->add_option("--n", pu_n, "labeled positives");
    cmd_pu->add_option("--m", pu_m, "unlabeled pool size");
    cmd_pu->add_option("--pi", pu_pi, "positive-class prior in (0, 1)");
    add_common_flags(cmd_pu, pu_opt);

    CommonOptions bench_opt;
    std::vector<int> sizes{10, 50, 100};
    std::vector<double> lambdas{0.2, 1.0, 10.0};
    bool parallel = false;
    auto* cmd_bench = app.add_subcommand("bench", "wall-clock benchmark on uniform clouds");
    cmd_bench->add_option("--sizes", sizes, "source sizes, ascending (m = n + 100)");
    cmd_bench->add_option("--lambdas", lambdas, "penalty weights");
    cmd_bench->add_flag("--parallel", parallel, "run (n, lambda) cells concurrently");
    add_common_flags(cmd_bench, bench_opt);
    bench_opt.format = "csv";

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_solve) {
            if (!(solve_opt.lambda > 0)) {
                std::cerr << "error: --lambda must be positive\n";
                return 1;
            }
            const pgw::PointCloud src = pgw::load_point_cloud(source_path, csv_weights);
            const pgw::PointCloud tgt = pgw::load_point_cloud(target_path, csv_weights);
            const pgw::PgwProblem<double> problem(
                pgw::build_mm_space<double>(src.points, src.weights, exponent),
                pgw::build_mm_space<double>(tgt.points, tgt.weights, exponent), solve_opt.lambda);

            const pgw::FwConfig<double> cfg = make_fw_config(solve_opt);
            pgw::SolveReport<double> report;
            if (solve_opt.init == "flb-pot") {
                const pgw::TransportPlan<double> init =
                    pgw::flb_pot_init(problem.source, problem.target, solve_opt.lambda);
                report = pgw::solve(problem, cfg, &init);
            } else {
                report = pgw::solve(problem, cfg);
            }
            if (solve_opt.out.empty())
                pgw::write_solve_report_json(std::cout, report, solve_opt.solver, solve_opt.lambda);
            else
                pgw::write_solve_report_json(solve_opt.out, report, solve_opt.solver,
                                             solve_opt.lambda);
            return exit_code_for(report);
        }

        if (*cmd_match) {
            pgw::ShapeConfig shape_config;
            shape_config.n_per_shape = n_per_shape;
            shape_config.mixture_2d = {mix2[0], mix2[1]};
            shape_config.mixture_3d = {mix3[0], mix3[1]};
            shape_config.seed = match_opt.seed;
            const pgw::ShapePair shapes = pgw::gen_shapes(shape_config);
            const pgw::MatchResult result =
                pgw::match_shapes(shapes, match_opt.lambda, make_fw_config(match_opt), threshold);
            if (match_opt.out.empty())
                pgw::write_correspondences_json(std::cout, result, match_opt.seed);
            else
                pgw::write_correspondences_json(match_opt.out, result, match_opt.seed);
            return exit_code_for(result.report);
        }

        if (*cmd_pu) {
            pgw::PuConfig config;
            config.n_positive = pu_n;
            config.m_unlabeled = pu_m;
            config.pi = pu_pi;
            config.lambda = pu_opt.lambda;
            config.seed = pu_opt.seed;
            config.init = pu_opt.init == "product" ? pgw::PuInit::product : pgw::PuInit::flb_pot;
            const pgw::PuResult result = pgw::run_pu_demo(config, make_fw_config(pu_opt));
            std::ostringstream summary;
            summary << "{\n  \"accuracy\": " << result.accuracy
                    << ",\n  \"pgw_value\": " << result.report.pgw_value
                    << ",\n  \"transported_mass\": " << result.report.transported_mass
                    << ",\n  \"iterations\": " << result.report.iterations
                    << ",\n  \"seed\": " << pu_opt.seed << "\n}\n";
            if (pu_opt.out.empty()) {
                std::cout << summary.str();
            } else {
                std::ofstream out(pu_opt.out);
                if (!out)
                    throw std::runtime_error("cannot open output file: " + pu_opt.out);
                out << summary.str();
            }
            return exit_code_for(result.report);
        }

        if (*cmd_bench) {
            pgw::BenchConfig config;
            config.sizes = sizes;
            config.lambdas = lambdas;
            config.fw = make_fw_config(bench_opt);
            config.seed = bench_opt.seed;
            config.parallel = parallel;
            config.max_threads = thread_cap;
            const std::vector<pgw::BenchRow> rows = pgw::run_benchmark(config);
            if (bench_opt.out.empty())
                pgw::write_bench_csv(std::cout, rows);
            else
                pgw::write_bench_csv(bench_opt.out, rows);
            return 0;
        }
    } catch (const pgw::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
