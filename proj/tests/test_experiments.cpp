#include <doctest.h>

#include <random>

#include "pgw/experiments.hpp"
#include "pgw/oracle.hpp"

using pgw::FwConfig;
using pgw::PuConfig;
using pgw::ShapeConfig;

TEST_CASE("gen_shapes masses follow the mixtures and seeds are reproducible") {
    ShapeConfig config;
    config.n_per_shape = 20;
    config.seed = 5;
    const auto a = pgw::gen_shapes(config);
    const auto b = pgw::gen_shapes(config);
    CHECK(a.space_2d.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.space_3d.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.space_2d.size() == 40);
    CHECK(a.space_3d.size() == 40);
    CHECK((a.space_2d.points() - b.space_2d.points()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.space_3d.cost() - b.space_3d.cost()).cwiseAbs().maxCoeff() == 0.0);

    // component masses match the mixture weights
    double square_mass = 0;
    for (Eigen::Index i = 0; i < a.space_2d.size(); ++i)
        if (a.components_2d[static_cast<std::size_t>(i)] == 0)
            square_mass += a.space_2d.weights()[i];
    CHECK(square_mass == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("degenerate mixtures drop the empty component") {
    ShapeConfig config;
    config.n_per_shape = 10;
    config.mixture_2d = {1.0, 0.0};
    const auto shapes = pgw::gen_shapes(config);
    CHECK(shapes.space_2d.size() == 10);
    for (const int c : shapes.components_2d)
        CHECK(c == 0);
}

TEST_CASE("identical shapes match themselves") {
    ShapeConfig config;
    config.n_per_shape = 12;
    config.mixture_2d = {0.5, 0.5};
    config.mixture_3d = {0.5, 0.5};
    config.seed = 11;
    auto shapes = pgw::gen_shapes(config);
    shapes.space_3d = shapes.space_2d;  // self matching
    shapes.components_3d = shapes.components_2d;

    FwConfig<double> fw;
    fw.tol = 1e-8;
    const auto result = pgw::match_shapes(shapes, 50.0, fw);
    for (int c = 0; c < 2; ++c) {
        const double within = result.component_mass(c, c);
        const double total = result.component_mass.row(c).sum();
        CHECK(within >= 0.99 * total);
    }

}

TEST_CASE("a threshold above the largest entry empties the correspondence list") {
    ShapeConfig config;
    config.n_per_shape = 6;
    config.seed = 3;
    const auto shapes = pgw::gen_shapes(config);
    FwConfig<double> fw;
    const auto result = pgw::match_shapes(shapes, 1.0, fw, 10.0);
    CHECK(result.pairs.empty());
}

TEST_CASE("flb_pot_init trivial cases and feasibility") {
    const pgw::MmSpace<double> point(Eigen::VectorXd::Constant(1, 1.0),
                                     Eigen::MatrixXd::Zero(1, 1));
    const auto single = pgw::flb_pot_init(point, point, 0.7);
    CHECK(single.matrix()(0, 0) == doctest::Approx(1.0));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd pts(5, 2);
    for (Eigen::Index i = 0; i < 5; ++i)
        pts.row(i) << unif(rng), unif(rng);
    const auto space = pgw::build_mm_space<double>(pts, pgw::uniform_weights<double>(5), 2.0);
    const auto self_plan = pgw::flb_pot_init(space, space, 10.0);
    CHECK(self_plan.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pgw::validate_plan(self_plan, space.weights(), space.weights(), 1e-9).feasible);
}

TEST_CASE("flb_pot_init objective equals the direct polytope minimum") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd src_pts(3, 2), tgt_pts(4, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
        src_pts.row(i) << unif(rng), unif(rng);
    for (Eigen::Index j = 0; j < 4; ++j)
        tgt_pts.row(j) << unif(rng), unif(rng), unif(rng);
    const auto src = pgw::build_mm_space<double>(src_pts, pgw::uniform_weights<double>(3), 2.0);
    const auto tgt = pgw::build_mm_space<double>(tgt_pts, pgw::uniform_weights<double>(4), 2.0);
    const double lambda = 0.05;

    const auto plan = pgw::flb_pot_init(src, tgt, lambda);

    const Eigen::VectorXd sx = src.cost() * src.weights();
    const Eigen::VectorXd sy = tgt.cost() * tgt.weights();
    Eigen::MatrixXd shifted(3, 4);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 4; ++j)
            shifted(i, j) = (sx[i] - sy[j]) * (sx[i] - sy[j]) - 2.0 * lambda;
    const auto direct = pgw::partial_lp_minimum(shifted, src.weights(), tgt.weights());
    CHECK(shifted.cwiseProduct(plan.matrix()).sum() ==
          doctest::Approx(direct.value).epsilon(1e-9));
}

TEST_CASE("pu_classify follows the quantile rule with index tie-breaks") {
    Eigen::VectorXd marginal(4);
    marginal << 0.1, 0.3, 0.2, 0.4;
    CHECK(pgw::pu_classify(marginal, 0.5) == std::vector<int>{0, 1, 0, 1});

    const Eigen::VectorXd equal = Eigen::VectorXd::Constant(5, 0.2);
    CHECK(pgw::pu_classify(equal, 0.4) == std::vector<int>{1, 1, 0, 0, 0});

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 40);
        Eigen::VectorXd values(m);
        for (Eigen::Index j = 0; j < m; ++j)
            values[j] = unif(rng);
        const double pi = 0.05 + 0.9 * unif(rng);
        const auto labels = pgw::pu_classify(values, pi);
        long count = 0;
        for (const int l : labels)
            count += l;
        CHECK(count == static_cast<long>(std::ceil(pi * static_cast<double>(m) - 1e-12)));
    }
}

TEST_CASE("the synthetic PU pipeline recovers the positive cluster") {
    PuConfig config;
    config.n_positive = 40;
    config.m_unlabeled = 200;
    config.seed = 1;
    FwConfig<double> fw;
    fw.line_search = pgw::LineSearchMode::fixed_unit;
    const auto result = pgw::run_pu_demo(config, fw);
    CHECK(result.accuracy >= 0.9);
}

TEST_CASE("benchmark cells agree across variants and count rows") {
    pgw::BenchConfig config;
    config.sizes = {10};
    config.lambdas = {0.2, 1.0, 10.0};
    config.fw.max_iters = 1000;
    config.fw.tol = 1e-5;
    const auto rows = pgw::run_benchmark(config);
    REQUIRE(rows.size() == 6);
    for (std::size_t t = 0; t < rows.size(); t += 2) {
        CHECK(rows[t].variant == pgw::SolverVariant::v1);
        CHECK(rows[t + 1].variant == pgw::SolverVariant::v2);
        CHECK(rows[t].pgw_value == doctest::Approx(rows[t + 1].pgw_value).epsilon(1e-9));
        CHECK(rows[t].m == rows[t].n + 100);
    }
    pgw::BenchConfig bad;
    bad.sizes = {20, 10};
    CHECK_THROWS_AS(pgw::run_benchmark(bad), std::invalid_argument);
}
