#include <doctest.h>

#include <random>

#include "pgw/fw_solver.hpp"
#include "pgw/types.hpp"

using pgw::build_mm_space;
using pgw::MmSpace;
using pgw::TransportPlan;
using pgw::validate_plan;

namespace {

Eigen::MatrixXd random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd pts(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            pts(i, j) = unif(rng);
    return pts;
}

}  // namespace

TEST_CASE("build_mm_space matches the pairwise definition") {
    Eigen::MatrixXd pts(2, 2);
    pts << 0, 0, 1, 0;
    const auto space = build_mm_space<double>(pts, Eigen::Vector2d(0.5, 0.5), 2.0);
    CHECK(space.cost()(0, 0) == 0.0);
    CHECK(space.cost()(1, 1) == 0.0);
    CHECK(space.cost()(0, 1) == doctest::Approx(1.0));
    CHECK(space.cost()(1, 0) == doctest::Approx(1.0));
    CHECK(space.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("single point space has the 1x1 zero cost matrix") {
    Eigen::MatrixXd pts(1, 3);
    pts << 2, 3, 4;
    const auto space = build_mm_space<double>(pts, Eigen::VectorXd::Constant(1, 0.7), 2.0);
    CHECK(space.size() == 1);
    CHECK(space.cost()(0, 0) == 0.0);
}

TEST_CASE("random cost matrix equals an independent double loop") {
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd pts = random_points(rng, 4, 2);
    const auto space = build_mm_space<double>(pts, pgw::uniform_weights<double>(4), 2.0);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            double acc = 0;
            for (Eigen::Index d = 0; d < 2; ++d) {
                const double diff = pts(i, d) - pts(j, d);
                acc += diff * diff;
            }
            CHECK(space.cost()(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("build_mm_space is permutation-equivariant") {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd pts = random_points(rng, 5, 3);
    const Eigen::VectorXd w = pgw::uniform_weights<double>(5);
    const auto base = build_mm_space<double>(pts, w, 2.0);

    std::vector<Eigen::Index> perm{3, 0, 4, 1, 2};
    Eigen::MatrixXd pts_p(5, 3);
    for (Eigen::Index i = 0; i < 5; ++i)
        pts_p.row(i) = pts.row(perm[static_cast<std::size_t>(i)]);
    const auto permuted = build_mm_space<double>(pts_p, w, 2.0);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j)
            CHECK(permuted.cost()(i, j) ==
                  doctest::Approx(base.cost()(perm[static_cast<std::size_t>(i)],
                                              perm[static_cast<std::size_t>(j)])));
}

TEST_CASE("build_mm_space rejects bad inputs with the offending index") {
    Eigen::MatrixXd empty(0, 2);
    CHECK_THROWS_AS(build_mm_space<double>(empty, Eigen::VectorXd(), 2.0), std::invalid_argument);

    Eigen::MatrixXd pts(2, 1);
    pts << 0, 1;
    Eigen::Vector2d bad_w(0.5, -0.1);
    CHECK_THROWS_WITH_AS(build_mm_space<double>(pts, bad_w, 2.0),
                         doctest::Contains("index 1"), std::invalid_argument);

    Eigen::MatrixXd nan_pts(2, 1);
    nan_pts << 0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(build_mm_space<double>(nan_pts, Eigen::Vector2d(0.5, 0.5), 2.0),
                         doctest::Contains("(1, 0)"), std::invalid_argument);
}

TEST_CASE("MmSpace validates symmetry and the zero diagonal") {
    Eigen::MatrixXd cost(2, 2);
    cost << 0, 1, 2, 0;  // asymmetric
    CHECK_THROWS_AS(MmSpace<double>(Eigen::Vector2d(1, 1), cost), std::invalid_argument);
    cost << 1, 1, 1, 0;  // nonzero diagonal
    CHECK_THROWS_AS(MmSpace<double>(Eigen::Vector2d(1, 1), cost), std::invalid_argument);
    CHECK_THROWS_AS(MmSpace<double>(Eigen::Vector2d(0, 0), Eigen::MatrixXd::Zero(2, 2)),
                    std::invalid_argument);
    // zero weights are allowed as long as one entry is positive
    const MmSpace<double> ok(Eigen::Vector2d(0, 1), Eigen::MatrixXd::Zero(2, 2));
    CHECK(ok.total_mass() == 1.0);
}

TEST_CASE("TransportPlan clamps tiny negatives and caches marginals") {
    Eigen::MatrixXd gamma(2, 2);
    gamma << 0.25, 0.25, -1e-13, 0.5;
    const TransportPlan<double> plan(gamma);
    CHECK(plan.matrix()(1, 0) == 0.0);
    CHECK(plan.row_marginal()[0] == doctest::Approx(0.5));
    CHECK(plan.col_marginal()[1] == doctest::Approx(0.75));
    CHECK(plan.total_mass() == doctest::Approx(1.0));

    gamma(1, 0) = -1e-3;
    CHECK_THROWS_AS(TransportPlan<double>{gamma}, std::invalid_argument);
}

TEST_CASE("validate_plan accepts the product initialization for random masses") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 6);
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 6);
        Eigen::VectorXd p(n), q(m);
        for (Eigen::Index i = 0; i < n; ++i)
            p[i] = unif(rng);
        for (Eigen::Index j = 0; j < m; ++j)
            q[j] = unif(rng);
        p[0] += 1e-3;  // keep masses positive
        q[0] += 1e-3;
        const auto plan = pgw::init_plan(p, q);
        const auto verdict = validate_plan(plan, p, q, 1e-9);
        CHECK(verdict.feasible);
    }
}

TEST_CASE("validate_plan flags the doubled product coupling") {
    const Eigen::Vector2d p(0.5, 0.5);
    const Eigen::Vector2d q(0.5, 0.5);
    const TransportPlan<double> plan(Eigen::MatrixXd(2.0 * p * q.transpose()));
    const auto verdict = validate_plan(plan, p, q, 1e-9);
    CHECK_FALSE(verdict.feasible);
    CHECK(verdict.max_violation == doctest::Approx(0.5));
}

TEST_CASE("validate_plan accepts the zero plan and rejects shape mismatches") {
    const TransportPlan<double> zero(Eigen::MatrixXd::Zero(2, 3));
    const auto verdict = validate_plan(zero, Eigen::Vector2d(1, 1), Eigen::Vector3d(1, 1, 1), 1e-9);
    CHECK(verdict.feasible);
    CHECK(zero.total_mass() == 0.0);
    CHECK_THROWS_AS(validate_plan(zero, Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1, 1, 1), 1e-9),
                    std::invalid_argument);
}

TEST_CASE("PgwProblem requires a positive lambda") {
    const MmSpace<double> space(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Zero(1, 1));
    CHECK_THROWS_AS(pgw::PgwProblem<double>(space, space, 0.0), std::invalid_argument);
    const pgw::PgwProblem<double> problem(space, space, 0.5);
    CHECK(problem.mass_constant() == doctest::Approx(1.0));
}
