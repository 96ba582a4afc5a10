#include <doctest.h>

#include <random>

#include "pgw/oracle.hpp"
#include "pgw/transport_lp.hpp"

using pgw::LpInstance;
using pgw::LpStatus;
using pgw::PotOptions;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m, double lo,
                              double hi) {
    std::uniform_real_distribution<double> unif(lo, hi);
    Eigen::MatrixXd out(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            out(i, j) = unif(rng);
    return out;
}

Eigen::VectorXd random_masses(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out[i] = unif(rng);
    return out;
}

}  // namespace

TEST_CASE("solve_ot handles the forced 1x1 instance") {
    LpInstance<double> inst;
    inst.cost = Eigen::MatrixXd::Constant(1, 1, 3.5);
    inst.row_supply = Eigen::VectorXd::Constant(1, 1.0);
    inst.col_demand = Eigen::VectorXd::Constant(1, 1.0);
    const auto sol = pgw::solve_ot(inst, 100);
    CHECK(sol.status == LpStatus::optimal);
    CHECK(sol.plan.matrix()(0, 0) == doctest::Approx(1.0));
    CHECK(sol.objective == doctest::Approx(3.5));
}

TEST_CASE("solve_ot finds the zero-cost matching") {
    LpInstance<double> inst;
    inst.cost = Eigen::MatrixXd(2, 2);
    inst.cost << 0, 1, 1, 0;
    inst.row_supply = Eigen::Vector2d(0.5, 0.5);
    inst.col_demand = Eigen::Vector2d(0.5, 0.5);
    const auto sol = pgw::solve_ot(inst, 100);
    CHECK(sol.objective == doctest::Approx(0.0));
    CHECK(sol.plan.matrix()(0, 0) == doctest::Approx(0.5));
    CHECK(sol.plan.matrix()(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("solve_ot equals vertex enumeration on random instances") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 3);
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 3);
        LpInstance<double> inst;
        inst.cost = random_matrix(rng, n, m, -2.0, 2.0);
        inst.row_supply = random_masses(rng, n);
        inst.col_demand = random_masses(rng, m);
        inst.col_demand *= inst.row_supply.sum() / inst.col_demand.sum();

        const auto sol = pgw::solve_ot(inst, 10000);
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK((sol.plan.row_marginal() - inst.row_supply).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((sol.plan.col_marginal() - inst.col_demand).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(sol.objective ==
              doctest::Approx(inst.cost.cwiseProduct(sol.plan.matrix()).sum()).epsilon(1e-10));

        double best = std::numeric_limits<double>::infinity();
        for (const auto& vertex : pgw::enumerate_transport_vertices(inst))
            best = std::min(best, inst.cost.cwiseProduct(vertex.matrix()).sum());
        CHECK(sol.objective == doctest::Approx(best).epsilon(1e-10));
    }
}

TEST_CASE("solve_ot keeps zero supplies in the basis handling") {
    LpInstance<double> inst;
    inst.cost = Eigen::MatrixXd(3, 2);
    inst.cost << 1, 2, 0, 5, 3, 0;
    inst.row_supply = Eigen::Vector3d(0.4, 0.0, 0.6);
    inst.col_demand = Eigen::Vector2d(0.5, 0.5);
    const auto sol = pgw::solve_ot(inst, 1000);
    CHECK(sol.status == LpStatus::optimal);
    CHECK(sol.plan.row_marginal()[1] == 0.0);
    CHECK((sol.plan.col_marginal() - inst.col_demand).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_ot rejects unbalanced instances and reports iteration limits") {
    LpInstance<double> inst;
    inst.cost = Eigen::MatrixXd::Zero(2, 2);
    inst.row_supply = Eigen::Vector2d(1.0, 1.0);
    inst.col_demand = Eigen::Vector2d(0.5, 0.5);
    CHECK_THROWS_AS(pgw::solve_ot(inst, 100), std::invalid_argument);

    std::mt19937_64 rng(101);
    LpInstance<double> tight;
    tight.cost = random_matrix(rng, 4, 4, -1.0, 1.0);
    tight.row_supply = random_masses(rng, 4);
    tight.col_demand = random_masses(rng, 4);
    tight.col_demand *= tight.row_supply.sum() / tight.col_demand.sum();
    const auto sol = pgw::solve_ot(tight, 1);  // too few pivots to finish
    CHECK(sol.status == LpStatus::iteration_limit);
    // best-so-far plan is still a vertex of the polytope
    CHECK((sol.plan.row_marginal() - tight.row_supply).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("solve_ot is deterministic") {
    std::mt19937_64 rng(67);
    LpInstance<double> inst;
    inst.cost = random_matrix(rng, 5, 6, -1.0, 1.0);
    inst.row_supply = random_masses(rng, 5);
    inst.col_demand = random_masses(rng, 6);
    inst.col_demand *= inst.row_supply.sum() / inst.col_demand.sum();
    const auto a = pgw::solve_ot(inst, 10000);
    const auto b = pgw::solve_ot(inst, 10000);
    CHECK(a.iterations == b.iterations);
    CHECK((a.plan.matrix() - b.plan.matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pad_for_pot builds the balanced padded instance") {
    Eigen::MatrixXd g(1, 1);
    g << 3.0;
    const auto inst =
        pgw::pad_for_pot(g, Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 1.0));
    CHECK(inst.cost.rows() == 2);
    CHECK(inst.cost(0, 0) == 3.0);
    CHECK(inst.cost(0, 1) == 0.0);
    CHECK(inst.cost(1, 0) == 0.0);
    CHECK(inst.cost(1, 1) == 0.0);
    CHECK(inst.row_supply.isApprox(Eigen::Vector2d(1, 1)));
    CHECK(inst.col_demand.isApprox(Eigen::Vector2d(1, 1)));

    Eigen::MatrixXd g2(2, 1);
    g2 << 1.0, -1.0;
    const auto inst2 = pgw::pad_for_pot(g2, Eigen::Vector2d(0.2, 0.3),
                                        Eigen::VectorXd::Constant(1, 0.4));
    CHECK(inst2.row_supply.isApprox(Eigen::Vector3d(0.2, 0.3, 0.4)));
    CHECK(inst2.col_demand.isApprox(Eigen::Vector2d(0.4, 0.5)));
    CHECK(inst2.row_supply.sum() == doctest::Approx(inst2.col_demand.sum()));
}

TEST_CASE("solve_pot_linear trivial sign cases") {
    const Eigen::VectorXd one = Eigen::VectorXd::Constant(1, 1.0);
    Eigen::MatrixXd pos(1, 1), neg(1, 1);
    pos << 3.0;
    neg << -1.0;
    CHECK(pgw::solve_pot_linear(pos, one, one).plan.total_mass() == 0.0);
    CHECK(pgw::solve_pot_linear(neg, one, one).plan.matrix()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("solve_pot_linear equals the direct polytope minimum") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 2);
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 2);
        const Eigen::MatrixXd g = random_matrix(rng, n, m, -1.5, 1.5);
        const Eigen::VectorXd p = random_masses(rng, n);
        const Eigen::VectorXd q = random_masses(rng, m);
        const auto result = pgw::solve_pot_linear(g, p, q);
        const double objective = g.cwiseProduct(result.plan.matrix()).sum();
        const auto direct = pgw::partial_lp_minimum(g, p, q);
        CHECK(objective == doctest::Approx(direct.value).epsilon(1e-10));
        const auto verdict = pgw::validate_plan(result.plan, p, q, 1e-9);
        CHECK(verdict.feasible);
    }
}

TEST_CASE("row/column reduction never changes the objective") {
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::MatrixXd g = random_matrix(rng, n, m, -0.5, 2.0);  // many nonnegative rows
        const Eigen::VectorXd p = random_masses(rng, n);
        const Eigen::VectorXd q = random_masses(rng, m);
        PotOptions<double> on, off;
        on.reduction = true;
        off.reduction = false;
        const double obj_on =
            g.cwiseProduct(pgw::solve_pot_linear(g, p, q, on).plan.matrix()).sum();
        const double obj_off =
            g.cwiseProduct(pgw::solve_pot_linear(g, p, q, off).plan.matrix()).sum();
        CHECK(obj_on == doctest::Approx(obj_off).epsilon(1e-10));
    }
}

TEST_CASE("truncated plans always satisfy the dominated marginals") {
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 5);
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 5);
        const Eigen::MatrixXd g = random_matrix(rng, n, m, -2.0, 2.0);
        const Eigen::VectorXd p = random_masses(rng, n);
        const Eigen::VectorXd q = random_masses(rng, m);
        const auto result = pgw::solve_pot_linear(g, p, q);
        CHECK(pgw::validate_plan(result.plan, p, q, 1e-9).feasible);
    }
}
