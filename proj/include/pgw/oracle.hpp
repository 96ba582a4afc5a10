#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "pgw/fw_solver.hpp"
#include "pgw/tensor_ops.hpp"
#include "pgw/transport_lp.hpp"
#include "pgw/types.hpp"

// Brute-force references for tests and acceptance checks. Nothing here is on
// the production path, and the linear-programming checks intentionally share
// no code with the simplex they certify.

namespace pgw {

template <typename Scalar = double>
struct OracleResult {
    TransportPlan<Scalar> best_plan;
    Scalar best_value = Scalar(0);  // full objective, constant term included
    long starts_used = 0;
    Scalar certificate = Scalar(0);  // FW gap of the returned plan
};

namespace detail {

// Scale rows then columns onto the dominated polytope. Column scaling only
// shrinks row sums, so one pass of each suffices.
template <typename Scalar>
void project_to_polytope(MatrixX<Scalar>& gamma, const VectorX<Scalar>& p,
                         const VectorX<Scalar>& q) {
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
        const Scalar r = gamma.row(i).sum();
        if (r > p[i])
            gamma.row(i) *= p[i] / r;
    }
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
        const Scalar c = gamma.col(j).sum();
        if (c > q[j])
            gamma.col(j) *= q[j] / c;
    }
}

}  // namespace detail

/// Global-optimum estimator on tiny instances: a coordinate grid over the
/// feasible box, projected onto the polytope, refined by the production
/// Frank-Wolfe from every surviving start (plus the product coupling).
/// Values are computed at call time, never stored as constants.
template <typename Scalar>
OracleResult<Scalar> brute_force_pgw(const PgwProblem<Scalar>& problem, Scalar grid_step = Scalar(0),
                                     long refine_iters = 200) {
    const VectorX<Scalar>& p = problem.source.weights();
    const VectorX<Scalar>& q = problem.target.weights();
    const Eigen::Index n = p.size();
    const Eigen::Index m = q.size();
    if (n * m > 9)
        throw std::invalid_argument("brute_force_pgw: size cap n*m <= 9 exceeded");

    const CostDecomposition<Scalar> decomp = make_decomposition(problem);
    const Scalar s = std::min(p.sum(), q.sum());
    if (!(s > Scalar(0))) {
        TransportPlan<Scalar> zero(MatrixX<Scalar>::Zero(n, m));
        return {zero, problem.mass_constant(), 1, Scalar(0)};
    }
    if (grid_step <= Scalar(0))
        grid_step = Scalar(0.25) * s;

    const long levels = static_cast<long>(std::floor(static_cast<double>(s / grid_step) + 1e-12)) + 1;
    double combos = 1;
    for (Eigen::Index c = 0; c < n * m; ++c)
        combos *= static_cast<double>(levels);
    if (combos > 5e7)
        throw std::invalid_argument("brute_force_pgw: grid too fine for the instance size");

    // Collect unique projected starts.
    std::set<std::vector<long long>> seen;
    std::vector<MatrixX<Scalar>> starts;
    const Scalar quantum = s * Scalar(1e-10);
    auto push_start = [&](const MatrixX<Scalar>& gamma) {
        std::vector<long long> key(static_cast<std::size_t>(n * m));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                key[static_cast<std::size_t>(i * m + j)] =
                    llround(static_cast<double>(gamma(i, j) / quantum));
        if (seen.insert(std::move(key)).second)
            starts.push_back(gamma);
    };

    std::vector<long> digits(static_cast<std::size_t>(n * m), 0);
    MatrixX<Scalar> grid_point(n, m);
    while (true) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                grid_point(i, j) = grid_step * Scalar(digits[static_cast<std::size_t>(i * m + j)]);
        detail::project_to_polytope(grid_point, p, q);
        push_start(grid_point);
        Eigen::Index pos = 0;
        while (pos < n * m && ++digits[static_cast<std::size_t>(pos)] == levels) {
            digits[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == n * m)
            break;
    }
    push_start(init_plan(p, q).matrix());

    FwConfig<Scalar> refine;
    refine.max_iters = refine_iters;
    refine.tol = Scalar(1e-15);
    refine.reduction = true;

    bool have_best = false;
    SolveReport<Scalar> best;
    for (const MatrixX<Scalar>& start : starts) {
        SolveReport<Scalar> run =
            detail::fw_run(problem, decomp, refine, start, SolverVariant::v1);
        if (!have_best || run.pgw_value < best.pgw_value) {
            best = std::move(run);
            have_best = true;
        }
    }

    // Stationarity certificate of the winner, measured fresh.
    const MatrixX<Scalar> grad = grad_tilde(decomp, best.plan.matrix(), problem.lambda);
    const TransportPlan<Scalar> direction = solve_pot_linear(grad, p, q).plan;
    const Scalar certificate = fw_gap(decomp, best.plan, direction, problem.lambda);

    return {best.plan, best.pgw_value, static_cast<long>(starts.size()), certificate};
}

namespace detail {

// Flows on a spanning tree of the bipartite supply/demand graph, by repeated
// leaf peeling; returns false if some flow would need to be negative beyond
// rounding. Independent of the simplex implementation on purpose.
template <typename Scalar>
bool tree_flows(const std::vector<Eigen::Index>& cells, const VectorX<Scalar>& supply,
                const VectorX<Scalar>& demand, MatrixX<Scalar>& out) {
    const Eigen::Index k = supply.size();
    const Eigen::Index l = demand.size();
    const Eigen::Index nodes = k + l;
    std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> adj(
        static_cast<std::size_t>(nodes));  // (other node, cell position)
    for (std::size_t t = 0; t < cells.size(); ++t) {
        const Eigen::Index i = cells[t] / l;
        const Eigen::Index j = cells[t] % l;
        adj[static_cast<std::size_t>(i)].push_back({k + j, static_cast<Eigen::Index>(t)});
        adj[static_cast<std::size_t>(k + j)].push_back({i, static_cast<Eigen::Index>(t)});
    }
    std::vector<Scalar> balance(static_cast<std::size_t>(nodes));
    for (Eigen::Index i = 0; i < k; ++i)
        balance[static_cast<std::size_t>(i)] = supply[i];
    for (Eigen::Index j = 0; j < l; ++j)
        balance[static_cast<std::size_t>(k + j)] = -demand[j];

    std::vector<int> degree(static_cast<std::size_t>(nodes));
    std::vector<char> used(cells.size(), 0);
    for (Eigen::Index x = 0; x < nodes; ++x)
        degree[static_cast<std::size_t>(x)] = static_cast<int>(adj[static_cast<std::size_t>(x)].size());

    out = MatrixX<Scalar>::Zero(k, l);
    std::vector<Eigen::Index> queue;
    for (Eigen::Index x = 0; x < nodes; ++x)
        if (degree[static_cast<std::size_t>(x)] == 1)
            queue.push_back(x);
    std::size_t head = 0;
    while (head < queue.size()) {
        const Eigen::Index x = queue[head++];
        if (degree[static_cast<std::size_t>(x)] != 1)
            continue;
        Eigen::Index cell_pos = -1, other = -1;
        for (const auto& [nbr, pos] : adj[static_cast<std::size_t>(x)]) {
            if (!used[static_cast<std::size_t>(pos)]) {
                cell_pos = pos;
                other = nbr;
                break;
            }
        }
        if (cell_pos < 0)
            continue;
        const Eigen::Index cell = cells[static_cast<std::size_t>(cell_pos)];
        // A row leaf pushes its remaining supply out; a column leaf pulls in.
        const Scalar f = x < k ? balance[static_cast<std::size_t>(x)]
                               : -balance[static_cast<std::size_t>(x)];
        if (f < Scalar(-1e-12))
            return false;
        out(cell / l, cell % l) = f;
        used[static_cast<std::size_t>(cell_pos)] = 1;
        balance[static_cast<std::size_t>(x)] = Scalar(0);
        // The edge always carries f from its row node to its col node.
        balance[static_cast<std::size_t>(other)] += x < k ? f : -f;
        --degree[static_cast<std::size_t>(x)];
        if (--degree[static_cast<std::size_t>(other)] == 1)
            queue.push_back(other);
    }
    return true;
}

}  // namespace detail

/// All basic feasible plans of a balanced transportation polytope, by
/// enumerating spanning trees of the bipartite graph; duplicates from
/// degenerate trees are removed. Guarded to n+m <= 8.
template <typename Scalar>
std::vector<TransportPlan<Scalar>> enumerate_transport_vertices(const LpInstance<Scalar>& instance) {
    const Eigen::Index k = instance.row_supply.size();
    const Eigen::Index l = instance.col_demand.size();
    if (k + l > 8)
        throw std::invalid_argument("enumerate_transport_vertices: size cap n+m <= 8 exceeded");
    const Scalar sr = instance.row_supply.sum();
    const Scalar sc = instance.col_demand.sum();
    if (std::abs(sr - sc) > Scalar(1e-9) * std::max({Scalar(1), std::abs(sr), std::abs(sc)}))
        throw std::invalid_argument("enumerate_transport_vertices: unbalanced instance");

    const Eigen::Index cells = k * l;
    const Eigen::Index take = k + l - 1;
    std::vector<TransportPlan<Scalar>> vertices;
    std::set<std::vector<long long>> seen;
    const Scalar quantum = std::max(Scalar(1), sr) * Scalar(1e-12);

    std::vector<Eigen::Index> combo(static_cast<std::size_t>(take));
    for (Eigen::Index t = 0; t < take; ++t)
        combo[static_cast<std::size_t>(t)] = t;
    std::vector<Eigen::Index> parent_uf(static_cast<std::size_t>(k + l));

    auto root_of = [&](Eigen::Index x) {
        while (parent_uf[static_cast<std::size_t>(x)] != x)
            x = parent_uf[static_cast<std::size_t>(x)] =
                parent_uf[static_cast<std::size_t>(parent_uf[static_cast<std::size_t>(x)])];
        return x;
    };

    while (true) {
        // spanning tree test: take arcs acyclic over k+l nodes
        for (Eigen::Index x = 0; x < k + l; ++x)
            parent_uf[static_cast<std::size_t>(x)] = x;
        bool acyclic = true;
        for (Eigen::Index t = 0; t < take && acyclic; ++t) {
            const Eigen::Index c = combo[static_cast<std::size_t>(t)];
            const Eigen::Index a = root_of(c / l);
            const Eigen::Index b = root_of(k + c % l);
            if (a == b)
                acyclic = false;
            else
                parent_uf[static_cast<std::size_t>(a)] = b;
        }
        if (acyclic) {
            MatrixX<Scalar> flows;
            if (detail::tree_flows(combo, instance.row_supply, instance.col_demand, flows)) {
                std::vector<long long> key(static_cast<std::size_t>(cells));
                for (Eigen::Index i = 0; i < k; ++i)
                    for (Eigen::Index j = 0; j < l; ++j)
                        key[static_cast<std::size_t>(i * l + j)] =
                            llround(static_cast<double>(flows(i, j) / quantum));
                if (seen.insert(std::move(key)).second)
                    vertices.emplace_back(std::move(flows));
            }
        }
        // next combination
        Eigen::Index t = take - 1;
        while (t >= 0 && combo[static_cast<std::size_t>(t)] == cells - take + t)
            --t;
        if (t < 0)
            break;
        ++combo[static_cast<std::size_t>(t)];
        for (Eigen::Index z = t + 1; z < take; ++z)
            combo[static_cast<std::size_t>(z)] = combo[static_cast<std::size_t>(z - 1)] + 1;
    }
    return vertices;
}

template <typename Scalar = double>
struct PartialLpMinimum {
    Scalar value = Scalar(0);
    MatrixX<Scalar> plan;
};

/// Direct minimum of <G, gamma> over the dominated-marginal polytope by
/// enumerating every basic solution of the slack system
///   gamma 1 + s = p,  gamma^T 1 + t = q,  (gamma, s, t) >= 0.
/// The constraint matrix is totally unimodular, so small Gaussian elimination
/// is numerically exact. Guarded to n+m <= 8.
template <typename DerivedG, typename DerivedP, typename DerivedQ>
PartialLpMinimum<typename DerivedG::Scalar> partial_lp_minimum(
    const Eigen::MatrixBase<DerivedG>& gradient, const Eigen::MatrixBase<DerivedP>& p,
    const Eigen::MatrixBase<DerivedQ>& q) {
    using Scalar = typename DerivedG::Scalar;
    const Eigen::Index n = p.size();
    const Eigen::Index m = q.size();
    if (gradient.rows() != n || gradient.cols() != m)
        throw std::invalid_argument("partial_lp_minimum: dimension mismatch");
    if (n + m > 8)
        throw std::invalid_argument("partial_lp_minimum: size cap n+m <= 8 exceeded");

    const Eigen::Index rows = n + m;           // equations
    const Eigen::Index vars = n * m + n + m;   // gamma cells, row slacks, col slacks
    // column -> the two unit rows it touches (second = -1 for slacks)
    std::vector<std::array<Eigen::Index, 2>> col_rows(static_cast<std::size_t>(vars));
    for (Eigen::Index c = 0; c < n * m; ++c)
        col_rows[static_cast<std::size_t>(c)] = {c / m, n + c % m};
    for (Eigen::Index i = 0; i < n; ++i)
        col_rows[static_cast<std::size_t>(n * m + i)] = {i, -1};
    for (Eigen::Index j = 0; j < m; ++j)
        col_rows[static_cast<std::size_t>(n * m + n + j)] = {n + j, -1};

    PartialLpMinimum<Scalar> best;
    best.value = std::numeric_limits<Scalar>::infinity();
    best.plan = MatrixX<Scalar>::Zero(n, m);

    std::vector<Eigen::Index> combo(static_cast<std::size_t>(rows));
    for (Eigen::Index t = 0; t < rows; ++t)
        combo[static_cast<std::size_t>(t)] = t;

    double a[8][8];
    double rhs[8];
    int perm[8];

    while (true) {
        // Assemble the basis matrix columns and solve A x = [p; q].
        for (Eigen::Index r = 0; r < rows; ++r) {
            rhs[r] = static_cast<double>(r < n ? p[r] : q[r - n]);
            for (Eigen::Index t = 0; t < rows; ++t)
                a[r][t] = 0.0;
        }
        for (Eigen::Index t = 0; t < rows; ++t) {
            const auto& touched = col_rows[static_cast<std::size_t>(combo[static_cast<std::size_t>(t)])];
            a[touched[0]][t] = 1.0;
            if (touched[1] >= 0)
                a[touched[1]][t] = 1.0;
        }
        bool singular = false;
        for (Eigen::Index r = 0; r < rows; ++r)
            perm[r] = static_cast<int>(r);
        for (Eigen::Index col = 0; col < rows && !singular; ++col) {
            Eigen::Index piv = -1;
            double piv_abs = 0.5;  // unimodular: nonzero pivots have magnitude >= 1
            for (Eigen::Index r = col; r < rows; ++r) {
                const double cand = std::abs(a[perm[r]][col]);
                if (cand > piv_abs) {
                    piv_abs = cand;
                    piv = r;
                }
            }
            if (piv < 0) {
                singular = true;
                break;
            }
            std::swap(perm[col], perm[piv]);
            const double inv = 1.0 / a[perm[col]][col];
            for (Eigen::Index r = col + 1; r < rows; ++r) {
                const double factor = a[perm[r]][col] * inv;
                if (factor == 0.0)
                    continue;
                for (Eigen::Index cc = col; cc < rows; ++cc)
                    a[perm[r]][cc] -= factor * a[perm[col]][cc];
                rhs[perm[r]] -= factor * rhs[perm[col]];
            }
        }
        if (!singular) {
            double x[8];
            bool feasible = true;
            for (Eigen::Index col = rows - 1; col >= 0; --col) {
                double acc = rhs[perm[col]];
                for (Eigen::Index cc = col + 1; cc < rows; ++cc)
                    acc -= a[perm[col]][cc] * x[cc];
                x[col] = acc / a[perm[col]][col];
                if (x[col] < -1e-12) {
                    feasible = false;
                    break;
                }
            }
            if (feasible) {
                double value = 0;
                for (Eigen::Index t = 0; t < rows; ++t) {
                    const Eigen::Index c = combo[static_cast<std::size_t>(t)];
                    if (c < n * m)
                        value += x[t] * static_cast<double>(gradient(c / m, c % m));
                }
                if (Scalar(value) < best.value) {
                    best.value = Scalar(value);
                    best.plan.setZero();
                    for (Eigen::Index t = 0; t < rows; ++t) {
                        const Eigen::Index c = combo[static_cast<std::size_t>(t)];
                        if (c < n * m)
                            best.plan(c / m, c % m) = Scalar(std::max(0.0, x[t]));
                    }
                }
            }
        }
        Eigen::Index t = rows - 1;
        while (t >= 0 && combo[static_cast<std::size_t>(t)] == vars - rows + t)
            --t;
        if (t < 0)
            break;
        ++combo[static_cast<std::size_t>(t)];
        for (Eigen::Index z = t + 1; z < rows; ++z)
            combo[static_cast<std::size_t>(z)] = combo[static_cast<std::size_t>(z - 1)] + 1;
    }
    return best;
}

}  // namespace pgw
