#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgw/types.hpp"

// Exact solver for the balanced transportation problem, plus the dummy-point
// reduction that turns a partial (dominated-marginal) linear problem into a
// balanced one.
//
// Pivot rule: the entering cell takes the most negative reduced cost, ties
// broken by lowest cell index; the leaving arc takes the smallest flow on the
// cycle, ties again by lowest index. A pure first-negative rule stalls for
// tens of thousands of degenerate pivots on uniform-mass instances, so it is
// kept only as a fallback that engages during long degenerate runs, where it
// provably escapes the vertex. Every solve remains a deterministic function
// of its inputs, which the two Frank-Wolfe variants rely on to produce
// identical iterates.

namespace pgw {

template <typename Scalar = double>
struct LpInstance {
    MatrixX<Scalar> cost;        // k x l, negative entries permitted
    VectorX<Scalar> row_supply;  // length k, nonnegative
    VectorX<Scalar> col_demand;  // length l, nonnegative, |supply| == |demand|
};

enum class LpStatus { optimal, iteration_limit };

template <typename Scalar = double>
struct LpSolution {
    TransportPlan<Scalar> plan;
    Scalar objective = Scalar(0);
    long iterations = 0;  // simplex pivots
    LpStatus status = LpStatus::optimal;
};

namespace detail {

// Spanning-tree basis over the bipartite node set {rows 0..k-1, cols k..k+l-1}.
template <typename Scalar>
class TransportSimplex {
public:
    TransportSimplex(const MatrixX<Scalar>& cost, const VectorX<Scalar>& supply,
                     const VectorX<Scalar>& demand)
        : cost_(cost), supply_(supply), demand_(demand), k_(supply.size()), l_(demand.size()),
          nodes_(k_ + l_) {
        // Entering scans walk whole rows; keep them contiguous.
        flow_ = MatrixX<Scalar>::Zero(k_, l_);
        basic_.assign(static_cast<std::size_t>(k_ * l_), 0);
        adj_.assign(static_cast<std::size_t>(nodes_), {});
        u_.resize(k_);
        v_.resize(l_);
        parent_.assign(static_cast<std::size_t>(nodes_), -1);
        parent_cell_.assign(static_cast<std::size_t>(nodes_), -1);
        depth_.assign(static_cast<std::size_t>(nodes_), 0);
        order_.reserve(static_cast<std::size_t>(nodes_));
        greedy_start();
    }

    LpStatus run(long max_iters, long& pivots) {
        const Scalar tol = Scalar(1e-12) * (Scalar(1) + cost_.cwiseAbs().maxCoeff());
        const long stall_limit = 2 * static_cast<long>(nodes_);
        long stalled = 0;
        pivots = 0;
        while (true) {
            refresh_tree();
            Eigen::Index ei = -1, ej = -1;
            const bool found = stalled > stall_limit ? find_entering_first(tol, ei, ej)
                                                     : find_entering_best(tol, ei, ej);
            if (!found)
                return LpStatus::optimal;
            if (pivots >= max_iters)
                return LpStatus::iteration_limit;
            const bool degenerate = pivot(ei, ej);
            stalled = degenerate ? stalled + 1 : 0;
            ++pivots;
        }
    }

    /// Re-derives basic flows from the tree by leaf elimination, so the final
    /// plan does not carry error accumulated over pivot updates.
    MatrixX<Scalar> exact_flows() {
        refresh_tree();
        std::vector<Scalar> net(static_cast<std::size_t>(nodes_));
        for (Eigen::Index i = 0; i < k_; ++i)
            net[static_cast<std::size_t>(i)] = supply_[i];
        for (Eigen::Index j = 0; j < l_; ++j)
            net[static_cast<std::size_t>(k_ + j)] = -demand_[j];
        MatrixX<Scalar> out = MatrixX<Scalar>::Zero(k_, l_);
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            const int node = *it;
            if (parent_[static_cast<std::size_t>(node)] < 0)
                continue;  // root
            const int cell = parent_cell_[static_cast<std::size_t>(node)];
            const Eigen::Index i = cell / l_;
            const Eigen::Index j = cell % l_;
            const Scalar t = net[static_cast<std::size_t>(node)];
            out(i, j) = node >= k_ ? -t : t;
            net[static_cast<std::size_t>(parent_[static_cast<std::size_t>(node)])] += t;
        }
        return out;
    }

private:
    Eigen::Index cell_of(Eigen::Index i, Eigen::Index j) const { return i * l_ + j; }

    void add_basic(Eigen::Index i, Eigen::Index j) {
        const Eigen::Index c = cell_of(i, j);
        basic_[static_cast<std::size_t>(c)] = 1;
        adj_[static_cast<std::size_t>(i)].push_back({static_cast<int>(k_ + j), static_cast<int>(c)});
        adj_[static_cast<std::size_t>(k_ + j)].push_back({static_cast<int>(i), static_cast<int>(c)});
    }

    void remove_basic(Eigen::Index i, Eigen::Index j) {
        const Eigen::Index c = cell_of(i, j);
        basic_[static_cast<std::size_t>(c)] = 0;
        auto drop = [c](std::vector<std::pair<int, int>>& list) {
            for (std::size_t t = 0; t < list.size(); ++t) {
                if (list[t].second == static_cast<int>(c)) {
                    list[t] = list.back();
                    list.pop_back();
                    return;
                }
            }
        };
        drop(adj_[static_cast<std::size_t>(i)]);
        drop(adj_[static_cast<std::size_t>(k_ + j)]);
    }

    // Cheapest-cell greedy start (ties by cell index): every allocation
    // saturates a row or a column, so the allocated cells form a forest,
    // which is then completed to a spanning tree with zero-flow cells. Far
    // fewer pivots than a staircase start, and just as deterministic.
    void greedy_start() {
        std::vector<int> cell_order(static_cast<std::size_t>(k_ * l_));
        for (std::size_t c = 0; c < cell_order.size(); ++c)
            cell_order[c] = static_cast<int>(c);
        std::sort(cell_order.begin(), cell_order.end(), [this](int a, int b) {
            const Scalar ca = cost_(a / l_, a % l_);
            const Scalar cb = cost_(b / l_, b % l_);
            return ca < cb || (ca == cb && a < b);
        });

        std::vector<int> uf(static_cast<std::size_t>(nodes_));
        for (Eigen::Index x = 0; x < nodes_; ++x)
            uf[static_cast<std::size_t>(x)] = static_cast<int>(x);
        auto root_of = [&uf](int x) {
            while (uf[static_cast<std::size_t>(x)] != x)
                x = uf[static_cast<std::size_t>(x)] =
                    uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
            return x;
        };

        VectorX<Scalar> rem_r = supply_;
        VectorX<Scalar> rem_c = demand_;
        Eigen::Index basic_count = 0;
        for (const int c : cell_order) {
            const Eigen::Index i = c / l_;
            const Eigen::Index j = c % l_;
            if (rem_r[i] <= Scalar(0) || rem_c[j] <= Scalar(0))
                continue;
            const Scalar x = std::min(rem_r[i], rem_c[j]);
            flow_(i, j) = x;
            add_basic(i, j);
            ++basic_count;
            rem_r[i] -= x;
            rem_c[j] -= x;
            uf[static_cast<std::size_t>(root_of(static_cast<int>(i)))] =
                root_of(static_cast<int>(k_ + j));
            if (basic_count == k_ + l_ - 1)
                break;
        }
        // Join remaining components with zero-flow cells, cheapest first.
        if (basic_count < k_ + l_ - 1) {
            for (const int c : cell_order) {
                const Eigen::Index i = c / l_;
                const Eigen::Index j = c % l_;
                const int ra = root_of(static_cast<int>(i));
                const int rb = root_of(static_cast<int>(k_ + j));
                if (ra == rb)
                    continue;
                uf[static_cast<std::size_t>(ra)] = rb;
                add_basic(i, j);
                if (++basic_count == k_ + l_ - 1)
                    break;
            }
        }
    }

    // Potentials, parents and a root-first ordering from the current tree.
    void refresh_tree() {
        std::fill(parent_.begin(), parent_.end(), -1);
        std::fill(parent_cell_.begin(), parent_cell_.end(), -1);
        std::fill(depth_.begin(), depth_.end(), 0);
        order_.clear();
        std::vector<char> seen(static_cast<std::size_t>(nodes_), 0);
        std::vector<int> stack;
        stack.push_back(0);
        seen[0] = 1;
        u_[0] = Scalar(0);
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            order_.push_back(node);
            for (const auto& [other, cell] : adj_[static_cast<std::size_t>(node)]) {
                if (seen[static_cast<std::size_t>(other)])
                    continue;
                seen[static_cast<std::size_t>(other)] = 1;
                parent_[static_cast<std::size_t>(other)] = node;
                parent_cell_[static_cast<std::size_t>(other)] = cell;
                depth_[static_cast<std::size_t>(other)] =
                    depth_[static_cast<std::size_t>(node)] + 1;
                const Eigen::Index ci = cell / l_;
                const Eigen::Index cj = cell % l_;
                if (other >= k_)
                    v_[cj] = cost_(ci, cj) - u_[ci];
                else
                    u_[ci] = cost_(ci, cj) - v_[cj];
                stack.push_back(other);
            }
        }
    }

    // Most negative reduced cost; ties resolve to the lowest cell index.
    // Basic cells have zero reduced cost and never compete.
    bool find_entering_best(Scalar tol, Eigen::Index& ei, Eigen::Index& ej) const {
        Scalar best = -tol;
        for (Eigen::Index i = 0; i < k_; ++i) {
            Eigen::Index j = -1;
            const Scalar row_min =
                (cost_.row(i).transpose() - v_).minCoeff(&j) - u_[i];
            if (row_min < best) {
                best = row_min;
                ei = i;
                ej = j;
            }
        }
        return best < -tol;
    }

    // Bland fallback for degenerate stalls: first nonbasic cell in row-major
    // order with negative reduced cost.
    bool find_entering_first(Scalar tol, Eigen::Index& ei, Eigen::Index& ej) const {
        for (Eigen::Index i = 0; i < k_; ++i) {
            const Scalar row_min = (cost_.row(i).transpose() - v_).minCoeff() - u_[i];
            if (!(row_min < -tol))
                continue;
            for (Eigen::Index j = 0; j < l_; ++j) {
                if (cost_(i, j) - u_[i] - v_[j] < -tol &&
                    !basic_[static_cast<std::size_t>(cell_of(i, j))]) {
                    ei = i;
                    ej = j;
                    return true;
                }
            }
        }
        return false;
    }

    bool pivot(Eigen::Index ei, Eigen::Index ej) {
        // Tree path from row node ei to col node k_+ej; with the entering arc
        // it closes the unique cycle. Signs alternate along the path starting
        // with minus; the entering arc carries plus.
        int a = static_cast<int>(ei);
        int b = static_cast<int>(k_ + ej);
        std::vector<int> cells_a, cells_b;  // parent arcs walked on each side
        while (a != b) {
            if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)]) {
                cells_a.push_back(parent_cell_[static_cast<std::size_t>(a)]);
                a = parent_[static_cast<std::size_t>(a)];
            } else {
                cells_b.push_back(parent_cell_[static_cast<std::size_t>(b)]);
                b = parent_[static_cast<std::size_t>(b)];
            }
        }
        // Walk order: from row node ei along its side to the meeting node,
        // then down the other side toward col node k_+ej.
        std::vector<int> path_cells = cells_a;
        path_cells.insert(path_cells.end(), cells_b.rbegin(), cells_b.rend());

        // Arcs at even position along the walk lose flow.
        Scalar theta = Scalar(0);
        Eigen::Index leave_cell = -1;
        bool first = true;
        for (std::size_t t = 0; t < path_cells.size(); t += 2) {
            const Eigen::Index c = path_cells[t];
            const Scalar f = flow_(c / l_, c % l_);
            if (first || f < theta || (f == theta && c < leave_cell)) {
                theta = f;
                leave_cell = c;
                first = false;
            }
        }

        flow_(ei, ej) += theta;
        for (std::size_t t = 0; t < path_cells.size(); ++t) {
            const Eigen::Index c = path_cells[t];
            flow_(c / l_, c % l_) += (t % 2 == 0) ? -theta : theta;
        }
        remove_basic(leave_cell / l_, leave_cell % l_);
        add_basic(ei, ej);
        return theta == Scalar(0);
    }

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cost_;
    VectorX<Scalar> supply_;
    VectorX<Scalar> demand_;
    Eigen::Index k_, l_, nodes_;

    MatrixX<Scalar> flow_;
    std::vector<char> basic_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    VectorX<Scalar> u_, v_;
    std::vector<int> parent_, parent_cell_;
    std::vector<int> depth_;
    std::vector<int> order_;
};

}  // namespace detail

/// Exact optimum of the balanced transportation problem at a polytope vertex.
template <typename Scalar>
LpSolution<Scalar> solve_ot(const LpInstance<Scalar>& instance, long max_iters) {
    const Eigen::Index k = instance.row_supply.size();
    const Eigen::Index l = instance.col_demand.size();
    if (instance.cost.rows() != k || instance.cost.cols() != l)
        throw std::invalid_argument("solve_ot: cost dimensions do not match marginals");
    if (k < 1 || l < 1)
        throw std::invalid_argument("solve_ot: empty instance");
    if (!instance.cost.allFinite())
        throw std::invalid_argument("solve_ot: non-finite cost");
    if (instance.row_supply.minCoeff() < Scalar(0) || instance.col_demand.minCoeff() < Scalar(0))
        throw std::invalid_argument("solve_ot: negative supply or demand");
    const Scalar sr = instance.row_supply.sum();
    const Scalar sc = instance.col_demand.sum();
    if (std::abs(sr - sc) > Scalar(1e-9) * std::max({Scalar(1), std::abs(sr), std::abs(sc)}))
        throw std::invalid_argument("solve_ot: unbalanced instance");

    detail::TransportSimplex<Scalar> simplex(instance.cost, instance.row_supply,
                                             instance.col_demand);
    long pivots = 0;
    const LpStatus status = simplex.run(max_iters, pivots);
    TransportPlan<Scalar> plan(simplex.exact_flows());
    const Scalar objective = instance.cost.cwiseProduct(plan.matrix()).sum();
    return LpSolution<Scalar>{std::move(plan), objective, pivots, status};
}

/// Pads a linear cost with one zero-cost dummy row and column; supplies become
/// [p; |q|] and demands [q; |p|], so the padded problem is balanced.
template <typename DerivedG, typename DerivedP, typename DerivedQ>
LpInstance<typename DerivedG::Scalar> pad_for_pot(const Eigen::MatrixBase<DerivedG>& gradient,
                                                  const Eigen::MatrixBase<DerivedP>& p,
                                                  const Eigen::MatrixBase<DerivedQ>& q) {
    using Scalar = typename DerivedG::Scalar;
    const Eigen::Index n = p.size();
    const Eigen::Index m = q.size();
    if (gradient.rows() != n || gradient.cols() != m)
        throw std::invalid_argument("pad_for_pot: dimension mismatch");
    LpInstance<Scalar> instance;
    instance.cost = MatrixX<Scalar>::Zero(n + 1, m + 1);
    instance.cost.topLeftCorner(n, m) = gradient;
    instance.row_supply.resize(n + 1);
    instance.row_supply.head(n) = p;
    instance.row_supply[n] = q.sum();
    instance.col_demand.resize(m + 1);
    instance.col_demand.head(m) = q;
    instance.col_demand[m] = p.sum();
    return instance;
}

template <typename Scalar = double>
struct PotOptions {
    bool reduction = true;  // drop rows/columns with no negative entry first
    long max_iters = 0;     // simplex pivot cap; 0 means 300 * max(n, m)
};

template <typename Scalar = double>
struct PotResult {
    TransportPlan<Scalar> plan;
    LpStatus status = LpStatus::optimal;
    long iterations = 0;
};

/// Minimizes <G, gamma> over the plans dominated by (p, q), by solving the
/// padded balanced problem and truncating the dummy row and column.
template <typename DerivedG, typename DerivedP, typename DerivedQ>
PotResult<typename DerivedG::Scalar> solve_pot_linear(
    const Eigen::MatrixBase<DerivedG>& gradient, const Eigen::MatrixBase<DerivedP>& p,
    const Eigen::MatrixBase<DerivedQ>& q,
    const PotOptions<typename DerivedG::Scalar>& options = {}) {
    using Scalar = typename DerivedG::Scalar;
    const Eigen::Index n = p.size();
    const Eigen::Index m = q.size();
    if (gradient.rows() != n || gradient.cols() != m)
        throw std::invalid_argument("solve_pot_linear: dimension mismatch");
    if (!gradient.allFinite())
        throw std::invalid_argument("solve_pot_linear: non-finite gradient");

    std::vector<Eigen::Index> rows, cols;
    if (options.reduction) {
        for (Eigen::Index i = 0; i < n; ++i)
            if ((gradient.row(i).array() < Scalar(0)).any())
                rows.push_back(i);
        for (Eigen::Index j = 0; j < m; ++j)
            if ((gradient.col(j).array() < Scalar(0)).any())
                cols.push_back(j);
        // Mass on a row or column with no negative entry never helps the
        // linear objective, so an optimal plan exists with those zeroed.
        if (rows.empty() || cols.empty())
            return PotResult<Scalar>{TransportPlan<Scalar>(MatrixX<Scalar>::Zero(n, m)),
                                     LpStatus::optimal, 0};
    } else {
        rows.resize(static_cast<std::size_t>(n));
        cols.resize(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < n; ++i)
            rows[static_cast<std::size_t>(i)] = i;
        for (Eigen::Index j = 0; j < m; ++j)
            cols[static_cast<std::size_t>(j)] = j;
    }

    const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
    MatrixX<Scalar> sub(nr, nc);
    VectorX<Scalar> ps(nr), qs(nc);
    for (Eigen::Index a = 0; a < nr; ++a) {
        ps[a] = p[rows[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < nc; ++b)
            sub(a, b) = gradient(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
    }
    for (Eigen::Index b = 0; b < nc; ++b)
        qs[b] = q[cols[static_cast<std::size_t>(b)]];

    const long cap = options.max_iters > 0 ? options.max_iters : 300 * static_cast<long>(std::max(n, m));
    const LpSolution<Scalar> sol = solve_ot(pad_for_pot(sub, ps, qs), cap);

    MatrixX<Scalar> full = MatrixX<Scalar>::Zero(n, m);
    for (Eigen::Index a = 0; a < nr; ++a)
        for (Eigen::Index b = 0; b < nc; ++b)
            full(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]) =
                sol.plan.matrix()(a, b);
    return PotResult<Scalar>{TransportPlan<Scalar>(std::move(full)), sol.status, sol.iterations};
}

}  // namespace pgw
