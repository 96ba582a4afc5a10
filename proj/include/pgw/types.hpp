#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

// Core types for discrete metric-measure spaces and partial transport plans.
//
// Conventions used throughout the library:
//   - a space of n points is described by a nonnegative weight vector p (length n)
//     and a symmetric, zero-diagonal ground-cost matrix C (n x n) whose entries are
//     the pairwise distances raised to a configurable exponent (default 2);
//   - a partial plan between spaces of sizes n and m is a nonnegative n x m matrix
//     whose row sums are dominated by p and column sums by q.

namespace pgw {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

inline std::string index_str(Eigen::Index i, Eigen::Index j) {
    std::ostringstream os;
    os << "(" << i << ", " << j << ")";
    return os.str();
}

}  // namespace detail

/// A discrete metric-measure space: weights plus pairwise ground costs.
/// Immutable after construction; cheap to copy, safe to share across threads.
template <typename Scalar = double>
class MmSpace {
public:
    MmSpace(VectorX<Scalar> weights, MatrixX<Scalar> cost)
        : MmSpace(std::move(weights), std::move(cost), MatrixX<Scalar>()) {}

    MmSpace(VectorX<Scalar> weights, MatrixX<Scalar> cost, MatrixX<Scalar> points)
        : weights_(std::move(weights)), cost_(std::move(cost)), points_(std::move(points)) {
        validate();
        total_mass_ = weights_.sum();
    }

    Eigen::Index size() const { return weights_.size(); }
    const VectorX<Scalar>& weights() const { return weights_; }
    const MatrixX<Scalar>& cost() const { return cost_; }
    Scalar total_mass() const { return total_mass_; }

    bool has_points() const { return points_.size() > 0; }
    const MatrixX<Scalar>& points() const { return points_; }

private:
    void validate() const {
        const Eigen::Index n = weights_.size();
        if (n < 1)
            throw std::invalid_argument("MmSpace: empty point set");
        if (cost_.rows() != n || cost_.cols() != n)
            throw std::invalid_argument("MmSpace: cost matrix size does not match weights");
        bool any_positive = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Scalar w = weights_[i];
            if (!std::isfinite(static_cast<double>(w)) || w < Scalar(0))
                throw std::invalid_argument("MmSpace: negative or non-finite weight at index " +
                                            std::to_string(i));
            any_positive = any_positive || w > Scalar(0);
        }
        if (!any_positive)
            throw std::invalid_argument("MmSpace: all weights are zero");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (cost_(i, i) != Scalar(0))
                throw std::invalid_argument("MmSpace: nonzero cost diagonal at index " +
                                            std::to_string(i));
            for (Eigen::Index j = 0; j < n; ++j) {
                const Scalar c = cost_(i, j);
                if (!std::isfinite(static_cast<double>(c)) || c < Scalar(0))
                    throw std::invalid_argument("MmSpace: negative or non-finite cost at " +
                                                detail::index_str(i, j));
                if (std::abs(c - cost_(j, i)) > Scalar(1e-12))
                    throw std::invalid_argument("MmSpace: cost matrix not symmetric at " +
                                                detail::index_str(i, j));
            }
        }
        if (points_.size() > 0 && points_.rows() != n)
            throw std::invalid_argument("MmSpace: point array rows do not match weights");
    }

    VectorX<Scalar> weights_;
    MatrixX<Scalar> cost_;
    MatrixX<Scalar> points_;  // n x d coordinates, kept for experiment I/O; may be empty
    Scalar total_mass_ = Scalar(0);
};

/// Builds a space from coordinates: cost(i,i') = ||x_i - x_i'||^exponent.
template <typename Scalar = double>
MmSpace<Scalar> build_mm_space(const MatrixX<Scalar>& points, const VectorX<Scalar>& weights,
                               Scalar exponent = Scalar(2)) {
    const Eigen::Index n = points.rows();
    if (n < 1)
        throw std::invalid_argument("build_mm_space: empty point set");
    if (weights.size() != n)
        throw std::invalid_argument("build_mm_space: weight count does not match point count");
    if (!(exponent >= Scalar(1)))
        throw std::invalid_argument("build_mm_space: exponent must be >= 1");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index d = 0; d < points.cols(); ++d)
            if (!std::isfinite(static_cast<double>(points(i, d))))
                throw std::invalid_argument("build_mm_space: non-finite coordinate at " +
                                            detail::index_str(i, d));

    MatrixX<Scalar> cost(n, n);
    cost.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Scalar dist = (points.row(i) - points.row(j)).norm();
            const Scalar c = exponent == Scalar(2) ? dist * dist
                                                   : Scalar(std::pow(static_cast<double>(dist),
                                                                     static_cast<double>(exponent)));
            cost(i, j) = c;
            cost(j, i) = c;
        }
    }
    return MmSpace<Scalar>(weights, std::move(cost), points);
}

/// Uniform weights 1/n.
template <typename Scalar = double>
VectorX<Scalar> uniform_weights(Eigen::Index n) {
    if (n < 1)
        throw std::invalid_argument("uniform_weights: n must be positive");
    return VectorX<Scalar>::Constant(n, Scalar(1) / Scalar(n));
}

/// A nonnegative coupling with cached marginals. Entries in [-1e-12, 0) are
/// clamped to zero at construction; anything more negative is rejected.
template <typename Scalar = double>
class TransportPlan {
public:
    TransportPlan() = default;  // empty 0x0 plan

    explicit TransportPlan(MatrixX<Scalar> matrix) : matrix_(std::move(matrix)) {
        for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
            for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
                Scalar& v = matrix_(i, j);
                if (v < Scalar(0)) {
                    if (v < Scalar(-1e-12))
                        throw std::invalid_argument("TransportPlan: negative entry at " +
                                                    detail::index_str(i, j));
                    v = Scalar(0);
                }
            }
        }
        row_marginal_ = matrix_.rowwise().sum();
        col_marginal_ = matrix_.colwise().sum().transpose();
        total_mass_ = matrix_.sum();
    }

    Eigen::Index rows() const { return matrix_.rows(); }
    Eigen::Index cols() const { return matrix_.cols(); }
    const MatrixX<Scalar>& matrix() const { return matrix_; }
    const VectorX<Scalar>& row_marginal() const { return row_marginal_; }
    const VectorX<Scalar>& col_marginal() const { return col_marginal_; }
    Scalar total_mass() const { return total_mass_; }

private:
    MatrixX<Scalar> matrix_;
    VectorX<Scalar> row_marginal_;
    VectorX<Scalar> col_marginal_;
    Scalar total_mass_ = Scalar(0);
};

template <typename Scalar>
struct PlanFeasibility {
    bool feasible = false;
    Scalar max_violation = Scalar(0);  // largest marginal excess (or negative entry magnitude)
};

/// Checks membership of a plan in the dominated-marginal polytope for (p, q).
template <typename Scalar, typename DerivedP, typename DerivedQ>
PlanFeasibility<Scalar> validate_plan(const TransportPlan<Scalar>& plan,
                                      const Eigen::MatrixBase<DerivedP>& p,
                                      const Eigen::MatrixBase<DerivedQ>& q,
                                      Scalar tol = Scalar(1e-9)) {
    if (plan.rows() != p.size() || plan.cols() != q.size())
        throw std::invalid_argument("validate_plan: dimension mismatch");
    Scalar violation = Scalar(0);
    violation = std::max(violation, (plan.row_marginal() - p).maxCoeff());
    violation = std::max(violation, (plan.col_marginal() - q).maxCoeff());
    violation = std::max(violation, -plan.matrix().minCoeff());
    return {violation <= tol, std::max(violation, Scalar(0))};
}

enum class LossKind {
    squared_difference,  // L(r1, r2) = (r1 - r2)^2; admits the factored decomposition
    custom,              // caller supplies a decomposition (or uses the dense oracle)
};

/// A partial Gromov-Wasserstein instance: two spaces and the mass penalty weight.
template <typename Scalar = double>
struct PgwProblem {
    PgwProblem(MmSpace<Scalar> source_in, MmSpace<Scalar> target_in, Scalar lambda_in,
               LossKind loss_in = LossKind::squared_difference)
        : source(std::move(source_in)), target(std::move(target_in)), lambda(lambda_in),
          loss(loss_in) {
        if (!(lambda > Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
            throw std::invalid_argument("PgwProblem: lambda must be positive");
    }

    MmSpace<Scalar> source;
    MmSpace<Scalar> target;
    Scalar lambda;
    LossKind loss;

    /// The constant term lambda * (|p|^2 + |q|^2) of the objective.
    Scalar mass_constant() const {
        const Scalar sp = source.total_mass();
        const Scalar sq = target.total_mass();
        return lambda * (sp * sp + sq * sq);
    }
};

}  // namespace pgw
