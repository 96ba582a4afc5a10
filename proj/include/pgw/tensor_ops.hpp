#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pgw/types.hpp"

// The quartic transport objective and its gradient.
//
// For a loss of the form L(r1, r2) = f1(r1) + f2(r2) - h1(r1) h2(r2) the
// contraction of the 4-index cost tensor M[i,j,i',j'] = L(Cx[i,i'], Cy[j,j'])
// against a plan reduces to three matrix products; nothing here ever
// materializes the 4-tensor outside the size-capped test oracle below.

namespace pgw {

/// The (f1, f2, h1, h2) factorization applied entrywise to the two cost matrices.
template <typename Scalar = double>
struct CostDecomposition {
    MatrixX<Scalar> f1_cx;  // n x n
    MatrixX<Scalar> f2_cy;  // m x m
    MatrixX<Scalar> h1_cx;  // n x n
    MatrixX<Scalar> h2_cy;  // m x m

    /// Squared difference: f1(r) = r^2, f2(r) = r^2, h1(r) = r, h2(r) = 2r.
    static CostDecomposition squared(const MatrixX<Scalar>& cx, const MatrixX<Scalar>& cy) {
        CostDecomposition d;
        d.f1_cx = cx.array().square();
        d.f2_cy = cy.array().square();
        d.h1_cx = cx;
        d.h2_cy = Scalar(2) * cy;
        return d;
    }
};

/// Decomposition for a problem's loss selector; custom losses must be supplied by the caller.
template <typename Scalar>
CostDecomposition<Scalar> make_decomposition(const PgwProblem<Scalar>& problem) {
    if (problem.loss != LossKind::squared_difference)
        throw std::invalid_argument("make_decomposition: custom loss requires a user decomposition");
    return CostDecomposition<Scalar>::squared(problem.source.cost(), problem.target.cost());
}

/// M o gamma in factored form: u(Cx, Cy, gamma) - h1(Cx) gamma h2(Cy)^T where
/// u = f1(Cx) gamma1 1_m^T + 1_n gamma2^T f2(Cy). Cost O(n^2 m + n m^2).
template <typename Scalar, typename Derived>
MatrixX<Scalar> tensor_product_factored(const CostDecomposition<Scalar>& decomp,
                                        const Eigen::MatrixBase<Derived>& plan) {
    const Eigen::Index n = decomp.f1_cx.rows();
    const Eigen::Index m = decomp.f2_cy.rows();
    if (plan.rows() != n || plan.cols() != m)
        throw std::invalid_argument("tensor_product_factored: plan dimensions do not match");
    const VectorX<Scalar> row_marg = plan.rowwise().sum();
    const VectorX<Scalar> col_marg = plan.colwise().sum().transpose();
    const VectorX<Scalar> u1 = decomp.f1_cx * row_marg;
    const VectorX<Scalar> u2 = decomp.f2_cy * col_marg;
    MatrixX<Scalar> out = u1.replicate(1, m);
    out.noalias() += u2.transpose().replicate(n, 1);
    out.noalias() -= decomp.h1_cx * (plan * decomp.h2_cy.transpose());
    return out;
}

template <typename Scalar>
MatrixX<Scalar> tensor_product_factored(const CostDecomposition<Scalar>& decomp,
                                        const TransportPlan<Scalar>& plan) {
    return tensor_product_factored(decomp, plan.matrix());
}

/// Test-only dense 4-tensor M[i,j,i',j'] = L(Cx[i,i'], Cy[j,j']); hard size cap n*m <= 1e4.
template <typename Scalar = double>
class DenseTensor {
public:
    static constexpr Eigen::Index kMaxCells = 10000;  // cap on n*m

    template <typename Loss>
    DenseTensor(const MatrixX<Scalar>& cx, const MatrixX<Scalar>& cy, Loss loss)
        : n_(cx.rows()), m_(cy.rows()) {
        if (n_ * m_ > kMaxCells)
            throw std::invalid_argument("DenseTensor: size cap n*m <= 10^4 exceeded");
        data_.assign(static_cast<std::size_t>(n_ * m_ * n_ * m_), Scalar(0));
        for (Eigen::Index i = 0; i < n_; ++i)
            for (Eigen::Index j = 0; j < m_; ++j)
                for (Eigen::Index k = 0; k < n_; ++k)
                    for (Eigen::Index l = 0; l < m_; ++l)
                        at(i, j, k, l) = loss(cx(i, k), cy(j, l));
    }

    DenseTensor(const MatrixX<Scalar>& cx, const MatrixX<Scalar>& cy)
        : DenseTensor(cx, cy, [](Scalar a, Scalar b) {
              const Scalar d = a - b;
              return d * d;
          }) {}

    /// Uninitialized tensor for tests that fill entries directly.
    DenseTensor(Eigen::Index n, Eigen::Index m) : n_(n), m_(m) {
        if (n_ < 1 || m_ < 1 || n_ * m_ > kMaxCells)
            throw std::invalid_argument("DenseTensor: invalid dimensions");
        data_.assign(static_cast<std::size_t>(n_ * m_ * n_ * m_), Scalar(0));
    }

    Eigen::Index n() const { return n_; }
    Eigen::Index m() const { return m_; }

    Scalar& at(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) {
        return data_[idx(i, j, k, l)];
    }
    Scalar at(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
        return data_[idx(i, j, k, l)];
    }

private:
    std::size_t idx(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
        return static_cast<std::size_t>(((i * m_ + j) * n_ + k) * m_ + l);
    }

    Eigen::Index n_, m_;
    std::vector<Scalar> data_;
};

/// Direct O(n^2 m^2) contraction; the reference the factored path is tested against.
template <typename Scalar, typename Derived>
MatrixX<Scalar> tensor_product_naive(const DenseTensor<Scalar>& tensor,
                                     const Eigen::MatrixBase<Derived>& plan) {
    if (plan.rows() != tensor.n() || plan.cols() != tensor.m())
        throw std::invalid_argument("tensor_product_naive: plan dimensions do not match");
    MatrixX<Scalar> out(tensor.n(), tensor.m());
    for (Eigen::Index i = 0; i < tensor.n(); ++i) {
        for (Eigen::Index j = 0; j < tensor.m(); ++j) {
            Scalar acc = Scalar(0);
            for (Eigen::Index k = 0; k < tensor.n(); ++k)
                for (Eigen::Index l = 0; l < tensor.m(); ++l)
                    acc += tensor.at(i, j, k, l) * plan(k, l);
            out(i, j) = acc;
        }
    }
    return out;
}

template <typename Scalar>
MatrixX<Scalar> tensor_product_naive(const DenseTensor<Scalar>& tensor,
                                     const TransportPlan<Scalar>& plan) {
    return tensor_product_naive(tensor, plan.matrix());
}

/// Gradient of the shifted objective: 2 (M o gamma - 2 lambda |gamma| 1).
template <typename Scalar, typename Derived>
MatrixX<Scalar> grad_tilde(const CostDecomposition<Scalar>& decomp,
                           const Eigen::MatrixBase<Derived>& plan, Scalar lambda) {
    if (!(lambda > Scalar(0)))
        throw std::invalid_argument("grad_tilde: lambda must be positive");
    const Scalar mass = plan.sum();
    MatrixX<Scalar> g = tensor_product_factored(decomp, plan);
    g.array() -= Scalar(2) * lambda * mass;
    g *= Scalar(2);
    return g;
}

template <typename Scalar>
MatrixX<Scalar> grad_tilde(const CostDecomposition<Scalar>& decomp,
                           const TransportPlan<Scalar>& plan, Scalar lambda) {
    return grad_tilde(decomp, plan.matrix(), lambda);
}

/// <M o gamma, gamma>_F - 2 lambda |gamma|^2.
template <typename Scalar, typename Derived>
Scalar objective_tilde(const CostDecomposition<Scalar>& decomp,
                       const Eigen::MatrixBase<Derived>& plan, Scalar lambda) {
    const MatrixX<Scalar> mg = tensor_product_factored(decomp, plan);
    const Scalar mass = plan.sum();
    return mg.cwiseProduct(plan.derived()).sum() - Scalar(2) * lambda * mass * mass;
}

template <typename Scalar>
Scalar objective_tilde(const CostDecomposition<Scalar>& decomp, const TransportPlan<Scalar>& plan,
                       Scalar lambda) {
    return objective_tilde(decomp, plan.matrix(), lambda);
}

/// Full objective value including the constant lambda (|p|^2 + |q|^2) term.
/// Requires a feasible plan; the violation magnitude is reported otherwise.
template <typename Scalar>
Scalar pgw_value(const PgwProblem<Scalar>& problem, const CostDecomposition<Scalar>& decomp,
                 const TransportPlan<Scalar>& plan, Scalar feasibility_tol = Scalar(1e-9)) {
    const auto verdict =
        validate_plan(plan, problem.source.weights(), problem.target.weights(), feasibility_tol);
    if (!verdict.feasible)
        throw std::invalid_argument("pgw_value: infeasible plan, marginal violation " +
                                    std::to_string(static_cast<double>(verdict.max_violation)));
    return objective_tilde(decomp, plan, problem.lambda) + problem.mass_constant();
}

template <typename Scalar>
Scalar pgw_value(const PgwProblem<Scalar>& problem, const TransportPlan<Scalar>& plan,
                 Scalar feasibility_tol = Scalar(1e-9)) {
    return pgw_value(problem, make_decomposition(problem), plan, feasibility_tol);
}

}  // namespace pgw
