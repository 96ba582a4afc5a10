#pragma once

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgw/tensor_ops.hpp"
#include "pgw/transport_lp.hpp"
#include "pgw/types.hpp"

// Frank-Wolfe engine for the partial quadratic transport objective.
//
// Variant 1 iterates on the n x m plan directly; its direction-finding step is
// the dominated-marginal linear problem, solved through the dummy-point
// padding. Variant 2 carries the padded (n+1) x (m+1) plan whose marginals
// are the augmented vectors [p; |q|] and [q; |p|]; all tensor work happens on
// its top-left block, which stays numerically identical to variant 1's
// iterate because both variants query the same deterministic LP oracle.

namespace pgw {

enum class SolverVariant { v1, v2 };
enum class LineSearchMode { exact, fixed_unit };

template <typename Scalar = double>
struct FwConfig {
    SolverVariant variant = SolverVariant::v1;
    long max_iters = 1000;
    Scalar tol = Scalar(1e-5);  // threshold for both the objective change and the FW gap
    LineSearchMode line_search = LineSearchMode::exact;
    bool reduction = true;  // row/column reduction inside the direction solve
    long lp_iter_cap = 0;   // simplex pivot cap; 0 means 300 * max(n, m)
    int starts = 1;         // extra random restarts; best final value wins
    std::uint64_t seed = 0; // seeds the restart sampler

    void validate() const {
        if (!(tol > Scalar(0)))
            throw std::invalid_argument("FwConfig: tol must be positive");
        if (max_iters < 1)
            throw std::invalid_argument("FwConfig: max_iters must be >= 1");
        if (starts < 1)
            throw std::invalid_argument("FwConfig: starts must be >= 1");
    }
};

enum class Termination { converged, iteration_limit };
enum class StopReason { none, objective_decrease, fw_gap, stationary };

inline const char* to_string(Termination t) {
    return t == Termination::converged ? "converged" : "iteration-limit";
}
inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::objective_decrease: return "objective-decrease";
        case StopReason::fw_gap: return "fw-gap";
        case StopReason::stationary: return "stationary";
        default: return "none";
    }
}

template <typename Scalar = double>
struct SolveReport {
    TransportPlan<Scalar> plan;
    Scalar pgw_value = Scalar(0);  // shifted objective plus lambda (|p|^2 + |q|^2)
    std::vector<Scalar> objective_trace;  // L at every iterate, initial one included
    std::vector<Scalar> gap_trace;        // FW gap at every gradient step
    std::vector<Scalar> alpha_trace;      // accepted step sizes
    Scalar transported_mass = Scalar(0);
    Termination termination = Termination::converged;
    StopReason stop_reason = StopReason::none;
    long iterations = 0;  // number of plan updates, == objective_trace.size() - 1
    Scalar max_marginal_violation = Scalar(0);  // over all iterates, against (p, q)
    long lp_pivots = 0;
    int lp_cap_hits = 0;
    double wall_seconds = 0;
};

/// The product coupling p q^T / max(|p|, |q|); always dominated by (p, q).
template <typename DerivedP, typename DerivedQ>
TransportPlan<typename DerivedP::Scalar> init_plan(const Eigen::MatrixBase<DerivedP>& p,
                                                   const Eigen::MatrixBase<DerivedQ>& q) {
    using Scalar = typename DerivedP::Scalar;
    const Scalar denom = std::max(p.sum(), q.sum());
    if (!(denom > Scalar(0))) {
        std::cerr << "pgw: init_plan called with two zero-mass marginals, returning the zero plan\n";
        return TransportPlan<Scalar>(MatrixX<Scalar>::Zero(p.size(), q.size()));
    }
    return TransportPlan<Scalar>(MatrixX<Scalar>((p * q.transpose()) / denom));
}

/// Closed-form minimizer of a alpha^2 + b alpha over [0, 1]. The degenerate
/// all-zero model maps to alpha = 0 (stationary step).
template <typename Scalar>
Scalar optimal_alpha(Scalar a, Scalar b) {
    if (a == Scalar(0) && b == Scalar(0))
        return Scalar(0);
    if (a > Scalar(0))
        return std::clamp(-b / (Scalar(2) * a), Scalar(0), Scalar(1));
    return a + b <= Scalar(0) ? Scalar(1) : Scalar(0);
}

namespace detail {

// b = 2 (<M o gamma, delta> - 2 lambda |delta| |gamma|); reuses the gradient's
// tensor product. |.| is the signed entry sum here since delta may be negative.
template <typename Scalar>
Scalar line_search_b(const MatrixX<Scalar>& m_gamma, const MatrixX<Scalar>& delta,
                     Scalar delta_mass, Scalar gamma_mass, Scalar lambda) {
    return Scalar(2) *
           (m_gamma.cwiseProduct(delta).sum() - Scalar(2) * lambda * delta_mass * gamma_mass);
}

// a = <M o delta, delta> - 2 lambda |delta|^2.
template <typename Scalar>
Scalar line_search_a(const CostDecomposition<Scalar>& decomp, const MatrixX<Scalar>& delta,
                     Scalar delta_mass, Scalar lambda) {
    const MatrixX<Scalar> m_delta = tensor_product_factored(decomp, delta);
    return m_delta.cwiseProduct(delta).sum() - Scalar(2) * lambda * delta_mass * delta_mass;
}

// Augmented plan of the GW-variant problem: dummy column p - gamma1, dummy row
// q - gamma2, corner |gamma|; its marginals are exactly [p; |q|] and [q; |p|].
template <typename Scalar>
MatrixX<Scalar> augment_plan(const MatrixX<Scalar>& gamma, const VectorX<Scalar>& p,
                             const VectorX<Scalar>& q) {
    const Eigen::Index n = p.size();
    const Eigen::Index m = q.size();
    MatrixX<Scalar> hat(n + 1, m + 1);
    hat.topLeftCorner(n, m) = gamma;
    hat.col(m).head(n) = p - gamma.rowwise().sum();
    hat.row(n).head(m) = (q - gamma.colwise().sum().transpose()).transpose();
    hat(n, m) = gamma.sum();
    return hat;
}

template <typename Scalar>
SolveReport<Scalar> fw_run(const PgwProblem<Scalar>& problem,
                           const CostDecomposition<Scalar>& decomp, const FwConfig<Scalar>& config,
                           const MatrixX<Scalar>& gamma0, SolverVariant variant) {
    const auto t0 = std::chrono::steady_clock::now();
    const VectorX<Scalar>& p = problem.source.weights();
    const VectorX<Scalar>& q = problem.target.weights();
    const Eigen::Index n = p.size();
    const Eigen::Index m = q.size();
    const Scalar lambda = problem.lambda;

    const bool augmented = variant == SolverVariant::v2;
    MatrixX<Scalar> gamma = gamma0;
    MatrixX<Scalar> gamma_hat;
    if (augmented)
        gamma_hat = augment_plan(gamma0, p, q);

    PotOptions<Scalar> pot_options;
    pot_options.reduction = config.reduction;
    pot_options.max_iters = config.lp_iter_cap;

    SolveReport<Scalar> report;
    report.termination = Termination::iteration_limit;
    Scalar prev_objective = Scalar(0);

    for (long k = 0;; ++k) {
        if (augmented)
            gamma = gamma_hat.topLeftCorner(n, m);

        const MatrixX<Scalar> m_gamma = tensor_product_factored(decomp, gamma);
        const Scalar mass = gamma.sum();
        const Scalar objective =
            m_gamma.cwiseProduct(gamma).sum() - Scalar(2) * lambda * mass * mass;
        report.objective_trace.push_back(objective);

        Scalar violation = (gamma.rowwise().sum() - p).maxCoeff();
        violation = std::max(violation, (gamma.colwise().sum().transpose() - q).maxCoeff());
        violation = std::max(violation, -gamma.minCoeff());
        report.max_marginal_violation = std::max(report.max_marginal_violation, violation);

        if (k > 0 && std::abs(prev_objective - objective) <=
                         config.tol * std::max(Scalar(1), std::abs(prev_objective))) {
            report.termination = Termination::converged;
            report.stop_reason = StopReason::objective_decrease;
            break;
        }
        prev_objective = objective;
        if (k == config.max_iters) {
            report.termination = Termination::iteration_limit;
            break;
        }

        MatrixX<Scalar> grad = m_gamma;
        grad.array() -= Scalar(2) * lambda * mass;
        grad *= Scalar(2);
        PotResult<Scalar> direction = solve_pot_linear(grad, p, q, pot_options);
        report.lp_pivots += direction.iterations;
        if (direction.status == LpStatus::iteration_limit)
            ++report.lp_cap_hits;

        const MatrixX<Scalar> delta = direction.plan.matrix() - gamma;
        const Scalar delta_mass = delta.sum();
        const Scalar b = line_search_b(m_gamma, delta, delta_mass, mass, lambda);
        const Scalar gap = -b;  // <grad, gamma - gamma'> with the factor 2 included
        report.gap_trace.push_back(gap);

        Scalar alpha = Scalar(1);
        if (config.line_search == LineSearchMode::exact) {
            const Scalar a = line_search_a(decomp, delta, delta_mass, lambda);
            alpha = optimal_alpha(a, b);
        }
        report.alpha_trace.push_back(alpha);
        if (alpha > Scalar(0)) {
            // Update first: a zero-gap iterate can still descend along a tied
            // direction through the quadratic term, and the small-gap exit
            // should return the improved plan.
            if (augmented)
                gamma_hat += alpha * (augment_plan(direction.plan.matrix(), p, q) - gamma_hat);
            else
                gamma += alpha * delta;
        }
        if (gap <= config.tol || alpha == Scalar(0)) {
            report.termination = Termination::converged;
            report.stop_reason = gap <= config.tol ? StopReason::fw_gap : StopReason::stationary;
            if (alpha > Scalar(0)) {
                if (augmented)
                    gamma = gamma_hat.topLeftCorner(n, m);
                const MatrixX<Scalar> m_final = tensor_product_factored(decomp, gamma);
                const Scalar final_mass = gamma.sum();
                report.objective_trace.push_back(m_final.cwiseProduct(gamma).sum() -
                                                 Scalar(2) * lambda * final_mass * final_mass);
            }
            break;
        }
    }

    if (augmented)
        gamma = gamma_hat.topLeftCorner(n, m);
    Scalar final_violation = (gamma.rowwise().sum() - p).maxCoeff();
    final_violation =
        std::max(final_violation, (gamma.colwise().sum().transpose() - q).maxCoeff());
    final_violation = std::max(final_violation, -gamma.minCoeff());
    report.max_marginal_violation = std::max(report.max_marginal_violation, final_violation);
    report.iterations = static_cast<long>(report.objective_trace.size()) - 1;
    report.plan = TransportPlan<Scalar>(std::move(gamma));
    report.transported_mass = report.plan.total_mass();
    report.pgw_value = report.objective_trace.back() + problem.mass_constant();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// Random dominated plan for restarts: uniform entries scaled onto the polytope.
template <typename Scalar>
MatrixX<Scalar> random_feasible_plan(const VectorX<Scalar>& p, const VectorX<Scalar>& q,
                                     std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    MatrixX<Scalar> gamma(p.size(), q.size());
    for (Eigen::Index i = 0; i < gamma.rows(); ++i)
        for (Eigen::Index j = 0; j < gamma.cols(); ++j)
            gamma(i, j) = Scalar(unif(rng));
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
        const Scalar r = gamma.row(i).sum();
        if (r > p[i])
            gamma.row(i) *= r > Scalar(0) ? p[i] / r : Scalar(0);
    }
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
        const Scalar c = gamma.col(j).sum();
        if (c > q[j])
            gamma.col(j) *= c > Scalar(0) ? q[j] / c : Scalar(0);
    }
    return gamma;
}

template <typename Scalar>
SolveReport<Scalar> fw_solve(const PgwProblem<Scalar>& problem,
                             const CostDecomposition<Scalar>& decomp,
                             const FwConfig<Scalar>& config, const TransportPlan<Scalar>* init,
                             SolverVariant variant) {
    config.validate();
    const VectorX<Scalar>& p = problem.source.weights();
    const VectorX<Scalar>& q = problem.target.weights();

    MatrixX<Scalar> gamma0;
    if (init != nullptr) {
        const auto verdict = validate_plan(*init, p, q, Scalar(1e-9));
        if (!verdict.feasible)
            throw std::invalid_argument("fw_solve: initial plan infeasible, violation " +
                                        std::to_string(static_cast<double>(verdict.max_violation)));
        gamma0 = init->matrix();
    } else {
        gamma0 = init_plan(p, q).matrix();
    }

    SolveReport<Scalar> best = fw_run(problem, decomp, config, gamma0, variant);
    if (config.starts > 1) {
        std::mt19937_64 rng(config.seed);
        for (int s = 1; s < config.starts; ++s) {
            SolveReport<Scalar> candidate =
                fw_run(problem, decomp, config, random_feasible_plan(p, q, rng), variant);
            if (candidate.pgw_value < best.pgw_value)
                best = std::move(candidate);
        }
    }
    return best;
}

}  // namespace detail

/// Frank-Wolfe on the n x m plan; directions from the padded linear solve.
template <typename Scalar>
SolveReport<Scalar> solve_v1(const PgwProblem<Scalar>& problem, const FwConfig<Scalar>& config = {},
                             const TransportPlan<Scalar>* init = nullptr) {
    return detail::fw_solve(problem, make_decomposition(problem), config, init, SolverVariant::v1);
}

/// Frank-Wolfe on the augmented plan of the GW-variant problem; the returned
/// plan is the truncation of the final augmented iterate.
template <typename Scalar>
SolveReport<Scalar> solve_v2(const PgwProblem<Scalar>& problem, const FwConfig<Scalar>& config = {},
                             const TransportPlan<Scalar>* init = nullptr) {
    return detail::fw_solve(problem, make_decomposition(problem), config, init, SolverVariant::v2);
}

/// Dispatches on config.variant.
template <typename Scalar>
SolveReport<Scalar> solve(const PgwProblem<Scalar>& problem, const FwConfig<Scalar>& config = {},
                          const TransportPlan<Scalar>* init = nullptr) {
    return detail::fw_solve(problem, make_decomposition(problem), config, init, config.variant);
}

/// Overloads taking a caller-supplied decomposition (custom losses).
template <typename Scalar>
SolveReport<Scalar> solve_v1(const PgwProblem<Scalar>& problem,
                             const CostDecomposition<Scalar>& decomp,
                             const FwConfig<Scalar>& config = {},
                             const TransportPlan<Scalar>* init = nullptr) {
    return detail::fw_solve(problem, decomp, config, init, SolverVariant::v1);
}

template <typename Scalar>
SolveReport<Scalar> solve_v2(const PgwProblem<Scalar>& problem,
                             const CostDecomposition<Scalar>& decomp,
                             const FwConfig<Scalar>& config = {},
                             const TransportPlan<Scalar>* init = nullptr) {
    return detail::fw_solve(problem, decomp, config, init, SolverVariant::v2);
}

/// Quadratic line-search coefficients (a, b) for the segment gamma -> gamma_new.
template <typename Scalar>
std::pair<Scalar, Scalar> line_search_coeffs_v1(const CostDecomposition<Scalar>& decomp,
                                                const TransportPlan<Scalar>& gamma,
                                                const TransportPlan<Scalar>& gamma_new,
                                                Scalar lambda) {
    const MatrixX<Scalar> delta = gamma_new.matrix() - gamma.matrix();
    const Scalar delta_mass = delta.sum();
    const MatrixX<Scalar> m_gamma = tensor_product_factored(decomp, gamma.matrix());
    const Scalar a = detail::line_search_a(decomp, delta, delta_mass, lambda);
    const Scalar b =
        detail::line_search_b(m_gamma, delta, delta_mass, gamma.total_mass(), lambda);
    return {a, b};
}

/// FW gap <grad L(gamma), gamma - gamma_direction>; nonnegative when the
/// direction is the linear minimizer, zero exactly at stationary plans.
template <typename Scalar>
Scalar fw_gap(const CostDecomposition<Scalar>& decomp, const TransportPlan<Scalar>& gamma,
              const TransportPlan<Scalar>& gamma_direction, Scalar lambda) {
    const MatrixX<Scalar> grad = grad_tilde(decomp, gamma.matrix(), lambda);
    return grad.cwiseProduct(gamma.matrix() - gamma_direction.matrix()).sum();
}

}  // namespace pgw
