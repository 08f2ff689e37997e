#ifndef XMSMO_TRANSPORT_HPP
#define XMSMO_TRANSPORT_HPP

#include <Eigen/Dense>

namespace xmsmo {

/// Nonnegative weights summing to one.
using DiscreteMeasure = Eigen::VectorXd;
/// Nonnegative finite ground costs, rows index the source support.
using CostMatrix = Eigen::MatrixXd;

struct TransportPlan {
  Eigen::MatrixXd plan;
  double objective = 0.0;
  bool converged = true;
  int iterations = 0;
};

void validate_measure(const DiscreteMeasure& measure, const char* name);

/// c_ij = 1 - cos(a_i, b_j), clamped to [0, 2]. Rows are embeddings.
CostMatrix cosine_cost(const Eigen::MatrixXd& embs_a, const Eigen::MatrixXd& embs_b);

/// c_ij = ||a_i - b_j||_2.
CostMatrix euclidean_cost(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b);

/// Optimal vertex of the transportation LP via the transportation simplex
/// (north-west corner start, MODI potentials, Bland's rule once pivots stall).
TransportPlan exact_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost);

struct SinkhornOptions {
  double epsilon = 0.01;
  int max_iter = 10000;
  double tol = 1e-9;
};

/// Log-domain Sinkhorn with an epsilon-scaling schedule. The final plan is
/// rounded onto the feasible set, so its marginals are exact to rounding
/// error even when `converged` is false.
TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       const SinkhornOptions& options = {});

/// sum_ij plan_ij * cost_ij
double wasserstein(const Eigen::MatrixXd& plan, const CostMatrix& cost);

/// Largest absolute deviation of plan row/column sums from mu/nu.
double marginal_violation(const Eigen::MatrixXd& plan, const DiscreteMeasure& mu,
                          const DiscreteMeasure& nu);

struct SolverConfig {
  /// Exact solver whenever n * m does not exceed this.
  Eigen::Index exact_limit = 4096;
  SinkhornOptions sinkhorn;
};

TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       const SolverConfig& config = {});

}  // namespace xmsmo

#endif  // XMSMO_TRANSPORT_HPP
