#include "xmsmo/transport.hpp"

#include "xmsmo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace xmsmo {

void validate_measure(const DiscreteMeasure& measure, const char* name) {
  require(measure.size() >= 1, ErrorKind::EmptyInput, std::string(name) + " has empty support");
  require(measure.allFinite() && (measure.array() >= 0.0).all(), ErrorKind::InvalidArgument,
          std::string(name) + " must be finite and nonnegative");
  require(std::abs(measure.sum() - 1.0) <= 1e-9, ErrorKind::InvalidArgument,
          std::string(name) + " must sum to 1");
}

CostMatrix cosine_cost(const Eigen::MatrixXd& embs_a, const Eigen::MatrixXd& embs_b) {
  require(embs_a.cols() == embs_b.cols(), ErrorKind::InvalidArgument,
          "cosine_cost: embedding widths differ");
  auto normalized = [](const Eigen::MatrixXd& m, const char* side) {
    Eigen::MatrixXd out = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double norm = m.row(i).norm();
      require(norm > 0.0, ErrorKind::InvalidArgument,
              std::string("cosine_cost: zero-norm row ") + std::to_string(i) + " in " + side);
      out.row(i) /= norm;
    }
    return out;
  };
  const Eigen::MatrixXd a = normalized(embs_a, "first argument");
  const Eigen::MatrixXd b = normalized(embs_b, "second argument");
  return (1.0 - (a * b.transpose()).array()).cwiseMax(0.0).cwiseMin(2.0).matrix();
}

CostMatrix euclidean_cost(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b) {
  require(points_a.cols() == points_b.cols(), ErrorKind::InvalidArgument,
          "euclidean_cost: point dimensions differ");
  CostMatrix cost(points_a.rows(), points_b.rows());
  for (Eigen::Index i = 0; i < points_a.rows(); ++i)
    for (Eigen::Index j = 0; j < points_b.rows(); ++j)
      cost(i, j) = (points_a.row(i) - points_b.row(j)).norm();
  return cost;
}

double wasserstein(const Eigen::MatrixXd& plan, const CostMatrix& cost) {
  require(plan.rows() == cost.rows() && plan.cols() == cost.cols(), ErrorKind::InvalidArgument,
          "wasserstein: plan and cost shapes differ");
  return plan.cwiseProduct(cost).sum();
}

double marginal_violation(const Eigen::MatrixXd& plan, const DiscreteMeasure& mu,
                          const DiscreteMeasure& nu) {
  const double rows = (plan.rowwise().sum() - mu).cwiseAbs().maxCoeff();
  const double cols = (plan.colwise().sum().transpose() - nu).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

namespace {

void check_problem(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost) {
  require(cost.rows() == mu.size() && cost.cols() == nu.size(), ErrorKind::InvalidArgument,
          "transport shapes disagree: cost " + std::to_string(cost.rows()) + "x" +
              std::to_string(cost.cols()) + " vs marginals " + std::to_string(mu.size()) + ", " +
              std::to_string(nu.size()));
  require(mu.size() >= 1 && nu.size() >= 1, ErrorKind::EmptyInput, "transport needs nonempty marginals");
  require(mu.allFinite() && nu.allFinite() && (mu.array() >= 0).all() && (nu.array() >= 0).all(),
          ErrorKind::InvalidArgument, "marginals must be finite and nonnegative");
  require(std::abs(mu.sum() - nu.sum()) <= 1e-9, ErrorKind::InvalidArgument,
          "unbalanced marginals");
  require(cost.allFinite() && (cost.array() >= 0).all(), ErrorKind::InvalidArgument,
          "costs must be finite and nonnegative");
}

// Spanning-tree basis of the transportation simplex. Nodes 0..n-1 are
// supplies (rows), n..n+m-1 demands (columns).
class TransportationSimplex {
 public:
  TransportationSimplex(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost)
      : n_(mu.size()), m_(nu.size()), cost_(cost), flow_(Eigen::MatrixXd::Zero(n_, m_)),
        basic_(Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n_, m_, false)) {
    north_west_corner(mu, nu * (mu.sum() / nu.sum()));
  }

  int solve() {
    const double scale = 1.0 + cost_.cwiseAbs().maxCoeff();
    const double tolerance = 1e-12 * scale;
    const long max_pivots = 1000L * (n_ + m_) * (n_ + m_) + 1000;
    int pivots = 0;
    int stalled = 0;
    Eigen::VectorXd u(n_), v(m_);
    for (;;) {
      potentials(u, v);
      const bool bland = stalled > 2 * (n_ + m_);
      Eigen::Index enter_i = -1, enter_j = -1;
      double best = -tolerance;
      for (Eigen::Index i = 0; i < n_ && !(bland && enter_i >= 0); ++i) {
        for (Eigen::Index j = 0; j < m_; ++j) {
          if (basic_(i, j)) continue;
          const double reduced = cost_(i, j) - u(i) - v(j);
          if (reduced < best) {
            best = reduced;
            enter_i = i;
            enter_j = j;
            if (bland) break;
          }
        }
      }
      if (enter_i < 0) return pivots;
      require(++pivots < max_pivots, ErrorKind::Capacity, "transportation simplex pivot limit hit");
      const double theta = pivot(enter_i, enter_j, bland);
      stalled = theta > 0.0 ? 0 : stalled + 1;
    }
  }

  Eigen::MatrixXd plan() const { return flow_.cwiseMax(0.0); }

 private:
  struct Edge {
    Eigen::Index row, col;
  };

  void north_west_corner(DiscreteMeasure supply, DiscreteMeasure demand) {
    Eigen::Index i = 0, j = 0;
    for (;;) {
      const double x = std::min(supply(i), demand(j));
      flow_(i, j) = x;
      basic_(i, j) = true;
      supply(i) -= x;
      demand(j) -= x;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (j == m_ - 1 || (i < n_ - 1 && supply(i) <= demand(j))) {
        ++i;
      } else {
        ++j;
      }
    }
    // Rounding residue lands on the last basic cell.
    flow_(n_ - 1, m_ - 1) += std::min(supply(n_ - 1), demand(m_ - 1));
  }

  std::vector<std::vector<Eigen::Index>> adjacency() const {
    std::vector<std::vector<Eigen::Index>> adj(static_cast<std::size_t>(n_ + m_));
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = 0; j < m_; ++j)
        if (basic_(i, j)) {
          adj[i].push_back(n_ + j);
          adj[n_ + j].push_back(i);
        }
    return adj;
  }

  // u_i + v_j = c_ij on every basic cell, u_0 = 0.
  void potentials(Eigen::VectorXd& u, Eigen::VectorXd& v) const {
    const auto adj = adjacency();
    std::vector<char> done(adj.size(), 0);
    std::vector<Eigen::Index> stack{0};
    u(0) = 0.0;
    done[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index node = stack.back();
      stack.pop_back();
      for (Eigen::Index next : adj[node]) {
        if (done[next]) continue;
        done[next] = 1;
        if (node < n_) {
          v(next - n_) = cost_(node, next - n_) - u(node);
        } else {
          u(next) = cost_(next, node - n_) - v(node - n_);
        }
        stack.push_back(next);
      }
    }
  }

  // Tree path from column node `from` to row node `to`, as basic cells.
  std::vector<Edge> tree_path(Eigen::Index from, Eigen::Index to) const {
    const auto adj = adjacency();
    std::vector<Eigen::Index> parent(adj.size(), -1);
    std::vector<Eigen::Index> queue{from};
    parent[from] = from;
    for (std::size_t head = 0; head < queue.size() && parent[to] < 0; ++head) {
      for (Eigen::Index next : adj[queue[head]]) {
        if (parent[next] >= 0) continue;
        parent[next] = queue[head];
        queue.push_back(next);
      }
    }
    std::vector<Edge> path;
    for (Eigen::Index node = to; node != from; node = parent[node]) {
      const Eigen::Index prev = parent[node];
      path.push_back(node < n_ ? Edge{node, prev - n_} : Edge{prev, node - n_});
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  double pivot(Eigen::Index enter_i, Eigen::Index enter_j, bool bland) {
    // Cycle: (enter_i, enter_j) gains, then the tree path from column
    // enter_j back to row enter_i alternates lose/gain, starting with lose.
    const std::vector<Edge> path = tree_path(n_ + enter_j, enter_i);
    double theta = std::numeric_limits<double>::infinity();
    Eigen::Index leave = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Edge& e = path[k];
      const double f = flow_(e.row, e.col);
      const bool better = f < theta ||
                          (bland && f == theta && leave >= 0 &&
                           e.row * m_ + e.col < path[leave].row * m_ + path[leave].col);
      if (better) {
        theta = f;
        leave = Eigen::Index(k);
      }
    }
    theta = std::max(theta, 0.0);
    flow_(enter_i, enter_j) = theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      flow_(path[k].row, path[k].col) += (k % 2 == 0 ? -theta : theta);
    }
    const Edge out = path[leave];
    flow_(out.row, out.col) = 0.0;
    basic_(out.row, out.col) = false;
    basic_(enter_i, enter_j) = true;
    return theta;
  }

  Eigen::Index n_, m_;
  const CostMatrix& cost_;
  Eigen::MatrixXd flow_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> basic_;
};

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double top = x.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((x.array() - top).exp().sum());
}

// Projects an approximately feasible plan onto the transport polytope
// (Altschuler, Weed & Rigollet rounding).
Eigen::MatrixXd round_to_feasible(Eigen::MatrixXd plan, const Eigen::VectorXd& mu,
                                  const Eigen::VectorXd& nu) {
  const Eigen::VectorXd rows = plan.rowwise().sum();
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    if (rows(i) > mu(i)) plan.row(i) *= mu(i) / rows(i);
  }
  const Eigen::VectorXd cols = plan.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    if (cols(j) > nu(j)) plan.col(j) *= nu(j) / cols(j);
  }
  const Eigen::VectorXd err_rows = (mu - plan.rowwise().sum()).cwiseMax(0.0);
  const Eigen::VectorXd err_cols = (nu - plan.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = err_rows.sum();
  if (mass > 0.0) plan += err_rows * err_cols.transpose() / mass;
  return plan;
}

}  // namespace

TransportPlan exact_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost) {
  check_problem(mu, nu, cost);
  TransportationSimplex simplex(mu, nu, cost);
  TransportPlan result;
  result.iterations = simplex.solve();
  result.plan = simplex.plan();
  result.objective = wasserstein(result.plan, cost);
  return result;
}

TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       const SinkhornOptions& options) {
  check_problem(mu, nu, cost);
  require(options.epsilon > 0.0, ErrorKind::InvalidArgument, "sinkhorn epsilon must be positive");
  require(options.max_iter >= 1, ErrorKind::InvalidArgument, "sinkhorn max_iter must be >= 1");

  // Zero-mass rows/columns carry no plan mass; solve on the supports.
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu(i) > 0) rows.push_back(i);
  for (Eigen::Index j = 0; j < nu.size(); ++j)
    if (nu(j) > 0) cols.push_back(j);
  const Eigen::Index n = Eigen::Index(rows.size()), m = Eigen::Index(cols.size());
  Eigen::VectorXd a(n), b(m);
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index i = 0; i < n; ++i) a(i) = mu(rows[i]);
  for (Eigen::Index j = 0; j < m; ++j) b(j) = nu(cols[j]);
  b *= a.sum() / b.sum();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) c(i, j) = cost(rows[i], cols[j]);
  const Eigen::VectorXd log_a = a.array().log();
  const Eigen::VectorXd log_b = b.array().log();

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
  auto update_f = [&](double eps) {
    for (Eigen::Index i = 0; i < n; ++i)
      f(i) = eps * log_a(i) - eps * log_sum_exp((g - c.row(i).transpose()) / eps);
  };
  auto update_g = [&](double eps) {
    for (Eigen::Index j = 0; j < m; ++j)
      g(j) = eps * log_b(j) - eps * log_sum_exp((f - c.col(j)) / eps);
  };
  auto plan_at = [&](double eps) {
    Eigen::MatrixXd p(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) p(i, j) = std::exp((f(i) + g(j) - c(i, j)) / eps);
    return p;
  };

  // A single source or target admits exactly one plan; return it as is so the
  // result does not depend on epsilon through rounding noise.
  const bool singleton = n == 1 || m == 1;

  // epsilon-scaling: warm-start the duals through a halving schedule.
  int iterations = 0;
  double eps = std::max(options.epsilon, c.maxCoeff());
  while (!singleton && eps > options.epsilon && iterations < options.max_iter) {
    for (int k = 0; k < 10 && iterations < options.max_iter; ++k, ++iterations) {
      update_f(eps);
      update_g(eps);
    }
    eps = std::max(options.epsilon, eps * 0.5);
  }
  eps = options.epsilon;

  bool converged = singleton;
  Eigen::MatrixXd p;
  if (m == 1) {
    p = a;
  } else if (n == 1) {
    p = b.transpose();
  }
  while (!singleton && iterations < options.max_iter) {
    update_f(eps);
    update_g(eps);
    ++iterations;
    // After the g-update columns are exact; rows carry the error.
    p = plan_at(eps);
    if ((p.rowwise().sum() - a).cwiseAbs().maxCoeff() < options.tol) {
      converged = true;
      break;
    }
  }
  if (!singleton) {
    if (p.size() == 0) p = plan_at(eps);
    p = round_to_feasible(std::move(p), a, b);
  }

  TransportPlan result;
  result.plan = Eigen::MatrixXd::Zero(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) result.plan(rows[i], cols[j]) = p(i, j);
  result.objective = wasserstein(result.plan, cost);
  result.converged = converged;
  result.iterations = iterations;
  return result;
}

TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       const SolverConfig& config) {
  if (mu.size() * nu.size() <= config.exact_limit) return exact_ot(mu, nu, cost);
  return sinkhorn(mu, nu, cost, config.sinkhorn);
}

}  // namespace xmsmo
