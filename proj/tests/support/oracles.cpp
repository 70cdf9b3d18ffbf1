#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace oracle {

std::map<Pair, std::uint64_t> scan_bigrams(const std::vector<std::vector<std::string>>& docs) {
  std::map<Pair, std::uint64_t> out;
  for (const auto& doc : docs) {
    for (std::size_t t = 1; t < doc.size(); ++t) {
      const std::string& u = doc[t - 1];
      const std::string& w = doc[t];
      if (u == w) continue;
      ++out[u < w ? Pair{u, w} : Pair{w, u}];
    }
  }
  return out;
}

double modularity(const Eigen::MatrixXd& a, const std::vector<int>& community) {
  const Eigen::Index n = a.rows();
  const double two_m = a.sum();
  double q = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (community[static_cast<std::size_t>(i)] != community[static_cast<std::size_t>(j)]) continue;
      q += a(i, j) - a.row(i).sum() * a.row(j).sum() / two_m;
    }
  }
  return q / two_m;
}

namespace {

void enumerate(const Eigen::MatrixXd& a, std::vector<int>& label, std::size_t node, int used, double& best) {
  if (node == label.size()) {
    best = std::max(best, modularity(a, label));
    return;
  }
  for (int c = 0; c <= used; ++c) {
    label[node] = c;
    enumerate(a, label, node + 1, std::max(used, c + 1), best);
  }
}

struct Problem {
  const Eigen::MatrixXd* y;
  int n, p;
};

// Unpacks x into (alpha, psi, theta, beta) with alpha_0 = 0 and theta the
// z-score of the free vector u.
void unpack(const gsl_vector* x, const Problem& pr, Eigen::VectorXd& alpha, Eigen::VectorXd& psi,
            Eigen::VectorXd& u, Eigen::VectorXd& theta, Eigen::VectorXd& beta, double& sd) {
  const int n = pr.n, p = pr.p;
  alpha = Eigen::VectorXd::Zero(n);
  psi.resize(p);
  u.resize(n);
  beta.resize(p);
  std::size_t k = 0;
  for (int i = 1; i < n; ++i) alpha[i] = gsl_vector_get(x, k++);
  for (int j = 0; j < p; ++j) psi[j] = gsl_vector_get(x, k++);
  for (int i = 0; i < n; ++i) u[i] = gsl_vector_get(x, k++);
  for (int j = 0; j < p; ++j) beta[j] = gsl_vector_get(x, k++);
  const double mean = u.mean();
  sd = std::sqrt((u.array() - mean).square().sum() / (n - 1));
  theta = (u.array() - mean) / sd;
}

double negative_ll(const gsl_vector* x, void* params) {
  const auto& pr = *static_cast<Problem*>(params);
  Eigen::VectorXd alpha, psi, u, theta, beta;
  double sd;
  unpack(x, pr, alpha, psi, u, theta, beta, sd);
  if (!(sd > 1e-12)) return std::numeric_limits<double>::infinity();
  return -poisson_ll(*pr.y, alpha, psi, theta, beta);
}

void negative_gradient(const gsl_vector* x, void* params, gsl_vector* g) {
  const auto& pr = *static_cast<Problem*>(params);
  const int n = pr.n, p = pr.p;
  Eigen::VectorXd alpha, psi, u, theta, beta;
  double sd;
  unpack(x, pr, alpha, psi, u, theta, beta, sd);
  Eigen::MatrixXd resid(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) resid(i, j) = (*pr.y)(i, j) - std::exp(alpha[i] + psi[j] + theta[i] * beta[j]);
  }
  const Eigen::VectorXd g_alpha = resid.rowwise().sum();
  const Eigen::VectorXd g_psi = resid.colwise().sum();
  const Eigen::VectorXd g_theta = resid * beta;
  const Eigen::VectorXd g_beta = resid.transpose() * theta;
  // d theta_k / d u_l = (delta_kl - 1/n) / sd - theta_k theta_l / ((n - 1) sd)
  const double mean_g = g_theta.mean();
  const double proj = g_theta.dot(theta) / (n - 1);
  std::size_t k = 0;
  for (int i = 1; i < n; ++i) gsl_vector_set(g, k++, -g_alpha[i]);
  for (int j = 0; j < p; ++j) gsl_vector_set(g, k++, -g_psi[j]);
  for (int i = 0; i < n; ++i) gsl_vector_set(g, k++, -(g_theta[i] - mean_g - theta[i] * proj) / sd);
  for (int j = 0; j < p; ++j) gsl_vector_set(g, k++, -g_beta[j]);
}

void both(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
  *f = negative_ll(x, params);
  negative_gradient(x, params, g);
}

}  // namespace

double best_modularity(const Eigen::MatrixXd& adjacency) {
  std::vector<int> label(static_cast<std::size_t>(adjacency.rows()), 0);
  double best = -std::numeric_limits<double>::infinity();
  enumerate(adjacency, label, 0, 0, best);
  return best;
}

double poisson_ll(const Eigen::MatrixXd& y, const Eigen::VectorXd& alpha, const Eigen::VectorXd& psi,
                  const Eigen::VectorXd& theta, const Eigen::VectorXd& beta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double eta = alpha[i] + psi[j] + theta[i] * beta[j];
      ll += y(i, j) * eta - std::exp(eta);
    }
  }
  return ll;
}

double best_ll_bfgs(const Eigen::MatrixXd& y, int starts, std::uint64_t seed) {
  gsl_set_error_handler_off();
  Problem pr{&y, static_cast<int>(y.rows()), static_cast<int>(y.cols())};
  const std::size_t dim = static_cast<std::size_t>((pr.n - 1) + 2 * pr.p + pr.n);
  gsl_multimin_function_fdf fn{&negative_ll, &negative_gradient, &both, dim, &pr};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::VectorXd rows = y.rowwise().sum();
  const Eigen::VectorXd cols = y.colwise().sum();
  const double total = y.sum();

  double best = -std::numeric_limits<double>::infinity();
  gsl_vector* x = gsl_vector_alloc(dim);
  for (int s = 0; s < starts; ++s) {
    std::size_t k = 0;
    for (int i = 1; i < pr.n; ++i) gsl_vector_set(x, k++, std::log(rows[i] / rows[0]));
    for (int j = 0; j < pr.p; ++j) gsl_vector_set(x, k++, std::log(rows[0] * cols[j] / total));
    for (int i = 0; i < pr.n; ++i) gsl_vector_set(x, k++, normal(rng));
    for (int j = 0; j < pr.p; ++j) gsl_vector_set(x, k++, 0.3 * normal(rng));

    // Restart a few times; BFGS can stall on the curved z-score manifold.
    for (int round = 0; round < 5; ++round) {
      gsl_multimin_fdfminimizer* m = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, dim);
      gsl_multimin_fdfminimizer_set(m, &fn, x, 0.01, 0.1);
      for (int it = 0; it < 20000; ++it) {
        if (gsl_multimin_fdfminimizer_iterate(m) != GSL_SUCCESS) break;
        if (gsl_multimin_test_gradient(m->gradient, 1e-10) == GSL_SUCCESS) break;
      }
      gsl_vector_memcpy(x, m->x);
      best = std::max(best, -m->f);
      gsl_multimin_fdfminimizer_free(m);
    }
  }
  gsl_vector_free(x);
  return best;
}

Eigen::MatrixXd random_counts(int rows, int cols, double mean, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> rate(2.0, mean / 2.0);
  while (true) {
    Eigen::MatrixXd y(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        std::poisson_distribution<int> draw(rate(rng));
        y(i, j) = draw(rng);
      }
    }
    if ((y.rowwise().sum().array() > 0).all() && (y.colwise().sum().array() > 0).all()) return y;
  }
}

Eigen::VectorXd joint_beta_se(const Eigen::VectorXd& alpha, const Eigen::VectorXd& psi, const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& beta) {
  const int n = static_cast<int>(theta.size()), p = static_cast<int>(beta.size());
  const int dim = 2 * n + 2 * p;  // alpha, psi, theta, beta
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      const double mu = std::exp(alpha[i] + psi[j] + theta[i] * beta[j]);
      const int index[4] = {i, n + j, n + p + i, 2 * n + p + j};
      const double d[4] = {1.0, 1.0, beta[j], theta[i]};
      for (int u = 0; u < 4; ++u) {
        for (int v = 0; v < 4; ++v) info(index[u], index[v]) += mu * d[u] * d[v];
      }
    }
  }
  Eigen::MatrixXd constraints = Eigen::MatrixXd::Zero(4, dim);
  constraints(0, 0) = 1.0;
  for (int i = 0; i < n; ++i) {
    constraints(1, n + p + i) = 1.0;
    constraints(2, n + p + i) = theta[i];
  }
  for (int j = 0; j < p; ++j) constraints(3, 2 * n + p + j) = 1.0;
  const Eigen::MatrixXd basis = Eigen::FullPivLU<Eigen::MatrixXd>(constraints).kernel();
  const Eigen::MatrixXd cov = basis * (basis.transpose() * info * basis).inverse() * basis.transpose();
  Eigen::VectorXd se(p);
  for (int j = 0; j < p; ++j) se[j] = std::sqrt(cov(2 * n + p + j, 2 * n + p + j));
  return se;
}

}  // namespace oracle
