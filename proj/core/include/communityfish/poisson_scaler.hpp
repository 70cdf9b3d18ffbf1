#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "communityfish/feature_matrix.hpp"

namespace cfish {

// One-dimensional Poisson scaling model
//
//   y_ij ~ Poisson(lambda_ij),  log lambda_ij = alpha_i + psi_j + theta_i * beta_j
//
// alpha: document fixed effects, psi: feature fixed effects, theta: document
// positions, beta: feature discrimination.
struct ScalingParams {
  Eigen::VectorXd alpha;
  Eigen::VectorXd psi;
  Eigen::VectorXd theta;
  Eigen::VectorXd beta;

  Eigen::Index num_documents() const { return alpha.size(); }
  Eigen::Index num_features() const { return psi.size(); }
  // Linear predictor alpha_i + psi_j + theta_i beta_j for every cell.
  Eigen::MatrixXd linear_predictor() const;
};

struct FitConfig {
  // Stop when |LL_t - LL_{t-1}| / |LL_{t-1}| falls below tol.
  double tol = 1e-8;
  int max_iter = 500;
  // Document ids fixing the direction: theta[low] <= theta[high]. Defaults
  // to the first and last document of the matrix.
  std::optional<std::string> anchor_low;
  std::optional<std::string> anchor_high;
  // Bound on |eta| inside the exponential. Both the likelihood and its
  // derivatives use the clamped predictor, so the objective stays bounded.
  double linear_predictor_clamp = 30.0;
  // Standard deviation of a normal prior on every beta_j; 0 means plain
  // maximum likelihood. Without it a feature whose nonzero counts sit in a
  // subset of documents can drive beta to infinity (separation), which the
  // clamp then reports. With it the trace holds the penalized objective.
  double beta_prior_sd = 0.0;
  std::uint64_t seed = 0;
  // Throw EstimationError if a round lowers the log-likelihood.
  bool check_ascent = false;
  int max_newton_steps = 25;

  void validate() const;
};

enum class UncertaintyMethod { none, bootstrap, analytic };
std::string_view to_string(UncertaintyMethod method);

struct ScalingResult {
  std::vector<std::string> doc_ids;
  std::vector<std::string> feature_labels;
  ScalingParams params;
  // Log-likelihood after initialization, then after every round.
  std::vector<double> loglik_trace;
  bool converged = false;
  int iterations = 0;
  std::size_t anchor_low = 0;
  std::size_t anchor_high = 0;
  bool clamp_activated = false;
  std::vector<std::string> warnings;
  // Pearson chi-square over residual degrees of freedom; NaN when df <= 0.
  double dispersion = std::numeric_limits<double>::quiet_NaN();
  double runtime_seconds = 0.0;

  UncertaintyMethod uncertainty = UncertaintyMethod::none;
  Eigen::VectorXd theta_se;
  Eigen::VectorXd theta_ci_low;
  Eigen::VectorXd theta_ci_high;
  std::size_t bootstrap_replicates = 0;
  std::size_t bootstrap_failures = 0;
  std::size_t bootstrap_unconverged = 0;

  double log_likelihood() const { return loglik_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : loglik_trace.back(); }
  bool has_intervals() const { return uncertainty != UncertaintyMethod::none; }
};

// Starting values: alpha_i = log(rowsum_i / rowsum_0), psi_j = log(colmean_j),
// theta and beta from the leading singular pair of the doubly centred
// log(y + 0.1), theta standardized. Throws EstimationError with fewer than two
// documents or features, or with an all-zero row or column.
ScalingParams initialize(const CountMatrix& matrix);

// Sum over cells of y * eta - exp(eta); the log(y!) constant is omitted.
// Throws EstimationError on non-finite parameters.
double log_likelihood(const CountMatrix& matrix, const ScalingParams& params, double clamp = 30.0);

// Gradients of the log-likelihood with respect to (alpha_i, theta_i) and
// (psi_j, beta_j).
Eigen::Vector2d document_gradient(const CountMatrix& matrix, const ScalingParams& params, std::size_t doc,
                                  double clamp = 30.0);
Eigen::Vector2d feature_gradient(const CountMatrix& matrix, const ScalingParams& params, std::size_t feature,
                                 double clamp = 30.0);

// Alternating conditional Newton maximization. After every round theta is
// z-scored, beta centred to mean 0 and alpha_0 set to 0, with compensating
// shifts absorbed into alpha, psi and beta; the final direction follows the
// anchors. A non-converged fit is
// returned with converged = false.
ScalingResult fit(const CountMatrix& matrix, const FitConfig& config = {});
// Warm start from `start`, which must match the matrix dimensions.
ScalingResult fit(const CountMatrix& matrix, const FitConfig& config, const ScalingParams& start);

double pearson_dispersion(const CountMatrix& matrix, const ScalingParams& params, double clamp = 30.0);

// Standard errors of theta from the observed information of each document's
// (alpha_i, theta_i) block, conditional on (psi, beta); normal intervals.
void apply_analytic_errors(const CountMatrix& matrix, ScalingResult& result, double level = 0.95);

struct BootstrapConfig {
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
  double level = 0.95;
  // More failed replicates than this fraction is an error.
  double max_failure_ratio = 0.2;
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  FitConfig fit;
};

// Parametric bootstrap: draws y* ~ Poisson(exp(eta_hat)), refits warm-started
// from `result`, aligns each replicate's sign to theta_hat, and reports the
// standard deviation and percentile interval of theta per document. Output
// does not depend on the thread count.
ScalingResult bootstrap(const CountMatrix& matrix, const ScalingResult& result, const BootstrapConfig& config);

// Writes `doc_id,theta,se,ci_low,ci_high,alpha` plus one column per metadata
// key (sorted); `metadata` maps doc id to its metadata.
void write_positions_csv(std::ostream& out, const ScalingResult& result,
                         const std::map<std::string, std::map<std::string, std::string>>& metadata = {});
// `feature,beta,psi`.
void write_features_csv(std::ostream& out, const ScalingResult& result);

}  // namespace cfish
