#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "communityfish/error.hpp"
#include "communityfish/poisson_scaler.hpp"
#include "communityfish/rng.hpp"
#include "scaler_internal.hpp"

namespace cfish {
namespace {

struct Replicate {
  bool ok = false;
  bool converged = false;
  Eigen::VectorXd theta;
};

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values.front();
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  return denom > 0 ? (da * db).sum() / denom : 0.0;
}

Replicate run_replicate(const Eigen::MatrixXd& mu, const ScalingResult& base, const BootstrapConfig& config,
                        std::size_t index) {
  Replicate rep;
  Rng rng = make_rng(config.seed, index);
  Eigen::MatrixXd y(mu.rows(), mu.cols());
  for (Eigen::Index j = 0; j < mu.cols(); ++j) {
    for (Eigen::Index i = 0; i < mu.rows(); ++i) {
      std::poisson_distribution<long long> draw(mu(i, j));
      y(i, j) = static_cast<double>(draw(rng));
    }
  }
  if ((y.rowwise().sum().array() <= 0).any() || (y.colwise().sum().array() <= 0).any()) return rep;
  try {
    ScalingResult refit = detail::fit_dense(y, config.fit, &base.params, base.anchor_low, base.anchor_high);
    rep.theta = std::move(refit.params.theta);
    if (correlation(rep.theta, base.params.theta) < 0) rep.theta = -rep.theta;
    rep.converged = refit.converged;
    rep.ok = rep.theta.allFinite();
  } catch (const EstimationError&) {
    rep.ok = false;
  }
  return rep;
}

}  // namespace

ScalingResult bootstrap(const CountMatrix& matrix, const ScalingResult& result, const BootstrapConfig& config) {
  if (config.replicates == 0) throw InputError("bootstrap needs at least one replicate");
  if (!(config.level > 0.0 && config.level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  const auto& p = result.params;
  if (static_cast<std::size_t>(p.alpha.size()) != matrix.rows() ||
      static_cast<std::size_t>(p.psi.size()) != matrix.cols()) {
    throw InputError("scaling result does not match the matrix");
  }
  const double clamp = config.fit.linear_predictor_clamp;
  const Eigen::MatrixXd mu = p.linear_predictor().array().min(clamp).max(-clamp).exp().matrix();

  std::vector<Replicate> replicates(config.replicates);
  unsigned threads = config.threads ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.replicates));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < config.replicates; b = next++) {
      replicates[b] = run_replicate(mu, result, config, b);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ScalingResult out = result;
  const Eigen::Index n = p.theta.size();
  std::vector<std::vector<double>> draws(static_cast<std::size_t>(n));
  std::size_t failures = 0, unconverged = 0;
  for (const auto& rep : replicates) {
    if (!rep.ok) {
      ++failures;
      continue;
    }
    if (!rep.converged) ++unconverged;
    for (Eigen::Index i = 0; i < n; ++i) draws[static_cast<std::size_t>(i)].push_back(rep.theta[i]);
  }
  const std::size_t successes = config.replicates - failures;
  if (successes == 0 ||
      static_cast<double>(failures) > config.max_failure_ratio * static_cast<double>(config.replicates)) {
    throw EstimationError("bootstrap: " + std::to_string(failures) + " of " + std::to_string(config.replicates) +
                          " replicates failed");
  }

  const double tail = (1.0 - config.level) / 2.0;
  out.theta_se.resize(n);
  out.theta_ci_low.resize(n);
  out.theta_ci_high.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& d = draws[static_cast<std::size_t>(i)];
    const Eigen::Map<const Eigen::VectorXd> v(d.data(), static_cast<Eigen::Index>(d.size()));
    out.theta_se[i] = detail::sample_sd(v);
    out.theta_ci_low[i] = quantile(d, tail);
    out.theta_ci_high[i] = quantile(d, 1.0 - tail);
  }
  out.uncertainty = UncertaintyMethod::bootstrap;
  out.bootstrap_replicates = successes;
  out.bootstrap_failures = failures;
  out.bootstrap_unconverged = unconverged;
  if (failures > 0) {
    out.warnings.push_back("bootstrap skipped " + std::to_string(failures) + " failed replicates");
  }
  return out;
}

}  // namespace cfish
