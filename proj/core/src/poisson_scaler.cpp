#include "communityfish/poisson_scaler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>

#include "communityfish/csv.hpp"
#include "communityfish/error.hpp"
#include "scaler_internal.hpp"

namespace cfish {

Eigen::MatrixXd ScalingParams::linear_predictor() const {
  Eigen::MatrixXd eta = theta * beta.transpose();
  eta.colwise() += alpha;
  eta.rowwise() += psi.transpose();
  return eta;
}

void FitConfig::validate() const {
  if (!(tol > 0.0)) throw InputError("fit tolerance must be positive");
  if (max_iter < 1) throw InputError("max_iter must be at least 1");
  if (!(linear_predictor_clamp > 0.0)) throw InputError("linear predictor clamp must be positive");
  if (max_newton_steps < 1) throw InputError("max_newton_steps must be at least 1");
  if (!(beta_prior_sd >= 0.0) || !std::isfinite(beta_prior_sd)) throw InputError("beta_prior_sd must be >= 0");
  if (anchor_low && anchor_high && *anchor_low == *anchor_high) throw InputError("anchor documents must be distinct");
}

std::string_view to_string(UncertaintyMethod method) {
  switch (method) {
    case UncertaintyMethod::none: return "none";
    case UncertaintyMethod::bootstrap: return "bootstrap";
    case UncertaintyMethod::analytic: return "analytic";
  }
  return "none";
}

namespace detail {

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

namespace {

void require_finite(const ScalingParams& params) {
  const bool finite = params.alpha.allFinite() && params.psi.allFinite() && params.theta.allFinite() &&
                      params.beta.allFinite();
  if (!finite) throw EstimationError("non-finite model parameter");
}

// Maximizes sum_k y_k * eta_k - exp(eta_k) - b_precision * b^2 / 2 over
// (a, b), with eta_k = a + offset_k + b * x_k and eta clamped to
// [-clamp, clamp].
class BlockNewton {
 public:
  BlockNewton(double clamp, int max_steps, double b_precision = 0.0)
      : clamp_(clamp), max_steps_(max_steps), b_precision_(b_precision) {}

  // Returns true if the predictor hit the clamp at the final point.
  bool maximize(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& offset,
                const Eigen::Ref<const Eigen::VectorXd>& x, double& a, double& b) const {
    double f = value(y, offset, x, a, b);
    const double scale = 1.0 + y.sum();
    for (int step = 0; step < max_steps_; ++step) {
      double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
      for (Eigen::Index k = 0; k < y.size(); ++k) {
        const double eta = a + offset[k] + b * x[k];
        if (std::abs(eta) >= clamp_) continue;
        const double mu = std::exp(eta);
        const double r = y[k] - mu;
        g0 += r;
        g1 += r * x[k];
        h00 += mu;
        h01 += mu * x[k];
        h11 += mu * x[k] * x[k];
      }
      g1 -= b_precision_ * b;
      h11 += b_precision_;
      if (std::max(std::abs(g0), std::abs(g1)) < 1e-11 * scale) break;
      double det = h00 * h11 - h01 * h01;
      if (!(h00 > 0.0) || !(det > 1e-12 * h00 * h11)) {
        const double ridge = 1e-6 * (h00 + h11) + 1e-10;
        h00 += ridge;
        h11 += ridge;
        det = h00 * h11 - h01 * h01;
      }
      const double da = (h11 * g0 - h01 * g1) / det;
      const double db = (h00 * g1 - h01 * g0) / det;
      double t = 1.0;
      bool accepted = false;
      double f_new = f;
      for (int halving = 0; halving < 50; ++halving, t *= 0.5) {
        f_new = value(y, offset, x, a + t * da, b + t * db);
        if (f_new >= f) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      a += t * da;
      b += t * db;
      const double gain = f_new - f;
      f = f_new;
      if (gain <= 1e-15 * (std::abs(f) + 1.0) && std::abs(t * da) + std::abs(t * db) < 1e-10) break;
    }
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      if (std::abs(a + offset[k] + b * x[k]) >= clamp_) return true;
    }
    return false;
  }

 private:
  double value(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& offset,
               const Eigen::Ref<const Eigen::VectorXd>& x, double a, double b) const {
    double f = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const double eta = std::clamp(a + offset[k] + b * x[k], -clamp_, clamp_);
      f += y[k] * eta - std::exp(eta);
    }
    return f - 0.5 * b_precision_ * b * b;
  }

  double clamp_;
  int max_steps_;
  double b_precision_;
};

// Exact reparameterization leaving every eta_ij unchanged: theta with mean 0
// and unit sample standard deviation, beta with mean 0, alpha_0 = 0.
// eta is invariant under (alpha_i + c theta_i, beta_j - c), so without the
// beta centring that direction would be left to drift.
void identify(ScalingParams& p) {
  const double mean = p.theta.mean();
  const double sd = sample_sd(p.theta);
  if (!(sd > 0.0) || !std::isfinite(sd)) throw EstimationError("degenerate document positions (zero variance)");
  p.psi += mean * p.beta;
  p.beta *= sd;
  p.theta = (p.theta.array() - mean) / sd;
  // Second pass removes residual rounding in the mean.
  p.theta.array() -= p.theta.mean();

  const double centre = p.beta.mean();
  p.beta.array() -= centre;
  p.alpha += centre * p.theta;

  const double shift = p.alpha[0];
  p.alpha.array() -= shift;
  p.alpha[0] = 0.0;
  p.psi.array() += shift;
}

double dispersion_dense(const Eigen::MatrixXd& y, const ScalingParams& p, double clamp) {
  const Eigen::Index n = y.rows(), m = y.cols();
  const double df = static_cast<double>(n * m - (2 * n + 2 * m - 3));
  if (df <= 0) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd eta = p.linear_predictor();
  double chi2 = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::exp(std::clamp(eta(i, j), -clamp, clamp));
      chi2 += (y(i, j) - mu) * (y(i, j) - mu) / mu;
    }
  }
  return chi2 / df;
}

}  // namespace

ScalingParams initialize_dense(const Eigen::MatrixXd& y) {
  const Eigen::Index n = y.rows(), m = y.cols();
  if (n < 2) throw EstimationError("need >= 2 documents");
  if (m < 2) throw EstimationError("need >= 2 features");
  const Eigen::VectorXd row_sums = y.rowwise().sum();
  const Eigen::VectorXd col_sums = y.colwise().sum();
  if ((row_sums.array() <= 0).any() || (col_sums.array() <= 0).any()) {
    throw EstimationError("matrix has an all-zero row or column; trim it first");
  }

  ScalingParams p;
  p.alpha = (row_sums.array() / row_sums[0]).log();
  p.psi = (col_sums.array() / static_cast<double>(n)).log();

  Eigen::MatrixXd centred = (y.array() + 0.1).log().matrix();
  const Eigen::VectorXd row_means = centred.rowwise().mean();
  const Eigen::RowVectorXd col_means = centred.colwise().mean();
  const double grand = centred.mean();
  centred.colwise() -= row_means;
  centred.rowwise() -= col_means;
  centred.array() += grand;

  // Leading singular pair through the smaller Gram matrix.
  Eigen::VectorXd u, v;
  double d = 0.0;
  if (n <= m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centred * centred.transpose());
    u = eig.eigenvectors().col(n - 1);
    d = std::sqrt(std::max(eig.eigenvalues()[n - 1], 0.0));
    v = d > 0 ? Eigen::VectorXd(centred.transpose() * u / d) : Eigen::VectorXd::Zero(m);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centred.transpose() * centred);
    v = eig.eigenvectors().col(m - 1);
    d = std::sqrt(std::max(eig.eigenvalues()[m - 1], 0.0));
    u = d > 0 ? Eigen::VectorXd(centred * v / d) : Eigen::VectorXd::Zero(n);
  }
  const double sd_u = sample_sd(u);
  if (sd_u > 0.0) {
    p.theta = (u.array() - u.mean()) / sd_u;
    p.beta = d * sd_u * v;
  } else {
    // Rank-zero residual (e.g. proportional rows): spread documents evenly.
    p.theta = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    p.theta = (p.theta.array() - p.theta.mean()) / sample_sd(p.theta);
    p.beta = Eigen::VectorXd::Zero(m);
  }
  return p;
}

double dense_log_likelihood(const Eigen::MatrixXd& y, const ScalingParams& params, double clamp, bool* clamped) {
  require_finite(params);
  if (params.alpha.size() != y.rows() || params.theta.size() != y.rows() || params.psi.size() != y.cols() ||
      params.beta.size() != y.cols()) {
    throw EstimationError("parameter dimensions do not match the count matrix");
  }
  double ll = 0.0;
  bool hit = false;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double eta = params.alpha[i] + params.psi[j] + params.theta[i] * params.beta[j];
      if (std::abs(eta) >= clamp) {
        hit = true;
        eta = std::clamp(eta, -clamp, clamp);
      }
      ll += y(i, j) * eta - std::exp(eta);
    }
  }
  if (clamped) *clamped = hit;
  return ll;
}

ScalingResult fit_dense(const Eigen::MatrixXd& y, const FitConfig& config, const ScalingParams* start,
                        std::size_t anchor_low, std::size_t anchor_high) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = y.rows(), m = y.cols();
  if (n < 2) throw EstimationError("need >= 2 documents");
  if (m < 2) throw EstimationError("need >= 2 features");

  ScalingResult result;
  result.anchor_low = anchor_low;
  result.anchor_high = anchor_high;
  ScalingParams& p = result.params;
  if (start) {
    if (start->alpha.size() != n || start->theta.size() != n || start->psi.size() != m || start->beta.size() != m) {
      throw EstimationError("warm start dimensions do not match the count matrix");
    }
    require_finite(*start);
    p = *start;
  } else {
    p = initialize_dense(y);
  }
  identify(p);

  const Eigen::MatrixXd yt = y.transpose();
  const double precision = config.beta_prior_sd > 0.0 ? 1.0 / (config.beta_prior_sd * config.beta_prior_sd) : 0.0;
  const BlockNewton documents(config.linear_predictor_clamp, config.max_newton_steps);
  const BlockNewton features(config.linear_predictor_clamp, config.max_newton_steps, precision);
  auto objective = [&] {
    return dense_log_likelihood(y, p, config.linear_predictor_clamp) - 0.5 * precision * p.beta.squaredNorm();
  };
  double ll = objective();
  result.loglik_trace.push_back(ll);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      documents.maximize(yt.col(i), p.psi, p.beta, p.alpha[i], p.theta[i]);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      features.maximize(y.col(j), p.alpha, p.theta, p.psi[j], p.beta[j]);
    }
    identify(p);
    const double ll_new = objective();
    if (!std::isfinite(ll_new)) throw EstimationError("log-likelihood became non-finite");
    if (config.check_ascent && ll_new < ll - 1e-9 * std::max(1.0, std::abs(ll))) {
      throw EstimationError("log-likelihood decreased during round " + std::to_string(iter));
    }
    result.loglik_trace.push_back(ll_new);
    result.iterations = iter;
    const double change = std::abs(ll_new - ll) / std::max(std::abs(ll), 1e-300);
    ll = ll_new;
    if (change < config.tol) {
      result.converged = true;
      break;
    }
  }

  if (p.theta[static_cast<Eigen::Index>(anchor_low)] > p.theta[static_cast<Eigen::Index>(anchor_high)]) {
    p.theta = -p.theta;
    p.beta = -p.beta;
  }
  bool clamped = false;
  dense_log_likelihood(y, p, config.linear_predictor_clamp, &clamped);
  result.clamp_activated = clamped;
  if (clamped) {
    result.warnings.push_back("linear predictor reached the clamp bound of " +
                              csv::format_number(config.linear_predictor_clamp) + " for at least one cell");
  }
  if (!result.converged) {
    result.warnings.push_back("did not converge within " + std::to_string(config.max_iter) + " rounds");
  }
  result.dispersion = dispersion_dense(y, p, config.linear_predictor_clamp);
  result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace detail

namespace {

std::size_t resolve_anchor(const CountMatrix& matrix, const std::optional<std::string>& id, std::size_t fallback) {
  if (!id) return fallback;
  const auto& ids = matrix.doc_ids();
  auto it = std::find(ids.begin(), ids.end(), *id);
  if (it == ids.end()) throw InputError("anchor document '" + *id + "' is not in the matrix");
  return static_cast<std::size_t>(it - ids.begin());
}

ScalingResult fit_matrix(const CountMatrix& matrix, const FitConfig& config, const ScalingParams* start) {
  config.validate();
  if (matrix.rows() < 2) throw EstimationError("need >= 2 documents");
  if (matrix.cols() < 2) throw EstimationError("need >= 2 features");
  const std::size_t low = resolve_anchor(matrix, config.anchor_low, 0);
  const std::size_t high = resolve_anchor(matrix, config.anchor_high, matrix.rows() - 1);
  if (low == high) throw InputError("anchor documents must be distinct");
  ScalingResult result = detail::fit_dense(matrix.dense(), config, start, low, high);
  result.doc_ids = matrix.doc_ids();
  result.feature_labels = matrix.feature_labels();
  return result;
}

}  // namespace

ScalingParams initialize(const CountMatrix& matrix) { return detail::initialize_dense(matrix.dense()); }

double log_likelihood(const CountMatrix& matrix, const ScalingParams& params, double clamp) {
  return detail::dense_log_likelihood(matrix.dense(), params, clamp);
}

Eigen::Vector2d document_gradient(const CountMatrix& matrix, const ScalingParams& params, std::size_t doc,
                                  double clamp) {
  const auto i = static_cast<Eigen::Index>(doc);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (Eigen::Index j = 0; j < params.psi.size(); ++j) {
    const double eta = params.alpha[i] + params.psi[j] + params.theta[i] * params.beta[j];
    if (std::abs(eta) >= clamp) continue;
    const double r = static_cast<double>(matrix.at(doc, static_cast<std::size_t>(j))) - std::exp(eta);
    g[0] += r;
    g[1] += r * params.beta[j];
  }
  return g;
}

Eigen::Vector2d feature_gradient(const CountMatrix& matrix, const ScalingParams& params, std::size_t feature,
                                 double clamp) {
  const auto j = static_cast<Eigen::Index>(feature);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < params.alpha.size(); ++i) {
    const double eta = params.alpha[i] + params.psi[j] + params.theta[i] * params.beta[j];
    if (std::abs(eta) >= clamp) continue;
    const double r = static_cast<double>(matrix.at(static_cast<std::size_t>(i), feature)) - std::exp(eta);
    g[0] += r;
    g[1] += r * params.theta[i];
  }
  return g;
}

ScalingResult fit(const CountMatrix& matrix, const FitConfig& config) { return fit_matrix(matrix, config, nullptr); }

ScalingResult fit(const CountMatrix& matrix, const FitConfig& config, const ScalingParams& start) {
  return fit_matrix(matrix, config, &start);
}

double pearson_dispersion(const CountMatrix& matrix, const ScalingParams& params, double clamp) {
  return detail::dispersion_dense(matrix.dense(), params, clamp);
}

void apply_analytic_errors(const CountMatrix& matrix, ScalingResult& result, double level) {
  const auto& p = result.params;
  const Eigen::Index n = p.alpha.size();
  if (static_cast<std::size_t>(n) != matrix.rows()) throw InputError("result does not match the matrix");
  // Two-sided normal quantile via the inverse error function is not in the
  // standard library; the common levels are tabulated.
  double z = 0.0;
  if (std::abs(level - 0.95) < 1e-12) {
    z = 1.959963984540054;
  } else if (std::abs(level - 0.90) < 1e-12) {
    z = 1.6448536269514722;
  } else if (std::abs(level - 0.99) < 1e-12) {
    z = 2.5758293035489004;
  } else {
    throw InputError("analytic intervals support levels 0.90, 0.95 and 0.99");
  }
  const Eigen::MatrixXd eta = p.linear_predictor();
  result.theta_se.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double h00 = 0, h01 = 0, h11 = 0;
    for (Eigen::Index j = 0; j < p.psi.size(); ++j) {
      const double mu = std::exp(std::min(eta(i, j), 30.0));
      h00 += mu;
      h01 += mu * p.beta[j];
      h11 += mu * p.beta[j] * p.beta[j];
    }
    const double det = h00 * h11 - h01 * h01;
    result.theta_se[i] = det > 0 ? std::sqrt(h00 / det) : std::numeric_limits<double>::infinity();
  }
  result.theta_ci_low = p.theta - z * result.theta_se;
  result.theta_ci_high = p.theta + z * result.theta_se;
  result.uncertainty = UncertaintyMethod::analytic;
}

void write_positions_csv(std::ostream& out, const ScalingResult& result,
                         const std::map<std::string, std::map<std::string, std::string>>& metadata) {
  std::set<std::string> keys;
  for (const auto& id : result.doc_ids) {
    if (auto it = metadata.find(id); it != metadata.end()) {
      for (const auto& [key, value] : it->second) keys.insert(key);
    }
  }
  std::vector<std::string> header{"doc_id", "theta", "se", "ci_low", "ci_high", "alpha"};
  header.insert(header.end(), keys.begin(), keys.end());
  csv::write_row(out, header);
  const auto& p = result.params;
  for (std::size_t i = 0; i < result.doc_ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    std::vector<std::string> row{result.doc_ids[i], csv::format_number(p.theta[k])};
    if (result.has_intervals()) {
      row.push_back(csv::format_number(result.theta_se[k]));
      row.push_back(csv::format_number(result.theta_ci_low[k]));
      row.push_back(csv::format_number(result.theta_ci_high[k]));
    } else {
      row.insert(row.end(), 3, std::string());
    }
    row.push_back(csv::format_number(p.alpha[k]));
    const auto it = metadata.find(result.doc_ids[i]);
    for (const auto& key : keys) {
      std::string value;
      if (it != metadata.end()) {
        if (auto v = it->second.find(key); v != it->second.end()) value = v->second;
      }
      row.push_back(std::move(value));
    }
    csv::write_row(out, row);
  }
}

void write_features_csv(std::ostream& out, const ScalingResult& result) {
  out << "feature,beta,psi\n";
  for (std::size_t j = 0; j < result.feature_labels.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    csv::write_row(out, {result.feature_labels[j], csv::format_number(result.params.beta[k]),
                         csv::format_number(result.params.psi[k])});
  }
}

}  // namespace cfish
