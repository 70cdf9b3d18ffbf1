#pragma once

#include <Eigen/Core>

#include "communityfish/poisson_scaler.hpp"

namespace cfish::detail {

ScalingParams initialize_dense(const Eigen::MatrixXd& y);

double dense_log_likelihood(const Eigen::MatrixXd& y, const ScalingParams& params, double clamp,
                            bool* clamped = nullptr);

// Core estimator on a dense count matrix. `start` may be null. Anchors are
// row indices. Fills params, trace, convergence, anchors and dispersion.
ScalingResult fit_dense(const Eigen::MatrixXd& y, const FitConfig& config, const ScalingParams* start,
                        std::size_t anchor_low, std::size_t anchor_high);

double sample_sd(const Eigen::VectorXd& v);

}  // namespace cfish::detail
