#pragma once

// Central finite-difference check of CnnModel<double>::loss_and_gradients.

#include <algorithm>
#include <cmath>
#include <vector>

#include "checkerboard/cnn.hpp"

namespace gradcheck {

using checkerboard::Rng;
using checkerboard::cnn::CnnModel;
using checkerboard::cnn::ForwardCache;
using checkerboard::cnn::ForwardOptions;
using Mat = checkerboard::cnn::Matrix<double>;

struct TensorError {
  std::size_t tensor = 0;
  double relative_error = 0;
};

struct CheckResult {
  std::vector<TensorError> errors;
  /// Some perturbation flipped a ReLU on or off, so the loss is not smooth
  /// over [p - h, p + h] and the difference quotient is no reference there.
  bool kink_crossed = false;
};

// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
// for every parameter tensor. Running statistics are restored around every
// loss evaluation so each call sees the same model state.
inline CheckResult check(CnnModel<double>& model, const Mat& images, const Mat& targets,
                         const ForwardOptions& options, std::uint64_t dropout_seed, double h = 1e-4,
                         double floor = 1e-7) {
  const auto saved_mean = model.running_mean();
  const auto saved_var = model.running_var();
  // Same loss as loss_and_gradients, plus the ReLU activity pattern.
  auto evaluate = [&](std::vector<Mat>* masks) {
    Rng rng(dropout_seed);
    ForwardCache<double> cache;
    const Mat out = model.forward(images, options, &rng, &cache);
    model.running_mean() = saved_mean;
    model.running_var() = saved_var;
    if (masks) {
      masks->clear();
      for (const auto& b : cache.blocks) masks->push_back((b.activated.array() > 0.0).cast<double>().matrix());
    }
    return (out - targets).squaredNorm() / static_cast<double>(out.size());
  };

  CheckResult result;
  std::vector<Mat> analytic;
  model.loss_and_gradients(images, targets, options, dropout_seed, &analytic);
  model.running_mean() = saved_mean;
  model.running_var() = saved_var;
  std::vector<Mat> base_masks, masks;
  evaluate(&base_masks);

  auto& params = model.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    Mat numeric(params[t].rows(), params[t].cols());
    for (Eigen::Index i = 0; i < params[t].size(); ++i) {
      double& p = params[t].data()[i];
      const double keep = p;
      p = keep + h;
      const double up = evaluate(&masks);
      if (masks != base_masks) result.kink_crossed = true;
      p = keep - h;
      const double down = evaluate(&masks);
      if (masks != base_masks) result.kink_crossed = true;
      p = keep;
      numeric.data()[i] = (up - down) / (2 * h);
    }
    const double scale = std::max({analytic[t].norm(), numeric.norm(), floor});
    result.errors.push_back({t, (analytic[t] - numeric).norm() / scale});
  }
  return result;
}

}  // namespace gradcheck
