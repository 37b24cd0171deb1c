#pragma once

#include <filesystem>
#include <vector>

#include "checkerboard/dataset.hpp"

namespace checkerboard::linear {

/// Affine model y = A x + B over the genome bits of one property.
struct LinearModel {
  GridSize grid{};
  int target = 0;  // 0 = modulus, 1 = strength, 2 = toughness
  std::vector<double> weights;
  double intercept = 0;
  bool ridge_used = false;
};

struct FitOptions {
  bool ridge_fallback = true;
  double ridge_lambda = 1e-8;
};

/// Least squares through the normal equations with a column-pivoted QR.
/// A rank-deficient system either takes the ridge fallback or throws
/// NumericError when the fallback is disabled.
LinearModel fit(const data::LabeledDataset& dataset, int target, FitOptions options = {});

double predict(const LinearModel& model, const Microstructure& m);
std::vector<double> predict(const LinearModel& model, const data::LabeledDataset& dataset);

/// 1 - SSE / SST on the model's target column.
double r_squared(const LinearModel& model, const data::LabeledDataset& dataset);
double training_mse(const LinearModel& model, const data::LabeledDataset& dataset);

/// Signed rank per element: positive weights get +1 (largest) upward,
/// negative weights get -1 (most negative) downward, zero weights get 0.
/// Ties break by element index.
std::vector<int> rank_weights(const LinearModel& model);

/// Rows "element,weight" then a final "intercept,<B>" row.
void write_model_csv(const std::filesystem::path& path, const LinearModel& model);
/// Grid is inferred from the weight count.
LinearModel read_model_csv(const std::filesystem::path& path, int target);
/// Rank grid, one CSV row per element row, symmetry line first.
void write_rank_grid_csv(const std::filesystem::path& path, const LinearModel& model);

}  // namespace checkerboard::linear
