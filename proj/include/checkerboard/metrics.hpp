#pragma once

#include <array>
#include <filesystem>
#include <span>

#include "checkerboard/dataset.hpp"

namespace checkerboard {

/// Percentage-error summary for one property. `mape` and `max_error` are in
/// percent; `fraction_over_5pct` is in [0, 1]. Samples with a zero ground
/// truth are skipped and counted in `excluded_zero`.
struct PropertyReport {
  double mape = 0;
  double max_error = 0;
  double fraction_over_5pct = 0;
  std::size_t evaluated = 0;
  std::size_t excluded_zero = 0;
};

struct EvalReport {
  std::array<PropertyReport, 3> properties;
};

PropertyReport percentage_errors(std::span<const double> truth, std::span<const double> predicted);
EvalReport evaluate_predictions(const data::LabeledDataset& dataset,
                                std::span<const fem::CompositeProperties> predictions);

double mean_squared_error(std::span<const double> truth, std::span<const double> predicted);

/// Columns: property,mape,max_error,frac_gt_5pct
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace checkerboard
