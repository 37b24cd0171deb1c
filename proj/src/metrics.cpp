#include "checkerboard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "checkerboard/error.hpp"

namespace checkerboard {

PropertyReport percentage_errors(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw ArgumentError("truth/prediction length mismatch");
  if (truth.empty()) throw ArgumentError("cannot evaluate an empty set");
  PropertyReport r;
  double sum = 0.0;
  std::size_t over = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) {
      ++r.excluded_zero;
      continue;
    }
    const double err = std::abs((truth[i] - predicted[i]) / truth[i]);
    sum += err;
    r.max_error = std::max(r.max_error, 100.0 * err);
    if (err > 0.05) ++over;
    ++r.evaluated;
  }
  if (r.evaluated > 0) {
    r.mape = 100.0 * sum / static_cast<double>(r.evaluated);
    r.fraction_over_5pct = static_cast<double>(over) / static_cast<double>(r.evaluated);
  }
  return r;
}

EvalReport evaluate_predictions(const data::LabeledDataset& dataset,
                                std::span<const fem::CompositeProperties> predictions) {
  if (predictions.size() != dataset.size()) throw ArgumentError("prediction count does not match dataset");
  EvalReport report;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> pred;
    pred.reserve(predictions.size());
    for (const auto& p : predictions) pred.push_back(data::label(p, k));
    report.properties[static_cast<std::size_t>(k)] = percentage_errors(dataset.column(k), pred);
  }
  return report;
}

double mean_squared_error(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw ArgumentError("invalid MSE inputs");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  return sum / static_cast<double>(truth.size());
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "property,mape,max_error,frac_gt_5pct\n";
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& p = report.properties[k];
    out << data::kPropertyNames[k] << ',' << p.mape << ',' << p.max_error << ',' << p.fraction_over_5pct << '\n';
  }
}

}  // namespace checkerboard
