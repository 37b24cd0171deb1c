#include "checkerboard/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "checkerboard/error.hpp"

namespace checkerboard::linear {

LinearModel fit(const data::LabeledDataset& dataset, int target, FitOptions options) {
  if (target < 0 || target > 2) throw ArgumentError("target must be 0, 1 or 2");
  if (dataset.empty()) throw ArgumentError("cannot fit an empty dataset");
  const int p = dataset.grid.elements();
  const int dim = p + 1;

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd row(dim);
  for (const auto& s : dataset.samples) {
    for (int g = 0; g < p; ++g) row[g] = s.microstructure.is_soft(g) ? 1.0 : 0.0;
    row[p] = 1.0;
    normal.selfadjointView<Eigen::Lower>().rankUpdate(row);
    rhs += data::label(s.properties, target) * row;
  }
  normal = normal.selfadjointView<Eigen::Lower>();

  LinearModel model;
  model.grid = dataset.grid;
  model.target = target;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  Eigen::VectorXd coef;
  if (qr.rank() == dim) {
    coef = qr.solve(rhs);
  } else if (options.ridge_fallback) {
    Eigen::MatrixXd regularized = normal;
    regularized.diagonal().array() += options.ridge_lambda * std::max(1.0, normal.diagonal().maxCoeff());
    coef = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(regularized).solve(rhs);
    model.ridge_used = true;
  } else {
    throw NumericError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                       std::to_string(dim) + ") and ridge fallback is disabled");
  }
  model.weights.assign(coef.data(), coef.data() + p);
  model.intercept = coef[p];
  return model;
}

double predict(const LinearModel& model, const Microstructure& m) {
  if (m.size() != model.weights.size()) throw ArgumentError("microstructure does not match model size");
  double y = model.intercept;
  for (std::size_t g = 0; g < m.size(); ++g)
    if (m.bits()[g]) y += model.weights[g];
  return y;
}

std::vector<double> predict(const LinearModel& model, const data::LabeledDataset& dataset) {
  std::vector<double> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) out.push_back(predict(model, s.microstructure));
  return out;
}

double r_squared(const LinearModel& model, const data::LabeledDataset& dataset) {
  const auto truth = dataset.column(model.target);
  const auto pred = predict(model, dataset);
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sse += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    sst += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(sst > 0.0)) throw NumericError("R^2 undefined: constant labels");
  return 1.0 - sse / sst;
}

double training_mse(const LinearModel& model, const data::LabeledDataset& dataset) {
  const auto truth = dataset.column(model.target);
  const auto pred = predict(model, dataset);
  double sse = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sse += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return sse / static_cast<double>(truth.size());
}

std::vector<int> rank_weights(const LinearModel& model) {
  const auto& w = model.weights;
  std::vector<std::size_t> positive, negative;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) positive.push_back(i);
    if (w[i] < 0.0) negative.push_back(i);
  }
  std::stable_sort(positive.begin(), positive.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  std::stable_sort(negative.begin(), negative.end(), [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
  std::vector<int> ranks(w.size(), 0);
  for (std::size_t r = 0; r < positive.size(); ++r) ranks[positive[r]] = static_cast<int>(r + 1);
  for (std::size_t r = 0; r < negative.size(); ++r) ranks[negative[r]] = -static_cast<int>(r + 1);
  return ranks;
}

void write_model_csv(const std::filesystem::path& path, const LinearModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "element,weight\n";
  for (std::size_t i = 0; i < model.weights.size(); ++i) out << i << ',' << model.weights[i] << '\n';
  out << "intercept," << model.intercept << '\n';
}

LinearModel read_model_csv(const std::filesystem::path& path, int target) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open linear model " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "element,weight") throw FormatError("linear model CSV: bad header");
  LinearModel model;
  model.target = target;
  bool have_intercept = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("linear model CSV: malformed row '" + line + "'");
    const std::string key = line.substr(0, comma);
    const double value = std::stod(line.substr(comma + 1));
    if (key == "intercept") {
      model.intercept = value;
      have_intercept = true;
    } else if (std::stoul(key) != model.weights.size()) {
      throw FormatError("linear model CSV: element rows out of order");
    } else {
      model.weights.push_back(value);
    }
  }
  if (!have_intercept) throw FormatError("linear model CSV: missing intercept row");
  for (GridSize g : {kGrid4x2, kGrid8x4, kGrid16x8})
    if (static_cast<std::size_t>(g.elements()) == model.weights.size()) model.grid = g;
  validate_grid(model.grid);
  return model;
}

void write_rank_grid_csv(const std::filesystem::path& path, const LinearModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto ranks = rank_weights(model);
  out << "row";
  for (int c = 0; c < model.grid.width; ++c) out << ",c" << c;
  out << '\n';
  for (int r = 0; r < model.grid.height; ++r) {
    out << r;
    for (int c = 0; c < model.grid.width; ++c) out << ',' << ranks[static_cast<std::size_t>(r * model.grid.width + c)];
    out << '\n';
  }
}

}  // namespace checkerboard::linear
