#include "checkerboard/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <tuple>
#include <numeric>
#include <string>

#include "checkerboard/error.hpp"

namespace checkerboard::cnn {

template <typename Scalar>
Tensor<Scalar>::Tensor(std::vector<int> s, std::vector<Scalar> v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != element_count())
    throw ArgumentError("tensor value count does not match its shape");
}

template <typename Scalar>
std::size_t Tensor<Scalar>::element_count() const {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return shape.empty() ? 0 : n;
}

template <typename Scalar>
bool Tensor<Scalar>::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](Scalar v) { return std::isfinite(v); });
}

void CnnConfig::validate() const {
  if (height < 1 || width < 1) throw ConfigError("image dimensions must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel size must be odd and positive");
  if (channels.empty()) throw ConfigError("at least one conv block is required");
  for (int c : channels)
    if (c < 1) throw ConfigError("channel counts must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw ConfigError("batch-norm momentum must lie in (0, 1]");
  if (!(bn_epsilon > 0.0)) throw ConfigError("batch-norm epsilon must be positive");
}

CnnConfig default_config(GridSize grid) {
  validate_grid(grid);
  CnnConfig c;
  c.height = grid.height;
  c.width = grid.width;
  return c;
}

LabelNormalizer LabelNormalizer::fit(const data::LabeledDataset& dataset) {
  if (dataset.empty()) throw ArgumentError("cannot fit label constants on an empty dataset");
  LabelNormalizer n;
  for (int k = 0; k < 3; ++k) {
    const auto col = dataset.column(k);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= static_cast<double>(col.size());
    n.mean[static_cast<std::size_t>(k)] = mean;
    n.stddev[static_cast<std::size_t>(k)] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return n;
}

const char* param_kind_name(ParamKind kind) {
  switch (kind) {
    case ParamKind::ConvWeight: return "conv_weight";
    case ParamKind::ConvBias: return "conv_bias";
    case ParamKind::BnGamma: return "bn_gamma";
    case ParamKind::BnBeta: return "bn_beta";
    case ParamKind::DenseWeight: return "dense_weight";
    case ParamKind::DenseBias: return "dense_bias";
  }
  return "?";
}

namespace ops {

template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar>& x, int batch, int height, int width, int kernel) {
  const int hw = height * width;
  const int channels = static_cast<int>(x.cols());
  const int k2 = kernel * kernel;
  const int half = kernel / 2;
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(x.rows(), static_cast<Eigen::Index>(channels) * k2);
  for (int c = 0; c < channels; ++c) {
    const Scalar* src = x.col(c).data();
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        Scalar* dst = cols.col(c * k2 + ky * kernel + kx).data();
        const int dy = ky - half;
        const int dx = kx - half;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(width, width - dx);
        for (int b = 0; b < batch; ++b) {
          for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
            const int row = b * hw + y * width;
            const int src_row = b * hw + (y + dy) * width + dx;
            for (int xx = x0; xx < x1; ++xx) dst[row + xx] = src[src_row + xx];
          }
        }
      }
    }
  }
  return cols;
}

template <typename Scalar>
Matrix<Scalar> col2im(const Matrix<Scalar>& cols, int batch, int height, int width, int channels,
                      int kernel) {
  const int hw = height * width;
  const int k2 = kernel * kernel;
  const int half = kernel / 2;
  Matrix<Scalar> x = Matrix<Scalar>::Zero(cols.rows(), channels);
  for (int c = 0; c < channels; ++c) {
    Scalar* dst = x.col(c).data();
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const Scalar* src = cols.col(c * k2 + ky * kernel + kx).data();
        const int dy = ky - half;
        const int dx = kx - half;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(width, width - dx);
        for (int b = 0; b < batch; ++b) {
          for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
            const int row = b * hw + y * width;
            const int dst_row = b * hw + (y + dy) * width + dx;
            for (int xx = x0; xx < x1; ++xx) dst[dst_row + xx] += src[row + xx];
          }
        }
      }
    }
  }
  return x;
}

template <typename Scalar>
Matrix<Scalar> conv_forward(const Matrix<Scalar>& x, const Matrix<Scalar>& weights,
                            const Matrix<Scalar>& bias, int batch, int height, int width, int kernel) {
  Matrix<Scalar> z = im2col(x, batch, height, width, kernel) * weights;
  z.rowwise() += bias.row(0);
  return z;
}

template <typename Scalar>
Matrix<Scalar> batch_normalize(const Matrix<Scalar>& z, double epsilon) {
  const auto mean = z.colwise().mean();
  Matrix<Scalar> centered = z.rowwise() - mean;
  const auto var = centered.array().square().colwise().mean();
  const auto inv_std = (var + static_cast<Scalar>(epsilon)).rsqrt();
  centered.array().rowwise() *= inv_std;
  return centered;
}

}  // namespace ops

template <typename Scalar>
CnnModel<Scalar>::CnnModel(CnnConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(init_seed);
  const auto uniform = [&](Mat& m, double bound) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        m(i, j) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * bound);
  };
  const int k2 = config_.kernel * config_.kernel;
  int in_channels = 1;
  for (int out_channels : config_.channels) {
    const int fan_in = in_channels * k2;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Mat w(fan_in, out_channels);
    uniform(w, bound);
    Mat b(1, out_channels);
    uniform(b, bound);
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
    params_.push_back(Mat::Ones(1, out_channels));
    params_.push_back(Mat::Zero(1, out_channels));
    running_mean_.push_back(Mat::Zero(1, out_channels));
    running_var_.push_back(Mat::Ones(1, out_channels));
    in_channels = out_channels;
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.flat_features()));
  Mat wd(config_.flat_features(), 3);
  uniform(wd, bound);
  Mat bd(1, 3);
  uniform(bd, bound);
  params_.push_back(std::move(wd));
  params_.push_back(std::move(bd));
}

template <typename Scalar>
ParamKind CnnModel<Scalar>::kind_of(std::size_t tensor) const {
  const std::size_t block_tensors = 4 * config_.channels.size();
  if (tensor < block_tensors) {
    switch (tensor % 4) {
      case 0: return ParamKind::ConvWeight;
      case 1: return ParamKind::ConvBias;
      case 2: return ParamKind::BnGamma;
      default: return ParamKind::BnBeta;
    }
  }
  if (tensor == block_tensors) return ParamKind::DenseWeight;
  if (tensor == block_tensors + 1) return ParamKind::DenseBias;
  throw ArgumentError("parameter index out of range");
}

template <typename Scalar>
typename CnnModel<Scalar>::Mat CnnModel<Scalar>::forward_pass(const Mat& images, bool batch_stats, bool dropout,
                                                              Rng* dropout_rng, ForwardCache<Scalar>* cache,
                                                              std::vector<Mat>* batch_mean,
                                                              std::vector<Mat>* batch_var) const {
  const int hw = config_.pixels();
  if (images.rows() != hw)
    throw ArgumentError("image batch has " + std::to_string(images.rows()) + " pixels per sample, model expects " +
                        std::to_string(hw));
  const int batch = static_cast<int>(images.cols());
  if (batch < 1) throw ArgumentError("empty image batch");
  if (batch_stats && batch < 2) throw ArgumentError("batch statistics need at least two samples");
  if (dropout && config_.dropout > 0.0 && dropout_rng == nullptr)
    throw ArgumentError("train-mode dropout needs a random generator");
  const Scalar eps = static_cast<Scalar>(config_.bn_epsilon);

  if (cache) {
    cache->batch = batch;
    cache->batch_stats = batch_stats;
    cache->blocks.assign(config_.channels.size(), {});
  }
  if (batch_mean) batch_mean->clear();
  if (batch_var) batch_var->clear();

  Mat x = Eigen::Map<const Mat>(images.data(), static_cast<Eigen::Index>(hw) * batch, 1);
  for (std::size_t l = 0; l < config_.channels.size(); ++l) {
    const Mat& weight = params_[4 * l];
    const Mat& bias = params_[4 * l + 1];
    const Mat& gamma = params_[4 * l + 2];
    const Mat& beta = params_[4 * l + 3];

    Mat cols = ops::im2col(x, batch, config_.height, config_.width, config_.kernel);
    Mat z = cols * weight;
    z.rowwise() += bias.row(0);

    Eigen::Array<Scalar, 1, Eigen::Dynamic> mean;
    Eigen::Array<Scalar, 1, Eigen::Dynamic> inv_std;
    if (batch_stats) {
      mean = z.colwise().mean().array();
      z.array().rowwise() -= mean;
      const Eigen::Array<Scalar, 1, Eigen::Dynamic> var = z.array().square().colwise().mean();
      inv_std = (var + eps).rsqrt();
      if (batch_mean) batch_mean->push_back(mean.matrix());
      if (batch_var) batch_var->push_back(var.matrix());
    } else {
      z.array().rowwise() -= running_mean_[l].row(0).array();
      inv_std = (running_var_[l].row(0).array() + eps).rsqrt();
    }
    z.array().rowwise() *= inv_std;  // z now holds xhat

    Mat a = z;
    a.array().rowwise() *= gamma.row(0).array();
    a.rowwise() += beta.row(0);
    a = a.cwiseMax(Scalar(0));
    if (!a.allFinite()) throw NumericError("non-finite activation in block " + std::to_string(l));

    if (cache) {
      auto& bc = cache->blocks[l];
      bc.cols = std::move(cols);
      bc.xhat = std::move(z);
      bc.inv_std = inv_std.matrix();
      bc.activated = a;
    }
    x = std::move(a);
  }

  const int channels = config_.channels.back();
  Mat features(batch, static_cast<Eigen::Index>(channels) * hw);
  for (int c = 0; c < channels; ++c)
    for (int p = 0; p < hw; ++p)
      for (int b = 0; b < batch; ++b) features(b, c * hw + p) = x(b * hw + p, c);

  Mat mask;
  if (dropout && config_.dropout > 0.0) {
    const double keep_scale = 1.0 / (1.0 - config_.dropout);
    mask.resize(features.rows(), features.cols());
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      for (Eigen::Index i = 0; i < mask.rows(); ++i)
        mask(i, j) = uniform01(*dropout_rng) < config_.dropout ? Scalar(0) : static_cast<Scalar>(keep_scale);
    features.array() *= mask.array();
  }

  const std::size_t dense = 4 * config_.channels.size();
  Mat out = features * params_[dense];
  out.rowwise() += params_[dense + 1].row(0);
  if (!out.allFinite()) throw NumericError("non-finite network output");

  if (cache) {
    cache->features = std::move(features);
    cache->dropout_mask = std::move(mask);
  }
  return out;
}

template <typename Scalar>
typename CnnModel<Scalar>::Mat CnnModel<Scalar>::forward(const Mat& images, const ForwardOptions& options,
                                                         Rng* dropout_rng, ForwardCache<Scalar>* cache) {
  if (options.mode == Mode::Infer) return forward_pass(images, false, false, nullptr, cache, nullptr, nullptr);
  const bool batch_stats = !options.freeze_batch_norm;
  std::vector<Mat> means, vars;
  Mat out = forward_pass(images, batch_stats, true, dropout_rng, cache, &means, &vars);
  if (batch_stats) {
    const auto m = static_cast<Scalar>(config_.bn_momentum);
    const double n = static_cast<double>(images.cols()) * config_.pixels();
    const auto unbiased = static_cast<Scalar>(n / (n - 1.0));
    for (std::size_t l = 0; l < means.size(); ++l) {
      running_mean_[l] = (Scalar(1) - m) * running_mean_[l] + m * means[l];
      running_var_[l] = (Scalar(1) - m) * running_var_[l] + m * unbiased * vars[l];
    }
  }
  return out;
}

template <typename Scalar>
typename CnnModel<Scalar>::Mat CnnModel<Scalar>::infer(const Mat& images) const {
  return forward_pass(images, false, false, nullptr, nullptr, nullptr, nullptr);
}

template <typename Scalar>
std::vector<typename CnnModel<Scalar>::Mat> CnnModel<Scalar>::backward(const ForwardCache<Scalar>& cache,
                                                                      const Mat& output_grad) const {
  const int batch = cache.batch;
  const int hw = config_.pixels();
  if (output_grad.rows() != batch || output_grad.cols() != 3)
    throw ArgumentError("output gradient must be batch x 3");
  if (cache.blocks.size() != config_.channels.size()) throw ArgumentError("forward cache is empty");

  std::vector<Mat> grads(params_.size());
  const std::size_t dense = 4 * config_.channels.size();
  grads[dense] = cache.features.transpose() * output_grad;
  grads[dense + 1] = output_grad.colwise().sum();

  Mat d_features = output_grad * params_[dense].transpose();
  if (cache.dropout_mask.size() > 0) d_features.array() *= cache.dropout_mask.array();

  const int channels = config_.channels.back();
  Mat d_act(static_cast<Eigen::Index>(batch) * hw, channels);
  for (int c = 0; c < channels; ++c)
    for (int p = 0; p < hw; ++p)
      for (int b = 0; b < batch; ++b) d_act(b * hw + p, c) = d_features(b, c * hw + p);

  const Scalar n = static_cast<Scalar>(static_cast<double>(batch) * hw);
  for (std::size_t li = config_.channels.size(); li-- > 0;) {
    const auto& bc = cache.blocks[li];
    Mat dy = (bc.activated.array() > Scalar(0)).select(d_act.array(), Scalar(0)).matrix();

    grads[4 * li + 3] = dy.colwise().sum();
    grads[4 * li + 2] = (dy.array() * bc.xhat.array()).colwise().sum().matrix();

    Mat dxhat = dy;
    dxhat.array().rowwise() *= params_[4 * li + 2].row(0).array();

    Mat dz;
    if (cache.batch_stats) {
      const Eigen::Array<Scalar, 1, Eigen::Dynamic> sum_d = dxhat.colwise().sum().array();
      const Eigen::Array<Scalar, 1, Eigen::Dynamic> sum_dx = (dxhat.array() * bc.xhat.array()).colwise().sum();
      Mat tmp = bc.xhat;
      tmp.array().rowwise() *= sum_dx;
      dz = n * dxhat - tmp;
      dz.array().rowwise() -= sum_d;
      dz.array().rowwise() *= bc.inv_std.row(0).array() / n;
    } else {
      dz = std::move(dxhat);
      dz.array().rowwise() *= bc.inv_std.row(0).array();
    }

    grads[4 * li] = bc.cols.transpose() * dz;
    grads[4 * li + 1] = dz.colwise().sum();
    if (li > 0) {
      const Mat d_cols = dz * params_[4 * li].transpose();
      d_act = ops::col2im(d_cols, batch, config_.height, config_.width, config_.channels[li - 1], config_.kernel);
    }
  }
  return grads;
}

template <typename Scalar>
Scalar CnnModel<Scalar>::loss_and_gradients(const Mat& images, const Mat& targets, const ForwardOptions& options,
                                            std::uint64_t dropout_seed, std::vector<Mat>* gradients) {
  Rng rng(dropout_seed);
  ForwardCache<Scalar> cache;
  const Mat out = forward(images, options, &rng, gradients ? &cache : nullptr);
  if (targets.rows() != out.rows() || targets.cols() != 3) throw ArgumentError("targets must be batch x 3");
  const Mat residual = out - targets;
  const Scalar count = static_cast<Scalar>(residual.size());
  if (gradients) *gradients = backward(cache, (Scalar(2) / count) * residual);
  return residual.squaredNorm() / count;
}

template <typename Scalar>
Tensor<Scalar> CnnModel<Scalar>::forward_tensor(const Tensor<Scalar>& images, const ForwardOptions& options,
                                                Rng* dropout_rng) {
  if (images.shape.size() != 4 || images.shape[1] != 1 || images.shape[2] != config_.height ||
      images.shape[3] != config_.width)
    throw ArgumentError("expected images of shape (batch, 1, " + std::to_string(config_.height) + ", " +
                        std::to_string(config_.width) + ")");
  const int batch = images.shape[0];
  const Mat x = Eigen::Map<const Mat>(images.values.data(), config_.pixels(), batch);
  const Mat out = forward(x, options, dropout_rng);
  Tensor<Scalar> result({batch, 3}, std::vector<Scalar>(static_cast<std::size_t>(batch) * 3));
  for (int b = 0; b < batch; ++b)
    for (int k = 0; k < 3; ++k)
      result.values[static_cast<std::size_t>(b * 3 + k)] =
          static_cast<Scalar>(normalizer_.denormalize(k, static_cast<double>(out(b, k))));
  return result;
}

template <typename Scalar>
Matrix<Scalar> image_batch(std::span<const Microstructure> structures) {
  if (structures.empty()) return {};
  const auto pixels = static_cast<Eigen::Index>(structures.front().size());
  Matrix<Scalar> x(pixels, static_cast<Eigen::Index>(structures.size()));
  for (std::size_t j = 0; j < structures.size(); ++j) {
    if (static_cast<Eigen::Index>(structures[j].size()) != pixels) throw ArgumentError("mixed grid sizes in batch");
    const auto bits = structures[j].bits();
    for (Eigen::Index p = 0; p < pixels; ++p)
      x(p, static_cast<Eigen::Index>(j)) = bits[static_cast<std::size_t>(p)] ? Scalar(1) : Scalar(0);
  }
  return x;
}

template <typename Scalar>
std::vector<fem::CompositeProperties> CnnModel<Scalar>::predict(std::span<const Microstructure> structures) const {
  constexpr std::size_t kChunk = 512;
  std::vector<fem::CompositeProperties> out;
  out.reserve(structures.size());
  for (std::size_t start = 0; start < structures.size(); start += kChunk) {
    const auto chunk = structures.subspan(start, std::min(kChunk, structures.size() - start));
    if (chunk.front().grid() != GridSize{config_.width, config_.height})
      throw ArgumentError("microstructure grid does not match the model");
    const Mat y = infer(image_batch<Scalar>(chunk));
    for (Eigen::Index b = 0; b < y.rows(); ++b) {
      fem::CompositeProperties p;
      p.modulus = normalizer_.denormalize(0, static_cast<double>(y(b, 0)));
      p.strength = normalizer_.denormalize(1, static_cast<double>(y(b, 1)));
      p.toughness = normalizer_.denormalize(2, static_cast<double>(y(b, 2)));
      out.push_back(p);
    }
  }
  return out;
}

template <typename Scalar>
std::vector<fem::CompositeProperties> CnnModel<Scalar>::predict(const data::LabeledDataset& dataset) const {
  std::vector<Microstructure> structures;
  structures.reserve(dataset.size());
  for (const auto& s : dataset.samples) structures.push_back(s.microstructure);
  return predict(std::span<const Microstructure>(structures));
}

template <typename Scalar>
void adam_step(std::vector<Matrix<Scalar>>& params, const std::vector<Matrix<Scalar>>& grads,
               AdamState<Scalar>& state, double learning_rate) {
  if (grads.size() != params.size()) throw ArgumentError("gradient count does not match parameter count");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
    }
  }
  ++state.step;
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const auto bc1 = static_cast<Scalar>(1.0 - std::pow(state.beta1, static_cast<double>(state.step)));
  const auto bc2_sqrt = static_cast<Scalar>(std::sqrt(1.0 - std::pow(state.beta2, static_cast<double>(state.step))));
  const auto lr = static_cast<Scalar>(learning_rate);
  const auto eps = static_cast<Scalar>(state.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = grads[i].array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params[i].array() -= (lr / bc1) * m / (v.sqrt() / bc2_sqrt + eps);
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2 (batch normalization)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

namespace {

bool canonical_less(const data::LabeledSample& a, const data::LabeledSample& b) {
  if (a.microstructure != b.microstructure) return a.microstructure < b.microstructure;
  const auto ka = std::tie(a.properties.modulus, a.properties.strength, a.properties.toughness);
  const auto kb = std::tie(b.properties.modulus, b.properties.strength, b.properties.toughness);
  return ka < kb;
}

template <typename Scalar>
Matrix<Scalar> normalized_targets(const data::LabeledDataset& ds, const LabelNormalizer& n) {
  Matrix<Scalar> t(static_cast<Eigen::Index>(ds.size()), 3);
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (int k = 0; k < 3; ++k)
      t(static_cast<Eigen::Index>(i), k) = static_cast<Scalar>(n.normalize(k, data::label(ds.samples[i].properties, k)));
  return t;
}

template <typename Scalar>
Matrix<Scalar> dataset_images(const data::LabeledDataset& ds) {
  std::vector<Microstructure> s;
  s.reserve(ds.size());
  for (const auto& x : ds.samples) s.push_back(x.microstructure);
  return image_batch<Scalar>(s);
}

}  // namespace

template <typename Scalar>
TrainResult train(CnnModel<Scalar>& model, const data::LabeledDataset& train_set,
                  const data::LabeledDataset& test_set, const TrainConfig& config, std::uint64_t seed,
                  const EpochCallback& on_epoch) {
  using Mat = Matrix<Scalar>;
  config.validate();
  if (train_set.size() < 2) throw ArgumentError("training needs at least two samples");
  const GridSize model_grid{model.config().width, model.config().height};
  if (train_set.grid != model_grid || (!test_set.empty() && test_set.grid != model_grid))
    throw ArgumentError("dataset grid does not match the model");

  data::LabeledDataset ordered = train_set;
  std::sort(ordered.samples.begin(), ordered.samples.end(), canonical_less);

  model.normalizer() = LabelNormalizer::fit(ordered);
  const Mat images = dataset_images<Scalar>(ordered);
  const Mat targets = normalized_targets<Scalar>(ordered, model.normalizer());
  const Mat test_images = dataset_images<Scalar>(test_set);
  const Mat test_targets = test_set.empty() ? Mat() : normalized_targets<Scalar>(test_set, model.normalizer());

  AdamState<Scalar> adam;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.epsilon = config.adam_epsilon;
  Rng shuffle_rng(domain_seed(seed, "shuffle"));
  Rng dropout_rng(domain_seed(seed, "dropout"));

  const std::size_t n = ordered.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const int pixels = model.config().pixels();

  TrainResult result;
  ForwardCache<Scalar> cache;
  Mat batch_images(pixels, static_cast<Eigen::Index>(batch_size));
  Mat batch_targets(static_cast<Eigen::Index>(batch_size), 3);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);

    std::array<double, 3> sq_sum{0, 0, 0};
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t count = std::min(batch_size, n - start);
      if (count < 2) continue;
      batch_images.resize(pixels, static_cast<Eigen::Index>(count));
      batch_targets.resize(static_cast<Eigen::Index>(count), 3);
      for (std::size_t j = 0; j < count; ++j) {
        batch_images.col(static_cast<Eigen::Index>(j)) = images.col(static_cast<Eigen::Index>(order[start + j]));
        batch_targets.row(static_cast<Eigen::Index>(j)) = targets.row(static_cast<Eigen::Index>(order[start + j]));
      }
      const Mat out = model.forward(batch_images, {Mode::Train, false}, &dropout_rng, &cache);
      const Mat residual = out - batch_targets;
      for (int k = 0; k < 3; ++k) sq_sum[static_cast<std::size_t>(k)] += static_cast<double>(residual.col(k).squaredNorm());
      seen += count;
      const double total = sq_sum[0] + sq_sum[1] + sq_sum[2];
      if (!std::isfinite(total))
        throw NumericError("training diverged: non-finite loss in epoch " + std::to_string(epoch) + " at sample " +
                           std::to_string(start));
      const auto grads = model.backward(cache, (Scalar(2) / static_cast<Scalar>(residual.size())) * residual);
      adam_step(model.parameters(), grads, adam, config.learning_rate);
    }

    EpochLoss loss;
    loss.epoch = epoch;
    for (std::size_t k = 0; k < 3; ++k) loss.train[k] = sq_sum[k] / static_cast<double>(std::max<std::size_t>(seen, 1));
    if (test_set.empty()) {
      loss.test.fill(std::numeric_limits<double>::quiet_NaN());
    } else {
      std::array<double, 3> test_sum{0, 0, 0};
      constexpr Eigen::Index kChunk = 1024;
      for (Eigen::Index start = 0; start < test_images.cols(); start += kChunk) {
        const Eigen::Index count = std::min(kChunk, test_images.cols() - start);
        const Mat out = model.infer(test_images.middleCols(start, count));
        const Mat residual = out - test_targets.middleRows(start, count);
        for (int k = 0; k < 3; ++k) test_sum[static_cast<std::size_t>(k)] += static_cast<double>(residual.col(k).squaredNorm());
      }
      for (std::size_t k = 0; k < 3; ++k) loss.test[k] = test_sum[k] / static_cast<double>(test_set.size());
    }
    result.history.push_back(loss);
    if (on_epoch) on_epoch(loss);
  }
  return result;
}

void write_loss_history_csv(const std::filesystem::path& path, const TrainResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17)
      << "epoch,train_modulus,train_strength,train_toughness,train_total,test_modulus,test_strength,"
         "test_toughness,test_total\n";
  for (const auto& e : result.history) {
    out << e.epoch;
    for (double v : e.train) out << ',' << v;
    out << ',' << e.train_total();
    for (double v : e.test) out << ',' << v;
    out << ',' << e.test_total() << '\n';
  }
}

template struct Tensor<float>;
template struct Tensor<double>;
template class CnnModel<float>;
template class CnnModel<double>;
template Matrix<float> image_batch<float>(std::span<const Microstructure>);
template Matrix<double> image_batch<double>(std::span<const Microstructure>);
template void adam_step<float>(std::vector<Matrix<float>>&, const std::vector<Matrix<float>>&, AdamState<float>&, double);
template void adam_step<double>(std::vector<Matrix<double>>&, const std::vector<Matrix<double>>&, AdamState<double>&,
                                double);
template TrainResult train<float>(CnnModel<float>&, const data::LabeledDataset&, const data::LabeledDataset&,
                                  const TrainConfig&, std::uint64_t, const EpochCallback&);
template TrainResult train<double>(CnnModel<double>&, const data::LabeledDataset&, const data::LabeledDataset&,
                                   const TrainConfig&, std::uint64_t, const EpochCallback&);

namespace ops {
template Matrix<float> im2col<float>(const Matrix<float>&, int, int, int, int);
template Matrix<double> im2col<double>(const Matrix<double>&, int, int, int, int);
template Matrix<float> col2im<float>(const Matrix<float>&, int, int, int, int, int);
template Matrix<double> col2im<double>(const Matrix<double>&, int, int, int, int, int);
template Matrix<float> conv_forward<float>(const Matrix<float>&, const Matrix<float>&, const Matrix<float>&, int, int,
                                           int, int);
template Matrix<double> conv_forward<double>(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&, int,
                                             int, int, int);
template Matrix<float> batch_normalize<float>(const Matrix<float>&, double);
template Matrix<double> batch_normalize<double>(const Matrix<double>&, double);
}  // namespace ops

}  // namespace checkerboard::cnn
