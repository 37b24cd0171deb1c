#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "checkerboard/dataset.hpp"
#include "checkerboard/rng.hpp"

namespace checkerboard::cnn {

/// Dense N-d array used at the model boundary: (batch, channels, height,
/// width) images or (batch, features) predictions.
template <typename Scalar>
struct Tensor {
  std::vector<int> shape;
  std::vector<Scalar> values;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<Scalar> v);
  std::size_t element_count() const;
  bool all_finite() const;
};

struct CnnConfig {
  int height = 4;
  int width = 8;
  int kernel = 3;
  /// Output channels of each conv + batch-norm + ReLU block (input has 1 channel).
  std::vector<int> channels{16, 32, 32, 64, 64, 64};
  double dropout = 0.25;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  void validate() const;
  int pixels() const { return height * width; }
  int flat_features() const { return channels.back() * pixels(); }
  friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

CnnConfig default_config(GridSize grid);

/// Per-property z-score constants for the three labels.
struct LabelNormalizer {
  std::array<double, 3> mean{0, 0, 0};
  std::array<double, 3> stddev{1, 1, 1};

  static LabelNormalizer fit(const data::LabeledDataset& dataset);
  double normalize(int property, double value) const { return (value - mean[property]) / stddev[property]; }
  double denormalize(int property, double z) const { return z * stddev[property] + mean[property]; }
};

enum class Mode { Train, Infer };

struct ForwardOptions {
  Mode mode = Mode::Infer;
  /// Train mode only: use running statistics instead of batch statistics and
  /// leave them untouched, while keeping dropout active.
  bool freeze_batch_norm = false;
};

enum class ParamKind { ConvWeight, ConvBias, BnGamma, BnBeta, DenseWeight, DenseBias };
const char* param_kind_name(ParamKind kind);

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Shape-preserving conv / batch-norm / ReLU primitives. Activations are
/// (batch * height * width) x channels, row index = b * H * W + y * W + x.
namespace ops {

template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar>& x, int batch, int height, int width, int kernel);
template <typename Scalar>
Matrix<Scalar> col2im(const Matrix<Scalar>& cols, int batch, int height, int width, int channels,
                      int kernel);
/// `weights` is (in_channels * kernel^2) x out_channels, row = ci * k^2 + ky * k + kx.
template <typename Scalar>
Matrix<Scalar> conv_forward(const Matrix<Scalar>& x, const Matrix<Scalar>& weights,
                            const Matrix<Scalar>& bias, int batch, int height, int width, int kernel);

/// Batch statistics normalization (before gamma / beta).
template <typename Scalar>
Matrix<Scalar> batch_normalize(const Matrix<Scalar>& z, double epsilon);

}  // namespace ops

template <typename Scalar>
struct ForwardCache;

/// Six (by default) conv + batch-norm + ReLU blocks, dropout, and a dense
/// head to (modulus, strength, toughness) in normalized label space.
template <typename Scalar>
class CnnModel {
 public:
  using Mat = Matrix<Scalar>;

  CnnModel() = default;
  CnnModel(CnnConfig config, std::uint64_t init_seed);

  const CnnConfig& config() const noexcept { return config_; }
  int block_count() const noexcept { return static_cast<int>(config_.channels.size()); }

  /// Trainable tensors: per block conv weight, conv bias, gamma, beta; then
  /// dense weight ((C*H*W) x 3) and dense bias (1 x 3).
  std::vector<Mat>& parameters() noexcept { return params_; }
  const std::vector<Mat>& parameters() const noexcept { return params_; }
  ParamKind kind_of(std::size_t tensor) const;

  std::vector<Mat>& running_mean() noexcept { return running_mean_; }
  const std::vector<Mat>& running_mean() const noexcept { return running_mean_; }
  std::vector<Mat>& running_var() noexcept { return running_var_; }
  const std::vector<Mat>& running_var() const noexcept { return running_var_; }

  LabelNormalizer& normalizer() noexcept { return normalizer_; }
  const LabelNormalizer& normalizer() const noexcept { return normalizer_; }

  /// images: (H*W) x batch, one sample per column in to_image pixel order.
  /// Returns batch x 3 outputs in normalized label space. Train mode needs a
  /// dropout RNG and updates running statistics unless frozen. Throws
  /// ArgumentError on shape mismatch and NumericError on non-finite values.
  Mat forward(const Mat& images, const ForwardOptions& options, Rng* dropout_rng = nullptr,
              ForwardCache<Scalar>* cache = nullptr);
  /// Infer-mode forward that leaves the model untouched (safe to share).
  Mat infer(const Mat& images) const;

  /// Gradients of the cached forward pass for an upstream d(loss)/d(output).
  std::vector<Mat> backward(const ForwardCache<Scalar>& cache, const Mat& output_grad) const;

  /// MSE over batch x 3 normalized outputs against normalized targets, and
  /// its gradients. `dropout_seed` fixes the dropout mask.
  Scalar loss_and_gradients(const Mat& images, const Mat& targets, const ForwardOptions& options,
                            std::uint64_t dropout_seed, std::vector<Mat>* gradients);

  /// Physical-unit predictions (infer mode).
  Tensor<Scalar> forward_tensor(const Tensor<Scalar>& images, const ForwardOptions& options,
                                Rng* dropout_rng = nullptr);
  std::vector<fem::CompositeProperties> predict(std::span<const Microstructure> structures) const;
  std::vector<fem::CompositeProperties> predict(const data::LabeledDataset& dataset) const;

 private:
  /// Batch statistics of each block are returned through `batch_mean` /
  /// `batch_var` when batch-stat normalization is in effect.
  Mat forward_pass(const Mat& images, bool batch_stats, bool dropout, Rng* dropout_rng,
                   ForwardCache<Scalar>* cache, std::vector<Mat>* batch_mean,
                   std::vector<Mat>* batch_var) const;

  CnnConfig config_;
  std::vector<Mat> params_;
  std::vector<Mat> running_mean_;
  std::vector<Mat> running_var_;
  LabelNormalizer normalizer_;
};

template <typename Scalar>
struct BlockCache {
  Matrix<Scalar> cols;
  Matrix<Scalar> xhat;
  Matrix<Scalar> inv_std;  // 1 x C
  Matrix<Scalar> activated;
};

template <typename Scalar>
struct ForwardCache {
  int batch = 0;
  bool batch_stats = true;
  std::vector<BlockCache<Scalar>> blocks;
  Matrix<Scalar> features;  // batch x (C*H*W), after dropout
  Matrix<Scalar> dropout_mask;
};

/// Images of the given microstructures, (H*W) x count.
template <typename Scalar>
Matrix<Scalar> image_batch(std::span<const Microstructure> structures);

template <typename Scalar>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Matrix<Scalar>> first_moment;
  std::vector<Matrix<Scalar>> second_moment;
};

/// Bias-corrected Adam update; increments state.step.
template <typename Scalar>
void adam_step(std::vector<Matrix<Scalar>>& params, const std::vector<Matrix<Scalar>>& grads,
               AdamState<Scalar>& state, double learning_rate);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 128;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct EpochLoss {
  int epoch = 0;
  /// Mean normalized-space MSE of the epoch's training mini-batches.
  std::array<double, 3> train{};
  /// Normalized-space MSE of an infer-mode pass over the test set (NaN if empty).
  std::array<double, 3> test{};
  double train_total() const { return (train[0] + train[1] + train[2]) / 3.0; }
  double test_total() const { return (test[0] + test[1] + test[2]) / 3.0; }
};

struct TrainResult {
  std::vector<EpochLoss> history;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Mini-batch Adam on the MSE of z-scored labels. Label constants come from
/// the training set. The training set is put in canonical order first, so the
/// result depends only on its contents and `seed`. Aborts with NumericError
/// when the loss becomes non-finite.
template <typename Scalar>
TrainResult train(CnnModel<Scalar>& model, const data::LabeledDataset& train_set,
                  const data::LabeledDataset& test_set, const TrainConfig& config, std::uint64_t seed,
                  const EpochCallback& on_epoch = {});

void write_loss_history_csv(const std::filesystem::path& path, const TrainResult& result);

/// Checkpoint layout (little endian): "CBNN", version u8, config (height,
/// width, kernel, block count, channels as u16; dropout, momentum, epsilon as
/// f64), then every parameter and running statistic and the label constants
/// as f64. Conv weights are written (out, in, ky, kx); dense weights (out, in).
inline constexpr std::uint8_t kCheckpointVersion = 1;
template <typename Scalar>
void write_checkpoint(std::ostream& out, const CnnModel<Scalar>& model);
template <typename Scalar>
CnnModel<Scalar> read_checkpoint(std::istream& in);
template <typename Scalar>
void write_checkpoint(const std::filesystem::path& path, const CnnModel<Scalar>& model);
template <typename Scalar>
CnnModel<Scalar> read_checkpoint(const std::filesystem::path& path);

}  // namespace checkerboard::cnn
