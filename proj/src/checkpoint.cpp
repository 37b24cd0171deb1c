#include <fstream>
#include <string>

#include "checkerboard/binary_io.hpp"
#include "checkerboard/cnn.hpp"
#include "checkerboard/error.hpp"

namespace checkerboard::cnn {
namespace {

template <typename Scalar>
void put_row(std::ostream& out, const Matrix<Scalar>& row) {
  for (Eigen::Index i = 0; i < row.size(); ++i) binary::put_f64(out, static_cast<double>(row(0, i)));
}

template <typename Scalar>
void get_row(std::istream& in, Matrix<Scalar>& row, const char* what) {
  for (Eigen::Index i = 0; i < row.size(); ++i) row(0, i) = static_cast<Scalar>(binary::get_f64(in, what));
}

}  // namespace

template <typename Scalar>
void write_checkpoint(std::ostream& out, const CnnModel<Scalar>& model) {
  const CnnConfig& c = model.config();
  out.write("CBNN", 4);
  binary::put_le<std::uint8_t>(out, kCheckpointVersion);
  binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.height));
  binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.width));
  binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.kernel));
  binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.channels.size()));
  for (int ch : c.channels) binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(ch));
  binary::put_f64(out, c.dropout);
  binary::put_f64(out, c.bn_momentum);
  binary::put_f64(out, c.bn_epsilon);

  const auto& p = model.parameters();
  const int k2 = c.kernel * c.kernel;
  int in_channels = 1;
  for (std::size_t l = 0; l < c.channels.size(); ++l) {
    const auto& w = p[4 * l];
    for (int co = 0; co < c.channels[l]; ++co)
      for (int ci = 0; ci < in_channels; ++ci)
        for (int k = 0; k < k2; ++k) binary::put_f64(out, static_cast<double>(w(ci * k2 + k, co)));
    put_row(out, p[4 * l + 1]);
    put_row(out, p[4 * l + 2]);
    put_row(out, p[4 * l + 3]);
    put_row(out, model.running_mean()[l]);
    put_row(out, model.running_var()[l]);
    in_channels = c.channels[l];
  }
  const auto& wd = p[4 * c.channels.size()];
  for (Eigen::Index o = 0; o < wd.cols(); ++o)
    for (Eigen::Index f = 0; f < wd.rows(); ++f) binary::put_f64(out, static_cast<double>(wd(f, o)));
  put_row(out, p[4 * c.channels.size() + 1]);
  for (double m : model.normalizer().mean) binary::put_f64(out, m);
  for (double s : model.normalizer().stddev) binary::put_f64(out, s);
  if (!out) throw IoError("failed writing checkpoint");
}

template <typename Scalar>
CnnModel<Scalar> read_checkpoint(std::istream& in) {
  binary::expect_magic(in, "CBNN", "model checkpoint");
  const auto version = binary::get_le<std::uint8_t>(in, "version");
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  CnnConfig c;
  c.height = binary::get_le<std::uint16_t>(in, "height");
  c.width = binary::get_le<std::uint16_t>(in, "width");
  c.kernel = binary::get_le<std::uint16_t>(in, "kernel");
  const auto blocks = binary::get_le<std::uint16_t>(in, "block count");
  c.channels.clear();
  for (int l = 0; l < blocks; ++l) c.channels.push_back(binary::get_le<std::uint16_t>(in, "channels"));
  c.dropout = binary::get_f64(in, "dropout");
  c.bn_momentum = binary::get_f64(in, "momentum");
  c.bn_epsilon = binary::get_f64(in, "epsilon");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  CnnModel<Scalar> model(c, 0);
  auto& p = model.parameters();
  const int k2 = c.kernel * c.kernel;
  int in_channels = 1;
  for (std::size_t l = 0; l < c.channels.size(); ++l) {
    auto& w = p[4 * l];
    for (int co = 0; co < c.channels[l]; ++co)
      for (int ci = 0; ci < in_channels; ++ci)
        for (int k = 0; k < k2; ++k) w(ci * k2 + k, co) = static_cast<Scalar>(binary::get_f64(in, "conv weight"));
    get_row(in, p[4 * l + 1], "conv bias");
    get_row(in, p[4 * l + 2], "gamma");
    get_row(in, p[4 * l + 3], "beta");
    get_row(in, model.running_mean()[l], "running mean");
    get_row(in, model.running_var()[l], "running variance");
    in_channels = c.channels[l];
  }
  auto& wd = p[4 * c.channels.size()];
  for (Eigen::Index o = 0; o < wd.cols(); ++o)
    for (Eigen::Index f = 0; f < wd.rows(); ++f) wd(f, o) = static_cast<Scalar>(binary::get_f64(in, "dense weight"));
  get_row(in, p[4 * c.channels.size() + 1], "dense bias");
  for (double& m : model.normalizer().mean) m = binary::get_f64(in, "label mean");
  for (double& s : model.normalizer().stddev) s = binary::get_f64(in, "label stddev");
  return model;
}

template <typename Scalar>
void write_checkpoint(const std::filesystem::path& path, const CnnModel<Scalar>& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, model);
}

template <typename Scalar>
CnnModel<Scalar> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint<Scalar>(in);
}

template void write_checkpoint<float>(std::ostream&, const CnnModel<float>&);
template void write_checkpoint<double>(std::ostream&, const CnnModel<double>&);
template CnnModel<float> read_checkpoint<float>(std::istream&);
template CnnModel<double> read_checkpoint<double>(std::istream&);
template void write_checkpoint<float>(const std::filesystem::path&, const CnnModel<float>&);
template void write_checkpoint<double>(const std::filesystem::path&, const CnnModel<double>&);
template CnnModel<float> read_checkpoint<float>(const std::filesystem::path&);
template CnnModel<double> read_checkpoint<double>(const std::filesystem::path&);

}  // namespace checkerboard::cnn
