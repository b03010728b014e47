#include "magt/transport_net.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "magt/kernels.hpp"
#include "magt/rng.hpp"

namespace magt {
namespace {

std::uint64_t fresh_version() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

void validate_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ConfigError("a network needs at least input and output dimensions");
  for (int w : dims)
    if (w < 1) throw ConfigError("layer widths must be positive");
}

constexpr double kBoundaryTol = 1e-12;

}  // namespace

double ParameterGradient::norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc);
}

ParameterGradient& ParameterGradient::operator+=(const ParameterGradient& other) {
  require_dims(values.size() == other.values.size(), "gradient sizes differ");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

TransportNet::TransportNet(std::vector<int> layer_dims, std::uint64_t seed)
    : dims_(std::move(layer_dims)), seed_(seed), version_(fresh_version()) {
  validate_dims(dims_);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
  }
  params_.assign(offset, 0.0);
}

TransportNet TransportNet::init(std::vector<int> layer_dims, std::uint64_t seed) {
  TransportNet net(std::move(layer_dims), seed);
  Rng rng(seed, Stream::Init);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double scale = std::sqrt(2.0 / net.dims_[l]);
    auto w = net.mutable_weight(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
  }
  net.touch();
  return net;
}

ConstMatrixMap TransportNet::weight(std::size_t layer) const {
  return ConstMatrixMap(params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]);
}

Eigen::Map<const Vector> TransportNet::bias(std::size_t layer) const {
  return Eigen::Map<const Vector>(params_.data() + bias_offset(layer), dims_[layer + 1]);
}

MatrixMap TransportNet::mutable_weight(std::size_t layer) {
  version_ = fresh_version();
  return MatrixMap(params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]);
}

Eigen::Map<Vector> TransportNet::mutable_bias(std::size_t layer) {
  version_ = fresh_version();
  return Eigen::Map<Vector>(params_.data() + bias_offset(layer), dims_[layer + 1]);
}

std::span<double> TransportNet::mutable_parameters() {
  version_ = fresh_version();
  return params_;
}

void TransportNet::touch() { version_ = fresh_version(); }

Matrix TransportNet::forward(const Matrix& latents) const { return run_forward(latents, nullptr); }

Matrix TransportNet::forward(const Matrix& latents, ForwardTape& tape) const {
  return run_forward(latents, &tape);
}

Matrix TransportNet::run_forward(const Matrix& latents, ForwardTape* tape) const {
  require_dims(latents.cols() == input_dim(), "forward: latent dimension mismatch");
  const auto& kern = kernels::active();
  const Eigen::Index batch = latents.rows();
  if (tape) {
    tape->activations.clear();
    tape->activations.reserve(layer_count());
    tape->activations.push_back(latents);
    tape->net_version = version_;
  }
  Matrix current = latents;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    Matrix next(batch, out);
    next.rowwise() = bias(l).transpose();
    if (batch > 0)
      kern.gemm(kernels::Trans::No, kernels::Trans::Yes, batch, out, in, 1.0, current.data(), in,
                params_.data() + weight_offset(l), in, 1.0, next.data(), out);
    const bool hidden = l + 1 < layer_count();
    if (hidden) {
      next = next.cwiseMax(0.0);
      if (tape) tape->activations.push_back(next);
    }
    current = std::move(next);
  }
  return current;
}

void TransportNet::backward_params(const ForwardTape& tape, const Matrix& cotangents,
                                   ParameterGradient& grad) const {
  require_dims(tape.activations.size() == layer_count(), "backward: tape does not match network");
  require_dims(tape.net_version == version_, "backward: tape was recorded with other parameters");
  require_dims(grad.values.size() == params_.size(), "backward: gradient buffer size mismatch");
  const Eigen::Index batch = tape.batch();
  require_dims(cotangents.rows() == batch && cotangents.cols() == output_dim(),
               "backward: cotangent shape mismatch");
  if (batch == 0) return;
  const auto& kern = kernels::active();
  Matrix delta = cotangents;
  for (std::size_t l = layer_count(); l-- > 0;) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const Matrix& prev = tape.activations[l];
    require_dims(prev.cols() == in, "backward: tape layer width mismatch");
    kern.gemm(kernels::Trans::Yes, kernels::Trans::No, out, in, batch, 1.0, delta.data(), out,
              prev.data(), in, 1.0, grad.values.data() + weight_offset(l), in);
    Eigen::Map<Vector>(grad.values.data() + bias_offset(l), out) += delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix back(batch, in);
    kern.gemm(kernels::Trans::No, kernels::Trans::No, batch, in, out, 1.0, delta.data(), out,
              params_.data() + weight_offset(l), in, 0.0, back.data(), in);
    // Rectifier derivative: 1 where the activation is positive, 0 otherwise
    // (including exactly at 0).
    delta = back.cwiseProduct((prev.array() > 0.0).cast<double>().matrix());
  }
}

ParameterGradient TransportNet::backward_params(const ForwardTape& tape,
                                                const Matrix& cotangents) const {
  ParameterGradient grad = zero_gradient();
  backward_params(tape, cotangents, grad);
  return grad;
}

TransportNet::Jacobian TransportNet::input_jacobian(const Eigen::Ref<const Vector>& latent) const {
  require_dims(latent.size() == input_dim(), "input_jacobian: latent dimension mismatch");
  Jacobian result;
  Vector value = latent;
  Matrix tangent = Matrix::Identity(input_dim(), input_dim());  // d x width
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Vector pre = weight(l) * value + bias(l);
    tangent = tangent * weight(l).transpose();
    if (l + 1 < layer_count()) {
      for (Eigen::Index j = 0; j < pre.size(); ++j) {
        if (std::abs(pre[j]) < kBoundaryTol) result.on_boundary = true;
        if (!(pre[j] > 0.0)) {
          pre[j] = 0.0;
          tangent.col(j).setZero();
        }
      }
    }
    value = std::move(pre);
  }
  result.value = tangent.transpose();
  return result;
}

void TransportNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out << "MAGT-NET v1; dims=";
  for (std::size_t i = 0; i < dims_.size(); ++i) out << (i ? "," : "") << dims_[i];
  out << "; seed=" << seed_ << '\n';
  for (double v : params_) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw ConfigError("failed writing checkpoint: " + path.string());
}

TransportNet TransportNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint: " + path.string());
  std::string header;
  std::getline(in, header);
  const std::string prefix = "MAGT-NET v1; dims=";
  const auto seed_pos = header.find("; seed=");
  if (header.rfind(prefix, 0) != 0 || seed_pos == std::string::npos)
    throw ConfigError("not a MAGT-NET v1 checkpoint: " + path.string());
  std::vector<int> dims;
  std::stringstream dim_text(header.substr(prefix.size(), seed_pos - prefix.size()));
  for (std::string item; std::getline(dim_text, item, ',');) {
    try {
      dims.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad dims in checkpoint header: " + header);
    }
  }
  std::uint64_t seed = 0;
  try {
    seed = std::stoull(header.substr(seed_pos + 7));
  } catch (const std::exception&) {
    throw ConfigError("bad seed in checkpoint header: " + header);
  }
  TransportNet net(dims, seed);
  auto params = net.mutable_parameters();
  for (double& v : params) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw ConfigError("truncated checkpoint: " + path.string());
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw ConfigError("trailing bytes in checkpoint: " + path.string());
  return net;
}

}  // namespace magt
