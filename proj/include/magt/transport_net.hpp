#pragma once
// Fully connected rectifier network h: R^d -> R^D with hand-written forward,
// reverse-mode parameter gradients and forward-mode input Jacobians.
//
// Parameters live in one contiguous buffer, layer by layer, each layer stored
// as its row-major weight matrix (out x in) followed by its bias vector. That
// is also the checkpoint byte order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "magt/common.hpp"

namespace magt {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;

/// Gradient with the same flat layout as TransportNet's parameters.
struct ParameterGradient {
  std::vector<double> values;

  void set_zero() { std::fill(values.begin(), values.end(), 0.0); }
  double norm() const;
  ParameterGradient& operator+=(const ParameterGradient& other);
};

/// Activations recorded by forward(); index 0 is the input batch, index l the
/// post-rectifier output of hidden layer l. The rectifier mask of layer l is
/// (activations[l] > 0), which equals (pre-activation > 0).
struct ForwardTape {
  std::vector<Matrix> activations;
  std::uint64_t net_version = 0;
  Eigen::Index batch() const { return activations.empty() ? 0 : activations.front().rows(); }
};

class TransportNet {
 public:
  /// He-initialized network (weights ~ N(0, 2 / fan_in), zero biases).
  static TransportNet init(std::vector<int> layer_dims, std::uint64_t seed);
  /// All-zero parameters.
  explicit TransportNet(std::vector<int> layer_dims, std::uint64_t seed = 0);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t layer_count() const { return dims_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }
  std::uint64_t seed() const { return seed_; }

  /// Process-unique tag of the current parameter values, refreshed on every
  /// mutation; anchor banks record it to detect staleness.
  std::uint64_t version() const { return version_; }

  ConstMatrixMap weight(std::size_t layer) const;
  Eigen::Map<const Vector> bias(std::size_t layer) const;
  MatrixMap mutable_weight(std::size_t layer);
  Eigen::Map<Vector> mutable_bias(std::size_t layer);

  std::span<const double> parameters() const { return params_; }
  /// Mutable view; bumps the version.
  std::span<double> mutable_parameters();
  /// Marks the parameters as changed (after writing through a weight/bias map).
  void touch();

  ParameterGradient zero_gradient() const { return ParameterGradient{std::vector<double>(params_.size(), 0.0)}; }

  /// outputs = h(latents) row by row.
  Matrix forward(const Matrix& latents) const;
  /// Same, recording the tape needed by backward_params.
  Matrix forward(const Matrix& latents, ForwardTape& tape) const;

  /// Accumulates grad_theta sum_k <h(u_k), cotangents[k]> into `grad`.
  void backward_params(const ForwardTape& tape, const Matrix& cotangents,
                       ParameterGradient& grad) const;
  ParameterGradient backward_params(const ForwardTape& tape, const Matrix& cotangents) const;

  struct Jacobian {
    Matrix value;  // D x d
    bool on_boundary = false;  // some hidden pre-activation within 1e-12 of 0
  };
  /// Exact Jacobian of the piecewise-linear map at `latent`, by d forward-mode
  /// directional passes.
  Jacobian input_jacobian(const Eigen::Ref<const Vector>& latent) const;

  void save(const std::filesystem::path& path) const;
  static TransportNet load(const std::filesystem::path& path);

  bool operator==(const TransportNet& other) const {
    return dims_ == other.dims_ && params_ == other.params_;
  }

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
  }
  Matrix run_forward(const Matrix& latents, ForwardTape* tape) const;

  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::uint64_t seed_ = 0;
  std::uint64_t version_ = 0;
};

}  // namespace magt
