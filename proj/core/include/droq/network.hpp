#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "droq/random.hpp"
#include "droq/tensor.hpp"

namespace droq::nn {

enum class LayerKind { Linear, ReLU, Dropout, LayerNorm, LayerNormNoVR, BatchNorm, GroupNorm };

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.99;

// One layer of a feed-forward stack. ReLU and Dropout take the width of
// whatever precedes them (in == out == 0).
struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  std::size_t in = 0;
  std::size_t out = 0;
  double rate = 0.0;
  std::size_t groups = 1;

  static LayerSpec linear(std::size_t in, std::size_t out);
  static LayerSpec relu();
  static LayerSpec dropout(double rate);
  static LayerSpec layer_norm(std::size_t width);
  static LayerSpec layer_norm_no_vr(std::size_t width);
  static LayerSpec batch_norm(std::size_t width);
  static LayerSpec group_norm(std::size_t width, std::size_t groups = 2);

  bool is_norm() const;
  // Learnable scalars: weight + bias for Linear, gain + bias for every norm.
  std::size_t trainable_count() const;
  std::string name() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Mode { Train, Eval };

namespace detail {
// Per-layer state recorded by a taped forward pass.
struct LayerCache {
  Tensor mask;        // dropout scale factors
  Tensor normalized;  // x-hat (or centered x for LayerNormNoVR)
  std::vector<double> inv_std;
  bool dropout_applied = false;
  Mode mode = Mode::Eval;
};
}  // namespace detail

// Reverse-mode differentiable feed-forward network.
//
// forward() records a tape (activations, dropout masks, normalization
// statistics) that exactly one subsequent backward() consumes. Dropout
// layers draw masks from the supplied stream only in Train mode with a
// positive rate. BatchNorm running statistics change only in Train mode.
class Network {
 public:
  Network() = default;
  // Parameters initialized uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
  // norm gains 1 and biases 0.
  Network(std::vector<LayerSpec> layers, RandomStream& init_rng);
  // Zero-initialized parameters; used when restoring from a checkpoint.
  explicit Network(std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  // Non-trainable state (BatchNorm running mean / variance).
  std::vector<Tensor>& buffers() { return buffers_; }
  const std::vector<Tensor>& buffers() const { return buffers_; }

  std::size_t parameter_count() const;
  std::size_t input_width() const { return input_width_; }
  std::size_t output_width() const { return output_width_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  Tensor forward(const Tensor& input, RandomStream& rng);
  // Overwrites every parameter gradient (unless param_grads is false) and
  // returns the gradient with respect to the forward input.
  Tensor backward(const Tensor& output_grad, bool param_grads = true);
  // Eval-mode forward that touches no mutable state.
  Tensor predict(const Tensor& input) const;

  bool tape_live() const { return tape_live_; }
  void zero_grad();

 private:
  void build(RandomStream* init_rng);
  void check_input(const Tensor& input) const;

  std::vector<LayerSpec> layers_;
  std::vector<Tensor> params_;
  std::vector<Tensor> buffers_;
  std::vector<std::size_t> param_index_;   // first parameter slot per layer
  std::vector<std::size_t> buffer_index_;  // first buffer slot per layer
  std::size_t input_width_ = 0;
  std::size_t output_width_ = 0;
  Mode mode_ = Mode::Train;

  std::vector<Tensor> activations_;  // activations_[k] feeds layer k
  std::vector<detail::LayerCache> caches_;
  Tensor scratch_a_;
  Tensor scratch_b_;
  bool tape_live_ = false;
};

}  // namespace droq::nn
