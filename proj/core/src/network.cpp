#include "droq/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "droq/errors.hpp"

namespace droq::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowMap = Eigen::Map<Eigen::RowVectorXd>;

ConstMatrixMap view(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
MatrixMap view(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
MatrixMap grad_view(Tensor& t) {
  return {t.grad().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

std::string shape(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

// Row-wise normalization over `groups` equal column segments. `rescale`
// selects full LayerNorm (divide by the standard deviation) versus pure
// re-centering.
void segment_norm_forward(const Tensor& in, const Tensor& gain, const Tensor& bias,
                          std::size_t groups, bool rescale, Tensor& out,
                          detail::LayerCache* cache) {
  const std::size_t rows = in.rows();
  const std::size_t width = in.cols();
  const std::size_t seg = width / groups;
  out.resize(rows, width);
  if (cache) {
    cache->normalized.resize(rows, width);
    cache->inv_std.resize(rows * groups);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in.data() + r * width;
    double* y = out.data() + r * width;
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t lo = g * seg;
      double mean = 0.0;
      for (std::size_t j = lo; j < lo + seg; ++j) mean += x[j];
      mean /= static_cast<double>(seg);
      double inv = 1.0;
      if (rescale) {
        double var = 0.0;
        for (std::size_t j = lo; j < lo + seg; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= static_cast<double>(seg);
        inv = 1.0 / std::sqrt(var + kNormEpsilon);
      }
      for (std::size_t j = lo; j < lo + seg; ++j) {
        const double xh = (x[j] - mean) * inv;
        if (cache) cache->normalized.data()[r * width + j] = xh;
        y[j] = gain.data()[j] * xh + bias.data()[j];
      }
      if (cache) cache->inv_std[r * groups + g] = inv;
    }
  }
}

void segment_norm_backward(const Tensor& dy, Tensor& gain, Tensor& bias, std::size_t groups,
                           bool rescale, const detail::LayerCache& cache, bool param_grads,
                           Tensor& dx) {
  const std::size_t rows = dy.rows();
  const std::size_t width = dy.cols();
  const std::size_t seg = width / groups;
  dx.resize(rows, width);
  if (param_grads) {
    auto dg = gain.grad();
    auto db = bias.grad();
    std::fill(dg.begin(), dg.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < width; ++j) {
        const double d = dy(r, j);
        dg[j] += d * cache.normalized(r, j);
        db[j] += d;
      }
    }
  }
  const double n = static_cast<double>(seg);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t lo = g * seg;
      double sum_g = 0.0;
      double sum_gx = 0.0;
      for (std::size_t j = lo; j < lo + seg; ++j) {
        const double gj = dy(r, j) * gain.data()[j];
        sum_g += gj;
        sum_gx += gj * cache.normalized(r, j);
      }
      const double mean_g = sum_g / n;
      const double mean_gx = sum_gx / n;
      const double inv = cache.inv_std[r * groups + g];
      for (std::size_t j = lo; j < lo + seg; ++j) {
        const double gj = dy(r, j) * gain.data()[j];
        dx(r, j) = rescale ? inv * (gj - mean_g - cache.normalized(r, j) * mean_gx) : gj - mean_g;
      }
    }
  }
}

void batch_norm_forward(const Tensor& in, const Tensor& gain, const Tensor& bias,
                        Tensor* running_mean, Tensor* running_var,
                        const Tensor& eval_mean, const Tensor& eval_var, Mode mode, Tensor& out,
                        detail::LayerCache* cache) {
  const std::size_t rows = in.rows();
  const std::size_t width = in.cols();
  out.resize(rows, width);
  if (cache) {
    cache->normalized.resize(rows, width);
    cache->inv_std.resize(width);
  }
  for (std::size_t c = 0; c < width; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::Train) {
      for (std::size_t r = 0; r < rows; ++r) mean += in(r, c);
      mean /= static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) var += (in(r, c) - mean) * (in(r, c) - mean);
      var /= static_cast<double>(rows);
      if (running_mean && running_var) {
        auto& rm = running_mean->values()[c];
        auto& rv = running_var->values()[c];
        rm = kBatchNormMomentum * rm + (1.0 - kBatchNormMomentum) * mean;
        rv = kBatchNormMomentum * rv + (1.0 - kBatchNormMomentum) * var;
      }
    } else {
      mean = eval_mean.data()[c];
      var = eval_var.data()[c];
    }
    const double inv = 1.0 / std::sqrt(var + kNormEpsilon);
    if (cache) cache->inv_std[c] = inv;
    for (std::size_t r = 0; r < rows; ++r) {
      const double xh = (in(r, c) - mean) * inv;
      if (cache) cache->normalized(r, c) = xh;
      out(r, c) = gain.data()[c] * xh + bias.data()[c];
    }
  }
}

void batch_norm_backward(const Tensor& dy, Tensor& gain, Tensor& bias,
                         const detail::LayerCache& cache, bool param_grads, Tensor& dx) {
  const std::size_t rows = dy.rows();
  const std::size_t width = dy.cols();
  dx.resize(rows, width);
  if (param_grads) {
    auto dg = gain.grad();
    auto db = bias.grad();
    std::fill(dg.begin(), dg.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        dg[c] += dy(r, c) * cache.normalized(r, c);
        db[c] += dy(r, c);
      }
    }
  }
  const double n = static_cast<double>(rows);
  for (std::size_t c = 0; c < width; ++c) {
    const double inv = cache.inv_std[c];
    const double gc = gain.data()[c];
    if (cache.mode == Mode::Eval) {
      for (std::size_t r = 0; r < rows; ++r) dx(r, c) = dy(r, c) * gc * inv;
      continue;
    }
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      sum_g += dy(r, c) * gc;
      sum_gx += dy(r, c) * gc * cache.normalized(r, c);
    }
    const double mean_g = sum_g / n;
    const double mean_gx = sum_gx / n;
    for (std::size_t r = 0; r < rows; ++r) {
      dx(r, c) = inv * (dy(r, c) * gc - mean_g - cache.normalized(r, c) * mean_gx);
    }
  }
}

// Shared forward kernel for taped and pure evaluation. `params` and
// `buffers` point at this layer's first slot. `mutable_buffers` is null for
// pure evaluation.
void apply_layer(const LayerSpec& spec, const Tensor* params, const Tensor* buffers,
                 Tensor* mutable_buffers, const Tensor& in, Tensor& out, Mode mode,
                 RandomStream* rng, detail::LayerCache* cache) {
  if (cache) cache->mode = mode;
  switch (spec.kind) {
    case LayerKind::Linear: {
      const Tensor& w = params[0];
      const Tensor& b = params[1];
      out.resize(in.rows(), w.cols());
      auto y = view(out);
      y.noalias() = view(in) * view(w);
      y.rowwise() += ConstRowMap(b.data(), static_cast<Eigen::Index>(b.cols()));
      break;
    }
    case LayerKind::ReLU: {
      out.resize(in.rows(), in.cols());
      const double* x = in.data();
      double* y = out.data();
      for (std::size_t i = 0; i < in.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    }
    case LayerKind::Dropout: {
      out.resize(in.rows(), in.cols());
      const bool active = mode == Mode::Train && spec.rate > 0.0;
      if (cache) cache->dropout_applied = active;
      if (!active) {
        std::copy(in.values().begin(), in.values().end(), out.values().begin());
        break;
      }
      const double keep_scale = 1.0 / (1.0 - spec.rate);
      if (cache) cache->mask.resize(in.rows(), in.cols());
      for (std::size_t i = 0; i < in.size(); ++i) {
        const double m = rng->uniform() < spec.rate ? 0.0 : keep_scale;
        if (cache) cache->mask.data()[i] = m;
        out.data()[i] = in.data()[i] * m;
      }
      break;
    }
    case LayerKind::LayerNorm:
      segment_norm_forward(in, params[0], params[1], 1, true, out, cache);
      break;
    case LayerKind::LayerNormNoVR:
      segment_norm_forward(in, params[0], params[1], 1, false, out, cache);
      break;
    case LayerKind::GroupNorm:
      segment_norm_forward(in, params[0], params[1], spec.groups, true, out, cache);
      break;
    case LayerKind::BatchNorm:
      batch_norm_forward(in, params[0], params[1],
                         mutable_buffers ? &mutable_buffers[0] : nullptr,
                         mutable_buffers ? &mutable_buffers[1] : nullptr, buffers[0], buffers[1],
                         mode, out, cache);
      break;
  }
}

}  // namespace

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out) {
  return {LayerKind::Linear, in, out, 0.0, 1};
}
LayerSpec LayerSpec::relu() { return {LayerKind::ReLU, 0, 0, 0.0, 1}; }
LayerSpec LayerSpec::dropout(double rate) { return {LayerKind::Dropout, 0, 0, rate, 1}; }
LayerSpec LayerSpec::layer_norm(std::size_t width) {
  return {LayerKind::LayerNorm, width, width, 0.0, 1};
}
LayerSpec LayerSpec::layer_norm_no_vr(std::size_t width) {
  return {LayerKind::LayerNormNoVR, width, width, 0.0, 1};
}
LayerSpec LayerSpec::batch_norm(std::size_t width) {
  return {LayerKind::BatchNorm, width, width, 0.0, 1};
}
LayerSpec LayerSpec::group_norm(std::size_t width, std::size_t groups) {
  return {LayerKind::GroupNorm, width, width, 0.0, groups};
}

bool LayerSpec::is_norm() const {
  return kind == LayerKind::LayerNorm || kind == LayerKind::LayerNormNoVR ||
         kind == LayerKind::BatchNorm || kind == LayerKind::GroupNorm;
}

std::size_t LayerSpec::trainable_count() const {
  if (kind == LayerKind::Linear) return in * out + out;
  if (is_norm()) return 2 * out;
  return 0;
}

std::string LayerSpec::name() const {
  switch (kind) {
    case LayerKind::Linear: return "Linear";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::LayerNorm: return "LayerNorm";
    case LayerKind::LayerNormNoVR: return "LayerNormNoVR";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::GroupNorm: return "GroupNorm";
  }
  return "?";
}

Network::Network(std::vector<LayerSpec> layers, RandomStream& init_rng) : layers_(std::move(layers)) {
  build(&init_rng);
}

Network::Network(std::vector<LayerSpec> layers) : layers_(std::move(layers)) { build(nullptr); }

void Network::build(RandomStream* init_rng) {
  if (layers_.empty()) throw ConfigError("Network: no layers");
  std::size_t width = 0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const LayerSpec& spec = layers_[k];
    const std::string where = "Network layer " + std::to_string(k) + " (" + spec.name() + "): ";
    if (spec.kind == LayerKind::Dropout && !(spec.rate >= 0.0 && spec.rate < 1.0)) {
      throw ConfigError(where + "dropout rate must lie in [0, 1)");
    }
    if (spec.kind == LayerKind::Linear && (spec.in == 0 || spec.out == 0)) {
      throw ConfigError(where + "zero width");
    }
    if (spec.is_norm()) {
      if (spec.out == 0 || spec.in != spec.out) throw ConfigError(where + "bad width");
      if (spec.groups == 0 || spec.out % spec.groups != 0) {
        throw ConfigError(where + "width must be divisible by groups");
      }
    }
    const bool sized = spec.kind == LayerKind::Linear || spec.is_norm();
    if (sized) {
      if (width == 0) {
        input_width_ = spec.in;
      } else if (spec.in != width) {
        throw ConfigError(where + "expects width " + std::to_string(spec.in) + " but receives " +
                          std::to_string(width));
      }
      width = spec.out;
    }
  }
  if (width == 0) throw ConfigError("Network: no layer fixes a width");
  output_width_ = width;

  param_index_.clear();
  buffer_index_.clear();
  params_.clear();
  buffers_.clear();
  for (const LayerSpec& spec : layers_) {
    param_index_.push_back(params_.size());
    buffer_index_.push_back(buffers_.size());
    if (spec.kind == LayerKind::Linear) {
      Tensor w(spec.in, spec.out);
      Tensor b(1, spec.out);
      if (init_rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in));
        for (double& v : w.values()) v = init_rng->uniform(-bound, bound);
        for (double& v : b.values()) v = init_rng->uniform(-bound, bound);
      }
      params_.push_back(std::move(w));
      params_.push_back(std::move(b));
    } else if (spec.is_norm()) {
      params_.emplace_back(1, spec.out, init_rng ? 1.0 : 0.0);
      params_.emplace_back(1, spec.out, 0.0);
      if (spec.kind == LayerKind::BatchNorm) {
        buffers_.emplace_back(1, spec.out, 0.0);
        buffers_.emplace_back(1, spec.out, 1.0);
      }
    }
  }
  activations_.assign(layers_.size() + 1, Tensor{});
  caches_.assign(layers_.size(), detail::LayerCache{});
  tape_live_ = false;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.size();
  return n;
}

void Network::check_input(const Tensor& input) const {
  if (input.cols() != input_width_) {
    throw ConfigError("Network: input has " + std::to_string(input.cols()) +
                      " columns, expected " + std::to_string(input_width_));
  }
  if (!input.all_finite()) throw NumericError("Network: non-finite input");
}

Tensor Network::forward(const Tensor& input, RandomStream& rng) {
  check_input(input);
  activations_[0] = input;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    apply_layer(layers_[k], params_.data() + param_index_[k], buffers_.data() + buffer_index_[k],
                buffers_.data() + buffer_index_[k], activations_[k], activations_[k + 1], mode_,
                &rng, &caches_[k]);
  }
  tape_live_ = true;
  return activations_.back();
}

Tensor Network::predict(const Tensor& input) const {
  check_input(input);
  Tensor current = input;
  Tensor next;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    apply_layer(layers_[k], params_.data() + param_index_[k], buffers_.data() + buffer_index_[k],
                nullptr, current, next, Mode::Eval, nullptr, nullptr);
    std::swap(current, next);
  }
  return current;
}

Tensor Network::backward(const Tensor& output_grad, bool param_grads) {
  if (!tape_live_) throw UsageError("Network::backward: no live tape (call forward first)");
  const Tensor& out = activations_.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw ConfigError("Network::backward: gradient shape " +
                      shape(output_grad.rows(), output_grad.cols()) + " vs output " +
                      shape(out.rows(), out.cols()));
  }
  tape_live_ = false;

  Tensor& dy = scratch_a_;
  Tensor& dx = scratch_b_;
  dy = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const LayerSpec& spec = layers_[k];
    const Tensor& in = activations_[k];
    const detail::LayerCache& cache = caches_[k];
    Tensor* p = params_.data() + param_index_[k];
    switch (spec.kind) {
      case LayerKind::Linear: {
        if (param_grads) {
          grad_view(p[0]).noalias() = view(in).transpose() * view(dy);
          RowMap(p[1].grad().data(), static_cast<Eigen::Index>(p[1].cols())) =
              view(dy).colwise().sum();
        }
        dx.resize(dy.rows(), spec.in);
        view(dx).noalias() = view(dy) * view(p[0]).transpose();
        break;
      }
      case LayerKind::ReLU: {
        const Tensor& y = activations_[k + 1];
        dx.resize(dy.rows(), dy.cols());
        for (std::size_t i = 0; i < dy.size(); ++i) {
          dx.data()[i] = y.data()[i] > 0.0 ? dy.data()[i] : 0.0;
        }
        break;
      }
      case LayerKind::Dropout: {
        dx.resize(dy.rows(), dy.cols());
        if (cache.dropout_applied) {
          for (std::size_t i = 0; i < dy.size(); ++i) dx.data()[i] = dy.data()[i] * cache.mask.data()[i];
        } else {
          std::copy(dy.values().begin(), dy.values().end(), dx.values().begin());
        }
        break;
      }
      case LayerKind::LayerNorm:
        segment_norm_backward(dy, p[0], p[1], 1, true, cache, param_grads, dx);
        break;
      case LayerKind::LayerNormNoVR:
        segment_norm_backward(dy, p[0], p[1], 1, false, cache, param_grads, dx);
        break;
      case LayerKind::GroupNorm:
        segment_norm_backward(dy, p[0], p[1], spec.groups, true, cache, param_grads, dx);
        break;
      case LayerKind::BatchNorm:
        batch_norm_backward(dy, p[0], p[1], cache, param_grads, dx);
        break;
    }
    std::swap(dy, dx);
  }
  return dy;
}

void Network::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace droq::nn
