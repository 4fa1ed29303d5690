#pragma once

// Layers with explicit forward/backward passes. Each layer caches what its
// backward pass needs from the most recent forward call.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "neuroconn/tensor.hpp"

namespace neuroconn::nn {

struct Conv2dGeometry {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_h = 0, pad_w = 0;
  std::size_t groups = 1;
};

// Cross-correlation of input [N, C_in, H, W] with kernel
// [C_out, C_in / groups, kh, kw]; bias (may be empty) has C_out entries.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                      const Conv2dGeometry& g);

struct Conv2dGrads {
  Tensor input;
  Tensor kernel;
  Tensor bias;  // empty when the forward pass had no bias
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, bool has_bias,
                            const Tensor& grad_out, const Conv2dGeometry& g);

Shape conv2d_output_shape(const Shape& input, std::size_t out_channels, const Conv2dGeometry& g);

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  // Non-trainable state saved with checkpoints (batch-norm running stats).
  virtual std::vector<std::pair<std::string, Tensor*>> buffers() { return {}; }
};

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, Conv2dGeometry g,
         bool bias, std::mt19937_64& rng);
  std::string kind() const override { return "conv2d"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::vector<Parameter*> parameters() override;

 private:
  std::size_t in_channels_, out_channels_;
  Conv2dGeometry geom_;
  bool has_bias_;
  Parameter weight_, bias_;
  Tensor input_;
};

class BatchNorm2d : public Layer {
 public:
  BatchNorm2d(std::string name, std::size_t channels, double momentum = 0.1, double eps = 1e-5);
  std::string kind() const override { return "batchnorm2d"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<std::pair<std::string, Tensor*>> buffers() override;

 private:
  std::string name_;
  std::size_t channels_;
  double momentum_, eps_;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
  // Cache.
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool cached_training_ = false;
};

class Elu : public Layer {
 public:
  std::string kind() const override { return "elu"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }

 private:
  Tensor input_;
};

class Square : public Layer {
 public:
  std::string kind() const override { return "square"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }

 private:
  Tensor input_;
};

// log(max(x, floor)); zero gradient where clamped.
class SafeLog : public Layer {
 public:
  explicit SafeLog(double floor = 1e-6) : floor_(floor) {}
  std::string kind() const override { return "log"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }

 private:
  double floor_;
  Tensor input_;
};

// Average pooling without padding. Kernel and stride are clamped to the input
// extent, so a pool wider than a short feature axis reduces it to one column.
class AvgPool2d : public Layer {
 public:
  AvgPool2d(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw)
      : kh_(kh), kw_(kw), sh_(sh), sw_(sw) {}
  std::string kind() const override { return "avgpool2d"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;

 private:
  std::size_t kh_, kw_, sh_, sw_;
  Shape in_shape_;
};

// Inverted dropout: survivors are scaled by 1/(1-p) during training.
class Dropout : public Layer {
 public:
  Dropout(double p, std::uint64_t seed);
  std::string kind() const override { return "dropout"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  // While frozen, training-mode forward passes reuse the previous mask.
  void freeze_mask(bool frozen) { frozen_ = frozen; }
  const std::vector<double>& mask() const { return mask_; }

 private:
  double p_;
  std::mt19937_64 rng_;
  std::vector<double> mask_;
  bool frozen_ = false;
  bool cached_training_ = false;
};

// Biased variance over the last axis: [N, C, H, W] -> [N, C, H, 1].
class ColumnVariance : public Layer {
 public:
  std::string kind() const override { return "variance"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;

 private:
  Tensor input_;
  std::vector<double> mean_;
};

class Flatten : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;

 private:
  Shape in_shape_;
};

// [N, in] -> [N, out].
class Dense : public Layer {
 public:
  Dense(std::string name, std::size_t in_features, std::size_t out_features, std::mt19937_64& rng);
  std::string kind() const override { return "dense"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

 private:
  std::size_t in_, out_;
  Parameter weight_, bias_;
  Tensor input_;
};

// Glorot-uniform fill.
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace neuroconn::nn
