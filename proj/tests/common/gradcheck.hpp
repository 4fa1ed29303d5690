#pragma once

// Central finite-difference checks for layers, losses and whole models.
//
// A layer is checked through the scalar L = sum(w * forward(x)) with a fixed
// random w, so backward(w) must equal dL/dx and the accumulated parameter
// gradients must equal dL/dp. Relative error per entry is
// |analytic - numeric| / max(|analytic|, |numeric|, kFloor * max(1, S)) with
// S = sum |w * y|. Central differences at step 1e-5 carry rounding noise of
// about 1e-16 * S / 1e-5, so entries that are exactly zero (a bias followed by
// batch-norm, a shift followed by a variance) need a floor tied to S.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "neuroconn/layers.hpp"
#include "neuroconn/models.hpp"
#include "neuroconn/optim.hpp"

namespace gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kFloor = 1e-6;
inline constexpr double kTolerance = 1e-4;

inline double rel_error(double a, double n, double scale = 1.0) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), kFloor * std::max(1.0, scale)});
}

using neuroconn::nn::Layer;
using neuroconn::nn::Parameter;
using neuroconn::nn::Shape;
using neuroconn::nn::Tensor;

inline Tensor random_tensor(const Shape& s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

inline double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

// Max relative error of d/dx and d/dparams of sum(w * f(x)), where `forward`
// runs the layer (or model) and `backward` propagates w.
inline double check(const std::function<Tensor(const Tensor&)>& forward,
                    const std::function<Tensor(const Tensor&)>& backward,
                    const std::vector<Parameter*>& params, Tensor x, std::mt19937_64& rng) {
  for (auto* p : params) p->grad.fill(0.0);
  const Tensor y = forward(x);
  const Tensor w = random_tensor(y.shape(), rng);
  const Tensor dx = backward(w);
  double scale = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) scale += std::abs(y[i] * w[i]);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kStep;
    const double up = weighted_sum(forward(x), w);
    x[i] = keep - kStep;
    const double down = weighted_sum(forward(x), w);
    x[i] = keep;
    worst = std::max(worst, rel_error(dx[i], (up - down) / (2 * kStep), scale));
  }
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + kStep;
      const double up = weighted_sum(forward(x), w);
      p->value[i] = keep - kStep;
      const double down = weighted_sum(forward(x), w);
      p->value[i] = keep;
      worst = std::max(worst, rel_error(p->grad[i], (up - down) / (2 * kStep), scale));
    }
  }
  return worst;
}

inline double check_layer(Layer& layer, const Tensor& x, std::mt19937_64& rng, bool training = true) {
  return check([&](const Tensor& in) { return layer.forward(in, training); },
               [&](const Tensor& g) { return layer.backward(g); }, layer.parameters(), x, rng);
}

// One named operation and a generator of random instances of it.
struct OpCase {
  std::unique_ptr<Layer> layer;
  Tensor input;
  bool training = true;
};

struct Op {
  std::string name;
  std::function<OpCase(std::mt19937_64&)> make;
};

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Keeps inputs away from the kinks of ELU and the clamp of log.
inline void push_from_zero(Tensor& t, double margin) {
  for (auto& v : t.values()) {
    if (std::abs(v) < margin) v = v < 0 ? -margin : margin;
  }
}

inline std::vector<Op> layer_ops() {
  using namespace neuroconn::nn;
  std::vector<Op> ops;
  ops.push_back({"conv2d", [](std::mt19937_64& rng) {
                   Conv2dGeometry g;
                   g.groups = pick(rng, 1, 2);
                   const std::size_t cin = g.groups * pick(rng, 1, 2), cout = g.groups * pick(rng, 1, 2);
                   g.kernel_h = pick(rng, 1, 3);
                   g.kernel_w = pick(rng, 1, 3);
                   g.stride_h = pick(rng, 1, 2);
                   g.stride_w = pick(rng, 1, 2);
                   g.pad_h = pick(rng, 0, g.kernel_h - 1);
                   g.pad_w = pick(rng, 0, g.kernel_w - 1);
                   const bool bias = pick(rng, 0, 1) == 1;
                   auto layer = std::make_unique<Conv2d>("conv", cin, cout, g, bias, rng);
                   for (auto* p : layer->parameters()) p->value = random_tensor(p->value.shape(), rng);
                   return OpCase{std::move(layer), random_tensor({pick(rng, 1, 3), cin, pick(rng, 3, 5), pick(rng, 3, 5)}, rng)};
                 }});
  ops.push_back({"batchnorm2d", [](std::mt19937_64& rng) {
                   const std::size_t c = pick(rng, 1, 3);
                   auto layer = std::make_unique<BatchNorm2d>("bn", c);
                   for (auto* p : layer->parameters()) p->value = random_tensor(p->value.shape(), rng, 0.5, 1.5);
                   return OpCase{std::move(layer), random_tensor({pick(rng, 2, 3), c, pick(rng, 1, 3), pick(rng, 2, 4)}, rng)};
                 }});
  ops.push_back({"batchnorm2d-eval", [](std::mt19937_64& rng) {
                   const std::size_t c = pick(rng, 1, 3);
                   auto layer = std::make_unique<BatchNorm2d>("bn", c);
                   for (auto* p : layer->parameters()) p->value = random_tensor(p->value.shape(), rng, 0.5, 1.5);
                   // Populate running statistics first.
                   layer->forward(random_tensor({4, c, 2, 3}, rng), true);
                   OpCase oc{std::move(layer), random_tensor({pick(rng, 1, 3), c, pick(rng, 1, 3), pick(rng, 2, 4)}, rng)};
                   oc.training = false;
                   return oc;
                 }});
  ops.push_back({"elu", [](std::mt19937_64& rng) {
                   auto x = random_tensor({pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)}, rng, -2, 2);
                   push_from_zero(x, 1e-3);
                   return OpCase{std::make_unique<Elu>(), x};
                 }});
  ops.push_back({"square", [](std::mt19937_64& rng) {
                   return OpCase{std::make_unique<Square>(),
                                 random_tensor({pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)}, rng, -2, 2)};
                 }});
  ops.push_back({"log", [](std::mt19937_64& rng) {
                   return OpCase{std::make_unique<SafeLog>(),
                                 random_tensor({pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)}, rng, 0.1, 3)};
                 }});
  ops.push_back({"avgpool2d", [](std::mt19937_64& rng) {
                   const std::size_t kh = pick(rng, 1, 2), kw = pick(rng, 1, 3);
                   auto layer = std::make_unique<AvgPool2d>(kh, kw, pick(rng, 1, 2), pick(rng, 1, 2));
                   return OpCase{std::move(layer), random_tensor({pick(rng, 1, 2), pick(rng, 1, 3), pick(rng, 2, 4), pick(rng, 2, 6)}, rng)};
                 }});
  ops.push_back({"dropout", [](std::mt19937_64& rng) {
                   auto layer = std::make_unique<Dropout>(0.5, rng());
                   auto x = random_tensor({pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4)}, rng);
                   layer->forward(x, true);
                   layer->freeze_mask(true);
                   return OpCase{std::move(layer), x};
                 }});
  ops.push_back({"variance", [](std::mt19937_64& rng) {
                   return OpCase{std::make_unique<ColumnVariance>(),
                                 random_tensor({pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 2, 6)}, rng)};
                 }});
  ops.push_back({"flatten", [](std::mt19937_64& rng) {
                   return OpCase{std::make_unique<Flatten>(),
                                 random_tensor({pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3)}, rng)};
                 }});
  ops.push_back({"dense", [](std::mt19937_64& rng) {
                   const std::size_t in = pick(rng, 1, 8), out = pick(rng, 1, 5);
                   auto layer = std::make_unique<Dense>("fc", in, out, rng);
                   for (auto* p : layer->parameters()) p->value = random_tensor(p->value.shape(), rng);
                   return OpCase{std::move(layer), random_tensor({pick(rng, 1, 4), in}, rng)};
                 }});
  return ops;
}

// Losses, checked on their own inputs.
inline double check_cross_entropy(std::mt19937_64& rng) {
  const std::size_t n = pick(rng, 1, 5), k = pick(rng, 2, 6);
  Tensor logits = random_tensor({n, k}, rng, -3, 3);
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(pick(rng, 0, k - 1));
  const auto r = neuroconn::nn::cross_entropy(logits, labels);
  double worst = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double keep = logits[i];
    logits[i] = keep + kStep;
    const double up = neuroconn::nn::cross_entropy(logits, labels).loss;
    logits[i] = keep - kStep;
    const double down = neuroconn::nn::cross_entropy(logits, labels).loss;
    logits[i] = keep;
    worst = std::max(worst, rel_error(r.grad[i], (up - down) / (2 * kStep)));
  }
  return worst;
}

inline double check_mae(std::mt19937_64& rng) {
  const std::size_t n = pick(rng, 1, 6);
  Tensor pred = random_tensor({n, 1}, rng, -2, 2);
  std::vector<double> target(n);
  // Targets kept at least 1e-3 away from predictions (away from ties).
  for (std::size_t i = 0; i < n; ++i) target[i] = pred[i] + (i % 2 ? 1.0 : -1.0) * (1e-3 + std::abs(pred[i]) * 0.5);
  const auto r = neuroconn::nn::mae_loss(pred, target);
  double worst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double keep = pred[i];
    pred[i] = keep + kStep;
    const double up = neuroconn::nn::mae_loss(pred, target).loss;
    pred[i] = keep - kStep;
    const double down = neuroconn::nn::mae_loss(pred, target).loss;
    pred[i] = keep;
    worst = std::max(worst, rel_error(r.grad[i], (up - down) / (2 * kStep)));
  }
  return worst;
}

// Smallest value entering a log layer during a training-mode forward pass.
inline double min_log_input(neuroconn::nn::Model& model, const Tensor& x) {
  double lowest = 1e300;
  Tensor h = x;
  for (const auto& layer : model.layers()) {
    if (layer->kind() == "log")
      for (double v : h.values()) lowest = std::min(lowest, v);
    h = layer->forward(h, true);
  }
  return lowest;
}

// A whole decoder in training mode with dropout masks frozen. Instances whose
// log inputs come within 1e-3 of the clamp are redrawn: there the difference
// quotient straddles the kink at 1e-6 or is dominated by curvature.
inline double check_model(neuroconn::nn::Architecture arch, std::mt19937_64& rng) {
  using namespace neuroconn::nn;
  for (;;) {
    DecoderSpec spec;
    spec.architecture = arch;
    spec.n_classes = static_cast<int>(pick(rng, 2, 4));
    spec.input = {pick(rng, 1, 2), pick(rng, 2, 4), pick(rng, 3, 6)};
    spec.hidden_dim = 8;
    spec.dropout_p = 0.3;
    Model model(spec, rng());
    const Tensor x = random_tensor({pick(rng, 2, 3), spec.input.n_bands, spec.input.n_channels, spec.input.n_cols}, rng);
    if (min_log_input(model, x) < 1e-3) continue;
    model.forward(x, true);
    model.freeze_dropout_masks(true);
    return check([&](const Tensor& in) { return model.forward(in, true); },
                 [&](const Tensor& g) { return model.backward(g); }, model.parameters(), x, rng);
  }
}

}  // namespace gradcheck
