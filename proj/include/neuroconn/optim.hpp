#pragma once

#include <span>
#include <vector>

#include "neuroconn/tensor.hpp"

namespace neuroconn::nn {

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d(loss)/d(input), same shape as the prediction
};

// Row-wise softmax of [N, K] logits.
Tensor softmax(const Tensor& logits);

// Mean over the batch of -log softmax(logits)[label].
LossResult cross_entropy(const Tensor& logits, std::span<const int> labels);

// Mean absolute error with subgradient sign(pred - target) / N (0 at ties).
LossResult mae_loss(const Tensor& pred, std::span<const double> target);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with decoupled weight decay: p -= lr * wd * p, then the bias-corrected
// Adam step.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<Parameter* const> params, double lr, double weight_decay);
  long long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace neuroconn::nn
