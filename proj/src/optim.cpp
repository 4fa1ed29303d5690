#include "neuroconn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace neuroconn::nn {

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw std::invalid_argument("softmax expects [N, K]");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor p(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < k; ++j) p[i * k + j] = std::exp(row[j] - mx) / z;
  }
  return p;
}

LossResult cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw std::invalid_argument("cross_entropy: logits " + shape_string(logits.shape()) + " vs " +
                                std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  LossResult r{0.0, softmax(logits)};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw std::invalid_argument("label " + std::to_string(y) + " out of range [0," +
                                  std::to_string(k) + ")");
    }
    const double* row = logits.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    r.loss += (mx + std::log(z)) - row[y];
    r.grad[i * k + static_cast<std::size_t>(y)] -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  r.loss *= inv_n;
  for (auto& g : r.grad.values()) g *= inv_n;
  return r;
}

LossResult mae_loss(const Tensor& pred, std::span<const double> target) {
  if (pred.size() != target.size() || (pred.rank() == 2 && pred.dim(1) != 1)) {
    throw std::invalid_argument("mae_loss: prediction " + shape_string(pred.shape()) + " vs " +
                                std::to_string(target.size()) + " targets");
  }
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  LossResult r{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.loss += std::abs(d);
    r.grad[i] = static_cast<double>((d > 0.0) - (d < 0.0)) * inv_n;
  }
  r.loss *= inv_n;
  return r;
}

void Adam::step(std::span<Parameter* const> params, double lr, double weight_decay) {
  if (m_.empty()) {
    for (auto* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("Adam: parameter list changed");
  for (auto* p : params) {
    for (double g : p->grad.values()) {
      if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient in parameter " + p->name);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& val = params[k]->value.values();
    const auto& grad = params[k]->grad.values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < val.size(); ++i) {
      val[i] -= lr * weight_decay * val[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace neuroconn::nn
