#include "neuroconn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace neuroconn::nn {

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.values()) v = dist(rng);
}

namespace {

void require_rank4(const Tensor& x, const char* who) {
  if (x.rank() != 4) {
    throw std::invalid_argument(std::string(who) + " expects a 4-D tensor, got " +
                                shape_string(x.shape()));
  }
}

// Kernel taps that land inside the input for output position `pos`; `origin`
// is the (possibly negative) input index of tap 0.
struct KernelSpan {
  std::ptrdiff_t origin;
  std::size_t lo, hi;
};

KernelSpan kernel_span(std::size_t pos, std::size_t stride, std::size_t pad, std::size_t k,
                       std::size_t extent) {
  const auto origin = static_cast<std::ptrdiff_t>(pos * stride) - static_cast<std::ptrdiff_t>(pad);
  const auto lo = std::max<std::ptrdiff_t>(0, -origin);
  const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k),
                                           static_cast<std::ptrdiff_t>(extent) - origin);
  return {origin, static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi))};
}

// Output columns [lo, hi) for which kernel column kx reads inside the input.
struct ColumnRange {
  std::size_t lo, hi;
};

std::vector<ColumnRange> column_ranges(const Conv2dGeometry& g, std::size_t w, std::size_t ow) {
  std::vector<ColumnRange> ranges(g.kernel_w);
  for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
    const std::size_t lo = kx >= g.pad_w ? 0 : (g.pad_w - kx + g.stride_w - 1) / g.stride_w;
    const std::size_t hi =
        w + g.pad_w <= kx ? 0 : std::min(ow, (w - 1 + g.pad_w - kx) / g.stride_w + 1);
    ranges[kx] = {lo, std::max(lo, hi)};
  }
  return ranges;
}

}  // namespace

// ---------------------------------------------------------------------------
// Convolution

Shape conv2d_output_shape(const Shape& in, std::size_t out_channels, const Conv2dGeometry& g) {
  if (in.size() != 4) throw std::invalid_argument("conv2d expects [N,C,H,W], got " + shape_string(in));
  if (g.groups == 0 || in[1] % g.groups != 0 || out_channels % g.groups != 0) {
    throw std::invalid_argument("conv2d groups=" + std::to_string(g.groups) +
                                " must divide input channels " + std::to_string(in[1]) +
                                " and output channels " + std::to_string(out_channels));
  }
  if (g.stride_h == 0 || g.stride_w == 0) throw std::invalid_argument("conv2d stride must be >= 1");
  const std::size_t hp = in[2] + 2 * g.pad_h;
  const std::size_t wp = in[3] + 2 * g.pad_w;
  if (g.kernel_h == 0 || g.kernel_w == 0 || g.kernel_h > hp || g.kernel_w > wp) {
    throw std::invalid_argument("conv2d kernel " + std::to_string(g.kernel_h) + "x" +
                                std::to_string(g.kernel_w) + " does not fit padded input " +
                                std::to_string(hp) + "x" + std::to_string(wp));
  }
  return {in[0], out_channels, (hp - g.kernel_h) / g.stride_h + 1, (wp - g.kernel_w) / g.stride_w + 1};
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                      const Conv2dGeometry& g) {
  require_rank4(input, "conv2d");
  require_rank4(kernel, "conv2d kernel");
  const std::size_t cout = kernel.dim(0);
  const Shape os = conv2d_output_shape(input.shape(), cout, g);
  const std::size_t cin_g = input.dim(1) / g.groups;
  const std::size_t cout_g = cout / g.groups;
  if (kernel.dim(1) != cin_g || kernel.dim(2) != g.kernel_h || kernel.dim(3) != g.kernel_w) {
    throw std::invalid_argument("conv2d kernel shape " + shape_string(kernel.shape()) +
                                " does not match geometry [" + std::to_string(cout) + "," +
                                std::to_string(cin_g) + "," + std::to_string(g.kernel_h) + "," +
                                std::to_string(g.kernel_w) + "]");
  }
  if (bias.size() != 0 && bias.size() != cout) {
    throw std::invalid_argument("conv2d bias has " + std::to_string(bias.size()) +
                                " entries for " + std::to_string(cout) + " output channels");
  }
  const std::size_t n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = os[2], ow = os[3];
  const std::size_t kh = g.kernel_h, kw = g.kernel_w, sw = g.stride_w;
  const auto cols = column_ranges(g, w, ow);
  Tensor out(os);
  const double* in = input.data();
  const double* kern = kernel.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
      const std::size_t grp = oc / cout_g;
      const double bv = bias.size() ? bias[oc] : 0.0;
      const double* k_oc = kern + oc * cin_g * kh * kw;
      for (std::size_t y = 0; y < oh; ++y) {
        double* orow = out.data() + ((b * cout + oc) * oh + y) * ow;
        std::fill(orow, orow + ow, bv);
        const KernelSpan sy = kernel_span(y, g.stride_h, g.pad_h, kh, h);
        for (std::size_t ic = 0; ic < cin_g; ++ic) {
          const double* plane = in + (b * c_in + grp * cin_g + ic) * h * w;
          for (std::size_t ky = sy.lo; ky < sy.hi; ++ky) {
            const double* irow = plane + static_cast<std::size_t>(sy.origin + static_cast<std::ptrdiff_t>(ky)) * w;
            const double* krow = k_oc + (ic * kh + ky) * kw;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const double kv = krow[kx];
              const auto [x0, x1] = cols[kx];
              const double* src = irow + x0 * sw + kx - g.pad_w;
              if (sw == 1) {
                for (std::size_t x = x0; x < x1; ++x) orow[x] += kv * src[x - x0];
              } else {
                for (std::size_t x = x0; x < x1; ++x) orow[x] += kv * src[(x - x0) * sw];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, bool has_bias,
                            const Tensor& grad_out, const Conv2dGeometry& g) {
  const std::size_t cout = kernel.dim(0);
  const Shape os = conv2d_output_shape(input.shape(), cout, g);
  if (grad_out.shape() != os) {
    throw std::invalid_argument("conv2d backward: gradient shape " +
                                shape_string(grad_out.shape()) + " != output shape " +
                                shape_string(os));
  }
  const std::size_t cin_g = input.dim(1) / g.groups;
  const std::size_t cout_g = cout / g.groups;
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  Conv2dGrads grads{Tensor(input.shape()), Tensor(kernel.shape()),
                    has_bias ? Tensor({cout}) : Tensor()};
  const std::size_t c_in = input.dim(1), kh = g.kernel_h, kw = g.kernel_w, sw = g.stride_w;
  const std::size_t oh = os[2], ow = os[3];
  const auto cols = column_ranges(g, w, ow);
  const double* in = input.data();
  const double* kern = kernel.data();
  double* gin = grads.input.data();
  double* gker = grads.kernel.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
      const std::size_t grp = oc / cout_g;
      const double* k_oc = kern + oc * cin_g * kh * kw;
      double* gk_oc = gker + oc * cin_g * kh * kw;
      for (std::size_t y = 0; y < oh; ++y) {
        const double* grow = grad_out.data() + ((b * cout + oc) * oh + y) * ow;
        if (has_bias) {
          double sum = 0.0;
          for (std::size_t x = 0; x < ow; ++x) sum += grow[x];
          grads.bias[oc] += sum;
        }
        const KernelSpan sy = kernel_span(y, g.stride_h, g.pad_h, kh, h);
        for (std::size_t ic = 0; ic < cin_g; ++ic) {
          const std::size_t plane_off = (b * c_in + grp * cin_g + ic) * h * w;
          for (std::size_t ky = sy.lo; ky < sy.hi; ++ky) {
            const std::size_t row_off =
                plane_off + static_cast<std::size_t>(sy.origin + static_cast<std::ptrdiff_t>(ky)) * w;
            const double* krow = k_oc + (ic * kh + ky) * kw;
            double* gkrow = gk_oc + (ic * kh + ky) * kw;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const double kv = krow[kx];
              const auto [x0, x1] = cols[kx];
              const std::size_t start = row_off + x0 * sw + kx - g.pad_w;
              const double* src = in + start;
              double* dst = gin + start;
              double acc = 0.0;
              if (sw == 1) {
                for (std::size_t x = x0; x < x1; ++x) {
                  acc += grow[x] * src[x - x0];
                  dst[x - x0] += kv * grow[x];
                }
              } else {
                for (std::size_t x = x0; x < x1; ++x) {
                  acc += grow[x] * src[(x - x0) * sw];
                  dst[(x - x0) * sw] += kv * grow[x];
                }
              }
              gkrow[kx] += acc;
            }
          }
        }
      }
    }
  }
  return grads;
}

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
               Conv2dGeometry g, bool bias, std::mt19937_64& rng)
    : in_channels_(in_channels), out_channels_(out_channels), geom_(g), has_bias_(bias) {
  if (g.groups == 0 || in_channels % g.groups != 0 || out_channels % g.groups != 0) {
    throw std::invalid_argument(name + ": groups must divide channel counts");
  }
  Tensor k({out_channels, in_channels / g.groups, g.kernel_h, g.kernel_w});
  const std::size_t area = g.kernel_h * g.kernel_w;
  glorot_uniform(k, in_channels / g.groups * area, out_channels / g.groups * area, rng);
  weight_ = Parameter(name + ".weight", std::move(k));
  if (has_bias_) bias_ = Parameter(name + ".bias", Tensor({out_channels}));
}

Tensor Conv2d::forward(const Tensor& x, bool) {
  require_rank4(x, "conv2d");
  if (x.dim(1) != in_channels_) {
    throw std::invalid_argument(weight_.name + ": expected " + std::to_string(in_channels_) +
                                " input channels, got " + shape_string(x.shape()));
  }
  input_ = x;
  return conv2d_forward(x, weight_.value, has_bias_ ? bias_.value : Tensor(), geom_);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  auto g = conv2d_backward(input_, weight_.value, has_bias_, grad_out, geom_);
  for (std::size_t i = 0; i < g.kernel.size(); ++i) weight_.grad[i] += g.kernel[i];
  if (has_bias_) {
    for (std::size_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
  }
  return std::move(g.input);
}

Shape Conv2d::output_shape(const Shape& in) const { return conv2d_output_shape(in, out_channels_, geom_); }

std::vector<Parameter*> Conv2d::parameters() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

// ---------------------------------------------------------------------------
// Batch normalization

BatchNorm2d::BatchNorm2d(std::string name, std::size_t channels, double momentum, double eps)
    : name_(std::move(name)),
      channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(name_ + ".gamma", Tensor({channels}, 1.0)),
      beta_(name_ + ".beta", Tensor({channels}, 0.0)),
      running_mean_({channels}, 0.0),
      running_var_({channels}, 1.0) {}

std::vector<std::pair<std::string, Tensor*>> BatchNorm2d::buffers() {
  return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  require_rank4(x, "batchnorm2d");
  if (x.dim(1) != channels_) throw std::invalid_argument(name_ + ": channel count mismatch");
  const std::size_t n = x.dim(0), hw = x.dim(2) * x.dim(3);
  const std::size_t m = n * hw;
  Tensor y(x.shape());
  xhat_ = Tensor(x.shape());
  inv_std_.assign(channels_, 0.0);
  cached_training_ = training;
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (training) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = x.data() + (b * channels_ + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      mean = s / static_cast<double>(m);
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = x.data() + (b * channels_ + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mean) * (p[i] - mean);
      }
      var = ss / static_cast<double>(m);
      const double unbiased = m > 1 ? ss / static_cast<double>(m - 1) : var;
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double xh = (x[off + i] - mean) * inv;
        xhat_[off + i] = xh;
        y[off + i] = gamma_.value[c] * xh + beta_.value[c];
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  const std::size_t n = grad_out.dim(0), hw = grad_out.dim(2) * grad_out.dim(3);
  const double m = static_cast<double>(n * hw);
  Tensor dx(grad_out.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += grad_out[off + i];
        sum_dy_xh += grad_out[off + i] * xhat_[off + i];
      }
    }
    gamma_.grad[c] += sum_dy_xh;
    beta_.grad[c] += sum_dy;
    const double g = gamma_.value[c];
    const double inv = inv_std_[c];
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        if (cached_training_) {
          dx[off + i] = g * inv / m * (m * grad_out[off + i] - sum_dy - xhat_[off + i] * sum_dy_xh);
        } else {
          dx[off + i] = g * inv * grad_out[off + i];
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Pointwise nonlinearities

Tensor Elu::forward(const Tensor& x, bool) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : std::expm1(x[i]);
  return y;
}

Tensor Elu::backward(const Tensor& grad_out) {
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dx[i] = grad_out[i] * (input_[i] > 0.0 ? 1.0 : std::exp(input_[i]));
  }
  return dx;
}

Tensor Square::forward(const Tensor& x, bool) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
  return y;
}

Tensor Square::backward(const Tensor& grad_out) {
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = 2.0 * input_[i] * grad_out[i];
  return dx;
}

Tensor SafeLog::forward(const Tensor& x, bool) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::log(std::max(x[i], floor_));
  return y;
}

Tensor SafeLog::backward(const Tensor& grad_out) {
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dx[i] = input_[i] > floor_ ? grad_out[i] / input_[i] : 0.0;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Pooling

Shape AvgPool2d::output_shape(const Shape& in) const {
  if (in.size() != 4) throw std::invalid_argument("avgpool2d expects [N,C,H,W]");
  const std::size_t kh = std::min(kh_, in[2]), kw = std::min(kw_, in[3]);
  const std::size_t sh = std::max<std::size_t>(1, std::min(sh_, in[2]));
  const std::size_t sw = std::max<std::size_t>(1, std::min(sw_, in[3]));
  return {in[0], in[1], (in[2] - kh) / sh + 1, (in[3] - kw) / sw + 1};
}

Tensor AvgPool2d::forward(const Tensor& x, bool) {
  require_rank4(x, "avgpool2d");
  in_shape_ = x.shape();
  const Shape os = output_shape(x.shape());
  const std::size_t kh = std::min(kh_, x.dim(2)), kw = std::min(kw_, x.dim(3));
  const std::size_t sh = std::max<std::size_t>(1, std::min(sh_, x.dim(2)));
  const std::size_t sw = std::max<std::size_t>(1, std::min(sw_, x.dim(3)));
  const double scale = 1.0 / static_cast<double>(kh * kw);
  Tensor y(os);
  for (std::size_t b = 0; b < os[0]; ++b)
    for (std::size_t c = 0; c < os[1]; ++c)
      for (std::size_t oy = 0; oy < os[2]; ++oy)
        for (std::size_t ox = 0; ox < os[3]; ++ox) {
          double s = 0.0;
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) s += x.at(b, c, oy * sh + ky, ox * sw + kx);
          y.at(b, c, oy, ox) = s * scale;
        }
  return y;
}

Tensor AvgPool2d::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  const std::size_t kh = std::min(kh_, in_shape_[2]), kw = std::min(kw_, in_shape_[3]);
  const std::size_t sh = std::max<std::size_t>(1, std::min(sh_, in_shape_[2]));
  const std::size_t sw = std::max<std::size_t>(1, std::min(sw_, in_shape_[3]));
  const double scale = 1.0 / static_cast<double>(kh * kw);
  const Shape& os = grad_out.shape();
  for (std::size_t b = 0; b < os[0]; ++b)
    for (std::size_t c = 0; c < os[1]; ++c)
      for (std::size_t oy = 0; oy < os[2]; ++oy)
        for (std::size_t ox = 0; ox < os[3]; ++ox) {
          const double g = grad_out.at(b, c, oy, ox) * scale;
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) dx.at(b, c, oy * sh + ky, ox * sw + kx) += g;
        }
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, bool training) {
  cached_training_ = training && p_ > 0.0;
  if (!cached_training_) return x;
  if (!frozen_ || mask_.size() != x.size()) {
    std::bernoulli_distribution keep(1.0 - p_);
    const double scale = 1.0 / (1.0 - p_);
    mask_.resize(x.size());
    for (auto& m : mask_) m = keep(rng_) ? scale : 0.0;
  }
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask_[i];
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  if (!cached_training_) return grad_out;
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * mask_[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Variance over columns

Shape ColumnVariance::output_shape(const Shape& in) const {
  if (in.size() != 4) throw std::invalid_argument("variance layer expects [N,C,H,W]");
  return {in[0], in[1], in[2], 1};
}

Tensor ColumnVariance::forward(const Tensor& x, bool) {
  require_rank4(x, "variance");
  input_ = x;
  const std::size_t rows = x.dim(0) * x.dim(1) * x.dim(2), w = x.dim(3);
  Tensor y(output_shape(x.shape()));
  mean_.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = x.data() + r * w;
    double s = 0.0;
    for (std::size_t i = 0; i < w; ++i) s += p[i];
    const double mu = s / static_cast<double>(w);
    double ss = 0.0;
    for (std::size_t i = 0; i < w; ++i) ss += (p[i] - mu) * (p[i] - mu);
    mean_[r] = mu;
    y[r] = ss / static_cast<double>(w);
  }
  return y;
}

Tensor ColumnVariance::backward(const Tensor& grad_out) {
  const std::size_t w = input_.dim(3);
  Tensor dx(input_.shape());
  for (std::size_t r = 0; r < mean_.size(); ++r) {
    const double g = grad_out[r] * 2.0 / static_cast<double>(w);
    for (std::size_t i = 0; i < w; ++i) dx[r * w + i] = g * (input_[r * w + i] - mean_[r]);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Flatten / dense

Shape Flatten::output_shape(const Shape& in) const {
  Shape s{in.at(0), 1};
  for (std::size_t i = 1; i < in.size(); ++i) s[1] *= in[i];
  return s;
}

Tensor Flatten::forward(const Tensor& x, bool) {
  in_shape_ = x.shape();
  return x.reshaped(output_shape(x.shape()));
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(in_shape_); }

Dense::Dense(std::string name, std::size_t in_features, std::size_t out_features,
             std::mt19937_64& rng)
    : in_(in_features), out_(out_features) {
  Tensor w({out_features, in_features});
  glorot_uniform(w, in_features, out_features, rng);
  weight_ = Parameter(name + ".weight", std::move(w));
  bias_ = Parameter(name + ".bias", Tensor({out_features}));
}

Shape Dense::output_shape(const Shape& in) const {
  if (in.size() != 2 || in[1] != in_) {
    throw std::invalid_argument(weight_.name + ": expected [N," + std::to_string(in_) + "], got " +
                                shape_string(in));
  }
  return {in[0], out_};
}

Tensor Dense::forward(const Tensor& x, bool) {
  const Shape os = output_shape(x.shape());
  input_ = x;
  Tensor y(os);
  for (std::size_t b = 0; b < os[0]; ++b) {
    const double* xi = x.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double* wr = weight_.value.data() + o * in_;
      double acc = bias_.value[o];
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xi[i];
      y[b * out_ + o] = acc;
    }
  }
  return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
  const std::size_t n = grad_out.dim(0);
  Tensor dx(input_.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const double* xi = input_.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = grad_out[b * out_ + o];
      bias_.grad[o] += g;
      double* gw = weight_.grad.data() + o * in_;
      const double* wr = weight_.value.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        gw[i] += g * xi[i];
        dx[b * in_ + i] += g * wr[i];
      }
    }
  }
  return dx;
}

}  // namespace neuroconn::nn
