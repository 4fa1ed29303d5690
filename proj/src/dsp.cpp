#include "neuroconn/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace neuroconn::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (p == nullptr) throw std::runtime_error("FFT planning failed for n=" + std::to_string(n));
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

std::vector<cplx> transform(std::span<const cplx> x, int sign) {
  std::vector<cplx> in(x.begin(), x.end());
  std::vector<cplx> out(x.size());
  if (x.empty()) return out;
  fftw_plan p = plan_cache().get(x.size(), sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

cplx eval_section(const Biquad& s, cplx z) {
  const cplx zi = 1.0 / z;
  return (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
}

void check_cutoff(double f, double rate, const char* what) {
  if (!(f > 0.0) || !(f < rate / 2.0)) {
    throw std::invalid_argument(std::string(what) + " " + std::to_string(f) +
                                " Hz must lie strictly between 0 and Nyquist (" +
                                std::to_string(rate / 2.0) + " Hz)");
  }
}

// Runs the cascade over x in place (transposed direct form II).
void sosfilt(std::span<const Biquad> sos, std::vector<double>& x, std::vector<double> z1,
             std::vector<double> z2) {
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    double a = z1[s];
    double b = z2[s];
    for (double& v : x) {
      const double in = v;
      const double y = q.b0 * in + a;
      a = q.b1 * in - q.a1 * y + b;
      b = q.b2 * in - q.a2 * y;
      v = y;
    }
  }
}

}  // namespace

std::vector<cplx> fft(std::span<const cplx> x) { return transform(x, FFTW_FORWARD); }

std::vector<cplx> ifft(std::span<const cplx> x) {
  auto out = transform(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<cplx> rfft(std::span<const double> x) {
  std::vector<cplx> c(x.begin(), x.end());
  auto full = fft(c);
  full.resize(x.size() / 2 + 1);
  return full;
}

double wrap_phase(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

// ---------------------------------------------------------------------------
// Filter design

std::vector<Biquad> design_butter_bandpass(double rate, double lo, double hi, int order) {
  if (order < 1) throw std::invalid_argument("filter order must be >= 1");
  check_cutoff(lo, rate, "low cutoff");
  check_cutoff(hi, rate, "high cutoff");
  if (!(lo < hi)) throw std::invalid_argument("low cutoff must be below high cutoff");

  const double fs2 = 2.0 * rate;
  const double wl = fs2 * std::tan(kPi * lo / rate);
  const double wh = fs2 * std::tan(kPi * hi / rate);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);

  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = kPi * (2.0 * k + order + 1) / (2.0 * order);
    const cplx proto = std::polar(1.0, theta);
    const cplx half = proto * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0 * w0);
    for (cplx s : {half + root, half - root}) poles.push_back((fs2 + s) / (fs2 - s));
  }

  std::vector<Biquad> sos;
  std::vector<double> real_poles;
  for (const cplx& p : poles) {
    if (std::abs(p.imag()) <= 1e-14 * std::abs(p)) {
      real_poles.push_back(p.real());
    } else if (p.imag() > 0.0) {
      sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
    }
  }
  std::sort(real_poles.begin(), real_poles.end());
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double p = real_poles[i], q = real_poles[i + 1];
    sos.push_back({1.0, 0.0, -1.0, -(p + q), p * q});
  }
  if (sos.size() != static_cast<std::size_t>(order)) {
    throw std::logic_error("unexpected pole configuration in band-pass design");
  }

  const double center = 2.0 * std::atan(w0 / fs2);
  const cplx zc = std::polar(1.0, center);
  for (auto& s : sos) {
    const double g = 1.0 / std::abs(eval_section(s, zc));
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return sos;
}

Biquad design_notch(double rate, double center, double quality) {
  check_cutoff(center, rate, "notch center");
  if (!(quality > 0.0)) throw std::invalid_argument("notch quality must be positive");
  const double w0 = 2.0 * kPi * center / rate;
  const double bw = w0 / quality;
  const double beta = std::tan(bw / 2.0);
  const double gain = 1.0 / (1.0 + beta);
  const double c = std::cos(w0);
  return {gain, -2.0 * gain * c, gain, -2.0 * gain * c, 2.0 * gain - 1.0};
}

double magnitude_response(std::span<const Biquad> sos, double freq_hz, double rate) {
  const cplx z = std::polar(1.0, 2.0 * kPi * freq_hz / rate);
  cplx h = 1.0;
  for (const auto& s : sos) h *= eval_section(s, z);
  return std::abs(h);
}

// ---------------------------------------------------------------------------
// Zero-phase filtering

std::vector<double> filtfilt(std::span<const Biquad> sos, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t padlen = 3 * 2 * sos.size();
  if (n <= padlen) {
    throw std::invalid_argument("signal of " + std::to_string(n) +
                                " samples is too short for zero-phase filtering (needs more than " +
                                std::to_string(padlen) + ", 3x the filter order)");
  }

  // Steady-state section states for a unit step, scaled through the cascade.
  std::vector<double> zi1(sos.size()), zi2(sos.size());
  double scale = 1.0;
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    const double y = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    zi1[s] = scale * (y - q.b0);
    zi2[s] = scale * (q.b2 - q.a2 * y);
    scale *= y;
  }

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto scaled = [&](double v) {
    std::vector<double> a(zi1), b(zi2);
    for (auto& e : a) e *= v;
    for (auto& e : b) e *= v;
    return std::make_pair(a, b);
  };

  auto [f1, f2] = scaled(ext.front());
  sosfilt(sos, ext, f1, f2);
  std::reverse(ext.begin(), ext.end());
  auto [r1, r2] = scaled(ext.front());
  sosfilt(sos, ext, r1, r2);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

std::vector<double> bandpass(std::span<const double> x, double rate, double lo, double hi,
                             int order) {
  const auto sos = design_butter_bandpass(rate, lo, hi, order);
  return filtfilt(sos, x);
}

Matrix bandpass(const Matrix& signal, double rate, double lo, double hi, int order) {
  const auto sos = design_butter_bandpass(rate, lo, hi, order);
  Matrix out(signal.rows, signal.cols);
  for (std::size_t r = 0; r < signal.rows; ++r) {
    auto y = filtfilt(sos, signal.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> notch(std::span<const double> x, double rate, double center, double quality) {
  const Biquad q = design_notch(rate, center, quality);
  return filtfilt(std::span<const Biquad>(&q, 1), x);
}

Matrix notch(const Matrix& signal, double rate, double center, double quality) {
  const Biquad q = design_notch(rate, center, quality);
  Matrix out(signal.rows, signal.cols);
  for (std::size_t r = 0; r < signal.rows; ++r) {
    auto y = filtfilt(std::span<const Biquad>(&q, 1), signal.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

Matrix apply_filter(const Matrix& signal, double rate, const FilterSpec& spec) {
  if (spec.order < 1) throw std::invalid_argument("filter order must be >= 1");
  switch (spec.kind) {
    case FilterKind::bandpass:
      return bandpass(signal, rate, spec.lo_hz, spec.hi_hz, spec.order);
    case FilterKind::notch:
      return notch(signal, rate, spec.center_hz, spec.quality);
  }
  throw std::logic_error("unknown filter kind");
}

// ---------------------------------------------------------------------------
// Spectra

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

namespace {

std::pair<std::size_t, std::size_t> window_geometry(double rate, double window_seconds,
                                                    double hop_seconds) {
  if (!(window_seconds > 0.0) || !(hop_seconds > 0.0)) {
    throw std::invalid_argument("STFT window and hop must be positive");
  }
  const auto len = static_cast<std::size_t>(std::llround(window_seconds * rate));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop_seconds * rate)));
  if (len < 2) throw std::invalid_argument("STFT window shorter than two samples");
  return {len, hop};
}

}  // namespace

std::size_t stft_window_count(std::size_t n, double rate, double window_seconds,
                              double hop_seconds) {
  auto [len, hop] = window_geometry(rate, window_seconds, hop_seconds);
  if (len > n) {
    throw std::invalid_argument("STFT window of " + std::to_string(len) +
                                " samples is longer than the signal (" + std::to_string(n) + ")");
  }
  return (n - len) / hop + 1;
}

Spectrogram stft(std::span<const double> x, double rate, double window_seconds,
                 double hop_seconds) {
  auto [len, hop] = window_geometry(rate, window_seconds, hop_seconds);
  const std::size_t nw = stft_window_count(x.size(), rate, window_seconds, hop_seconds);
  const auto win = hann(len);

  Spectrogram spec;
  spec.n_windows = nw;
  spec.n_bins = len / 2 + 1;
  spec.window_seconds = window_seconds;
  spec.hop_seconds = hop_seconds;
  spec.bin_hz = rate / static_cast<double>(len);
  spec.power.resize(nw * spec.n_bins);

  std::vector<double> seg(len);
  for (std::size_t w = 0; w < nw; ++w) {
    for (std::size_t i = 0; i < len; ++i) seg[i] = x[w * hop + i] * win[i];
    const auto coeffs = rfft(seg);
    for (std::size_t k = 0; k < spec.n_bins; ++k) {
      const bool unpaired = (k == 0) || (len % 2 == 0 && k == len / 2);
      spec.power[w * spec.n_bins + k] =
          (unpaired ? 1.0 : 2.0) * std::norm(coeffs[k]) / static_cast<double>(len);
    }
  }
  return spec;
}

std::vector<double> analytic_phase(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 16) throw std::invalid_argument("analytic phase needs at least 16 samples");
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) {
    throw std::invalid_argument("phase undefined for an all-zero signal");
  }
  std::vector<cplx> c(x.begin(), x.end());
  auto spec = fft(c);
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (k < (n + 1) / 2) {
      spec[k] *= 2.0;
    } else if (n % 2 == 0 && k == half) {
      // Nyquist bin kept as is.
    } else {
      spec[k] = 0.0;
    }
  }
  const auto analytic = ifft(spec);
  std::vector<double> phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::atan2(analytic[i].imag(), analytic[i].real());
    if (a <= -kPi) a = kPi;
    phase[i] = a;
  }
  return phase;
}

}  // namespace neuroconn::dsp
