#pragma once

// Filtering, spectral transforms and analytic-signal phase extraction.
//
// All functions are pure. Filters are applied forward-backward so the net
// phase response is zero, which keeps phase-based connectivity unbiased.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "neuroconn/signal.hpp"

namespace neuroconn::dsp {

using cplx = std::complex<double>;

// Unnormalized DFT / inverse DFT (inverse includes the 1/n factor).
std::vector<cplx> fft(std::span<const cplx> x);
std::vector<cplx> ifft(std::span<const cplx> x);
std::vector<cplx> rfft(std::span<const double> x);  // floor(n/2)+1 bins

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

enum class FilterKind { bandpass, notch };

struct FilterSpec {
  FilterKind kind = FilterKind::bandpass;
  double lo_hz = 0.5;
  double hi_hz = 125.0;
  double center_hz = 60.0;
  double quality = 30.0;
  int order = 4;
};

// Butterworth band-pass of the given prototype order (2*order poles),
// realized as `order` biquads normalized to unit gain at the band center.
std::vector<Biquad> design_butter_bandpass(double rate, double lo, double hi, int order = 4);
// Second-order IIR notch (same design as the common RBJ/iirnotch form).
Biquad design_notch(double rate, double center, double quality);

// |H(f)| of a cascade, single pass.
double magnitude_response(std::span<const Biquad> sos, double freq_hz, double rate);

// Zero-phase forward-backward filtering of one channel with odd-extension
// padding and steady-state initial conditions.
std::vector<double> filtfilt(std::span<const Biquad> sos, std::span<const double> x);

Matrix bandpass(const Matrix& signal, double rate, double lo, double hi, int order = 4);
std::vector<double> bandpass(std::span<const double> x, double rate, double lo, double hi,
                             int order = 4);
Matrix notch(const Matrix& signal, double rate, double center, double quality = 30.0);
std::vector<double> notch(std::span<const double> x, double rate, double center,
                          double quality = 30.0);
Matrix apply_filter(const Matrix& signal, double rate, const FilterSpec& spec);

// STFT power of a single channel.
struct Spectrogram {
  std::size_t n_windows = 0;
  std::size_t n_bins = 0;
  std::vector<double> power;  // [n_windows, n_bins]
  double window_seconds = 1.0;
  double hop_seconds = 0.5;
  double bin_hz = 1.0;

  double at(std::size_t w, std::size_t k) const { return power[w * n_bins + k]; }
  double bin_frequency(std::size_t k) const { return static_cast<double>(k) * bin_hz; }
};

// Periodic Hann window of length n.
std::vector<double> hann(std::size_t n);

// Hann-windowed one-sided periodogram per window. Power is scaled so that the
// bins of a window sum to the energy of the windowed segment, sum((w*x)^2).
Spectrogram stft(std::span<const double> x, double rate, double window_seconds = 1.0,
                 double hop_seconds = 0.5);

// Number of STFT windows for a signal of n samples.
std::size_t stft_window_count(std::size_t n, double rate, double window_seconds,
                              double hop_seconds);

// Instantaneous phase (radians, in (-pi, pi]) of the FFT-based analytic signal.
std::vector<double> analytic_phase(std::span<const double> x);

// Wraps an angle to (-pi, pi].
double wrap_phase(double a);

}  // namespace neuroconn::dsp
