#include "neuroconn/features.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "neuroconn/parallel.hpp"

namespace neuroconn::features {

std::vector<double> band_power(const dsp::Spectrogram& spec, std::span<const FrequencyBand> bands,
                               double rate) {
  const double nyquist = rate / 2.0;
  for (const auto& b : bands) {
    if (!(b.lo_hz >= 0.0) || !(b.hi_hz <= nyquist) || !(b.lo_hz < b.hi_hz)) {
      throw std::invalid_argument("band " + std::string(band_name(b.name)) + " [" +
                                  std::to_string(b.lo_hz) + ", " + std::to_string(b.hi_hz) +
                                  ") lies outside the spectrogram range [0, " +
                                  std::to_string(nyquist) + "]");
    }
  }
  std::vector<double> out(spec.n_windows * bands.size(), 0.0);
  for (std::size_t w = 0; w < spec.n_windows; ++w) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      double sum = 0.0;
      for (std::size_t k = 0; k < spec.n_bins; ++k) {
        const double f = spec.bin_frequency(k);
        if (f >= bands[b].lo_hz && f < bands[b].hi_hz) sum += spec.at(w, k);
      }
      out[w * bands.size() + b] = sum;
    }
  }
  return out;
}

BandPowerFeatures epoch_features(const EpochSet& epochs, std::span<const FrequencyBand> bands,
                                 const BandPowerOptions& opts, int jobs) {
  if (epochs.n_trials() == 0) throw std::invalid_argument("no epochs to extract features from");
  BandPowerFeatures f;
  f.n_trials = epochs.n_trials();
  f.n_channels = epochs.n_channels();
  f.n_bands = bands.size();
  f.bands.assign(bands.begin(), bands.end());
  f.log_transformed = opts.log_transform;
  try {
    f.n_windows = dsp::stft_window_count(epochs.n_samples(), epochs.sampling_rate_hz(),
                                         opts.window_seconds, opts.hop_seconds);
  } catch (const std::exception& e) {
    // Every epoch has the same length, so the first one is as good as any.
    throw std::runtime_error(std::string("trial 0, channel 0: ") + e.what());
  }
  const std::size_t per_channel = f.n_windows * f.n_bands;
  f.values.resize(f.n_trials * f.n_channels * per_channel);

  parallel_for(f.n_trials, jobs, [&](std::size_t t) {
    for (std::size_t c = 0; c < f.n_channels; ++c) {
      std::vector<double> bp;
      try {
        const auto spec = dsp::stft(epochs.channel(t, c), epochs.sampling_rate_hz(),
                                    opts.window_seconds, opts.hop_seconds);
        bp = band_power(spec, bands, epochs.sampling_rate_hz());
      } catch (const std::exception& e) {
        throw std::runtime_error("trial " + std::to_string(t) + ", channel " + std::to_string(c) +
                                 ": " + e.what());
      }
      auto* dst = f.values.data() + (t * f.n_channels + c) * per_channel;
      for (std::size_t i = 0; i < per_channel; ++i) {
        dst[i] = opts.log_transform ? std::log1p(bp[i]) : bp[i];
      }
    }
  });
  return f;
}

void write_csv(std::ostream& out, const BandPowerFeatures& f, const EpochSet& epochs) {
  out << "trial,channel,window";
  for (const auto& b : f.bands) out << ',' << band_name(b.name);
  out << ",class,paradigm\n";
  out.precision(9);
  for (std::size_t t = 0; t < f.n_trials; ++t) {
    for (std::size_t c = 0; c < f.n_channels; ++c) {
      for (std::size_t w = 0; w < f.n_windows; ++w) {
        out << t << ',' << c << ',' << w;
        for (std::size_t b = 0; b < f.n_bands; ++b) out << ',' << f.at(t, c, w, b);
        out << ',' << epochs.class_labels()[t] << ',' << paradigm_name(epochs.paradigm_labels()[t])
            << '\n';
      }
    }
  }
}

}  // namespace neuroconn::features
