#pragma once

#include <array>
#include <ostream>
#include <span>
#include <vector>

#include "neuroconn/dsp.hpp"
#include "neuroconn/signal.hpp"

namespace neuroconn::features {

// Summed STFT power per window and band, [n_windows][n_bands] flattened.
// A bin contributes to a band when lo <= f < hi.
std::vector<double> band_power(const dsp::Spectrogram& spec, std::span<const FrequencyBand> bands,
                               double rate);

struct BandPowerOptions {
  double window_seconds = 1.0;
  double hop_seconds = 0.5;
  bool log_transform = false;  // log(1 + x)
};

struct BandPowerFeatures {
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_windows = 0;
  std::size_t n_bands = 0;
  std::vector<double> values;  // [trial][channel][window][band]
  std::vector<FrequencyBand> bands;
  bool log_transformed = false;

  double at(std::size_t t, std::size_t c, std::size_t w, std::size_t b) const {
    return values[((t * n_channels + c) * n_windows + w) * n_bands + b];
  }
};

// stft + band_power for every trial and channel. `jobs` > 1 splits trials
// across threads; the result does not depend on it.
BandPowerFeatures epoch_features(const EpochSet& epochs, std::span<const FrequencyBand> bands,
                                 const BandPowerOptions& opts = {}, int jobs = 1);

// One row per (trial, channel, window): band columns plus class/paradigm.
void write_csv(std::ostream& out, const BandPowerFeatures& f, const EpochSet& epochs);

}  // namespace neuroconn::features
