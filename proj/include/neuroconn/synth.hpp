#pragma once

// Synthetic phase-coupled EEG epochs for desk-scale verification.

#include <cstdint>
#include <vector>

#include "neuroconn/signal.hpp"

namespace neuroconn::experiment {

// Channels in `channels` share one band-limited oscillation in `band`. The
// j-th listed channel lags the shared phase by j * phase_lag_rad; each
// channel's own phase and log-amplitude deviation is scaled by (1 - strength).
struct CouplingTerm {
  std::vector<std::size_t> channels;
  FrequencyBand band;
  double phase_lag_rad = 0.0;
  double strength = 1.0;
};

struct SynthSpec {
  int n_classes = 20;
  std::size_t n_channels = 128;
  double rate_hz = 1000.0;
  double epoch_seconds = 1.5;
  std::size_t trials_per_class = 60;
  std::vector<std::vector<CouplingTerm>> coupling_plan;  // one list per class
  double noise_snr_db = 10.0;
  std::uint64_t seed = 123;

  void validate() const;
};

// Class c couples a disjoint group of channels in `band`; groups hold
// clamp(n_channels / n_classes, 2, 4) channels.
std::vector<std::vector<CouplingTerm>> default_coupling_plan(int n_classes, std::size_t n_channels,
                                                             const FrequencyBand& band,
                                                             double strength, double phase_lag_rad);

// Trials are ordered class-major (all of class 0 first). Paradigm label is
// class % 4.
EpochSet synth_generate(const SynthSpec& spec);

// Writes the epochs back to back as one continuous recording with a marker at
// each epoch start.
Recording epochs_to_recording(const EpochSet& epochs);

}  // namespace neuroconn::experiment
