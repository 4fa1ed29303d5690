#pragma once

// Declarative pipeline configuration. Defaults: 0.5-125 Hz band-pass,
// 60/120 Hz notches, 1.5 s epochs, 1 s STFT
// window, split seed 123, lr 1e-5 for 100 epochs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuroconn/experiment.hpp"
#include "neuroconn/synth.hpp"

namespace neuroconn {

struct PreprocessConfig {
  double bandpass_lo = 0.5;
  double bandpass_hi = 125.0;
  std::vector<double> notch{60.0, 120.0};
  double notch_quality = 30.0;
  int filter_order = 4;
  double epoch_seconds = 1.5;
  std::vector<std::string> exclude_channels;
};

struct FeaturesConfig {
  double window_seconds = 1.0;
  double hop_seconds = 0.5;
  bool log_transform = false;
};

struct ConnectivityConfig {
  std::vector<std::string> metrics{"plv", "pli"};
  std::vector<std::string> bands{"delta", "theta", "alpha", "beta", "gamma"};
  double edge_trim = 0.1;
  bool signed_pli = false;
};

struct TrainSection {
  std::vector<std::string> architectures{"eegnet_like", "shallow_like", "fbcnet_like"};
  std::vector<std::string> features;  // empty: every feature found
  std::vector<std::string> bands;     // grid columns; empty: every column available
  std::string task = "classification";
  // Unset means the task default: 1e-5 / 100 epochs for classification,
  // 1e-3 / 50 epochs for regression.
  std::optional<double> lr;
  std::optional<int> epochs;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  std::size_t hidden_dim = 64;
  std::size_t batch_size = 32;
  std::uint64_t seed = 123;
  int n_runs = 5;
  std::vector<double> split{0.7, 0.1, 0.2};
  bool shuffle_labels = false;

  double resolved_lr() const;
  int resolved_epochs() const;
};

struct SynthSection {
  int classes = 20;
  std::size_t channels = 128;
  double rate_hz = 1000.0;
  double epoch_seconds = 1.5;
  std::size_t trials_per_class = 60;
  std::string band = "gamma";
  double strength = 0.9;
  double phase_lag_rad = 0.785398163397448;  // pi/4
  double snr_db = 10.0;
  std::uint64_t seed = 123;

  experiment::SynthSpec to_spec() const;
};

struct PipelineConfig {
  PreprocessConfig preprocess;
  FeaturesConfig features;
  ConnectivityConfig connectivity;
  TrainSection train;
  SynthSection synth;

  // Applies NEUROCONN_SEED (if set) to the default seeds.
  static PipelineConfig defaults();

  // Overlays the sections present in `j` onto this config. Unknown keys throw
  // ConfigError. A top-level "run" section (written in run manifests) is
  // accepted and ignored.
  void merge(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

PipelineConfig load_config(const std::string& path, PipelineConfig base);

}  // namespace neuroconn
