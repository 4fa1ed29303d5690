#pragma once

// Phase-synchronization connectivity between channel pairs.

#include <filesystem>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "neuroconn/signal.hpp"

namespace neuroconn::connectivity {

enum class Metric { plv, pli };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

// |mean_k exp(i (a_k - b_k))|
double plv_pair(std::span<const double> phase_a, std::span<const double> phase_b);

// Signed mean of sgn(wrap(a_k - b_k)); pli_pair is its modulus.
double signed_pli_pair(std::span<const double> phase_a, std::span<const double> phase_b);
double pli_pair(std::span<const double> phase_a, std::span<const double> phase_b);

struct ConnectivityOptions {
  double edge_trim = 0.1;  // fraction of samples dropped at each end after the Hilbert transform
  bool signed_pli = false;  // debug: keep the sign of PLI (values then lie in [-1, 1])
  int filter_order = 4;
};

struct ConnectivityMatrix {
  Metric metric = Metric::plv;
  FrequencyBand band{};
  std::size_t n_channels = 0;
  std::size_t n_samples_used = 0;
  std::vector<double> values;  // n_channels x n_channels

  double operator()(std::size_t i, std::size_t j) const { return values[i * n_channels + j]; }
};

// Instantaneous phases of each channel after band-passing to `band`,
// trimmed at both ends. Row = channel.
Matrix band_phases(const Matrix& epoch, double rate, const FrequencyBand& band,
                   const ConnectivityOptions& opts = {});

ConnectivityMatrix connectivity_matrix(const Matrix& epoch, double rate, const FrequencyBand& band,
                                       Metric metric, const ConnectivityOptions& opts = {});

// Per-trial matrices for every band and metric requested, sharing the phase
// extraction between metrics.
struct TrialConnectivity {
  Metric metric;
  FrequencyBand band;
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_samples_used = 0;
  std::vector<double> values;  // [trial][i][j]
};

std::vector<TrialConnectivity> epoch_connectivity(const EpochSet& epochs,
                                                  std::span<const FrequencyBand> bands,
                                                  std::span<const Metric> metrics,
                                                  const ConnectivityOptions& opts = {},
                                                  int jobs = 1);

// CSV with a header row of channel names.
void write_csv(std::ostream& out, const ConnectivityMatrix& m,
               const std::vector<std::string>& channel_names);

// Flat float32 binary at `<stem>.f32` plus `<stem>.meta.json` holding
// {metric, band, n_channels, M, n_trials, class_labels, paradigm_labels}.
void save_trial_connectivity(const TrialConnectivity& tc, const EpochSet& epochs,
                             const std::filesystem::path& stem);

struct LoadedConnectivity {
  TrialConnectivity data;
  std::vector<int> class_labels;
  std::vector<Paradigm> paradigm_labels;
  int n_classes = 0;
};
LoadedConnectivity load_trial_connectivity(const std::filesystem::path& stem);

}  // namespace neuroconn::connectivity
