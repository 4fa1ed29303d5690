#pragma once

// Training/evaluation harness over the (feature x model x band) grid.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuroconn/connectivity.hpp"
#include "neuroconn/features.hpp"
#include "neuroconn/models.hpp"
#include "neuroconn/split.hpp"

namespace neuroconn::experiment {

// Feature names: "plv", "pli" (connectivity) and "bandpower".
// Band columns: the five band names plus "total" (all five stacked).
inline constexpr const char* kTotalBand = "total";

std::vector<std::string> band_columns();  // delta..gamma, total

// Per-trial decoder inputs, one [N, 1, C, W] tensor per (feature, band).
struct FeatureSet {
  std::vector<int> labels;
  std::vector<double> targets;  // regression targets; empty for classification
  int n_classes = 0;
  std::map<std::string, std::map<std::string, nn::Tensor>> tables;

  std::size_t n_trials() const { return labels.size(); }
  // [N, n_bands, C, W]; "total" stacks the five bands in delta..gamma order.
  nn::Tensor inputs(const std::string& feature, const std::string& band) const;
  void add_connectivity(const connectivity::TrialConnectivity& tc);
  void add_bandpower(const features::BandPowerFeatures& bp);
};

struct FeatureOptions {
  connectivity::ConnectivityOptions connectivity;
  features::BandPowerOptions bandpower;
  int jobs = 1;
};

// Computes every feature named in `features` for all five canonical bands.
FeatureSet compute_features(const EpochSet& epochs, const std::vector<std::string>& features,
                            const FeatureOptions& opts = {});

struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 100;
  double weight_decay = 5e-4;
  std::uint64_t seed = 123;
  std::size_t batch_size = 32;
};

struct TrainOutcome {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = 0;  // 1-based; 0 when no epoch improved (never for finite losses)
};

// Mini-batch Adam training. After the last epoch the parameters from the
// epoch with the lowest validation loss are restored (training loss when the
// validation set is empty).
TrainOutcome train_model(nn::Model& model, const nn::Tensor& inputs, const std::vector<int>& labels,
                         const std::vector<double>& targets, const std::vector<std::size_t>& train_idx,
                         const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                         std::uint64_t shuffle_seed);

// Gathers rows of a [N, ...] tensor.
nn::Tensor gather(const nn::Tensor& x, const std::vector<std::size_t>& idx);

struct GridSpec {
  std::vector<std::string> features{"plv", "pli"};
  std::vector<nn::Architecture> models{nn::Architecture::eegnet_like, nn::Architecture::shallow_like,
                                       nn::Architecture::fbcnet_like};
  std::vector<std::string> bands = band_columns();

  std::size_t cell_count() const { return features.size() * models.size() * bands.size(); }
};

struct GridOptions {
  TrainConfig train;
  int n_runs = 5;
  SplitFractions fractions;
  std::uint64_t split_seed = 123;
  std::size_t hidden_dim = 64;
  double dropout_p = 0.5;
  nn::Task task = nn::Task::classification;
  bool shuffle_labels = false;  // chance-level control
  std::uint64_t shuffle_seed = 7;
  int jobs = 1;
};

struct RunResult {
  std::uint64_t model_seed = 0;
  double accuracy = 0.0;  // percent; classification only
  double mae = 0.0;       // regression only
  int best_epoch = 0;
  std::vector<double> train_loss, val_loss;
  std::vector<std::size_t> test_indices;
  std::vector<int> predictions;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
};

struct CellResult {
  std::string feature;
  nn::Architecture model;
  std::string band;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // sample std over runs; 0 for one run
  double mae_mean = 0.0;
  double mae_std = 0.0;
  std::vector<RunResult> runs;
};

struct ExperimentReport {
  GridSpec grid;
  GridOptions options;
  std::size_t n_trials = 0;
  int n_classes = 0;
  SplitPlan split;
  std::vector<CellResult> cells;

  const CellResult& cell(const std::string& feature, nn::Architecture model,
                         const std::string& band) const;
};

std::uint64_t run_seed(std::uint64_t base, int run);

ExperimentReport run_grid(const FeatureSet& features, const GridSpec& grid, const GridOptions& opts);

// Accuracy (percent) from a confusion matrix: trace / total.
double confusion_accuracy(const std::vector<std::vector<int>>& confusion);

nlohmann::json report_to_json(const ExperimentReport& r);
// Rows: feature x model; columns: the band columns of the grid.
std::string report_markdown(const nlohmann::json& report);

}  // namespace neuroconn::experiment
