#include "neuroconn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "neuroconn/optim.hpp"
#include "neuroconn/parallel.hpp"

namespace neuroconn::experiment {

std::vector<std::string> band_columns() {
  std::vector<std::string> cols;
  for (const auto& b : canonical_bands()) cols.emplace_back(band_name(b.name));
  cols.emplace_back(kTotalBand);
  return cols;
}

// ---------------------------------------------------------------------------
// Features

nn::Tensor FeatureSet::inputs(const std::string& feature, const std::string& band) const {
  auto fit = tables.find(feature);
  if (fit == tables.end()) throw std::invalid_argument("feature '" + feature + "' was not computed");
  const auto& per_band = fit->second;
  if (band != kTotalBand) {
    auto bit = per_band.find(band);
    if (bit == per_band.end()) {
      throw std::invalid_argument("feature '" + feature + "' has no '" + band + "' band");
    }
    return bit->second;
  }
  std::vector<const nn::Tensor*> planes;
  for (const auto& b : canonical_bands()) {
    auto bit = per_band.find(std::string(band_name(b.name)));
    if (bit == per_band.end()) {
      throw std::invalid_argument("'total' needs all five bands of feature '" + feature + "'");
    }
    planes.push_back(&bit->second);
  }
  const auto& s = planes[0]->shape();
  const std::size_t n = s[0], plane = s[2] * s[3];
  nn::Tensor out({n, planes.size(), s[2], s[3]});
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t b = 0; b < planes.size(); ++b) {
      std::copy_n(planes[b]->data() + t * plane, plane, out.data() + (t * planes.size() + b) * plane);
    }
  }
  return out;
}

void FeatureSet::add_connectivity(const connectivity::TrialConnectivity& tc) {
  if (tc.n_trials != labels.size()) throw std::invalid_argument("connectivity trial count mismatch");
  nn::Tensor t({tc.n_trials, 1, tc.n_channels, tc.n_channels}, tc.values);
  tables[std::string(connectivity::metric_name(tc.metric))][std::string(band_name(tc.band.name))] =
      std::move(t);
}

void FeatureSet::add_bandpower(const features::BandPowerFeatures& bp) {
  if (bp.n_trials != labels.size()) throw std::invalid_argument("band-power trial count mismatch");
  for (std::size_t b = 0; b < bp.n_bands; ++b) {
    nn::Tensor t({bp.n_trials, 1, bp.n_channels, bp.n_windows});
    for (std::size_t tr = 0; tr < bp.n_trials; ++tr)
      for (std::size_t c = 0; c < bp.n_channels; ++c)
        for (std::size_t w = 0; w < bp.n_windows; ++w) t.at(tr, 0, c, w) = bp.at(tr, c, w, b);
    tables["bandpower"][std::string(band_name(bp.bands[b].name))] = std::move(t);
  }
}

FeatureSet compute_features(const EpochSet& epochs, const std::vector<std::string>& features,
                            const FeatureOptions& opts) {
  FeatureSet fs;
  fs.labels = epochs.class_labels();
  fs.n_classes = epochs.n_classes();
  const auto& bands = canonical_bands();
  std::vector<connectivity::Metric> metrics;
  bool bandpower = false;
  for (const auto& f : features) {
    if (f == "bandpower") {
      bandpower = true;
    } else {
      metrics.push_back(connectivity::parse_metric(f));
    }
  }
  if (!metrics.empty()) {
    auto all = connectivity::epoch_connectivity(epochs, bands, metrics, opts.connectivity, opts.jobs);
    for (const auto& tc : all) fs.add_connectivity(tc);
  }
  if (bandpower) fs.add_bandpower(features::epoch_features(epochs, bands, opts.bandpower, opts.jobs));
  return fs;
}

// ---------------------------------------------------------------------------
// Training

nn::Tensor gather(const nn::Tensor& x, const std::vector<std::size_t>& idx) {
  nn::Shape s = x.shape();
  const std::size_t row = nn::shape_size(s) / s[0];
  s[0] = idx.size();
  nn::Tensor out(s);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(x.data() + idx[i] * row, row, out.data() + i * row);
  }
  return out;
}

namespace {

constexpr std::size_t kEvalChunk = 256;

nn::Tensor predict(nn::Model& model, const nn::Tensor& inputs, const std::vector<std::size_t>& idx) {
  const std::size_t k = model.spec().output_dim();
  nn::Tensor out({idx.size(), k});
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const std::size_t end = std::min(idx.size(), start + kEvalChunk);
    std::vector<std::size_t> chunk(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                   idx.begin() + static_cast<std::ptrdiff_t>(end));
    const auto logits = model.forward(gather(inputs, chunk), false);
    std::copy(logits.values().begin(), logits.values().end(), out.data() + start * k);
  }
  return out;
}

nn::LossResult batch_loss(const nn::Model& model, const nn::Tensor& out,
                          const std::vector<int>& labels, const std::vector<double>& targets,
                          const std::vector<std::size_t>& idx) {
  if (model.spec().task == nn::Task::classification) {
    std::vector<int> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y[i] = labels[idx[i]];
    return nn::cross_entropy(out, y);
  }
  std::vector<double> y(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) y[i] = targets[idx[i]];
  return nn::mae_loss(out, y);
}

}  // namespace

TrainOutcome train_model(nn::Model& model, const nn::Tensor& inputs, const std::vector<int>& labels,
                         const std::vector<double>& targets, const std::vector<std::size_t>& train_idx,
                         const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                         std::uint64_t shuffle_seed) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.epochs < 1) throw std::invalid_argument("need at least one training epoch");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (train_idx.empty()) throw std::invalid_argument("empty training set");
  if (model.spec().task == nn::Task::regression && targets.size() != labels.size()) {
    throw std::invalid_argument("regression needs one target per trial");
  }

  nn::Adam adam;
  std::mt19937_64 rng(shuffle_seed);
  auto params = model.parameters();
  TrainOutcome outcome;
  double best = std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor> best_state = model.state();

  std::vector<std::size_t> order = train_idx;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      const auto out = model.forward(gather(inputs, batch), true);
      const auto loss = batch_loss(model, out, labels, targets, batch);
      model.zero_grad();
      model.backward(loss.grad);
      adam.step(params, cfg.learning_rate, cfg.weight_decay);
      total += loss.loss * static_cast<double>(batch.size());
    }
    outcome.train_loss.push_back(total / static_cast<double>(order.size()));

    double monitored = outcome.train_loss.back();
    if (!val_idx.empty()) {
      const auto out = predict(model, inputs, val_idx);
      monitored = batch_loss(model, out, labels, targets, val_idx).loss;
      outcome.val_loss.push_back(monitored);
    }
    if (monitored < best) {
      best = monitored;
      outcome.best_epoch = epoch;
      best_state = model.state();
    }
  }
  model.load_state(best_state);
  return outcome;
}

// ---------------------------------------------------------------------------
// Grid

std::uint64_t run_seed(std::uint64_t base, int run) {
  std::uint64_t x = base * 0x100000001B3ull + static_cast<std::uint64_t>(run) + 1;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double confusion_accuracy(const std::vector<std::vector<int>>& confusion) {
  long long trace = 0, total = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    for (std::size_t j = 0; j < confusion[i].size(); ++j) {
      total += confusion[i][j];
      if (i == j) trace += confusion[i][j];
    }
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(trace) / static_cast<double>(total);
}

const CellResult& ExperimentReport::cell(const std::string& feature, nn::Architecture model,
                                         const std::string& band) const {
  for (const auto& c : cells) {
    if (c.feature == feature && c.model == model && c.band == band) return c;
  }
  throw std::out_of_range("no grid cell " + feature + "/" + std::string(nn::architecture_name(model)) +
                          "/" + band);
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

ExperimentReport run_grid(const FeatureSet& features, const GridSpec& grid, const GridOptions& opts) {
  if (opts.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  if (grid.cell_count() == 0) throw std::invalid_argument("empty grid");
  if (features.n_trials() == 0) throw std::invalid_argument("no trials in feature set");

  ExperimentReport report;
  report.grid = grid;
  report.options = opts;
  report.n_trials = features.n_trials();
  report.n_classes = features.n_classes;

  std::vector<int> labels = features.labels;
  if (opts.shuffle_labels) {
    std::mt19937_64 rng(opts.shuffle_seed);
    std::shuffle(labels.begin(), labels.end(), rng);
  }
  report.split = stratified_split(labels, opts.fractions, opts.split_seed);
  const auto& split = report.split;

  struct CellKey {
    std::string feature;
    nn::Architecture model;
    std::string band;
  };
  std::vector<CellKey> keys;
  for (const auto& f : grid.features)
    for (auto m : grid.models)
      for (const auto& b : grid.bands) keys.push_back({f, m, b});

  report.cells.resize(keys.size());
  parallel_for(keys.size(), opts.jobs, [&](std::size_t ci) {
    const auto& key = keys[ci];
    CellResult cell;
    cell.feature = key.feature;
    cell.model = key.model;
    cell.band = key.band;
    try {
      const nn::Tensor inputs = features.inputs(key.feature, key.band);
      nn::DecoderSpec spec;
      spec.architecture = key.model;
      spec.n_classes = std::max(features.n_classes, 2);
      spec.input = {inputs.dim(1), inputs.dim(2), inputs.dim(3)};
      spec.hidden_dim = opts.hidden_dim;
      spec.dropout_p = opts.dropout_p;
      spec.task = opts.task;

      std::vector<double> accs, maes;
      for (int r = 0; r < opts.n_runs; ++r) {
        RunResult run;
        run.model_seed = run_seed(opts.train.seed, r);
        auto model = nn::build_model(spec, run.model_seed);
        auto outcome = train_model(*model, inputs, labels, features.targets, split.train, split.val,
                                   opts.train, run_seed(run.model_seed, 1));
        run.best_epoch = outcome.best_epoch;
        run.train_loss = std::move(outcome.train_loss);
        run.val_loss = std::move(outcome.val_loss);
        run.test_indices = split.test;
        const auto out = predict(*model, inputs, split.test);
        if (opts.task == nn::Task::classification) {
          const std::size_t k = spec.output_dim();
          run.confusion.assign(k, std::vector<int>(k, 0));
          for (std::size_t i = 0; i < split.test.size(); ++i) {
            const double* row = out.data() + i * k;
            const int pred = static_cast<int>(std::max_element(row, row + k) - row);
            run.predictions.push_back(pred);
            run.confusion[static_cast<std::size_t>(labels[split.test[i]])][static_cast<std::size_t>(pred)]++;
          }
          run.accuracy = confusion_accuracy(run.confusion);
          accs.push_back(run.accuracy);
        } else {
          std::vector<double> y;
          for (auto i : split.test) y.push_back(features.targets[i]);
          run.mae = nn::mae_loss(out, y).loss;
          maes.push_back(run.mae);
        }
        cell.runs.push_back(std::move(run));
      }
      if (!accs.empty()) std::tie(cell.accuracy_mean, cell.accuracy_std) = mean_std(accs);
      if (!maes.empty()) std::tie(cell.mae_mean, cell.mae_std) = mean_std(maes);
    } catch (const std::exception& e) {
      throw std::runtime_error("cell " + key.feature + "/" +
                               std::string(nn::architecture_name(key.model)) + "/" + key.band + ": " +
                               e.what());
    }
    report.cells[ci] = std::move(cell);
  });
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json report_to_json(const ExperimentReport& r) {
  using nlohmann::json;
  json j;
  json models = json::array();
  for (auto m : r.grid.models) models.push_back(nn::architecture_name(m));
  j["grid"] = {{"features", r.grid.features}, {"models", models}, {"bands", r.grid.bands}};
  const auto& o = r.options;
  j["protocol"] = {
      {"task", nn::task_name(o.task)},
      {"n_runs", o.n_runs},
      {"spread", "sample standard deviation across runs"},
      {"split", {{"seed", o.split_seed},
                 {"fractions", {o.fractions.train, o.fractions.val, o.fractions.test}},
                 {"n_train", r.split.train.size()},
                 {"n_val", r.split.val.size()},
                 {"n_test", r.split.test.size()}}},
      {"train", {{"learning_rate", o.train.learning_rate},
                 {"epochs", o.train.epochs},
                 {"weight_decay", o.train.weight_decay},
                 {"seed", o.train.seed},
                 {"batch_size", o.train.batch_size},
                 {"optimizer", "adam_decoupled_weight_decay"},
                 {"model_selection", "lowest validation loss"}}},
      {"hidden_dim", o.hidden_dim},
      {"dropout_p", o.dropout_p},
      {"shuffle_labels", o.shuffle_labels},
  };
  j["n_trials"] = r.n_trials;
  j["n_classes"] = r.n_classes;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json jc;
    jc["feature"] = c.feature;
    jc["model"] = nn::architecture_name(c.model);
    jc["band"] = c.band;
    jc["n_runs"] = c.runs.size();
    if (o.task == nn::Task::classification) {
      jc["accuracy_mean"] = c.accuracy_mean;
      jc["accuracy_std"] = c.accuracy_std;
    } else {
      jc["mae_mean"] = c.mae_mean;
      jc["mae_std"] = c.mae_std;
    }
    json runs = json::array();
    for (const auto& run : c.runs) {
      json jr;
      jr["model_seed"] = run.model_seed;
      jr["best_epoch"] = run.best_epoch;
      jr["train_loss"] = run.train_loss;
      jr["val_loss"] = run.val_loss;
      jr["test_indices"] = run.test_indices;
      if (o.task == nn::Task::classification) {
        jr["accuracy"] = run.accuracy;
        jr["predictions"] = run.predictions;
        jr["confusion"] = run.confusion;
      } else {
        jr["mae"] = run.mae;
      }
      runs.push_back(std::move(jr));
    }
    jc["runs"] = std::move(runs);
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  return j;
}

std::string report_markdown(const nlohmann::json& report) {
  const bool classification = report.at("protocol").at("task") == "classification";
  const auto bands = report.at("grid").at("bands").get<std::vector<std::string>>();
  std::ostringstream md;
  md << "| Feature | Model |";
  for (const auto& b : bands) {
    std::string h = b;
    if (!h.empty()) h[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(h[0])));
    md << ' ' << h << " |";
  }
  md << "\n|---|---|";
  for (std::size_t i = 0; i < bands.size(); ++i) md << "---|";
  md << '\n';
  char buf[64];
  for (const auto& f : report.at("grid").at("features")) {
    for (const auto& m : report.at("grid").at("models")) {
      std::string feature = f.get<std::string>();
      std::string upper = feature;
      for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      md << "| " << (feature == "bandpower" ? std::string("Band power") : upper) << " | "
         << m.get<std::string>() << " |";
      for (const auto& b : bands) {
        const nlohmann::json* found = nullptr;
        for (const auto& c : report.at("cells")) {
          if (c.at("feature") == f && c.at("model") == m && c.at("band") == b) found = &c;
        }
        if (found == nullptr) {
          md << " - |";
        } else if (classification) {
          std::snprintf(buf, sizeof buf, " %.2f ± %.2f |", found->at("accuracy_mean").get<double>(),
                        found->at("accuracy_std").get<double>());
          md << buf;
        } else {
          std::snprintf(buf, sizeof buf, " %.4f ± %.4f |", found->at("mae_mean").get<double>(),
                        found->at("mae_std").get<double>());
          md << buf;
        }
      }
      md << '\n';
    }
  }
  md << "\n" << (classification ? "Test accuracy (%)" : "Test MAE") << ", mean ± sample std over "
     << report.at("protocol").at("n_runs").get<int>() << " runs.\n";
  return md.str();
}

}  // namespace neuroconn::experiment
