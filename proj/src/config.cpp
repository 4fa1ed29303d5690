#include "neuroconn/config.hpp"

#include <cstdlib>
#include <set>

#include "neuroconn/connectivity.hpp"
#include "neuroconn/io.hpp"

namespace neuroconn {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("unknown config key '" + section + "." + key + "' (allowed: " + list + ")");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
  }
}

// Accepts a string or an array of strings.
void read_list(const json& j, const char* key, std::vector<std::string>& out, const std::string& section) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_string()) {
    out = {v.get<std::string>()};
  } else {
    read(j, key, out, section);
  }
}

}  // namespace

double TrainSection::resolved_lr() const {
  if (lr) return *lr;
  return task == "regression" ? 1e-3 : 1e-5;
}

int TrainSection::resolved_epochs() const {
  if (epochs) return *epochs;
  return task == "regression" ? 50 : 100;
}

experiment::SynthSpec SynthSection::to_spec() const {
  experiment::SynthSpec s;
  s.n_classes = classes;
  s.n_channels = channels;
  s.rate_hz = rate_hz;
  s.epoch_seconds = epoch_seconds;
  s.trials_per_class = trials_per_class;
  s.noise_snr_db = snr_db;
  s.seed = seed;
  s.coupling_plan = experiment::default_coupling_plan(classes, channels,
                                                      canonical_band(parse_band_name(band)),
                                                      strength, phase_lag_rad);
  return s;
}

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  if (const char* env = std::getenv("NEUROCONN_SEED"); env != nullptr && *env != '\0') {
    try {
      const auto seed = std::stoull(env);
      c.train.seed = seed;
      c.synth.seed = seed;
    } catch (const std::exception&) {
      throw ConfigError(std::string("NEUROCONN_SEED='") + env + "' is not an unsigned integer");
    }
  }
  return c;
}

void PipelineConfig::merge(const json& j) {
  check_keys(j, "<root>", {"preprocess", "features", "connectivity", "train", "synth", "run"});
  if (j.contains("preprocess")) {
    const auto& s = j["preprocess"];
    check_keys(s, "preprocess",
               {"bandpass", "notch", "notch_quality", "filter_order", "epoch_seconds", "exclude_channels"});
    if (s.contains("bandpass")) {
      std::vector<double> bp;
      read(s, "bandpass", bp, "preprocess");
      if (bp.size() != 2) throw ConfigError("preprocess.bandpass must be [lo_hz, hi_hz]");
      preprocess.bandpass_lo = bp[0];
      preprocess.bandpass_hi = bp[1];
    }
    read(s, "notch", preprocess.notch, "preprocess");
    read(s, "notch_quality", preprocess.notch_quality, "preprocess");
    read(s, "filter_order", preprocess.filter_order, "preprocess");
    read(s, "epoch_seconds", preprocess.epoch_seconds, "preprocess");
    read(s, "exclude_channels", preprocess.exclude_channels, "preprocess");
  }
  if (j.contains("features")) {
    const auto& s = j["features"];
    check_keys(s, "features", {"window_seconds", "hop_seconds", "log_transform"});
    read(s, "window_seconds", features.window_seconds, "features");
    read(s, "hop_seconds", features.hop_seconds, "features");
    read(s, "log_transform", features.log_transform, "features");
  }
  if (j.contains("connectivity")) {
    const auto& s = j["connectivity"];
    check_keys(s, "connectivity", {"metric", "bands", "edge_trim", "signed_pli"});
    read_list(s, "metric", connectivity.metrics, "connectivity");
    read_list(s, "bands", connectivity.bands, "connectivity");
    read(s, "edge_trim", connectivity.edge_trim, "connectivity");
    read(s, "signed_pli", connectivity.signed_pli, "connectivity");
  }
  if (j.contains("train")) {
    const auto& s = j["train"];
    check_keys(s, "train",
               {"architecture", "features", "bands", "task", "lr", "epochs", "weight_decay", "dropout",
                "hidden_dim", "batch_size", "seed", "n_runs", "split", "shuffle_labels"});
    read_list(s, "architecture", train.architectures, "train");
    read_list(s, "features", train.features, "train");
    read_list(s, "bands", train.bands, "train");
    read(s, "task", train.task, "train");
    if (s.contains("lr")) {
      if (s["lr"].is_null()) train.lr.reset();
      else { double v = 0; read(s, "lr", v, "train"); train.lr = v; }
    }
    if (s.contains("epochs")) {
      if (s["epochs"].is_null()) train.epochs.reset();
      else { int v = 0; read(s, "epochs", v, "train"); train.epochs = v; }
    }
    read(s, "weight_decay", train.weight_decay, "train");
    read(s, "dropout", train.dropout, "train");
    read(s, "hidden_dim", train.hidden_dim, "train");
    read(s, "batch_size", train.batch_size, "train");
    read(s, "seed", train.seed, "train");
    read(s, "n_runs", train.n_runs, "train");
    read(s, "split", train.split, "train");
    read(s, "shuffle_labels", train.shuffle_labels, "train");
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    check_keys(s, "synth",
               {"classes", "channels", "rate_hz", "epoch_seconds", "trials_per_class", "band",
                "strength", "phase_lag_rad", "snr_db", "seed"});
    read(s, "classes", synth.classes, "synth");
    read(s, "channels", synth.channels, "synth");
    read(s, "rate_hz", synth.rate_hz, "synth");
    read(s, "epoch_seconds", synth.epoch_seconds, "synth");
    read(s, "trials_per_class", synth.trials_per_class, "synth");
    read(s, "band", synth.band, "synth");
    read(s, "strength", synth.strength, "synth");
    read(s, "phase_lag_rad", synth.phase_lag_rad, "synth");
    read(s, "snr_db", synth.snr_db, "synth");
    read(s, "seed", synth.seed, "synth");
  }
}

json PipelineConfig::to_json() const {
  json j;
  j["preprocess"] = {{"bandpass", {preprocess.bandpass_lo, preprocess.bandpass_hi}},
                     {"notch", preprocess.notch},
                     {"notch_quality", preprocess.notch_quality},
                     {"filter_order", preprocess.filter_order},
                     {"epoch_seconds", preprocess.epoch_seconds},
                     {"exclude_channels", preprocess.exclude_channels}};
  j["features"] = {{"window_seconds", features.window_seconds},
                   {"hop_seconds", features.hop_seconds},
                   {"log_transform", features.log_transform}};
  j["connectivity"] = {{"metric", connectivity.metrics},
                       {"bands", connectivity.bands},
                       {"edge_trim", connectivity.edge_trim},
                       {"signed_pli", connectivity.signed_pli}};
  j["train"] = {{"architecture", train.architectures},
                {"features", train.features},
                {"bands", train.bands},
                {"task", train.task},
                {"lr", train.resolved_lr()},
                {"epochs", train.resolved_epochs()},
                {"weight_decay", train.weight_decay},
                {"dropout", train.dropout},
                {"hidden_dim", train.hidden_dim},
                {"batch_size", train.batch_size},
                {"seed", train.seed},
                {"n_runs", train.n_runs},
                {"split", train.split},
                {"shuffle_labels", train.shuffle_labels}};
  j["synth"] = {{"classes", synth.classes},
                {"channels", synth.channels},
                {"rate_hz", synth.rate_hz},
                {"epoch_seconds", synth.epoch_seconds},
                {"trials_per_class", synth.trials_per_class},
                {"band", synth.band},
                {"strength", synth.strength},
                {"phase_lag_rad", synth.phase_lag_rad},
                {"snr_db", synth.snr_db},
                {"seed", synth.seed}};
  return j;
}

void PipelineConfig::validate() const {
  if (!(preprocess.bandpass_lo > 0.0 && preprocess.bandpass_lo < preprocess.bandpass_hi)) {
    throw ConfigError("preprocess.bandpass must satisfy 0 < lo < hi");
  }
  if (preprocess.filter_order < 1) throw ConfigError("preprocess.filter_order must be >= 1");
  if (!(preprocess.epoch_seconds > 0.0)) throw ConfigError("preprocess.epoch_seconds must be positive");
  if (!(preprocess.notch_quality > 0.0)) throw ConfigError("preprocess.notch_quality must be positive");
  if (!(features.window_seconds > 0.0) || !(features.hop_seconds > 0.0)) {
    throw ConfigError("features.window_seconds and features.hop_seconds must be positive");
  }
  for (const auto& m : connectivity.metrics) {
    try { connectivity::parse_metric(m); } catch (const std::exception& e) { throw ConfigError(e.what()); }
  }
  for (const auto& b : connectivity.bands) {
    try { parse_band_name(b); } catch (const std::exception& e) { throw ConfigError(e.what()); }
  }
  if (!(connectivity.edge_trim >= 0.0 && connectivity.edge_trim < 0.5)) {
    throw ConfigError("connectivity.edge_trim must lie in [0, 0.5)");
  }
  for (const auto& a : train.architectures) {
    try { nn::parse_architecture(a); } catch (const std::exception& e) { throw ConfigError(e.what()); }
  }
  for (const auto& f : train.features) {
    if (f != "plv" && f != "pli" && f != "bandpower") {
      throw ConfigError("train.features entry '" + f + "' is not plv, pli or bandpower");
    }
  }
  for (const auto& b : train.bands) {
    if (b != experiment::kTotalBand) {
      try { parse_band_name(b); } catch (const std::exception& e) { throw ConfigError(e.what()); }
    }
  }
  if (train.task != "classification" && train.task != "regression") {
    throw ConfigError("train.task must be classification or regression");
  }
  if (!(train.resolved_lr() > 0.0)) throw ConfigError("train.lr must be positive");
  if (train.resolved_epochs() < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(train.dropout >= 0.0 && train.dropout < 1.0)) throw ConfigError("train.dropout must lie in [0, 1)");
  if (train.hidden_dim < 1) throw ConfigError("train.hidden_dim must be >= 1");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.n_runs < 1) throw ConfigError("train.n_runs must be >= 1");
  if (train.split.size() != 3) throw ConfigError("train.split must be [train, val, test] fractions");
  try { parse_band_name(synth.band); } catch (const std::exception& e) { throw ConfigError(e.what()); }
  if (!(synth.strength >= 0.0 && synth.strength <= 1.0)) throw ConfigError("synth.strength must lie in [0, 1]");
  if (synth.classes < 1 || synth.channels < 1 || synth.trials_per_class < 1 || !(synth.rate_hz > 0.0)) {
    throw ConfigError("synth.classes, channels, trials_per_class and rate_hz must be positive");
  }
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
  base.merge(io::read_json(path));
  return base;
}

}  // namespace neuroconn
