#include "neuroconn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "neuroconn/checkpoint.hpp"
#include "neuroconn/config.hpp"
#include "neuroconn/connectivity.hpp"
#include "neuroconn/dsp.hpp"
#include "neuroconn/experiment.hpp"
#include "neuroconn/features.hpp"
#include "neuroconn/io.hpp"
#include "neuroconn/stats.hpp"
#include "neuroconn/synth.hpp"

namespace neuroconn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Thrown for problems the user fixes by changing the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  bool dry_run = false;
  std::string input;
};

void add_common(CLI::App* sub, Common& c, bool needs_input) {
  sub->add_option("--config", c.config_path, "JSON pipeline config (flags override it)");
  sub->add_option("--out", c.out_dir, "output directory");
  sub->add_option("--jobs", c.jobs, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  sub->add_flag("--dry-run", c.dry_run, "validate the config and inputs without processing data");
  if (needs_input) sub->add_option("input", c.input, "input directory")->required();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const Common& c,
                    const PipelineConfig& cfg) {
  json m = cfg.to_json();
  m["run"] = {{"subcommand", subcommand},
              {"input", c.input},
              {"jobs", c.jobs},
              {"created", timestamp()}};
  io::write_json(dir / "run-manifest.json", m);
}

// ---------------------------------------------------------------------------
// Data discovery

std::vector<fs::path> find_recordings(const fs::path& dir) {
  std::vector<fs::path> stems;
  if (!fs::is_directory(dir)) return stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (!name.ends_with(".eeg.f32")) continue;
    const fs::path stem = recording_stem(e.path());
    if (fs::exists(stem.string() + ".meta.json")) stems.push_back(stem);
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

EpochSet concat(const std::vector<EpochSet>& sets) {
  if (sets.size() == 1) return sets[0];
  std::vector<double> data;
  std::vector<int> classes;
  std::vector<Paradigm> paradigms;
  std::size_t trials = 0;
  int n_classes = 0;
  for (const auto& s : sets) {
    if (s.n_channels() != sets[0].n_channels() || s.n_samples() != sets[0].n_samples() ||
        s.sampling_rate_hz() != sets[0].sampling_rate_hz()) {
      throw std::runtime_error("recordings differ in channel count, epoch length or sampling rate");
    }
    data.insert(data.end(), s.data().begin(), s.data().end());
    classes.insert(classes.end(), s.class_labels().begin(), s.class_labels().end());
    paradigms.insert(paradigms.end(), s.paradigm_labels().begin(), s.paradigm_labels().end());
    trials += s.n_trials();
    n_classes = std::max(n_classes, s.n_classes());
  }
  return EpochSet(std::move(data), trials, sets[0].n_channels(), sets[0].n_samples(),
                  std::move(classes), std::move(paradigms), sets[0].sampling_rate_hz(), n_classes);
}

EpochSet load_epochs(const fs::path& dir, const PipelineConfig& cfg) {
  if (!fs::exists(dir)) throw std::runtime_error("input " + dir.string() + " does not exist");
  const auto stems = find_recordings(dir);
  std::vector<EpochSet> sets;
  for (const auto& stem : stems) {
    auto rec = load_recording(stem);
    if (!cfg.preprocess.exclude_channels.empty()) rec = rec.exclude_channels(cfg.preprocess.exclude_channels);
    auto e = segment_epochs(rec, cfg.preprocess.epoch_seconds);
    if (e.n_trials() > 0) sets.push_back(std::move(e));
  }
  if (sets.empty()) throw std::runtime_error("no epochs found in " + dir.string());
  return concat(sets);
}

struct ConnectivityFile {
  std::string metric;
  std::string band;
  fs::path stem;
};

std::vector<ConnectivityFile> find_connectivity(const fs::path& dir) {
  std::vector<ConnectivityFile> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (!name.starts_with("connectivity-") || !name.ends_with(".meta.json")) continue;
    const std::string core = name.substr(13, name.size() - 13 - 10);
    const auto dash = core.find('-');
    if (dash == std::string::npos) continue;
    const fs::path stem = dir / ("connectivity-" + core);
    if (!fs::exists(stem.string() + ".f32")) continue;
    out.push_back({core.substr(0, dash), core.substr(dash + 1), stem});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.stem < b.stem; });
  return out;
}

void save_bandpower(const features::BandPowerFeatures& bp, const EpochSet& epochs, const fs::path& stem) {
  io::write_f32(stem.string() + ".f32", std::span<const double>(bp.values));
  json meta;
  meta["n_trials"] = bp.n_trials;
  meta["n_channels"] = bp.n_channels;
  meta["n_windows"] = bp.n_windows;
  json bands = json::array();
  for (const auto& b : bp.bands) bands.push_back(band_name(b.name));
  meta["bands"] = bands;
  meta["log_transform"] = bp.log_transformed;
  meta["n_classes"] = epochs.n_classes();
  meta["class_labels"] = epochs.class_labels();
  io::write_json(stem.string() + ".meta.json", meta);
}

features::BandPowerFeatures load_bandpower(const fs::path& stem, std::vector<int>& labels, int& n_classes) {
  const auto meta = io::read_json(stem.string() + ".meta.json");
  features::BandPowerFeatures bp;
  bp.n_trials = meta.at("n_trials").get<std::size_t>();
  bp.n_channels = meta.at("n_channels").get<std::size_t>();
  bp.n_windows = meta.at("n_windows").get<std::size_t>();
  for (const auto& b : meta.at("bands")) bp.bands.push_back(canonical_band(parse_band_name(b.get<std::string>())));
  bp.n_bands = bp.bands.size();
  bp.log_transformed = meta.value("log_transform", false);
  labels = meta.at("class_labels").get<std::vector<int>>();
  n_classes = meta.value("n_classes", 0);
  const auto raw = io::read_f32(stem.string() + ".f32");
  if (raw.size() != bp.n_trials * bp.n_channels * bp.n_windows * bp.n_bands) {
    throw std::runtime_error(stem.string() + ".f32 does not match its sidecar dimensions");
  }
  bp.values.assign(raw.begin(), raw.end());
  return bp;
}

// Features stored in `dir` by the connectivity / features subcommands; falls
// back to computing them from the recordings.
experiment::FeatureSet gather_features(const fs::path& dir, const PipelineConfig& cfg, int jobs) {
  if (!fs::exists(dir)) throw std::runtime_error("input " + dir.string() + " does not exist");
  experiment::FeatureSet set;
  bool have_labels = false;
  auto set_labels = [&](const std::vector<int>& labels, int n_classes) {
    if (!have_labels) {
      set.labels = labels;
      set.n_classes = n_classes;
      have_labels = true;
    } else if (set.labels != labels) {
      throw std::runtime_error("feature files in " + dir.string() + " disagree on trial labels");
    }
    if (set.n_classes == 0) {
      for (int l : labels) set.n_classes = std::max(set.n_classes, l + 1);
    }
  };
  const auto& wanted = cfg.train.features;
  auto want = [&](const std::string& f) {
    return wanted.empty() || std::find(wanted.begin(), wanted.end(), f) != wanted.end();
  };
  for (const auto& cf : find_connectivity(dir)) {
    if (!want(cf.metric)) continue;
    auto loaded = connectivity::load_trial_connectivity(cf.stem);
    set_labels(loaded.class_labels, loaded.n_classes);
    set.add_connectivity(loaded.data);
  }
  const fs::path bp_stem = dir / "bandpower";
  if (want("bandpower") && fs::exists(bp_stem.string() + ".meta.json")) {
    std::vector<int> labels;
    int n_classes = 0;
    auto bp = load_bandpower(bp_stem, labels, n_classes);
    set_labels(labels, n_classes);
    set.add_bandpower(bp);
  }
  if (have_labels) return set;

  const EpochSet epochs = load_epochs(dir, cfg);
  std::vector<std::string> feats = wanted.empty() ? cfg.connectivity.metrics : wanted;
  experiment::FeatureOptions fo;
  fo.connectivity.edge_trim = cfg.connectivity.edge_trim;
  fo.connectivity.filter_order = cfg.preprocess.filter_order;
  fo.bandpower = {cfg.features.window_seconds, cfg.features.hop_seconds, cfg.features.log_transform};
  fo.jobs = jobs;
  return experiment::compute_features(epochs, feats, fo);
}

experiment::GridSpec grid_for(const experiment::FeatureSet& set, const PipelineConfig& cfg) {
  experiment::GridSpec grid;
  grid.features.clear();
  for (const auto& [feature, bands] : set.tables) {
    if (cfg.train.features.empty() ||
        std::find(cfg.train.features.begin(), cfg.train.features.end(), feature) != cfg.train.features.end()) {
      grid.features.push_back(feature);
    }
  }
  // plv rows before pli in reports.
  std::sort(grid.features.begin(), grid.features.end(), [](const std::string& a, const std::string& b) {
    auto rank = [](const std::string& f) { return f == "plv" ? 0 : f == "pli" ? 1 : 2; };
    return rank(a) < rank(b);
  });
  grid.models.clear();
  for (const auto& a : cfg.train.architectures) grid.models.push_back(nn::parse_architecture(a));

  grid.bands.clear();
  for (const auto& col : experiment::band_columns()) {
    if (!cfg.train.bands.empty() &&
        std::find(cfg.train.bands.begin(), cfg.train.bands.end(), col) == cfg.train.bands.end()) {
      continue;
    }
    const bool available = std::all_of(grid.features.begin(), grid.features.end(), [&](const std::string& f) {
      const auto& per_band = set.tables.at(f);
      if (col == experiment::kTotalBand) {
        return std::all_of(canonical_bands().begin(), canonical_bands().end(),
                           [&](const FrequencyBand& b) { return per_band.contains(std::string(band_name(b.name))); });
      }
      return per_band.contains(col);
    });
    if (available) {
      grid.bands.push_back(col);
    } else if (!cfg.train.bands.empty()) {
      throw std::runtime_error("band column '" + col + "' is not available for every selected feature");
    }
  }
  if (grid.features.empty() || grid.bands.empty()) throw std::runtime_error("no features found to train on");
  return grid;
}

experiment::GridOptions grid_options(const PipelineConfig& cfg, int jobs) {
  experiment::GridOptions o;
  o.train.learning_rate = cfg.train.resolved_lr();
  o.train.epochs = cfg.train.resolved_epochs();
  o.train.weight_decay = cfg.train.weight_decay;
  o.train.seed = cfg.train.seed;
  o.train.batch_size = cfg.train.batch_size;
  o.n_runs = cfg.train.n_runs;
  o.fractions = {cfg.train.split[0], cfg.train.split[1], cfg.train.split[2]};
  o.split_seed = cfg.train.seed;
  o.hidden_dim = cfg.train.hidden_dim;
  o.dropout_p = cfg.train.dropout;
  o.task = nn::parse_task(cfg.train.task);
  o.shuffle_labels = cfg.train.shuffle_labels;
  o.jobs = jobs;
  return o;
}

fs::path output_dir(const Common& c, const fs::path& fallback) {
  fs::path out = c.out_dir.empty() ? fallback : fs::path(c.out_dir);
  if (!c.dry_run) fs::create_directories(out);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EEG phase-connectivity decoding toolkit"};
  app.name("neuroconn");
  app.require_subcommand(1);

  // ---- synth
  Common synth_c;
  auto* synth = app.add_subcommand("synth", "generate synthetic phase-coupled epochs");
  add_common(synth, synth_c, false);
  int s_classes = 0;
  std::size_t s_channels = 0, s_trials = 0;
  double s_rate = 0, s_seconds = 0, s_strength = 0, s_lag = 0, s_snr = 0;
  std::string s_band;
  std::uint64_t s_seed = 0;
  auto* o_classes = synth->add_option("--classes", s_classes, "number of classes");
  auto* o_channels = synth->add_option("--channels", s_channels, "number of channels");
  auto* o_trials = synth->add_option("--trials-per-class", s_trials, "trials per class");
  auto* o_rate = synth->add_option("--rate", s_rate, "sampling rate (Hz)");
  auto* o_seconds = synth->add_option("--seconds", s_seconds, "epoch length (s)");
  auto* o_band = synth->add_option("--band", s_band, "coupling band");
  auto* o_strength = synth->add_option("--strength", s_strength, "coupling strength in [0,1]");
  auto* o_lag = synth->add_option("--lag", s_lag, "phase lag between coupled channels (rad)");
  auto* o_snr = synth->add_option("--snr-db", s_snr, "signal-to-noise ratio (dB)");
  auto* o_sseed = synth->add_option("--seed", s_seed, "generator seed");

  // ---- preprocess
  Common pre_c;
  auto* pre = app.add_subcommand("preprocess", "band-pass and notch-filter recordings");
  add_common(pre, pre_c, true);
  double p_lo = 0, p_hi = 0, p_q = 0;
  std::string p_notch, p_exclude;
  auto* o_lo = pre->add_option("--lo", p_lo, "band-pass low edge (Hz)");
  auto* o_hi = pre->add_option("--hi", p_hi, "band-pass high edge (Hz)");
  auto* o_notch = pre->add_option("--notch", p_notch, "comma-separated notch centers (Hz), 'none' to disable");
  auto* o_q = pre->add_option("--quality", p_q, "notch quality factor");
  auto* o_excl = pre->add_option("--exclude", p_exclude, "comma-separated channels to drop");

  // ---- features
  Common feat_c;
  auto* feat = app.add_subcommand("features", "STFT band-power features");
  add_common(feat, feat_c, true);
  double f_window = 0, f_hop = 0, f_epoch = 0;
  bool f_log = false;
  auto* o_window = feat->add_option("--window", f_window, "STFT window (s)");
  auto* o_hop = feat->add_option("--hop", f_hop, "STFT hop (s)");
  auto* o_log = feat->add_flag("--log", f_log, "store log(1+x) band powers");
  auto* o_fepoch = feat->add_option("--epoch-seconds", f_epoch, "epoch length (s)");

  // ---- connectivity
  Common conn_c;
  auto* conn = app.add_subcommand("connectivity", "per-trial PLV/PLI matrices");
  add_common(conn, conn_c, true);
  std::string c_metric, c_band;
  double c_trim = 0, c_epoch = 0;
  bool c_signed = false;
  auto* o_metric = conn->add_option("--metric", c_metric, "plv, pli or both (comma-separated)");
  auto* o_cband = conn->add_option("--band", c_band, "comma-separated bands");
  auto* o_trim = conn->add_option("--edge-trim", c_trim, "fraction trimmed at each end after the Hilbert transform");
  auto* o_signed = conn->add_flag("--signed-pli", c_signed, "debug: keep the sign of PLI");
  auto* o_cepoch = conn->add_option("--epoch-seconds", c_epoch, "epoch length (s)");

  // ---- train
  Common train_c;
  auto* train = app.add_subcommand("train", "train decoders over the feature x model x band grid");
  add_common(train, train_c, true);
  std::string t_arch, t_features, t_bands, t_task;
  double t_lr = 0, t_wd = 0, t_dropout = 0;
  int t_epochs = 0, t_runs = 0;
  std::size_t t_hidden = 0, t_batch = 0;
  std::uint64_t t_seed = 0;
  bool t_shuffle = false;
  auto* o_arch = train->add_option("--arch", t_arch, "comma-separated architectures");
  auto* o_tfeat = train->add_option("--features", t_features, "comma-separated features (plv, pli, bandpower)");
  auto* o_tbands = train->add_option("--bands", t_bands, "comma-separated band columns (delta..gamma, total)");
  auto* o_task = train->add_option("--task", t_task, "classification or regression");
  auto* o_lr = train->add_option("--lr", t_lr, "learning rate");
  auto* o_epochs = train->add_option("--epochs", t_epochs, "training epochs");
  auto* o_wd = train->add_option("--weight-decay", t_wd, "decoupled weight decay");
  auto* o_dropout = train->add_option("--dropout", t_dropout, "dropout probability");
  auto* o_hidden = train->add_option("--hidden", t_hidden, "hidden width");
  auto* o_batch = train->add_option("--batch-size", t_batch, "mini-batch size");
  auto* o_tseed = train->add_option("--seed", t_seed, "split / model seed");
  auto* o_runs = train->add_option("--runs", t_runs, "runs per grid cell");
  auto* o_shuffle = train->add_flag("--shuffle-labels", t_shuffle, "chance-level control with permuted labels");

  // ---- evaluate
  Common eval_c;
  auto* eval = app.add_subcommand("evaluate", "evaluate a saved checkpoint on its test split");
  add_common(eval, eval_c, true);
  std::string e_ckpt;
  eval->add_option("--checkpoint", e_ckpt, "checkpoint stem (without .json/.f32)")->required();

  // ---- stats
  Common stats_c;
  auto* st = app.add_subcommand("stats", "paired t-tests with Benjamini-Hochberg correction");
  st->add_option("--out", stats_c.out_dir, "write JSON here instead of stdout");
  st->add_option("input", stats_c.input, "CSV: subject column then one column per condition")->required();
  double q = 0.05;
  std::string pairs;
  st->add_option("--q", q, "FDR level")->check(CLI::Range(0.0, 1.0));
  st->add_option("--pairs", pairs, "comma-separated a:b condition pairs (default: all pairs)");

  // ---- report
  Common rep_c;
  auto* rep = app.add_subcommand("report", "render report.json as a markdown table");
  rep->add_option("--out", rep_c.out_dir, "output directory (default: input)");
  rep->add_option("input", rep_c.input, "directory holding report.json")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << " (see --help)\n";
    return 2;
  }

  auto resolve = [&](const Common& c) {
    PipelineConfig cfg = PipelineConfig::defaults();
    if (!c.config_path.empty()) {
      if (!fs::exists(c.config_path)) throw UsageError("config file " + c.config_path + " not found");
      cfg = load_config(c.config_path, cfg);
    }
    return cfg;
  };

  try {
    if (synth->parsed()) {
      auto cfg = resolve(synth_c);
      auto& s = cfg.synth;
      if (o_classes->count()) s.classes = s_classes;
      if (o_channels->count()) s.channels = s_channels;
      if (o_trials->count()) s.trials_per_class = s_trials;
      if (o_rate->count()) s.rate_hz = s_rate;
      if (o_seconds->count()) s.epoch_seconds = s_seconds;
      if (o_band->count()) s.band = s_band;
      if (o_strength->count()) s.strength = s_strength;
      if (o_lag->count()) s.phase_lag_rad = s_lag;
      if (o_snr->count()) s.snr_db = s_snr;
      if (o_sseed->count()) s.seed = s_seed;
      if (!o_seconds->count() && synth_c.config_path.empty()) s.epoch_seconds = cfg.preprocess.epoch_seconds;
      cfg.preprocess.epoch_seconds = s.epoch_seconds;
      cfg.validate();
      const auto spec = s.to_spec();
      spec.validate();
      if (synth_c.dry_run) {
        out << cfg.to_json().dump(2) << '\n';
        return 0;
      }
      const fs::path dir = output_dir(synth_c, "synth");
      const auto epochs = experiment::synth_generate(spec);
      save_recording(experiment::epochs_to_recording(epochs), dir / "synth");
      write_manifest(dir, "synth", synth_c, cfg);
      out << "wrote " << epochs.n_trials() << " epochs (" << epochs.n_channels() << " channels, "
          << epochs.n_samples() << " samples) to " << (dir / "synth.eeg.f32").string() << '\n';
      return 0;
    }

    if (pre->parsed()) {
      auto cfg = resolve(pre_c);
      if (o_lo->count()) cfg.preprocess.bandpass_lo = p_lo;
      if (o_hi->count()) cfg.preprocess.bandpass_hi = p_hi;
      if (o_q->count()) cfg.preprocess.notch_quality = p_q;
      if (o_notch->count()) {
        cfg.preprocess.notch.clear();
        if (p_notch != "none") {
          for (const auto& v : split_list(p_notch)) cfg.preprocess.notch.push_back(std::stod(v));
        }
      }
      if (o_excl->count()) cfg.preprocess.exclude_channels = split_list(p_exclude);
      cfg.validate();
      const fs::path in = pre_c.input;
      const auto stems = find_recordings(in);
      if (stems.empty()) throw std::runtime_error("no recordings found in " + in.string());
      if (pre_c.dry_run) {
        out << cfg.to_json().dump(2) << '\n';
        return 0;
      }
      const fs::path dir = output_dir(pre_c, in / "preprocessed");
      for (const auto& stem : stems) {
        auto rec = load_recording(stem);
        if (!cfg.preprocess.exclude_channels.empty()) rec = rec.exclude_channels(cfg.preprocess.exclude_channels);
        const double rate = rec.sampling_rate_hz();
        if (cfg.preprocess.bandpass_hi >= rate / 2.0) {
          throw UsageError("band-pass high edge " + std::to_string(cfg.preprocess.bandpass_hi) +
                           " Hz is not below Nyquist (" + std::to_string(rate / 2.0) + " Hz) for " +
                           stem.string() + "; pass --hi");
        }
        Matrix m = dsp::bandpass(rec.to_matrix(), rate, cfg.preprocess.bandpass_lo,
                                 cfg.preprocess.bandpass_hi, cfg.preprocess.filter_order);
        for (double center : cfg.preprocess.notch) {
          if (center >= rate / 2.0) {
            throw UsageError("notch at " + std::to_string(center) + " Hz is not below Nyquist for " +
                             stem.string() + "; pass --notch");
          }
          m = dsp::notch(m, rate, center, cfg.preprocess.notch_quality);
        }
        save_recording(rec.with_samples(m), dir / stem.filename());
      }
      write_manifest(dir, "preprocess", pre_c, cfg);
      out << "preprocessed " << stems.size() << " recording(s) into " << dir.string() << '\n';
      return 0;
    }

    if (feat->parsed()) {
      auto cfg = resolve(feat_c);
      if (o_window->count()) cfg.features.window_seconds = f_window;
      if (o_hop->count()) cfg.features.hop_seconds = f_hop;
      if (o_log->count()) cfg.features.log_transform = f_log;
      if (o_fepoch->count()) cfg.preprocess.epoch_seconds = f_epoch;
      cfg.validate();
      const fs::path in = feat_c.input;
      if (feat_c.dry_run) {
        if (find_recordings(in).empty()) throw std::runtime_error("no epochs found in " + in.string());
        out << cfg.to_json().dump(2) << '\n';
        return 0;
      }
      const auto epochs = load_epochs(in, cfg);
      const auto bp = features::epoch_features(
          epochs, canonical_bands(),
          {cfg.features.window_seconds, cfg.features.hop_seconds, cfg.features.log_transform}, feat_c.jobs);
      const fs::path dir = output_dir(feat_c, in);
      std::ofstream csv(dir / "bandpower.csv");
      features::write_csv(csv, bp, epochs);
      save_bandpower(bp, epochs, dir / "bandpower");
      write_manifest(dir, "features", feat_c, cfg);
      out << "band power for " << bp.n_trials << " trials x " << bp.n_channels << " channels x "
          << bp.n_windows << " windows written to " << (dir / "bandpower.csv").string() << '\n';
      return 0;
    }

    if (conn->parsed()) {
      auto cfg = resolve(conn_c);
      if (o_metric->count()) cfg.connectivity.metrics = split_list(c_metric);
      if (o_cband->count()) cfg.connectivity.bands = split_list(c_band);
      if (o_trim->count()) cfg.connectivity.edge_trim = c_trim;
      if (o_signed->count()) cfg.connectivity.signed_pli = c_signed;
      if (o_cepoch->count()) cfg.preprocess.epoch_seconds = c_epoch;
      cfg.validate();
      const fs::path in = conn_c.input;
      if (conn_c.dry_run) {
        if (find_recordings(in).empty()) throw std::runtime_error("no epochs found in " + in.string());
        out << cfg.to_json().dump(2) << '\n';
        return 0;
      }
      const auto epochs = load_epochs(in, cfg);
      std::vector<FrequencyBand> bands;
      for (const auto& b : cfg.connectivity.bands) bands.push_back(canonical_band(parse_band_name(b)));
      std::vector<connectivity::Metric> metrics;
      for (const auto& m : cfg.connectivity.metrics) metrics.push_back(connectivity::parse_metric(m));
      connectivity::ConnectivityOptions co;
      co.edge_trim = cfg.connectivity.edge_trim;
      co.signed_pli = cfg.connectivity.signed_pli;
      co.filter_order = cfg.preprocess.filter_order;
      const auto all = connectivity::epoch_connectivity(epochs, bands, metrics, co, conn_c.jobs);
      const fs::path dir = output_dir(conn_c, in);
      const auto names = load_recording(find_recordings(in).front()).channel_names();
      std::vector<std::string> kept;
      for (const auto& n : names) {
        const auto& ex = cfg.preprocess.exclude_channels;
        if (std::find(ex.begin(), ex.end(), n) == ex.end()) kept.push_back(n);
      }
      for (const auto& tc : all) {
        const std::string stem = "connectivity-" + std::string(connectivity::metric_name(tc.metric)) + "-" +
                                 std::string(band_name(tc.band.name));
        connectivity::save_trial_connectivity(tc, epochs, dir / stem);
        connectivity::ConnectivityMatrix mean{tc.metric, tc.band, tc.n_channels, tc.n_samples_used,
                                              std::vector<double>(tc.n_channels * tc.n_channels, 0.0)};
        for (std::size_t t = 0; t < tc.n_trials; ++t)
          for (std::size_t i = 0; i < mean.values.size(); ++i)
            mean.values[i] += tc.values[t * mean.values.size() + i] / static_cast<double>(tc.n_trials);
        std::ofstream csv(dir / (stem + ".mean.csv"));
        connectivity::write_csv(csv, mean, kept);
      }
      write_manifest(dir, "connectivity", conn_c, cfg);
      out << "wrote " << all.size() << " connectivity set(s) for " << epochs.n_trials() << " trials to "
          << dir.string() << '\n';
      return 0;
    }

    if (train->parsed()) {
      auto cfg = resolve(train_c);
      auto& t = cfg.train;
      if (o_arch->count()) t.architectures = split_list(t_arch);
      if (o_tfeat->count()) t.features = split_list(t_features);
      if (o_tbands->count()) t.bands = split_list(t_bands);
      if (o_task->count()) t.task = t_task;
      if (o_lr->count()) t.lr = t_lr;
      if (o_epochs->count()) t.epochs = t_epochs;
      if (o_wd->count()) t.weight_decay = t_wd;
      if (o_dropout->count()) t.dropout = t_dropout;
      if (o_hidden->count()) t.hidden_dim = t_hidden;
      if (o_batch->count()) t.batch_size = t_batch;
      if (o_tseed->count()) t.seed = t_seed;
      if (o_runs->count()) t.n_runs = t_runs;
      if (o_shuffle->count()) t.shuffle_labels = t_shuffle;
      cfg.validate();
      if (t.task == "regression") {
        throw UsageError("regression needs per-trial targets; the file-based pipeline ships none");
      }
      const fs::path in = train_c.input;
      if (train_c.dry_run) {
        if (find_recordings(in).empty() && find_connectivity(in).empty() &&
            !fs::exists(in / "bandpower.meta.json")) {
          throw std::runtime_error("no epochs found in " + in.string());
        }
        out << cfg.to_json().dump(2) << '\n';
        return 0;
      }
      const auto set = gather_features(in, cfg, train_c.jobs);
      const auto grid = grid_for(set, cfg);
      const auto opts = grid_options(cfg, train_c.jobs);
      const auto report = experiment::run_grid(set, grid, opts);
      const fs::path dir = output_dir(train_c, in);
      const json j = experiment::report_to_json(report);
      io::write_json(dir / "report.json", j);
      io::write_text(dir / "report.md", experiment::report_markdown(j));

      // Checkpoint of run 0 per cell, retrained deterministically from its seed.
      fs::create_directories(dir / "checkpoints");
      for (const auto& cell : report.cells) {
        const auto inputs = set.inputs(cell.feature, cell.band);
        nn::DecoderSpec spec;
        spec.architecture = cell.model;
        spec.n_classes = std::max(set.n_classes, 2);
        spec.input = {inputs.dim(1), inputs.dim(2), inputs.dim(3)};
        spec.hidden_dim = opts.hidden_dim;
        spec.dropout_p = opts.dropout_p;
        spec.task = opts.task;
        const auto& run0 = cell.runs.front();
        auto model = nn::build_model(spec, run0.model_seed);
        std::vector<int> labels = set.labels;
        if (opts.shuffle_labels) {
          std::mt19937_64 rng(opts.shuffle_seed);
          std::shuffle(labels.begin(), labels.end(), rng);
        }
        experiment::train_model(*model, inputs, labels, set.targets, report.split.train, report.split.val,
                                opts.train, experiment::run_seed(run0.model_seed, 1));
        json extra = {{"feature", cell.feature},
                      {"band", cell.band},
                      {"split", {{"seed", opts.split_seed},
                                 {"fractions", {opts.fractions.train, opts.fractions.val, opts.fractions.test}},
                                 {"shuffle_labels", opts.shuffle_labels},
                                 {"shuffle_seed", opts.shuffle_seed}}},
                      {"test_accuracy", run0.accuracy}};
        nn::save_checkpoint(*model, dir / "checkpoints" /
                                        (cell.feature + "-" + std::string(nn::architecture_name(cell.model)) +
                                         "-" + cell.band),
                            extra);
      }
      write_manifest(dir, "train", train_c, cfg);
      out << "trained " << report.cells.size() << " grid cell(s) x " << opts.n_runs << " run(s); report at "
          << (dir / "report.json").string() << '\n';
      return 0;
    }

    if (eval->parsed()) {
      auto cfg = resolve(eval_c);
      auto ckpt = nn::load_checkpoint(e_ckpt);
      const auto& man = ckpt.manifest;
      const std::string feature = man.at("feature").get<std::string>();
      const std::string band = man.at("band").get<std::string>();
      cfg.train.features = {feature};
      if (eval_c.dry_run) {
        out << man.dump(2) << '\n';
        return 0;
      }
      const auto set = gather_features(eval_c.input, cfg, eval_c.jobs);
      const auto inputs = set.inputs(feature, band);
      std::vector<int> labels = set.labels;
      const auto& sp = man.at("split");
      if (sp.at("shuffle_labels").get<bool>()) {
        std::mt19937_64 rng(sp.at("shuffle_seed").get<std::uint64_t>());
        std::shuffle(labels.begin(), labels.end(), rng);
      }
      const auto fr = sp.at("fractions").get<std::vector<double>>();
      const auto plan = experiment::stratified_split(labels, {fr.at(0), fr.at(1), fr.at(2)},
                                                     sp.at("seed").get<std::uint64_t>());
      const auto logits = ckpt.model->forward(experiment::gather(inputs, plan.test), false);
      const std::size_t k = logits.dim(1);
      std::vector<std::vector<int>> confusion(k, std::vector<int>(k, 0));
      for (std::size_t i = 0; i < plan.test.size(); ++i) {
        const double* row = logits.data() + i * k;
        const auto pred = static_cast<std::size_t>(std::max_element(row, row + k) - row);
        confusion[static_cast<std::size_t>(labels[plan.test[i]])][pred]++;
      }
      const json result = {{"checkpoint", e_ckpt},
                           {"feature", feature},
                           {"band", band},
                           {"n_test", plan.test.size()},
                           {"accuracy", experiment::confusion_accuracy(confusion)},
                           {"confusion", confusion}};
      const fs::path dir = output_dir(eval_c, eval_c.input);
      io::write_json(dir / (fs::path(e_ckpt).filename().string() + ".eval.json"), result);
      out << result.dump(2) << '\n';
      return 0;
    }

    if (st->parsed()) {
      std::ifstream in(stats_c.input);
      if (!in) throw std::runtime_error("cannot open " + stats_c.input);
      std::string line;
      if (!std::getline(in, line)) throw std::runtime_error(stats_c.input + " is empty");
      auto header = split_list(line);
      if (header.size() < 3) throw std::runtime_error("stats CSV needs a subject column and at least two conditions");
      std::vector<std::string> conditions(header.begin() + 1, header.end());
      std::vector<std::vector<double>> cols(conditions.size());
      std::size_t row = 1;
      while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_list(line);
        if (cells.size() != header.size()) {
          throw std::runtime_error(stats_c.input + ":" + std::to_string(row) + ": expected " +
                                   std::to_string(header.size()) + " columns");
        }
        for (std::size_t c = 0; c < conditions.size(); ++c) cols[c].push_back(std::stod(cells[c + 1]));
      }
      auto index_of = [&](const std::string& name) {
        auto it = std::find(conditions.begin(), conditions.end(), name);
        if (it == conditions.end()) throw UsageError("unknown condition '" + name + "' in --pairs");
        return static_cast<std::size_t>(it - conditions.begin());
      };
      std::vector<std::pair<std::size_t, std::size_t>> tests;
      if (pairs.empty()) {
        for (std::size_t a = 0; a < conditions.size(); ++a)
          for (std::size_t b = a + 1; b < conditions.size(); ++b) tests.emplace_back(a, b);
      } else {
        for (const auto& p : split_list(pairs)) {
          const auto colon = p.find(':');
          if (colon == std::string::npos) throw UsageError("--pairs entries look like a:b, got '" + p + "'");
          tests.emplace_back(index_of(p.substr(0, colon)), index_of(p.substr(colon + 1)));
        }
      }
      std::vector<stats::TTestResult> results;
      std::vector<double> ps;
      for (auto [a, b] : tests) {
        results.push_back(stats::paired_ttest(cols[a], cols[b]));
        ps.push_back(results.back().p_two_tailed);
      }
      const auto fdr = stats::bh_fdr(ps, q);
      json j = {{"conditions", conditions}, {"n_subjects", cols[0].size()}, {"q", q}, {"tests", json::array()}};
      for (std::size_t i = 0; i < tests.size(); ++i) {
        j["tests"].push_back({{"a", conditions[tests[i].first]},
                              {"b", conditions[tests[i].second]},
                              {"t", results[i].t},
                              {"df", results[i].df},
                              {"p", results[i].p_two_tailed},
                              {"p_fdr", fdr.adjusted_p[i]},
                              {"rejected", static_cast<bool>(fdr.rejected[i])}});
      }
      if (stats_c.out_dir.empty()) {
        out << j.dump(2) << '\n';
      } else {
        fs::create_directories(stats_c.out_dir);
        io::write_json(fs::path(stats_c.out_dir) / "stats.json", j);
        out << "wrote " << (fs::path(stats_c.out_dir) / "stats.json").string() << '\n';
      }
      return 0;
    }

    if (rep->parsed()) {
      const fs::path in = rep_c.input;
      const fs::path report = fs::is_directory(in) ? in / "report.json" : in;
      if (!fs::exists(report)) throw std::runtime_error("no report.json found at " + report.string());
      const auto md = experiment::report_markdown(io::read_json(report));
      const fs::path dir = rep_c.out_dir.empty() ? report.parent_path() : fs::path(rep_c.out_dir);
      fs::create_directories(dir);
      io::write_text(dir / "report.md", md);
      out << md;
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace neuroconn::cli
