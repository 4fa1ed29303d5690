#include "neuroconn/connectivity.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "neuroconn/dsp.hpp"
#include "neuroconn/io.hpp"
#include "neuroconn/parallel.hpp"

namespace neuroconn::connectivity {

namespace fs = std::filesystem;

std::string_view metric_name(Metric m) { return m == Metric::plv ? "plv" : "pli"; }

Metric parse_metric(std::string_view name) {
  if (name == "plv" || name == "PLV") return Metric::plv;
  if (name == "pli" || name == "PLI") return Metric::pli;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "' (expected plv or pli)");
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("phase series lengths differ: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw std::invalid_argument("phase series are empty");
}

}  // namespace

double plv_pair(std::span<const double> phase_a, std::span<const double> phase_b) {
  check_pair(phase_a, phase_b);
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < phase_a.size(); ++k) {
    const double d = phase_a[k] - phase_b[k];
    re += std::cos(d);
    im += std::sin(d);
  }
  const double m = static_cast<double>(phase_a.size());
  return std::min(1.0, std::hypot(re / m, im / m));
}

double signed_pli_pair(std::span<const double> phase_a, std::span<const double> phase_b) {
  check_pair(phase_a, phase_b);
  long long sum = 0;
  for (std::size_t k = 0; k < phase_a.size(); ++k) {
    const double d = dsp::wrap_phase(phase_a[k] - phase_b[k]);
    sum += (d > 0.0) - (d < 0.0);
  }
  return static_cast<double>(sum) / static_cast<double>(phase_a.size());
}

double pli_pair(std::span<const double> phase_a, std::span<const double> phase_b) {
  return std::abs(signed_pli_pair(phase_a, phase_b));
}

Matrix band_phases(const Matrix& epoch, double rate, const FrequencyBand& band,
                   const ConnectivityOptions& opts) {
  if (!(opts.edge_trim >= 0.0) || !(opts.edge_trim < 0.5)) {
    throw std::invalid_argument("edge trim fraction must lie in [0, 0.5)");
  }
  const std::size_t n = epoch.cols;
  const auto trim = static_cast<std::size_t>(std::floor(opts.edge_trim * static_cast<double>(n)));
  const std::size_t used = n - 2 * trim;
  if (used == 0) throw std::invalid_argument("edge trim leaves no samples");

  const auto filtered = dsp::bandpass(epoch, rate, band.lo_hz, band.hi_hz, opts.filter_order);
  Matrix phases(epoch.rows, used);
  for (std::size_t c = 0; c < epoch.rows; ++c) {
    std::vector<double> ph;
    try {
      ph = dsp::analytic_phase(filtered.row(c));
    } catch (const std::exception& e) {
      throw std::runtime_error("channel " + std::to_string(c) + ": " + e.what());
    }
    std::copy(ph.begin() + static_cast<std::ptrdiff_t>(trim),
              ph.begin() + static_cast<std::ptrdiff_t>(trim + used), phases.row(c).begin());
  }
  return phases;
}

namespace {

std::vector<double> pair_matrix(const Matrix& phases, Metric metric, bool signed_pli) {
  const std::size_t nc = phases.rows;
  std::vector<double> v(nc * nc, 0.0);
  for (std::size_t i = 0; i < nc; ++i) {
    v[i * nc + i] = metric == Metric::plv ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < nc; ++j) {
      double x;
      if (metric == Metric::plv) {
        x = plv_pair(phases.row(i), phases.row(j));
      } else {
        x = signed_pli ? signed_pli_pair(phases.row(i), phases.row(j))
                       : pli_pair(phases.row(i), phases.row(j));
      }
      const double lo = signed_pli && metric == Metric::pli ? -1.0 : 0.0;
      if (!(x >= lo && x <= 1.0)) {
        throw std::logic_error("connectivity value " + std::to_string(x) + " outside its range");
      }
      v[i * nc + j] = x;
      v[j * nc + i] = x;
    }
  }
  return v;
}

}  // namespace

ConnectivityMatrix connectivity_matrix(const Matrix& epoch, double rate, const FrequencyBand& band,
                                       Metric metric, const ConnectivityOptions& opts) {
  if (epoch.rows < 2) throw std::invalid_argument("connectivity needs at least two channels");
  const auto phases = band_phases(epoch, rate, band, opts);
  ConnectivityMatrix m;
  m.metric = metric;
  m.band = band;
  m.n_channels = epoch.rows;
  m.n_samples_used = phases.cols;
  m.values = pair_matrix(phases, metric, opts.signed_pli);
  return m;
}

std::vector<TrialConnectivity> epoch_connectivity(const EpochSet& epochs,
                                                  std::span<const FrequencyBand> bands,
                                                  std::span<const Metric> metrics,
                                                  const ConnectivityOptions& opts, int jobs) {
  if (epochs.n_channels() < 2) throw std::invalid_argument("connectivity needs at least two channels");
  const std::size_t nc = epochs.n_channels();
  const std::size_t nt = epochs.n_trials();
  std::vector<TrialConnectivity> out;
  for (const auto& b : bands) {
    for (Metric m : metrics) {
      TrialConnectivity tc{m, b, nt, nc, 0, std::vector<double>(nt * nc * nc, 0.0)};
      out.push_back(std::move(tc));
    }
  }
  std::vector<std::size_t> used(bands.size(), 0);
  parallel_for(nt, jobs, [&](std::size_t t) {
    const Matrix epoch = epochs.trial(t);
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
      Matrix phases;
      try {
        phases = band_phases(epoch, epochs.sampling_rate_hz(), bands[bi], opts);
      } catch (const std::exception& e) {
        throw std::runtime_error("trial " + std::to_string(t) + ", band " +
                                 std::string(band_name(bands[bi].name)) + ": " + e.what());
      }
      if (t == 0) used[bi] = phases.cols;
      for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
        auto v = pair_matrix(phases, metrics[mi], opts.signed_pli);
        auto& tc = out[bi * metrics.size() + mi];
        std::copy(v.begin(), v.end(), tc.values.begin() + static_cast<std::ptrdiff_t>(t * nc * nc));
      }
    }
  });
  if (nt > 0) {
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
      for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
        out[bi * metrics.size() + mi].n_samples_used = used[bi];
      }
    }
  }
  return out;
}

void write_csv(std::ostream& out, const ConnectivityMatrix& m,
               const std::vector<std::string>& channel_names) {
  if (channel_names.size() != m.n_channels) {
    throw std::invalid_argument("channel name count does not match matrix size");
  }
  out.precision(17);
  for (std::size_t i = 0; i < m.n_channels; ++i) out << (i ? "," : "") << channel_names[i];
  out << '\n';
  for (std::size_t i = 0; i < m.n_channels; ++i) {
    for (std::size_t j = 0; j < m.n_channels; ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

void save_trial_connectivity(const TrialConnectivity& tc, const EpochSet& epochs,
                             const fs::path& stem) {
  io::write_f32(stem.string() + ".f32", std::span<const double>(tc.values));
  nlohmann::json meta;
  meta["metric"] = metric_name(tc.metric);
  meta["band"] = band_name(tc.band.name);
  meta["band_hz"] = {tc.band.lo_hz, tc.band.hi_hz};
  meta["n_channels"] = tc.n_channels;
  meta["M"] = tc.n_samples_used;
  meta["n_trials"] = tc.n_trials;
  meta["n_classes"] = epochs.n_classes();
  meta["class_labels"] = epochs.class_labels();
  auto& p = meta["paradigm_labels"] = nlohmann::json::array();
  for (auto x : epochs.paradigm_labels()) p.push_back(paradigm_name(x));
  io::write_json(stem.string() + ".meta.json", meta);
}

LoadedConnectivity load_trial_connectivity(const fs::path& stem) {
  const auto meta = io::read_json(stem.string() + ".meta.json");
  LoadedConnectivity out;
  auto& tc = out.data;
  try {
    tc.metric = parse_metric(meta.at("metric").get<std::string>());
    tc.band = canonical_band(parse_band_name(meta.at("band").get<std::string>()));
    if (meta.contains("band_hz")) {
      tc.band.lo_hz = meta["band_hz"][0].get<double>();
      tc.band.hi_hz = meta["band_hz"][1].get<double>();
    }
    tc.n_channels = meta.at("n_channels").get<std::size_t>();
    tc.n_samples_used = meta.at("M").get<std::size_t>();
    tc.n_trials = meta.at("n_trials").get<std::size_t>();
    out.class_labels = meta.at("class_labels").get<std::vector<int>>();
    out.n_classes = meta.value("n_classes", 0);
    for (const auto& p : meta.at("paradigm_labels")) {
      out.paradigm_labels.push_back(parse_paradigm(p.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(stem.string() + ".meta.json: " + e.what());
  }
  const auto raw = io::read_f32(stem.string() + ".f32");
  if (raw.size() != tc.n_trials * tc.n_channels * tc.n_channels) {
    throw std::runtime_error(stem.string() + ".f32: expected " +
                             std::to_string(tc.n_trials * tc.n_channels * tc.n_channels) +
                             " values, found " + std::to_string(raw.size()));
  }
  if (out.class_labels.size() != tc.n_trials) {
    throw std::runtime_error(stem.string() + ".meta.json: label count does not match n_trials");
  }
  tc.values.assign(raw.begin(), raw.end());
  return out;
}

}  // namespace neuroconn::connectivity
