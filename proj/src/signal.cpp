#include "neuroconn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "neuroconn/io.hpp"

namespace neuroconn {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 4> kParadigmNames = {"perceived", "overt", "whispered",
                                                            "imagined"};
constexpr std::array<std::string_view, kNumBands> kBandNames = {"delta", "theta", "alpha",
                                                                "beta", "gamma"};

}  // namespace

std::string_view paradigm_name(Paradigm p) { return kParadigmNames.at(static_cast<int>(p)); }

Paradigm parse_paradigm(std::string_view name) {
  for (std::size_t i = 0; i < kParadigmNames.size(); ++i) {
    if (kParadigmNames[i] == name) return static_cast<Paradigm>(i);
  }
  throw std::invalid_argument("unknown paradigm '" + std::string(name) +
                              "' (expected perceived, overt, whispered or imagined)");
}

const std::array<FrequencyBand, kNumBands>& canonical_bands() {
  static const std::array<FrequencyBand, kNumBands> bands = {{
      {BandName::delta, 1.0, 4.0},
      {BandName::theta, 4.0, 8.0},
      {BandName::alpha, 8.0, 12.0},
      {BandName::beta, 12.0, 30.0},
      {BandName::gamma, 30.0, 45.0},
  }};
  return bands;
}

const FrequencyBand& canonical_band(BandName name) {
  return canonical_bands()[static_cast<std::size_t>(name)];
}

std::string_view band_name(BandName b) { return kBandNames.at(static_cast<std::size_t>(b)); }

BandName parse_band_name(std::string_view name) {
  for (std::size_t i = 0; i < kBandNames.size(); ++i) {
    if (kBandNames[i] == name) return static_cast<BandName>(i);
  }
  throw std::invalid_argument("unknown band '" + std::string(name) +
                              "' (expected delta, theta, alpha, beta or gamma)");
}

// ---------------------------------------------------------------------------
// Recording

Recording::Recording(std::vector<float> samples, std::size_t n_channels, double sampling_rate_hz,
                     std::vector<std::string> channel_names, std::vector<Marker> markers)
    : samples_(std::move(samples)),
      n_channels_(n_channels),
      rate_(sampling_rate_hz),
      names_(std::move(channel_names)),
      markers_(std::move(markers)) {
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
    throw std::invalid_argument("sampling rate must be positive");
  }
  if (n_channels_ == 0) throw std::invalid_argument("recording needs at least one channel");
  if (names_.size() != n_channels_) {
    throw std::invalid_argument("channel count mismatch: " + std::to_string(names_.size()) +
                                " names for " + std::to_string(n_channels_) + " channels");
  }
  if (samples_.size() % n_channels_ != 0) {
    throw std::invalid_argument("channel rows have unequal length");
  }
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) throw std::invalid_argument("channel names must be unique");
  const std::size_t n = n_samples();
  for (std::size_t c = 0; c < n_channels_; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(samples_[c * n + i])) {
        throw std::invalid_argument("non-finite sample in channel " + std::to_string(c) + " at " +
                                    std::to_string(i));
      }
    }
  }
  for (const auto& m : markers_) {
    if (m.sample >= n) {
      throw std::invalid_argument("marker at sample " + std::to_string(m.sample) +
                                  " beyond recording length " + std::to_string(n));
    }
  }
}

Matrix Recording::to_matrix() const {
  Matrix m(n_channels_, n_samples());
  std::copy(samples_.begin(), samples_.end(), m.values.begin());
  return m;
}

Recording Recording::with_samples(const Matrix& m) const {
  if (m.rows != n_channels_ || m.cols != n_samples()) {
    throw std::invalid_argument("replacement samples have a different shape");
  }
  std::vector<float> s(m.values.size());
  std::transform(m.values.begin(), m.values.end(), s.begin(),
                 [](double v) { return static_cast<float>(v); });
  return Recording(std::move(s), n_channels_, rate_, names_, markers_);
}

Recording Recording::exclude_channels(const std::vector<std::string>& names) const {
  std::vector<float> s;
  std::vector<std::string> kept;
  for (std::size_t c = 0; c < n_channels_; ++c) {
    if (std::find(names.begin(), names.end(), names_[c]) != names.end()) continue;
    auto ch = channel(c);
    s.insert(s.end(), ch.begin(), ch.end());
    kept.push_back(names_[c]);
  }
  for (const auto& n : names) {
    if (std::find(names_.begin(), names_.end(), n) == names_.end()) {
      throw std::invalid_argument("cannot exclude unknown channel '" + n + "'");
    }
  }
  const std::size_t n = kept.size();
  return Recording(std::move(s), n, rate_, std::move(kept), markers_);
}

// ---------------------------------------------------------------------------
// EpochSet

EpochSet::EpochSet(std::vector<double> data, std::size_t n_trials, std::size_t n_channels,
                   std::size_t n_samples, std::vector<int> class_labels,
                   std::vector<Paradigm> paradigm_labels, double sampling_rate_hz, int n_classes)
    : data_(std::move(data)),
      n_trials_(n_trials),
      n_channels_(n_channels),
      n_samples_(n_samples),
      classes_(std::move(class_labels)),
      paradigms_(std::move(paradigm_labels)),
      rate_(sampling_rate_hz),
      n_classes_(n_classes) {
  if (data_.size() != n_trials_ * n_channels_ * n_samples_) {
    throw std::invalid_argument("epoch data size does not match trials x channels x samples");
  }
  if (classes_.size() != n_trials_ || paradigms_.size() != n_trials_) {
    throw std::invalid_argument("label count does not match trial count");
  }
  if (!(rate_ > 0.0)) throw std::invalid_argument("sampling rate must be positive");
  int max_label = -1;
  for (int c : classes_) {
    if (c < 0) throw std::invalid_argument("negative class label");
    max_label = std::max(max_label, c);
  }
  if (n_classes_ == 0) n_classes_ = max_label + 1;
  if (max_label >= n_classes_) {
    throw std::invalid_argument("class label " + std::to_string(max_label) + " out of range for " +
                                std::to_string(n_classes_) + " classes");
  }
}

Matrix EpochSet::trial(std::size_t t) const {
  Matrix m(n_channels_, n_samples_);
  const auto* src = data_.data() + t * n_channels_ * n_samples_;
  std::copy(src, src + n_channels_ * n_samples_, m.values.begin());
  return m;
}

EpochSet EpochSet::with_class_labels(std::vector<int> labels) const {
  return EpochSet(data_, n_trials_, n_channels_, n_samples_, std::move(labels), paradigms_, rate_,
                  n_classes_);
}

EpochSet EpochSet::subset(std::span<const std::size_t> trials) const {
  const std::size_t stride = n_channels_ * n_samples_;
  std::vector<double> d;
  d.reserve(trials.size() * stride);
  std::vector<int> c;
  std::vector<Paradigm> p;
  for (std::size_t t : trials) {
    if (t >= n_trials_) throw std::out_of_range("trial index out of range");
    d.insert(d.end(), data_.begin() + static_cast<std::ptrdiff_t>(t * stride),
             data_.begin() + static_cast<std::ptrdiff_t>((t + 1) * stride));
    c.push_back(classes_[t]);
    p.push_back(paradigms_[t]);
  }
  return EpochSet(std::move(d), trials.size(), n_channels_, n_samples_, std::move(c), std::move(p),
                  rate_, n_classes_);
}

const std::array<WordCategory, 5>& speech_vocabulary() {
  static const std::array<WordCategory, 5> vocab = {{
      {"emotion", {"Sad", "Amused", "Positive", "Disappointed"}},
      {"natural object", {"Peach", "Mango", "Strawberry", "Watermelon"}},
      {"animal", {"Horse", "Tiger", "Buffalo", "Alligator"}},
      {"artificial object", {"House", "Notebook", "Apartment", "Television"}},
      {"abstract noun", {"Death", "Weather", "January", "Conversation"}},
  }};
  return vocab;
}

std::size_t epoch_length(double epoch_seconds, double sampling_rate_hz) {
  if (!(epoch_seconds > 0.0)) throw std::invalid_argument("epoch length must be positive");
  return static_cast<std::size_t>(std::llround(epoch_seconds * sampling_rate_hz));
}

EpochSet segment_epochs(const Recording& rec, double epoch_seconds, int n_classes) {
  const std::size_t len = epoch_length(epoch_seconds, rec.sampling_rate_hz());
  if (len == 0) throw std::invalid_argument("epoch shorter than one sample");
  const std::size_t n = rec.n_samples();
  const std::size_t nc = rec.n_channels();
  const auto& markers = rec.markers();

  std::vector<double> data;
  data.reserve(markers.size() * nc * len);
  std::vector<int> classes;
  std::vector<Paradigm> paradigms;
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const auto& mk = markers[m];
    if (mk.sample + len > n) {
      throw std::invalid_argument("marker " + std::to_string(m) + " at sample " +
                                  std::to_string(mk.sample) + " leaves no room for a " +
                                  std::to_string(len) + "-sample epoch");
    }
    for (std::size_t c = 0; c < nc; ++c) {
      auto ch = rec.channel(c);
      data.insert(data.end(), ch.begin() + static_cast<std::ptrdiff_t>(mk.sample),
                  ch.begin() + static_cast<std::ptrdiff_t>(mk.sample + len));
    }
    classes.push_back(mk.class_label);
    paradigms.push_back(mk.paradigm);
  }
  const std::size_t trials = classes.size();
  return EpochSet(std::move(data), trials, nc, len, std::move(classes), std::move(paradigms),
                  rec.sampling_rate_hz(), n_classes);
}

// ---------------------------------------------------------------------------
// File I/O

fs::path recording_stem(const fs::path& path) {
  std::string s = path.string();
  for (std::string_view suffix : {".eeg.f32", ".meta.json"}) {
    if (s.size() > suffix.size() && s.ends_with(suffix)) return s.substr(0, s.size() - suffix.size());
  }
  return path;
}

Recording load_recording(const fs::path& path) {
  const fs::path stem = recording_stem(path);
  const fs::path bin = stem.string() + ".eeg.f32";
  const fs::path meta_path = stem.string() + ".meta.json";
  if (!fs::exists(meta_path)) throw std::runtime_error("missing sidecar " + meta_path.string());
  if (!fs::exists(bin)) throw std::runtime_error("missing sample file " + bin.string());

  const auto meta = io::read_json(meta_path);
  double rate = 0.0;
  std::vector<std::string> names;
  std::vector<Marker> markers;
  try {
    rate = meta.at("sampling_rate_hz").get<double>();
    names = meta.at("channel_names").get<std::vector<std::string>>();
    if (meta.contains("markers")) {
      for (const auto& m : meta.at("markers")) {
        Marker mk;
        mk.sample = m.at("sample").get<std::size_t>();
        mk.class_label = m.value("class", 0);
        mk.paradigm = parse_paradigm(m.value("paradigm", std::string("perceived")));
        markers.push_back(mk);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(meta_path.string() + ": " + e.what());
  }
  if (names.empty()) throw std::runtime_error(meta_path.string() + ": no channels listed");

  const std::size_t bytes = fs::file_size(bin);
  if (bytes % (4 * names.size()) != 0) {
    throw std::runtime_error("channel count mismatch: " + bin.string() + " has " +
                             std::to_string(bytes) + " bytes, not divisible by 4 x " +
                             std::to_string(names.size()) + " channels");
  }
  auto samples = io::read_f32(bin);
  const std::size_t n = samples.size() / names.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw std::runtime_error(bin.string() + ": non-finite value in channel " +
                               std::to_string(i / n));
    }
  }
  const std::size_t nc = names.size();
  return Recording(std::move(samples), nc, rate, std::move(names), std::move(markers));
}

void save_recording(const Recording& rec, const fs::path& path) {
  const fs::path stem = recording_stem(path);
  io::write_f32(stem.string() + ".eeg.f32", std::span<const float>(rec.samples()));
  nlohmann::json meta;
  meta["sampling_rate_hz"] = rec.sampling_rate_hz();
  meta["channel_names"] = rec.channel_names();
  meta["markers"] = nlohmann::json::array();
  for (const auto& m : rec.markers()) {
    meta["markers"].push_back(
        {{"sample", m.sample}, {"class", m.class_label}, {"paradigm", paradigm_name(m.paradigm)}});
  }
  io::write_json(stem.string() + ".meta.json", meta);
}

}  // namespace neuroconn
