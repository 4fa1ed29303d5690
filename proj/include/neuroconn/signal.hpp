#pragma once

// Core domain types: continuous recordings, frequency bands, epoch sets and
// the speech-paradigm label vocabulary.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace neuroconn {

enum class Paradigm { perceived = 0, overt = 1, whispered = 2, imagined = 3 };

std::string_view paradigm_name(Paradigm p);
Paradigm parse_paradigm(std::string_view name);

enum class BandName { delta = 0, theta = 1, alpha = 2, beta = 3, gamma = 4 };

struct FrequencyBand {
  BandName name;
  double lo_hz;
  double hi_hz;
};

inline constexpr std::size_t kNumBands = 5;

// delta, theta, alpha, beta, gamma in that order. Edges are half-open [lo, hi).
const std::array<FrequencyBand, kNumBands>& canonical_bands();
const FrequencyBand& canonical_band(BandName name);
std::string_view band_name(BandName b);
BandName parse_band_name(std::string_view name);

// Channel-major matrix of doubles; row = channel.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct Marker {
  std::size_t sample = 0;
  int class_label = 0;
  Paradigm paradigm = Paradigm::perceived;
};

// Continuous recording in microvolts. Samples are kept at the on-disk float32
// precision so that save/load round trips are exact.
class Recording {
 public:
  Recording(std::vector<float> samples, std::size_t n_channels, double sampling_rate_hz,
            std::vector<std::string> channel_names, std::vector<Marker> markers);

  std::size_t n_channels() const { return n_channels_; }
  std::size_t n_samples() const { return n_channels_ == 0 ? 0 : samples_.size() / n_channels_; }
  double sampling_rate_hz() const { return rate_; }
  const std::vector<std::string>& channel_names() const { return names_; }
  const std::vector<Marker>& markers() const { return markers_; }
  const std::vector<float>& samples() const { return samples_; }
  std::span<const float> channel(std::size_t c) const {
    return {samples_.data() + c * n_samples(), n_samples()};
  }

  Matrix to_matrix() const;
  // Copy with the same metadata and replaced sample values (rounded to float32).
  Recording with_samples(const Matrix& m) const;
  // Copy without the listed channels (by name).
  Recording exclude_channels(const std::vector<std::string>& names) const;

 private:
  std::vector<float> samples_;
  std::size_t n_channels_;
  double rate_;
  std::vector<std::string> names_;
  std::vector<Marker> markers_;
};

// Trials x channels x samples, row-major.
class EpochSet {
 public:
  EpochSet() = default;
  EpochSet(std::vector<double> data, std::size_t n_trials, std::size_t n_channels,
           std::size_t n_samples, std::vector<int> class_labels,
           std::vector<Paradigm> paradigm_labels, double sampling_rate_hz, int n_classes);

  std::size_t n_trials() const { return n_trials_; }
  std::size_t n_channels() const { return n_channels_; }
  std::size_t n_samples() const { return n_samples_; }
  int n_classes() const { return n_classes_; }
  double sampling_rate_hz() const { return rate_; }
  const std::vector<int>& class_labels() const { return classes_; }
  const std::vector<Paradigm>& paradigm_labels() const { return paradigms_; }
  const std::vector<double>& data() const { return data_; }

  std::span<const double> channel(std::size_t trial, std::size_t ch) const {
    return {data_.data() + (trial * n_channels_ + ch) * n_samples_, n_samples_};
  }
  Matrix trial(std::size_t t) const;

  EpochSet with_class_labels(std::vector<int> labels) const;
  EpochSet subset(std::span<const std::size_t> trials) const;

 private:
  std::vector<double> data_;
  std::size_t n_trials_ = 0;
  std::size_t n_channels_ = 0;
  std::size_t n_samples_ = 0;
  std::vector<int> classes_;
  std::vector<Paradigm> paradigms_;
  double rate_ = 1.0;
  int n_classes_ = 0;
};

struct WordCategory {
  std::string_view name;
  std::array<std::string_view, 4> words;
};

// The 20 word classes of the speech paradigm, 5 categories of 4.
const std::array<WordCategory, 5>& speech_vocabulary();

// Number of samples in an epoch of the given duration.
std::size_t epoch_length(double epoch_seconds, double sampling_rate_hz);

// One epoch per marker, each starting at the marker sample.
EpochSet segment_epochs(const Recording& rec, double epoch_seconds, int n_classes = 0);

// File I/O: `<stem>.eeg.f32` little-endian float32 channel-major samples and
// `<stem>.meta.json` sidecar. `path` may name either file or the bare stem.
Recording load_recording(const std::filesystem::path& path);
void save_recording(const Recording& rec, const std::filesystem::path& path);

// Strips `.eeg.f32` / `.meta.json` to the common stem.
std::filesystem::path recording_stem(const std::filesystem::path& path);

}  // namespace neuroconn
