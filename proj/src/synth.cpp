#include "neuroconn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "neuroconn/dsp.hpp"

namespace neuroconn::experiment {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (k + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::vector<double> white(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

// Analytic band-limited Gaussian noise, scaled so its real part has unit RMS.
std::vector<dsp::cplx> analytic_noise(std::size_t n, double rate, const FrequencyBand& band,
                                      std::mt19937_64& rng) {
  const auto x = white(n, rng);
  std::vector<dsp::cplx> c(x.begin(), x.end());
  auto spec = dsp::fft(c);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = static_cast<double>(k) * rate / static_cast<double>(n);
    if (k > 0 && 2 * k < n && f >= band.lo_hz && f < band.hi_hz) {
      spec[k] *= 2.0;
      ++kept;
    } else {
      spec[k] = 0.0;
    }
  }
  if (kept == 0) {
    throw std::invalid_argument("epoch too short to resolve band " + std::string(band_name(band.name)));
  }
  auto z = dsp::ifft(spec);
  double power = 0.0;
  for (const auto& v : z) power += std::norm(v);
  const double scale = std::sqrt(2.0 * static_cast<double>(n) / power);
  for (auto& v : z) v *= scale;
  return z;
}

std::vector<double> unwrapped_phase(const std::vector<dsp::cplx>& z) {
  std::vector<double> ph(z.size());
  double prev = 0.0, offset = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = std::arg(z[i]);
    if (i > 0) {
      const double d = a - prev;
      if (d > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
      if (d < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
    }
    prev = a;
    ph[i] = a + offset;
  }
  return ph;
}

// 1/f power spectrum, zero mean, unit variance.
std::vector<double> pink_noise(std::size_t n, std::mt19937_64& rng) {
  const auto x = white(n, rng);
  std::vector<dsp::cplx> c(x.begin(), x.end());
  auto spec = dsp::fft(c);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t kk = std::min(k, n - k);
    spec[k] /= std::sqrt(static_cast<double>(kk));
  }
  const auto y = dsp::ifft(spec);
  std::vector<double> out(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += out[i] = y[i].real();
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (auto& v : out) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (auto& v : out) v /= sd;
  return out;
}

bool same_band(const FrequencyBand& a, const FrequencyBand& b) {
  return a.lo_hz == b.lo_hz && a.hi_hz == b.hi_hz;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_classes < 1) throw std::invalid_argument("synth: need at least one class");
  if (n_channels < 1) throw std::invalid_argument("synth: need at least one channel");
  if (!(rate_hz > 0.0)) throw std::invalid_argument("synth: sampling rate must be positive");
  if (trials_per_class < 1) throw std::invalid_argument("synth: need at least one trial per class");
  epoch_length(epoch_seconds, rate_hz);
  if (coupling_plan.size() != static_cast<std::size_t>(n_classes)) {
    throw std::invalid_argument("synth: coupling plan lists " + std::to_string(coupling_plan.size()) +
                                " classes, expected " + std::to_string(n_classes));
  }
  for (std::size_t c = 0; c < coupling_plan.size(); ++c) {
    for (const auto& term : coupling_plan[c]) {
      for (auto ch : term.channels) {
        if (ch >= n_channels) {
          throw std::invalid_argument("synth: class " + std::to_string(c) + " couples channel " +
                                      std::to_string(ch) + " but only " +
                                      std::to_string(n_channels) + " channels exist");
        }
      }
      if (!(term.strength >= 0.0 && term.strength <= 1.0)) {
        throw std::invalid_argument("synth: coupling strength must lie in [0, 1]");
      }
      if (!(term.band.lo_hz > 0.0 && term.band.lo_hz < term.band.hi_hz && term.band.hi_hz < rate_hz / 2.0)) {
        throw std::invalid_argument("synth: coupling band must lie below Nyquist");
      }
    }
  }
}

std::vector<std::vector<CouplingTerm>> default_coupling_plan(int n_classes, std::size_t n_channels,
                                                             const FrequencyBand& band,
                                                             double strength, double phase_lag_rad) {
  const std::size_t group =
      std::clamp<std::size_t>(n_channels / static_cast<std::size_t>(std::max(n_classes, 1)), 2, 4);
  if (group * static_cast<std::size_t>(n_classes) > n_channels) {
    throw std::invalid_argument("default coupling plan needs at least 2 channels per class (" +
                                std::to_string(n_classes) + " classes, " +
                                std::to_string(n_channels) + " channels)");
  }
  std::vector<std::vector<CouplingTerm>> plan(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    CouplingTerm t;
    for (std::size_t j = 0; j < group; ++j) t.channels.push_back(static_cast<std::size_t>(c) * group + j);
    t.band = band;
    t.phase_lag_rad = phase_lag_rad;
    t.strength = strength;
    plan[static_cast<std::size_t>(c)].push_back(t);
  }
  return plan;
}

EpochSet synth_generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t ns = epoch_length(spec.epoch_seconds, spec.rate_hz);
  const std::size_t nc = spec.n_channels;
  const std::size_t n_trials = spec.trials_per_class * static_cast<std::size_t>(spec.n_classes);

  std::vector<FrequencyBand> plan_bands;
  for (const auto& terms : spec.coupling_plan) {
    for (const auto& t : terms) {
      if (std::none_of(plan_bands.begin(), plan_bands.end(),
                       [&](const FrequencyBand& b) { return same_band(b, t.band); })) {
        plan_bands.push_back(t.band);
      }
    }
  }

  std::vector<double> data(n_trials * nc * ns, 0.0);
  std::vector<int> classes(n_trials);
  std::vector<Paradigm> paradigms(n_trials);
  const double noise_ratio = std::pow(10.0, -spec.noise_snr_db / 10.0);

  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const int cls = static_cast<int>(trial / spec.trials_per_class);
    classes[trial] = cls;
    paradigms[trial] = static_cast<Paradigm>(cls % 4);
    std::mt19937_64 rng(mix_seed(spec.seed, trial));
    double* out = data.data() + trial * nc * ns;
    const auto& terms = spec.coupling_plan[static_cast<std::size_t>(cls)];

    for (const auto& band : plan_bands) {
      std::vector<bool> assigned(nc, false);
      for (const auto& term : terms) {
        if (!same_band(term.band, band)) continue;
        const auto shared = analytic_noise(ns, spec.rate_hz, band, rng);
        const auto common = unwrapped_phase(shared);
        for (std::size_t j = 0; j < term.channels.size(); ++j) {
          const std::size_t ch = term.channels[j];
          const auto own = analytic_noise(ns, spec.rate_hz, band, rng);
          if (assigned[ch]) continue;
          assigned[ch] = true;
          const auto own_phase = unwrapped_phase(own);
          const double lag = static_cast<double>(j) * term.phase_lag_rad;
          for (std::size_t i = 0; i < ns; ++i) {
            // Phase and log-amplitude both move from the channel's own noise
            // (strength 0) to the shared oscillation (strength 1).
            const double phase = common[i] + lag + (1.0 - term.strength) * (own_phase[i] - common[i]);
            const double amp = std::pow(std::abs(shared[i]), term.strength) *
                               std::pow(std::abs(own[i]), 1.0 - term.strength);
            out[ch * ns + i] += amp * std::cos(phase);
          }
        }
      }
      for (std::size_t ch = 0; ch < nc; ++ch) {
        const auto own = analytic_noise(ns, spec.rate_hz, band, rng);
        if (assigned[ch]) continue;
        for (std::size_t i = 0; i < ns; ++i) out[ch * ns + i] += own[i].real();
      }
    }

    double signal_power = 0.0;
    for (std::size_t i = 0; i < nc * ns; ++i) signal_power += out[i] * out[i];
    signal_power /= static_cast<double>(nc * ns);
    const double noise_sd = plan_bands.empty() ? 1.0 : std::sqrt(signal_power * noise_ratio);
    for (std::size_t ch = 0; ch < nc; ++ch) {
      const auto pink = pink_noise(ns, rng);
      for (std::size_t i = 0; i < ns; ++i) out[ch * ns + i] += noise_sd * pink[i];
    }
  }
  return EpochSet(std::move(data), n_trials, nc, ns, std::move(classes), std::move(paradigms),
                  spec.rate_hz, spec.n_classes);
}

Recording epochs_to_recording(const EpochSet& epochs) {
  const std::size_t nt = epochs.n_trials(), nc = epochs.n_channels(), ns = epochs.n_samples();
  std::vector<float> samples(nc * nt * ns);
  std::vector<Marker> markers;
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t c = 0; c < nc; ++c) {
      auto ch = epochs.channel(t, c);
      for (std::size_t i = 0; i < ns; ++i) samples[c * nt * ns + t * ns + i] = static_cast<float>(ch[i]);
    }
    markers.push_back({t * ns, epochs.class_labels()[t], epochs.paradigm_labels()[t]});
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < nc; ++c) {
    std::string n = std::to_string(c);
    names.push_back("ch" + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n);
  }
  return Recording(std::move(samples), nc, epochs.sampling_rate_hz(), std::move(names),
                   std::move(markers));
}

}  // namespace neuroconn::experiment
