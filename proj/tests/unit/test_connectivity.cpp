#include <doctest.h>

#include <complex>
#include <fstream>

#include <json.hpp>
#include <sstream>

#include "helpers.hpp"
#include "neuroconn/connectivity.hpp"

using namespace neuroconn;
using connectivity::Metric;

namespace {
constexpr double kPi = std::numbers::pi;

// Independent oracles written straight from the definitions.
double plv_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double re = 0, im = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    re += std::cos(a[k] - b[k]);
    im += std::sin(a[k] - b[k]);
  }
  return std::hypot(re, im) / static_cast<double>(a.size());
}

double pli_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  long long s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::atan2(std::sin(a[k] - b[k]), std::cos(a[k] - b[k]));
    s += (d > 0) - (d < 0);
  }
  return std::abs(static_cast<double>(s)) / static_cast<double>(a.size());
}

std::vector<double> uniform_phases(std::size_t n, std::mt19937_64& rng, double span = kPi) {
  std::uniform_real_distribution<double> u(-span, span);
  std::vector<double> p(n);
  for (auto& v : p) v = u(rng);
  return p;
}

Matrix noise_epoch(std::size_t ch, std::size_t n, std::uint64_t seed) {
  Matrix m(ch, n);
  m.values = testutil::white(ch * n, seed);
  return m;
}
}  // namespace

TEST_CASE("plv_pair analytic cases") {
  std::mt19937_64 rng(1);
  const auto a = uniform_phases(1500, rng);
  CHECK(connectivity::plv_pair(a, a) == 1.0);
  std::vector<double> b(a);
  for (auto& v : b) v += kPi / 2;
  CHECK(std::abs(connectivity::plv_pair(a, b) - 1.0) < 1e-12);
  const std::size_t M = 1500;
  std::vector<double> r(M), z(M, 0.0);
  for (std::size_t k = 0; k < M; ++k) r[k] = 2 * kPi * static_cast<double>(k) / M;
  CHECK(std::abs(connectivity::plv_pair(r, z)) < 1e-12);
  CHECK_THROWS(connectivity::plv_pair(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS(connectivity::plv_pair(a, std::vector<double>(10)));
}

TEST_CASE("pli_pair analytic cases") {
  const std::size_t M = 1000;
  std::vector<double> z(M, 0.0), plus(M, 0.3), half(M);
  for (std::size_t k = 0; k < M; ++k) half[k] = k % 2 ? 0.3 : -0.3;
  CHECK(connectivity::pli_pair(plus, z) == 1.0);
  CHECK(connectivity::pli_pair(z, z) == 0.0);
  CHECK(connectivity::pli_pair(half, z) == 0.0);
  // Wrapping: a difference of 2*pi - 0.1 is a lag of -0.1.
  std::vector<double> big(M, 2 * kPi - 0.1);
  CHECK(connectivity::signed_pli_pair(big, z) == -1.0);
  CHECK(connectivity::signed_pli_pair(z, big) == 1.0);
  CHECK_THROWS(connectivity::pli_pair(std::vector<double>{}, std::vector<double>{}));
}

TEST_CASE("pair metrics agree with brute-force oracles") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 100; ++rep) {
    const auto a = uniform_phases(1500, rng, 3 * kPi);
    const auto b = uniform_phases(1500, rng, 3 * kPi);
    CHECK(std::abs(connectivity::plv_pair(a, b) - plv_oracle(a, b)) < 1e-12);
    CHECK(std::abs(connectivity::pli_pair(a, b) - pli_oracle(a, b)) < 1e-12);
    CHECK(connectivity::pli_pair(a, b) == connectivity::pli_pair(b, a));
    CHECK(connectivity::signed_pli_pair(a, b) == -connectivity::signed_pli_pair(b, a));
  }
  const auto a = uniform_phases(1000, rng), b = uniform_phases(1000, rng);
  CHECK(connectivity::plv_pair(a, b) < 0.1);
}

TEST_CASE("connectivity_matrix examples") {
  const double rate = 1000;
  SUBCASE("shared 10 Hz tone") {
    Matrix m(2, 1500);
    const auto s = testutil::tone(10, rate, 1500);
    const auto n0 = testutil::white(1500, 1, 0.01), n1 = testutil::white(1500, 2, 0.01);
    for (std::size_t i = 0; i < 1500; ++i) {
      m(0, i) = s[i] + n0[i];
      m(1, i) = s[i] + n1[i];
    }
    const auto alpha = canonical_band(BandName::alpha);
    const auto c = connectivity::connectivity_matrix(m, rate, alpha, Metric::plv);
    CHECK(c(0, 1) > 0.99);
    CHECK(c.n_samples_used == 1200);
    const auto ph = connectivity::band_phases(m, rate, alpha);
    const double v = connectivity::plv_pair(ph.row(0), ph.row(1));
    CHECK(c(0, 1) == v);
    CHECK(c(0, 0) == 1.0);
    const auto p = connectivity::connectivity_matrix(m, rate, alpha, Metric::pli);
    CHECK(p(0, 0) == 0.0);
    CHECK(p(0, 1) == connectivity::pli_pair(ph.row(0), ph.row(1)));
  }
  SUBCASE("symmetry, range and amplitude invariance") {
    const auto m = noise_epoch(6, 1500, 77);
    Matrix scaled = m;
    for (std::size_t i = 0; i < scaled.cols; ++i) scaled(2, i) *= 7.5;
    for (auto metric : {Metric::plv, Metric::pli}) {
      const auto beta = canonical_band(BandName::beta);
      const auto c = connectivity::connectivity_matrix(m, rate, beta, metric);
      const auto cs = connectivity::connectivity_matrix(scaled, rate, beta, metric);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
          CHECK(c(i, j) == c(j, i));
          CHECK(c(i, j) >= 0.0);
          CHECK(c(i, j) <= 1.0);
          CHECK(std::abs(c(i, j) - cs(i, j)) < 1e-9);
        }
    }
  }
  SUBCASE("needs two channels") {
    CHECK_THROWS(connectivity::connectivity_matrix(noise_epoch(1, 1500, 3), rate, canonical_bands()[1], Metric::plv));
  }
}

// Under independence the expected PLV is roughly sqrt(pi / (4 * T * BW)) for
// T seconds of data in a band of width BW, so the null level depends on the
// time-bandwidth product and not only on M.
TEST_CASE("independent white noise stays near the null level") {
  const double rate = 250;
  const std::size_t used = 1500, n = 1874;  // floor(10%) trimmed at each end leaves M = 1500
  const std::size_t ch = 8;
  for (const auto& band : canonical_bands()) {
    double sum = 0;
    std::size_t count = 0;
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      const auto c = connectivity::connectivity_matrix(noise_epoch(ch, n, 100 + trial), rate, band, Metric::plv);
      REQUIRE(c.n_samples_used == used);
      for (std::size_t i = 0; i < ch; ++i)
        for (std::size_t j = i + 1; j < ch; ++j) { sum += c(i, j); ++count; }
    }
    const double mean = sum / static_cast<double>(count);
    const double t = static_cast<double>(used) / rate, bw = band.hi_hz - band.lo_hz;
    const double expected = std::sqrt(kPi / (4 * t * bw));
    INFO("band " << band_name(band.name) << " mean " << mean << " expected " << expected);
    CHECK(mean < 1.25 * expected);
    if (band.name == BandName::beta || band.name == BandName::gamma) CHECK(mean < 0.15);
  }
}

TEST_CASE("epoch_connectivity matches per-trial matrices") {
  std::vector<double> d = testutil::white(3 * 4 * 600, 8);
  const EpochSet e(d, 3, 4, 600, {0, 1, 0}, std::vector<Paradigm>(3, Paradigm::overt), 250, 2);
  const std::vector<FrequencyBand> bands{canonical_bands()[1], canonical_bands()[4]};
  const std::vector<Metric> metrics{Metric::plv, Metric::pli};
  const auto all = connectivity::epoch_connectivity(e, bands, metrics);
  const auto all8 = connectivity::epoch_connectivity(e, bands, metrics, {}, 8);
  REQUIRE(all.size() == 4);
  for (std::size_t k = 0; k < all.size(); ++k) CHECK(all[k].values == all8[k].values);
  for (const auto& tc : all) {
    CHECK(tc.n_trials == 3);
    for (std::size_t t = 0; t < 3; ++t) {
      const auto ref = connectivity::connectivity_matrix(e.trial(t), 250, tc.band, tc.metric);
      for (std::size_t i = 0; i < 16; ++i) CHECK(tc.values[t * 16 + i] == ref.values[i]);
    }
  }
}

TEST_CASE("connectivity files") {
  const auto dir = testutil::scratch("conn-files");
  std::vector<double> d = testutil::white(2 * 3 * 500, 9);
  const EpochSet e(d, 2, 3, 500, {1, 0}, {Paradigm::overt, Paradigm::imagined}, 250, 2);
  const std::vector<FrequencyBand> bands{canonical_bands()[4]};
  const std::vector<Metric> metrics{Metric::pli};
  const auto tc = connectivity::epoch_connectivity(e, bands, metrics).front();
  connectivity::save_trial_connectivity(tc, e, dir / "c");
  const auto meta = nlohmann::json::parse(std::ifstream(dir / "c.meta.json"));
  CHECK(meta.at("metric") == "pli");
  CHECK(meta.at("band") == "gamma");
  CHECK(meta.at("n_channels") == 3);
  CHECK(meta.at("M") == tc.n_samples_used);
  const auto back = connectivity::load_trial_connectivity(dir / "c");
  CHECK(back.class_labels == std::vector<int>{1, 0});
  CHECK(back.paradigm_labels[1] == Paradigm::imagined);
  REQUIRE(back.data.values.size() == tc.values.size());
  for (std::size_t i = 0; i < tc.values.size(); ++i)
    CHECK(back.data.values[i] == static_cast<double>(static_cast<float>(tc.values[i])));

  connectivity::ConnectivityMatrix m{Metric::plv, canonical_bands()[0], 2, 10, {1.0, 0.5, 0.5, 1.0}};
  std::ostringstream os;
  connectivity::write_csv(os, m, {"Fz", "Cz"});
  CHECK(os.str() == "Fz,Cz\n1,0.5\n0.5,1\n");
}
