#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "helpers.hpp"
#include "neuroconn/io.hpp"
#include "neuroconn/signal.hpp"

using namespace neuroconn;

namespace {

Recording small_recording(std::size_t n_ch, std::size_t n, double rate, std::vector<Marker> markers = {}) {
  std::vector<float> s(n_ch * n);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<float>(std::sin(0.37 * i) * 12.5);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_ch; ++c) names.push_back("E" + std::to_string(c + 1));
  return Recording(std::move(s), n_ch, rate, names, std::move(markers));
}

void write_sidecar(const std::filesystem::path& stem, std::size_t n_ch, double rate) {
  nlohmann::json j;
  j["sampling_rate_hz"] = rate;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_ch; ++c) names.push_back("c" + std::to_string(c));
  j["channel_names"] = names;
  j["markers"] = nlohmann::json::array();
  io::write_json(stem.string() + ".meta.json", j);
}

}  // namespace

TEST_CASE("canonical band table") {
  const auto& b = canonical_bands();
  REQUIRE(b.size() == 5);
  const double edges[5][2] = {{1, 4}, {4, 8}, {8, 12}, {12, 30}, {30, 45}};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(static_cast<std::size_t>(b[i].name) == i);
    CHECK(b[i].lo_hz == edges[i][0]);
    CHECK(b[i].hi_hz == edges[i][1]);
  }
  CHECK(parse_band_name("gamma") == BandName::gamma);
  CHECK(band_name(BandName::theta) == "theta");
  CHECK_THROWS(parse_band_name("mu"));
}

TEST_CASE("speech vocabulary has 20 unique words") {
  std::set<std::string_view> words;
  for (const auto& cat : speech_vocabulary())
    for (auto w : cat.words) words.insert(w);
  CHECK(words.size() == 20);
}

TEST_CASE("recording invariants") {
  CHECK_THROWS(Recording({1, 2, 3}, 2, 100.0, {"a", "b"}, {}));
  CHECK_THROWS(Recording({1, 2}, 2, 0.0, {"a", "b"}, {}));
  CHECK_THROWS(Recording({1, 2}, 2, 100.0, {"a", "a"}, {}));
  CHECK_THROWS(Recording({1, 2, 3, 4}, 2, 100.0, {"a", "b"}, {Marker{2, 0, Paradigm::overt}}));
  CHECK_THROWS(Recording({1, std::numeric_limits<float>::quiet_NaN()}, 2, 100.0, {"a", "b"}, {}));
}

TEST_CASE("load: sample count from file size") {
  const auto dir = testutil::scratch("sig-size");
  const auto stem = dir / "two";
  std::vector<float> v{1, 2, 3, 4};
  io::write_f32(stem.string() + ".eeg.f32", std::span<const float>(v));
  write_sidecar(stem, 2, 4.0);
  const auto rec = load_recording(stem);
  CHECK(rec.n_channels() == 2);
  CHECK(rec.n_samples() == 2);
  CHECK(rec.channel(1)[0] == 3.0f);
}

TEST_CASE("load: channel count mismatch") {
  const auto dir = testutil::scratch("sig-mismatch");
  const auto stem = dir / "bad";
  std::vector<float> v{1, 2, 3, 4};  // 2 channels x 2 samples
  io::write_f32(stem.string() + ".eeg.f32", std::span<const float>(v));
  write_sidecar(stem, 3, 4.0);
  CHECK_THROWS_WITH_AS(load_recording(stem), doctest::Contains("channel count mismatch"), std::runtime_error);
}

TEST_CASE("load: missing sidecar and non-finite values") {
  const auto dir = testutil::scratch("sig-errors");
  std::vector<float> v{1, 2, 3, std::numeric_limits<float>::infinity()};
  io::write_f32((dir / "x.eeg.f32").string(), std::span<const float>(v));
  CHECK_THROWS_WITH(load_recording(dir / "x"), doctest::Contains("missing sidecar"));
  write_sidecar(dir / "x", 2, 4.0);
  CHECK_THROWS_WITH(load_recording(dir / "x"), doctest::Contains("channel 1"));
}

TEST_CASE("save/load round trip is bitwise") {
  const auto dir = testutil::scratch("sig-roundtrip");
  const auto rec = small_recording(3, 517, 250.0,
                                   {Marker{0, 2, Paradigm::imagined}, Marker{100, 1, Paradigm::whispered}});
  save_recording(rec, dir / "r");
  const auto back = load_recording(dir / "r.eeg.f32");
  REQUIRE(back.samples().size() == rec.samples().size());
  CHECK(std::memcmp(back.samples().data(), rec.samples().data(), rec.samples().size() * 4) == 0);
  CHECK(back.channel_names() == rec.channel_names());
  CHECK(back.sampling_rate_hz() == rec.sampling_rate_hz());
  REQUIRE(back.markers().size() == 2);
  CHECK(back.markers()[1].sample == 100);
  CHECK(back.markers()[1].class_label == 1);
  CHECK(back.markers()[1].paradigm == Paradigm::whispered);
}

TEST_CASE("segment_epochs") {
  SUBCASE("one marker at 0, 1.5 s at 1000 Hz") {
    const auto rec = small_recording(2, 2000, 1000.0, {Marker{0, 0, Paradigm::overt}});
    const auto e = segment_epochs(rec, 1.5);
    CHECK(e.n_trials() == 1);
    CHECK(e.n_samples() == 1500);
    CHECK(e.channel(0, 1)[7] == static_cast<double>(rec.channel(1)[7]));
  }
  SUBCASE("no markers") {
    const auto e = segment_epochs(small_recording(2, 100, 100.0), 0.5);
    CHECK(e.n_trials() == 0);
  }
  SUBCASE("marker at last sample") {
    const auto rec = small_recording(2, 100, 100.0, {Marker{99, 0, Paradigm::overt}});
    CHECK_THROWS_WITH(segment_epochs(rec, 0.5), doctest::Contains("marker 0"));
  }
  SUBCASE("count equals marker count") {
    std::vector<Marker> ms;
    for (std::size_t i = 0; i < 7; ++i) ms.push_back({i * 30, static_cast<int>(i % 3), Paradigm::perceived});
    const auto e = segment_epochs(small_recording(4, 300, 100.0, ms), 0.5);
    CHECK(e.n_trials() == 7);
    CHECK(e.n_classes() == 3);
    CHECK(e.class_labels()[4] == 1);
  }
}

TEST_CASE("exclude_channels drops by name") {
  const auto rec = small_recording(3, 10, 10.0);
  const auto r = rec.exclude_channels({"E2"});
  CHECK(r.n_channels() == 2);
  CHECK(r.channel_names() == std::vector<std::string>{"E1", "E3"});
  CHECK(r.channel(1)[3] == rec.channel(2)[3]);
  CHECK_THROWS(rec.exclude_channels({"nope"}));
}
