#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "neuroconn/cli.hpp"
#include "neuroconn/config.hpp"
#include "neuroconn/io.hpp"

using namespace neuroconn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config defaults and merging") {
  const auto c = PipelineConfig::defaults();
  CHECK(c.preprocess.bandpass_lo == 0.5);
  CHECK(c.preprocess.bandpass_hi == 125.0);
  CHECK(c.preprocess.notch == std::vector<double>{60.0, 120.0});
  CHECK(c.preprocess.epoch_seconds == 1.5);
  CHECK(c.features.window_seconds == 1.0);
  CHECK(c.train.seed == 123);
  CHECK(c.train.resolved_lr() == 1e-5);
  CHECK(c.train.resolved_epochs() == 100);
  CHECK(c.train.weight_decay == 5e-4);
  CHECK(c.train.dropout == 0.5);
  CHECK(c.train.hidden_dim == 64);

  PipelineConfig r = c;
  r.merge(nlohmann::json::parse(R"({"train": {"task": "regression"}})"));
  CHECK(r.train.resolved_lr() == 1e-3);
  CHECK(r.train.resolved_epochs() == 50);

  PipelineConfig m = c;
  CHECK_THROWS_AS(m.merge(nlohmann::json::parse(R"({"train": {"learning_rate": 1}})")), ConfigError);
  CHECK_THROWS_AS(m.merge(nlohmann::json::parse(R"({"extra": {}})")), ConfigError);
  CHECK_THROWS_AS(m.merge(nlohmann::json::parse(R"({"train": {"lr": "fast"}})")), ConfigError);

  // A manifest feeds back in unchanged.
  PipelineConfig back = PipelineConfig::defaults();
  auto j = c.to_json();
  j["run"] = {{"subcommand", "train"}};
  back.merge(j);
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("NEUROCONN_SEED overrides the default seed") {
  ::setenv("NEUROCONN_SEED", "77", 1);
  const auto c = PipelineConfig::defaults();
  ::unsetenv("NEUROCONN_SEED");
  CHECK(c.train.seed == 77);
  CHECK(c.synth.seed == 77);
  CHECK(PipelineConfig::defaults().train.seed == 123);
}

TEST_CASE("cli usage and errors") {
  const auto help = run({"preprocess", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("Usage") != std::string::npos);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "--no-such-flag", "x"}).code == 2);

  const auto empty = testutil::scratch("cli-empty");
  const auto r = run({"train", empty.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no epochs found") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  const auto missing = run({"features", (empty / "nope").string()});
  CHECK(missing.code == 1);

  io::write_text(empty / "bad.json", R"({"train": {"wat": 1}})");
  const auto bad = run({"train", "--config", (empty / "bad.json").string(), empty.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("train.wat") != std::string::npos);
}

TEST_CASE("cli end to end") {
  const auto d = testutil::scratch("cli-e2e");
  const std::string dir = d.string();
  REQUIRE(run({"synth", "--classes", "4", "--channels", "16", "--rate", "250", "--trials-per-class", "10",
               "--out", dir}).code == 0);
  CHECK(fs::exists(d / "synth.eeg.f32"));
  CHECK(fs::exists(d / "run-manifest.json"));

  SUBCASE("dry run touches nothing") {
    const auto before = slurp(d / "run-manifest.json");
    const auto r = run({"connectivity", "--dry-run", "--metric", "plv", "--band", "gamma", dir});
    CHECK(r.code == 0);
    CHECK(!fs::exists(d / "connectivity-plv-gamma.f32"));
    CHECK(slurp(d / "run-manifest.json") == before);
  }

  SUBCASE("connectivity, train, evaluate, report") {
    REQUIRE(run({"connectivity", "--metric", "plv", "--band", "gamma", dir}).code == 0);
    CHECK(fs::exists(d / "connectivity-plv-gamma.meta.json"));
    CHECK(fs::exists(d / "connectivity-plv-gamma.mean.csv"));
    const auto t = run({"train", "--arch", "fbcnet_like", "--epochs", "3", "--runs", "2", dir});
    REQUIRE(t.code == 0);
    const auto report = io::read_json(d / "report.json");
    CHECK(report.at("cells").size() == 1);
    CHECK(fs::exists(d / "report.md"));
    const auto manifest = io::read_json(d / "run-manifest.json");
    CHECK(manifest.at("run").at("subcommand") == "train");
    CHECK(manifest.at("train").at("seed") == 123);

    // Re-running from the manifest reproduces the report bitwise.
    const auto first = slurp(d / "report.json");
    fs::copy_file(d / "run-manifest.json", d / "manifest-copy.json");
    REQUIRE(run({"train", "--config", (d / "manifest-copy.json").string(), "--jobs", "4", dir}).code == 0);
    CHECK(slurp(d / "report.json") == first);

    const auto ckpt = d / "checkpoints" / "plv-fbcnet_like-gamma";
    CHECK(fs::exists(ckpt.string() + ".json"));
    const auto ev = run({"evaluate", "--checkpoint", ckpt.string(), dir});
    CHECK(ev.code == 0);
    CHECK(ev.out.find("\"accuracy\"") != std::string::npos);

    fs::remove(d / "report.md");
    CHECK(run({"report", dir}).code == 0);
    CHECK(fs::exists(d / "report.md"));
  }

  SUBCASE("features and preprocess") {
    CHECK(run({"features", dir}).code == 0);
    CHECK(fs::exists(d / "bandpower.csv"));
    const auto out = (d / "pre").string();
    // 125 Hz is Nyquist at 250 Hz, so the default band-pass is rejected.
    CHECK(run({"preprocess", "--out", out, dir}).code == 2);
    CHECK(run({"preprocess", "--hi", "100", "--notch", "60", "--out", out, dir}).code == 0);
    CHECK(fs::exists(d / "pre" / "synth.eeg.f32"));
  }
}

TEST_CASE("cli stats") {
  const auto d = testutil::scratch("cli-stats");
  io::write_text(d / "s.csv",
                 "subject,a,b,c\n1,0.5,0.4,0.9\n2,0.6,0.5,0.2\n3,0.7,0.5,0.4\n4,0.4,0.45,0.3\n5,0.8,0.6,0.5\n");
  const auto r = run({"stats", (d / "s.csv").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("tests").size() == 3);
  CHECK(j.at("tests")[0].at("df") == 4);
  CHECK(run({"stats", "--pairs", "a:z", (d / "s.csv").string()}).code == 2);
}
