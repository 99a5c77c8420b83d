#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "divswap/feature_map.hpp"
#include "divswap/file_util.hpp"
#include "divswap/metrics.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace divswap;
using divswap::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "divswap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Inputs {
  TempDir dir{"cli"};
  std::string content, style, style_wrong_channels;

  Inputs() {
    std::mt19937_64 rng(101);
    content = (dir / "content.dsfm").string();
    style = (dir / "style.dsfm").string();
    style_wrong_channels = (dir / "style3.dsfm").string();
    save_feature_map(divswap::testing::random_map(rng, 2, 12, 12, true), content);
    save_feature_map(divswap::testing::random_map(rng, 2, 10, 11, true), style);
    save_feature_map(divswap::testing::random_map(rng, 3, 10, 10, true), style_wrong_channels);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("cli run: baseline output is deterministic") {
  Inputs in;
  REQUIRE(run({"run", in.content, in.style, "--dist", "none", "--out", in.path("a")}).code == 0);
  REQUIRE(run({"run", in.content, in.style, "--dist", "none", "--out", in.path("b.dsfm")}).code == 0);
  CHECK(read_file_bytes(in.path("a_000.dsfm")) == read_file_bytes(in.path("b_000.dsfm")));
  CHECK_FALSE(fs::exists(in.path("a_001.dsfm")));
}

TEST_CASE("cli run: preset, audit files and numbering") {
  Inputs in;
  const auto r = run({"run", in.content, in.style, "--preset", "style-swap", "--num", "3",
                      "--audit", "--seed", "5", "--out", in.path("outs/")});
  REQUIRE(r.code == 0);
  CHECK(csv_lines(r.out).size() == 3);
  for (const char* idx : {"000", "001", "002"}) {
    CHECK(fs::exists(in.path(std::string("outs/swap_") + idx + ".dsfm")));
    std::ifstream f(in.path(std::string("outs/swap_") + idx + ".audit.json"));
    const auto j = nlohmann::json::parse(f);
    CHECK(j["sigma_max"] == 1e5);
    CHECK(j["seed"] == 5);
    CHECK(j["distribution"] == "uniform");
    CHECK(j["inequality_violations"] == 0);
    for (const char* key : {"n_flipped", "inequality_violations", "higher_norm_fraction",
                            "seed", "sigma_max"}) {
      CHECK(j.contains(key));
    }
  }
  CHECK(read_file_bytes(in.path("outs/swap_000.dsfm")) !=
        read_file_bytes(in.path("outs/swap_001.dsfm")));
}

TEST_CASE("cli run: seed resolution") {
  Inputs in;
  REQUIRE(run({"run", in.content, in.style, "--sigma-max", "50", "--seed", "9", "--out",
               in.path("flag")}).code == 0);
  ::setenv("DIVSWAP_SEED", "9", 1);
  REQUIRE(run({"run", in.content, in.style, "--sigma-max", "50", "--out", in.path("env")}).code == 0);
  REQUIRE(run({"run", in.content, in.style, "--sigma-max", "50", "--seed", "0", "--out",
               in.path("flag0")}).code == 0);
  ::unsetenv("DIVSWAP_SEED");
  REQUIRE(run({"run", in.content, in.style, "--sigma-max", "50", "--out", in.path("default")}).code == 0);
  CHECK(read_file_bytes(in.path("flag_000.dsfm")) == read_file_bytes(in.path("env_000.dsfm")));
  CHECK(read_file_bytes(in.path("flag0_000.dsfm")) == read_file_bytes(in.path("default_000.dsfm")));
  CHECK(read_file_bytes(in.path("flag_000.dsfm")) != read_file_bytes(in.path("default_000.dsfm")));

  ::setenv("DIVSWAP_SEED", "banana", 1);
  CHECK(run({"run", in.content, in.style, "--sigma-max", "50", "--out", in.path("x")}).code == 1);
  ::unsetenv("DIVSWAP_SEED");
}

TEST_CASE("cli run: exit codes and no partial output") {
  Inputs in;
  CHECK(run({"run", in.content, in.style, "--preset", "wct", "--sigma-max", "3"}).code == 1);
  CHECK(run({"run", in.content, in.style, "--dist", "uniform", "--out", in.path("u")}).code == 1);
  CHECK(run({"run", in.content, in.style, "--frobnicate"}).code == 1);
  CHECK(run({"run", in.content}).code == 1);
  CHECK(run({"run", in.content, in.style, "--num", "0"}).code == 1);
  CHECK(run({}).code == 1);

  std::ofstream(in.path("junk.dsfm")) << "XSFM garbage";
  CHECK(run({"run", in.path("junk.dsfm"), in.style, "--out", in.path("j")}).code == 2);
  CHECK(run({"run", in.path("missing.dsfm"), in.style, "--out", in.path("j")}).code == 2);
  CHECK(run({"run", in.content, in.style_wrong_channels, "--out", in.path("d")}).code == 3);
  CHECK(run({"run", in.content, in.style, "--patch-size", "11", "--out", in.path("k")}).code == 3);
  for (const auto& entry : fs::directory_iterator(in.dir.path())) {
    const auto name = entry.path().filename().string();
    CHECK_MESSAGE(name.find("_000") == std::string::npos, name);
    CHECK_MESSAGE(entry.path().extension() != ".tmp", name);
  }
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli run + metrics: twenty diverse outputs") {
  Inputs in;
  REQUIRE(run({"run", in.content, in.style, "--sigma-max", "20", "--num", "20", "--seed", "7",
               "--out", in.path("many/")}).code == 0);
  const auto r = run({"metrics", in.path("many"), "--json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["kind"] == "feature");
  CHECK(j["n_outputs"] == 20);
  CHECK(j["n_pairs"] == 190);
  CHECK(j["mean"].get<double>() > 0.0);
}

TEST_CASE("cli metrics on images") {
  Inputs in;
  const RgbImage img(2, 2, std::vector<std::uint8_t>(12, 77));
  write_png(img, in.path("p1.png"));
  write_png(img, in.path("p2.png"));
  const auto r = run({"metrics", in.path("p1.png"), in.path("p2.png")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("kind       pixel") != std::string::npos);
  CHECK(r.out.find("mean       0\n") != std::string::npos);

  CHECK(run({"metrics", in.path("p1.png")}).code == 1);
  CHECK(run({"metrics", in.path("p1.png"), in.content}).code == 1);
  CHECK(run({"metrics", in.path("p1.png"), in.path("p2.png"), "--kind", "feature"}).code == 2);
  write_png(RgbImage(3, 2, std::vector<std::uint8_t>(18, 0)), in.path("p3.png"));
  CHECK(run({"metrics", in.path("p1.png"), in.path("p3.png")}).code == 3);
}

TEST_CASE("cli heatmap") {
  Inputs in;
  save_feature_map(FeatureMap(2, 3, 3, std::vector<float>(18, 2.5f)), in.path("flat.dsfm"));
  REQUIRE(run({"heatmap", in.path("flat.dsfm"), in.path("flat.png"), "--size", "8x6"}).code == 0);
  const RgbImage img = read_png(in.path("flat.png"));
  CHECK(img.width == 8);
  CHECK(img.height == 6);
  CHECK(std::all_of(img.pixels.begin(), img.pixels.end(), [](std::uint8_t v) { return v == 0; }));

  REQUIRE(run({"heatmap", in.content, in.path("c.png")}).code == 0);
  CHECK(read_png(in.path("c.png")).width == 12);
  CHECK(run({"heatmap", in.content, in.path("c.png"), "--size", "8by6"}).code == 1);
}

TEST_CASE("cli match-table") {
  Inputs in;
  REQUIRE(run({"match-table", in.content, in.content, in.path("self.csv"), "--dist", "none"}).code == 0);
  std::ifstream f(in.path("self.csv"));
  std::stringstream ss;
  ss << f.rdbuf();
  const auto lines = csv_lines(ss.str());
  REQUIRE(lines.size() == 101);
  CHECK(lines[0] == "content_index,style_index,score");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string prefix = std::to_string(i - 1) + "," + std::to_string(i - 1) + ",";
    CHECK(lines[i].rfind(prefix, 0) == 0);
  }
}

TEST_CASE("cli sweep") {
  Inputs in;
  SUBCASE("single grid value") {
    const auto r = run({"sweep", in.content, in.style, "--sigma-grid", "5", "--num", "4",
                        "--out", in.path("sw")});
    REQUIRE(r.code == 0);
    const auto lines = csv_lines(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "sigma_max,mean_feature_distance");
    CHECK(lines[1].rfind("5,", 0) == 0);
    CHECK(fs::exists(in.path("sw/sweep.csv")));
  }
  SUBCASE("bad grids") {
    CHECK(run({"sweep", in.content, in.style, "--sigma-grid", "5,5"}).code == 1);
    CHECK(run({"sweep", in.content, in.style, "--sigma-grid", "5,-1"}).code == 1);
    CHECK(run({"sweep", in.content, in.style, "--sigma-grid", "5,x"}).code == 1);
    CHECK(run({"sweep", in.content, in.style, "--sigma-grid", "5", "--dist", "none"}).code == 1);
  }
  SUBCASE("two seeds order the grid the same way") {
    auto means = [&](const char* seed) {
      const auto r = run({"sweep", in.content, in.style, "--sigma-grid", "0.5,50,5000",
                          "--num", "8", "--seed", seed});
      REQUIRE(r.code == 0);
      std::vector<double> m;
      const auto lines = csv_lines(r.out);
      for (std::size_t i = 1; i < lines.size(); ++i) {
        m.push_back(std::stod(lines[i].substr(lines[i].find(',') + 1)));
      }
      return m;
    };
    const auto a = means("1");
    const auto b = means("2");
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      CHECK((a[i] < a[i + 1]) == (b[i] < b[i + 1]));
    }
  }
}
