#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "divswap/error.hpp"
#include "divswap/feature_map.hpp"
#include "divswap/file_util.hpp"
#include "test_support.hpp"

using namespace divswap;
using divswap::testing::TempDir;

namespace {

void write_raw(const std::filesystem::path& p, std::vector<std::uint8_t> bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> header(const char magic[4], std::uint8_t version,
                                 std::uint32_t c, std::uint32_t h, std::uint32_t w) {
  std::vector<std::uint8_t> b(magic, magic + 4);
  b.push_back(version);
  for (std::uint32_t v : {c, h, w}) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return b;
}

}  // namespace

TEST_CASE("FeatureMap rejects bad shapes and non-finite values") {
  CHECK_THROWS_AS(FeatureMap(0, 1, 1, {}), DimensionError);
  CHECK_THROWS_AS(FeatureMap(1, 2, 2, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(FeatureMap(1, 1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()}),
                  ValidationError);
  CHECK_THROWS_AS(FeatureMap(1, 1, 1, {std::numeric_limits<float>::infinity()}),
                  ValidationError);

  FeatureMap m(2, 1, 2, {1, -2, 3, 4});
  CHECK(m.at(1, 0, 1) == 4.0f);
  CHECK_THROWS_AS(m.require_non_negative(), ValidationError);
  CHECK_NOTHROW(FeatureMap(1, 1, 2, {0, 3}).require_non_negative());
}

TEST_CASE("minimal dsfm file loads") {
  TempDir dir("fm_min");
  auto bytes = header("DSFM", 1, 1, 1, 1);
  bytes.insert(bytes.end(), {0, 0, 0, 0});
  write_raw(dir / "min.dsfm", bytes);
  const FeatureMap m = load_feature_map(dir / "min.dsfm");
  CHECK(m == FeatureMap(1, 1, 1, {0.0f}));
}

TEST_CASE("malformed dsfm files are format errors") {
  TempDir dir("fm_bad");
  SUBCASE("bad magic") {
    auto bytes = header("XSFM", 1, 1, 1, 1);
    bytes.insert(bytes.end(), 4, 0);
    write_raw(dir / "f.dsfm", bytes);
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), FormatError);
  }
  SUBCASE("bad version") {
    auto bytes = header("DSFM", 2, 1, 1, 1);
    bytes.insert(bytes.end(), 4, 0);
    write_raw(dir / "f.dsfm", bytes);
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), FormatError);
  }
  SUBCASE("truncated payload") {
    auto bytes = header("DSFM", 1, 2, 2, 2);
    bytes.insert(bytes.end(), 31, 0);
    write_raw(dir / "f.dsfm", bytes);
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), FormatError);
  }
  SUBCASE("trailing bytes") {
    auto bytes = header("DSFM", 1, 1, 1, 1);
    bytes.insert(bytes.end(), 5, 0);
    write_raw(dir / "f.dsfm", bytes);
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), FormatError);
  }
  SUBCASE("short header") {
    write_raw(dir / "f.dsfm", {'D', 'S', 'F', 'M', 1});
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), FormatError);
  }
  SUBCASE("zero dimension") {
    write_raw(dir / "f.dsfm", header("DSFM", 1, 0, 4, 4));
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), FormatError);
  }
  SUBCASE("huge dimensions do not overflow the size check") {
    auto bytes = header("DSFM", 1, 0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu);
    bytes.insert(bytes.end(), 4, 0);
    write_raw(dir / "f.dsfm", bytes);
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), FormatError);
  }
  SUBCASE("NaN payload") {
    auto bytes = header("DSFM", 1, 1, 1, 1);
    bytes.insert(bytes.end(), {0x00, 0x00, 0xC0, 0x7F});
    write_raw(dir / "f.dsfm", bytes);
    CHECK_THROWS_AS(load_feature_map(dir / "f.dsfm"), ValidationError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_feature_map(dir / "nope.dsfm"), IoError);
  }
}

TEST_CASE("save writes the exact byte layout") {
  TempDir dir("fm_save");
  save_feature_map(FeatureMap(1, 1, 1, {0.0f}), dir / "a.dsfm");
  CHECK(std::filesystem::file_size(dir / "a.dsfm") == 21);

  const FeatureMap m(1, 1, 2, {1.0f, -2.5f});
  const auto bytes = encode_feature_map(m);
  const std::vector<std::uint8_t> expected = {
      'D', 'S', 'F', 'M', 0x01,
      1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,
      0x00, 0x00, 0x80, 0x3F,   // 1.0f
      0x00, 0x00, 0x20, 0xC0};  // -2.5f
  CHECK(bytes == expected);

  save_feature_map(m, dir / "b.dsfm");
  save_feature_map(m, dir / "c.dsfm");
  CHECK(read_file_bytes(dir / "b.dsfm") == read_file_bytes(dir / "c.dsfm"));
  CHECK_FALSE(std::filesystem::exists(dir / "b.dsfm.tmp"));
}

TEST_CASE("save to an unwritable path is an I/O error") {
  CHECK_THROWS_AS(save_feature_map(FeatureMap(1, 1, 1, {0.0f}),
                                   "/nonexistent_dir_divswap/x.dsfm"),
                  IoError);
}

TEST_CASE("property: load(save(m)) is bit-exact") {
  TempDir dir("fm_rt");
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 7);
    const std::size_t c = trial == 0 ? 4 : dim(rng);
    const std::size_t h = trial == 0 ? 6 : dim(rng);
    const std::size_t w = trial == 0 ? 6 : dim(rng);
    // Mix of magnitudes, signs, subnormals and signed zeros.
    std::uniform_int_distribution<std::uint32_t> bits(0, 0xFFFFFFFFu);
    std::vector<float> values(c * h * w);
    for (float& x : values) {
      float candidate;
      do {
        candidate = std::bit_cast<float>(bits(rng));
      } while (!std::isfinite(candidate));
      x = candidate;
    }
    const FeatureMap m(c, h, w, values);
    save_feature_map(m, dir / "rt.dsfm");
    const FeatureMap back = load_feature_map(dir / "rt.dsfm");
    REQUIRE(back.same_shape(m));
    CHECK(std::equal(m.values().begin(), m.values().end(), back.values().begin(),
                     [](float a, float b) {
                       return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
                     }));
  }
}

TEST_CASE("channel_l2_map") {
  SUBCASE("3-4-5") {
    const Plane p = channel_l2_map(FeatureMap(2, 1, 1, {3, 4}));
    REQUIRE(p.values.size() == 1);
    CHECK(p.at(0, 0) == doctest::Approx(5.0));
  }
  SUBCASE("zero map") {
    const Plane p = channel_l2_map(FeatureMap::zeros(3, 2, 2));
    CHECK(std::all_of(p.values.begin(), p.values.end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("single channel is absolute value") {
    const Plane p = channel_l2_map(FeatureMap(1, 1, 3, {-2, 0, 1.5f}));
    CHECK(p.values == std::vector<double>{2.0, 0.0, 1.5});
  }
}

TEST_CASE("property: channel_l2_map non-negativity, permutation and homogeneity") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureMap m = divswap::testing::random_map(rng, 5, 4, 3);
    const Plane base = channel_l2_map(m);
    CHECK(std::all_of(base.values.begin(), base.values.end(), [](double v) { return v >= 0.0; }));

    std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    std::vector<float> permuted;
    for (std::size_t c : perm) {
      const auto ch = m.channel(c);
      permuted.insert(permuted.end(), ch.begin(), ch.end());
    }
    const Plane p = channel_l2_map(FeatureMap(5, 4, 3, permuted));
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      CHECK(p.values[i] == doctest::Approx(base.values[i]).epsilon(1e-12));
    }

    for (float lambda : {-3.0f, 0.25f, 7.5f}) {
      const Plane s = channel_l2_map(divswap::testing::scaled(m, lambda));
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        CHECK(s.values[i] == doctest::Approx(std::abs(lambda) * base.values[i]).epsilon(1e-6));
      }
    }
  }
}
