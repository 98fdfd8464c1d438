#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "purephase/density.hpp"
#include "purephase/errors.hpp"
#include "purephase/frames.hpp"
#include "purephase/report.hpp"

using namespace purephase;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "purephase_test_formats";
  fs::create_directories(dir);
  return dir / name;
}

Density2D ramp() {
  Axis a0{"x_k", 3, -10.5, 2.25};
  Axis a1{"x_p", 4, 0.1, 1.0 / 3.0};
  std::vector<double> v;
  for (int k = 0; k < 12; ++k) v.push_back(std::sin(0.7 * k) * 1e-5 + (k == 5 ? -3e-7 : 0.0));
  return {a0, a1, v};
}

FrameStack sample_stack(bool binary, std::size_t height) {
  FrameGeometry g;
  g.width = 13;
  g.height = height;
  g.pitch = 7.5;
  FrameStack s{g, binary, 42};
  std::mt19937_64 rng{3};
  for (int f = 0; f < 40; ++f) {
    std::vector<std::vector<Hit>> arms(2);
    for (auto& a : arms) {
      for (int h = 0; h < 4; ++h) {
        a.push_back(Hit{static_cast<std::uint32_t>(rng() % g.pixels()), static_cast<std::uint16_t>(1 + rng() % 3)});
      }
    }
    s.push_frame(std::move(arms));
  }
  s.metadata["config_hash"] = "00ff00ff00ff00ff";
  s.metadata["magnification"] = "0.75";
  return s;
}

void check_same(const FrameStack& a, const FrameStack& b) {
  REQUIRE(a.size() == b.size());
  CHECK(a.binary() == b.binary());
  CHECK(a.seed() == b.seed());
  CHECK(a.geometry().width == b.geometry().width);
  CHECK(a.geometry().height == b.geometry().height);
  CHECK(a.geometry().pitch == b.geometry().pitch);
  for (std::size_t f = 0; f < a.size(); ++f) {
    for (std::size_t arm = 0; arm < 2; ++arm) {
      const auto x = a.image(f, arm);
      const auto y = b.image(f, arm);
      REQUIRE(x.size() == y.size());
      for (std::size_t k = 0; k < x.size(); ++k) {
        CHECK(x[k].pixel == y[k].pixel);
        CHECK(x[k].count == y[k].count);
      }
    }
  }
}

std::uint64_t fnv_reference(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

TEST_CASE("density CSV round trip is exact") {
  const auto d = ramp();
  std::stringstream ss;
  write_csv(ss, d, "0123456789abcdef");
  const auto back = read_csv(ss);
  CHECK(back.config_hash == "0123456789abcdef");
  CHECK(back.density.axis0().name == "x_k");
  CHECK(back.density.axis1().n == 4);
  CHECK(back.density.axis1().pitch == d.axis1().pitch);
  CHECK(back.density.axis0().origin == d.axis0().origin);
  for (std::size_t k = 0; k < 12; ++k) CHECK(back.density.values()[k] == d.values()[k]);

  std::stringstream bad{"# config_hash=x\nfoo\n"};
  CHECK_THROWS_AS(read_csv(bad), FormatError);
}

TEST_CASE("PGM scaling and header") {
  const auto d = ramp();
  std::stringstream ss;
  write_pgm(ss, d, "abc");
  const auto img = read_pgm(ss);
  CHECK(img.width == 4);
  CHECK(img.height == 3);
  CHECK(img.maxval == 65535);
  double peak = 0.0;
  for (double v : d.values()) peak = std::max(peak, v);
  for (std::size_t k = 0; k < 12; ++k) {
    const double expect = std::max(d.values()[k], 0.0) / peak * 65535.0;
    CHECK(std::abs(img.pixels[k] - expect) <= 0.5 + 1e-9);
  }
  std::stringstream bad{"P2\n1 1\n255\n0\n"};
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
}

TEST_CASE("PPF1 round trips in both encodings with metadata") {
  for (bool binary : {true, false}) {
    for (std::size_t height : {std::size_t{1}, std::size_t{3}}) {
      const auto s = sample_stack(binary, height);
      const auto path = scratch("stack.ppf").string();
      write_ppf(s, path);
      const auto back = read_ppf(path);
      check_same(s, back);
      CHECK(back.metadata == s.metadata);
    }
  }
}

TEST_CASE("PPF1 rejects corrupt files") {
  const auto path = scratch("corrupt.ppf").string();
  write_ppf(sample_stack(true, 1), path);
  {
    // Set the 2D flag on a one-row file: flags sit after magic, 3 u32, f64 and u64.
    std::fstream f{path, std::ios::in | std::ios::out | std::ios::binary};
    f.seekp(32);
    const char flags = 3;
    f.write(&flags, 1);
  }
  CHECK_THROWS_AS(read_ppf(path), FormatError);

  write_ppf(sample_stack(false, 1), path);
  fs::resize_file(path, fs::file_size(path) - 5);
  CHECK_THROWS_AS(read_ppf(path), FormatError);

  std::ofstream{path, std::ios::binary} << "PPF0garbage";
  CHECK_THROWS_AS(read_ppf(path), FormatError);
  CHECK_THROWS_AS(read_ppf(scratch("missing.ppf").string()), FormatError);
}

TEST_CASE("key=value parsing") {
  std::stringstream ok{"# comment\n\nsigma_plus = 286\nmode=2d\n"};
  const auto kv = parse_key_values(ok);
  CHECK(kv.at("sigma_plus") == "286");
  CHECK(kv.at("mode") == "2d");
  std::stringstream dup{"a=1\na=2\n"};
  CHECK_THROWS_AS(parse_key_values(dup), FormatError);
  std::stringstream noeq{"just words\n"};
  CHECK_THROWS_AS(parse_key_values(noeq), FormatError);
  std::stringstream nokey{"=3\n"};
  CHECK_THROWS_AS(parse_key_values(nokey), FormatError);

  Report r;
  r.add("theta", -68.25);
  r.add("frames", std::size_t{100000});
  r.add("binary", true);
  std::stringstream out;
  r.write(out);
  const auto parsed = parse_key_values(out);
  CHECK(parsed.at("theta") == "-68.25");
  CHECK(parsed.at("frames") == "100000");
  CHECK(parsed.at("binary") == "true");
}

TEST_CASE("hashing and number formatting") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  const std::map<std::string, std::string> kv{{"b", "2"}, {"a", "1"}};
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << fnv_reference("a=1\nb=2\n");
  CHECK(config_hash(kv) == hex.str());
  CHECK(config_hash(kv) != config_hash({{"a", "1"}, {"b", "3"}}));

  std::mt19937_64 g{17};
  std::uniform_real_distribution<double> u{-300.0, 300.0};
  for (int k = 0; k < 2000; ++k) {
    const double v = std::pow(10.0, u(g) / 10.0) * (k % 2 ? -1.0 : 1.0);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1e5) == "1e+05");
}
