#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "purephase/errors.hpp"
#include "purephase/report.hpp"

namespace purephase::cli {

namespace {

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || !std::isfinite(v)) {
    throw UsageError{key + ": not a number: '" + s + "'"};
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) {
    throw UsageError{key + ": not a non-negative integer: '" + s + "'"};
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") {
    return true;
  }
  if (s == "false" || s == "0") {
    return false;
  }
  throw UsageError{key + ": expected true or false, got '" + s + "'"};
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) {
    throw UsageError{key + " must be positive"};
  }
  return v;
}

}  // namespace

std::string RunConfig::hash() const { return config_hash(values); }

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> d{
      {"sigma_plus", "286"},
      {"sigma_minus", "13"},
      {"crystal_length", ""},
      {"pump_index", ""},
      {"pump_wavelength", "0.405"},
      {"wavelength", "0.81"},
      {"f", "100000"},
      {"f2", "150000"},
      {"f3", "125000"},
      {"f_m", "150000"},
      {"magnifications", "0.5,0.75,1,1.25,1.5,2,2.5,3"},
      {"frames", "100000"},
      {"mode", "1d"},
      {"pixel_pitch", "0"},
      {"detector_width", "256"},
      {"detector_height", "16"},
      {"pair_rate", "2"},
      {"dark_count_prob", "0"},
      {"binary", "true"},
      {"keep_unsplit", "true"},
      {"rate_jitter", "0.5"},
      {"dark_order", "sum_then_correlate"},
      {"wavelet_order", "4"},
      {"decomp_level", "2"},
      {"psd_threshold", "0.95"},
      {"lowpass_cutoff", "0.25"},
      {"kde_bandwidth", "1.5"},
      {"highpass", "hard"},
      {"seed", "1"},
      {"out", "out"},
  };
  return d;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string::npos) {
      end = s.size();
    }
    std::string item = s.substr(start, end - start);
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    item = b == std::string::npos ? std::string{} : item.substr(b, e - b + 1);
    if (!item.empty()) {
      out.push_back(to_double("magnifications", item));
    }
    start = end + 1;
  }
  return out;
}

RunConfig resolve_config(const std::map<std::string, std::string>& file,
                         const std::map<std::string, std::string>& overrides) {
  auto kv = default_values();
  std::map<std::string, bool> explicit_key;
  for (const auto* layer : {&file, &overrides}) {
    for (const auto& [k, v] : *layer) {
      if (!kv.count(k)) {
        throw UsageError{"unknown config key '" + k + "'"};
      }
      kv[k] = v;
      explicit_key[k] = true;
    }
  }

  RunConfig c;
  c.source.sigma_plus = positive("sigma_plus", to_double("sigma_plus", kv["sigma_plus"]));
  c.pump_wavelength = positive("pump_wavelength", to_double("pump_wavelength", kv["pump_wavelength"]));
  if (!kv["crystal_length"].empty()) {
    if (explicit_key["sigma_minus"]) {
      throw UsageError{"give either sigma_minus or crystal_length, not both"};
    }
    if (kv["pump_index"].empty()) {
      throw UsageError{"crystal_length needs pump_index"};
    }
    const double len = positive("crystal_length", to_double("crystal_length", kv["crystal_length"]));
    const double n = positive("pump_index", to_double("pump_index", kv["pump_index"]));
    c.source.sigma_minus = sigma_minus_from_crystal(len, c.pump_wavelength, n);
    kv["sigma_minus"] = format_double(c.source.sigma_minus);
  } else {
    c.source.sigma_minus = positive("sigma_minus", to_double("sigma_minus", kv["sigma_minus"]));
  }
  c.wavelength = positive("wavelength", to_double("wavelength", kv["wavelength"]));
  c.f = positive("f", to_double("f", kv["f"]));
  c.f2 = positive("f2", to_double("f2", kv["f2"]));
  c.f3 = positive("f3", to_double("f3", kv["f3"]));
  c.f_m = positive("f_m", to_double("f_m", kv["f_m"]));

  c.magnifications = parse_list(kv["magnifications"]);
  if (c.magnifications.empty()) {
    throw UsageError{"magnification list is empty"};
  }
  for (double m : c.magnifications) {
    positive("magnification", m);
  }

  c.frames = to_uint("frames", kv["frames"]);
  if (c.frames < 2) {
    throw UsageError{"frames must be at least 2"};
  }
  if (kv["mode"] != "1d" && kv["mode"] != "2d") {
    throw UsageError{"mode must be 1d or 2d"};
  }
  c.two_d = kv["mode"] == "2d";

  auto& det = c.detector;
  det.pixel_pitch = to_double("pixel_pitch", kv["pixel_pitch"]);
  if (det.pixel_pitch < 0.0) {
    throw UsageError{"pixel_pitch must be >= 0 (0 picks one per density)"};
  }
  det.width = to_uint("detector_width", kv["detector_width"]);
  det.height = c.two_d ? to_uint("detector_height", kv["detector_height"]) : 1;
  det.mean_pair_rate = to_double("pair_rate", kv["pair_rate"]);
  det.dark_count_prob = to_double("dark_count_prob", kv["dark_count_prob"]);
  det.clip_to_binary = to_bool("binary", kv["binary"]);
  det.keep_unsplit = to_bool("keep_unsplit", kv["keep_unsplit"]);
  det.rate_jitter = to_double("rate_jitter", kv["rate_jitter"]);
  c.seed = to_uint("seed", kv["seed"]);
  det.seed = c.seed;
  {
    // Geometry, rate and dark checks with a stand-in pitch.
    DetectorConfig probe = det;
    probe.pixel_pitch = det.pixel_pitch > 0.0 ? det.pixel_pitch : 1.0;
    try {
      probe.validate();
    } catch (const DomainError& e) {
      throw UsageError{e.what()};
    }
  }

  if (kv["dark_order"] == "sum_then_correlate") {
    c.dark_order = DarkOrder::sum_then_correlate;
  } else if (kv["dark_order"] == "suppress_then_sum") {
    c.dark_order = DarkOrder::suppress_then_sum;
  } else {
    throw UsageError{"dark_order must be sum_then_correlate or suppress_then_sum"};
  }

  auto& cl = c.cleaning;
  cl.wavelet_order = static_cast<int>(to_uint("wavelet_order", kv["wavelet_order"]));
  cl.decomp_level = static_cast<int>(to_uint("decomp_level", kv["decomp_level"]));
  cl.psd_threshold = to_double("psd_threshold", kv["psd_threshold"]);
  cl.lowpass_cutoff = to_double("lowpass_cutoff", kv["lowpass_cutoff"]);
  cl.kde_bandwidth = to_double("kde_bandwidth", kv["kde_bandwidth"]);
  if (kv["highpass"] == "hard") {
    cl.highpass = HighPassShape::hard;
  } else if (kv["highpass"] == "gaussian") {
    cl.highpass = HighPassShape::gaussian;
  } else {
    throw UsageError{"highpass must be hard or gaussian"};
  }
  try {
    cl.validate(det.width, det.width);
  } catch (const DomainError& e) {
    throw UsageError{e.what()};
  }

  c.out = kv["out"];
  if (c.out.empty()) {
    throw UsageError{"out must not be empty"};
  }
  kv.erase("out");
  c.values = std::move(kv);
  return c;
}

RunConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> file;
  if (!path.empty()) {
    std::ifstream is{path};
    if (!is) {
      throw UsageError{"cannot read config file " + path};
    }
    try {
      file = parse_key_values(is);
    } catch (const FormatError& e) {
      throw UsageError{path + ": " + e.what()};
    }
  }
  return resolve_config(file, overrides);
}

}  // namespace purephase::cli
