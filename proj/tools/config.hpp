#pragma once

// Run configuration: a flat key=value file plus command-line overrides,
// resolved into typed parameters.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "purephase/biphoton.hpp"
#include "purephase/denoise.hpp"
#include "purephase/estimation.hpp"
#include "purephase/frames.hpp"

namespace purephase::cli {

/// Bad command line or configuration; main maps it to exit status 2.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error{what} {}
};

struct RunConfig {
  DGParams source{286.0, 13.0};
  double wavelength = 0.81;       // signal/idler (um)
  double pump_wavelength = 0.405;
  double f = 1e5;
  double f2 = 1.5e5;
  double f3 = 1.25e5;
  double f_m = 1.5e5;
  /// |M_m| of the imaging arm; the imaging is inverting, so M_m = -value.
  std::vector<double> magnifications{0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0};

  DetectorConfig detector;  // pixel_pitch 0 picks a pitch per density
  std::size_t frames = 100000;
  bool two_d = false;
  DarkOrder dark_order = DarkOrder::sum_then_correlate;
  CleaningConfig cleaning;

  std::string out = "out";
  std::uint64_t seed = 1;

  /// Every resolved key except the output directory, as written.
  std::map<std::string, std::string> values;

  std::string hash() const;
};

/// Keys a config file may set, with their default values.
const std::map<std::string, std::string>& default_values();

/// Defaults, then `file` entries, then `overrides`. Unknown keys and
/// out-of-domain values raise UsageError.
RunConfig resolve_config(const std::map<std::string, std::string>& file,
                         const std::map<std::string, std::string>& overrides);

RunConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides);

/// "0.5,0.75" -> {0.5, 0.75}.
std::vector<double> parse_list(const std::string& s);

}  // namespace purephase::cli
