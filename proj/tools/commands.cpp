#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "purephase/denoise.hpp"
#include "purephase/errors.hpp"
#include "purephase/estimation.hpp"
#include "purephase/fitting.hpp"
#include "purephase/frames.hpp"
#include "purephase/optics.hpp"
#include "purephase/report.hpp"

namespace purephase::cli {

namespace fs = std::filesystem;

namespace {

fs::path out_dir(const RunConfig& cfg) {
  fs::path p{cfg.out};
  fs::create_directories(p);
  return p;
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream os{p, binary ? std::ios::binary : std::ios::out};
  if (!os) {
    throw UsageError{"cannot write " + p.string()};
  }
  return os;
}

void emit(const fs::path& path, const RunConfig& cfg, const Report& r, std::ostream& log) {
  auto os = open_out(path);
  os << "# config_hash=" << cfg.hash() << '\n';
  r.write(os);
  log << "# " << path.string() << '\n';
  r.write(log);
}

void write_density(const fs::path& dir, const std::string& stem, const Density2D& d, const RunConfig& cfg) {
  auto csv = open_out(dir / (stem + ".csv"));
  write_csv(csv, d, cfg.hash());
  auto pgm = open_out(dir / (stem + ".pgm"), true);
  write_pgm(pgm, d, cfg.hash());
}

Density2D read_density(const fs::path& p, const RunConfig& cfg) {
  std::ifstream is{p};
  if (!is) {
    throw UsageError{"missing input " + p.string() + " (run the previous step first)"};
  }
  auto f = read_csv(is);
  if (f.config_hash != cfg.hash()) {
    throw UsageError{p.string() + " was written with config " + f.config_hash + ", current is " + cfg.hash()};
  }
  return f.density;
}

PrepDesign design(const RunConfig& cfg) {
  return PrepDesign::make(cfg.f, cfg.f2, cfg.f3, phase_plane_distance(cfg.source, cfg.wavelength));
}

MeasurementQuadratic prediction(const RunConfig& cfg, const PrepDesign& d, double magnification) {
  return measurement_quadratic(p3_scaled_params(cfg.source, d), cfg.f_m, -magnification, cfg.wavelength);
}

double pitch_for(const RunConfig& cfg, const Bivariate& cov) {
  return cfg.detector.pixel_pitch > 0.0 ? cfg.detector.pixel_pitch : auto_pitch(cov, cfg.detector.width);
}

/// Sub-seed of stream `k` of a command so that runs per magnification never share frames.
std::uint64_t stream_seed(const RunConfig& cfg, std::uint64_t k) { return splitmix64(cfg.seed * 0x100 + k); }

std::string hash_of_file(const fs::path& p) {
  std::ifstream is{p};
  std::string line;
  const std::string key = "config_hash=";
  while (std::getline(is, line)) {
    const auto pos = line.find(key);
    if (pos != std::string::npos) {
      return line.substr(pos + key.size());
    }
    if (!line.empty() && line[0] != '#' && line.find('=') == std::string::npos) {
      break;
    }
  }
  return {};
}

}  // namespace

std::string mag_tag(double magnification) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "m%.2f", magnification);
  std::string s{buf};
  for (char& c : s) {
    if (c == '.') {
      c = 'p';
    }
  }
  return s;
}

unsigned thread_count() {
  if (const char* env = std::getenv("PUREPHASE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) {
      return static_cast<unsigned>(v);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void cmd_calibrate(const RunConfig& cfg, std::ostream& log) {
  const auto dir = out_dir(cfg);
  const auto& p = cfg.source;
  DetectorConfig det = cfg.detector;

  det.pixel_pitch = pitch_for(cfg, nearfield_covariance(p));
  det.seed = stream_seed(cfg, 1);
  const auto near = synthesize_nearfield(p, det, cfg.frames, thread_count());
  const auto cal_m = calibrate_sigma_minus(near);

  det.pixel_pitch = pitch_for(cfg, farfield_covariance(p, cfg.wavelength, cfg.f));
  det.seed = stream_seed(cfg, 2);
  const auto far = synthesize_farfield(p, cfg.wavelength, cfg.f, det, cfg.frames, thread_count());
  const auto cal_p = calibrate_sigma_plus(far, cfg.wavelength, cfg.f);

  const DGParams est{cal_p.sigma, cal_m.sigma};
  const auto nominal = pure_phase_params(est);
  const auto exact = phase_plane_params(est);
  Report r;
  r.add("config_hash", cfg.hash());
  r.add("frames", cfg.frames);
  r.add("sigma_minus_true", p.sigma_minus);
  r.add("sigma_minus_hat", cal_m.sigma);
  r.add("sigma_minus_snr", cal_m.snr);
  r.add("sigma_plus_true", p.sigma_plus);
  r.add("sigma_plus_hat", cal_p.sigma);
  r.add("sigma_plus_snr", cal_p.snr);
  r.add("z_p", phase_plane_distance(est, cfg.wavelength));
  r.add("A", nominal.A);
  r.add("A_phase_plane", exact.A);
  r.add("B", nominal.B);
  r.add("K", schmidt_number(est));
  r.add("N", birth_zone_number(est));
  emit(dir / "calibrate.txt", cfg, r, log);
}

void cmd_predict(const RunConfig& cfg, std::ostream& log) {
  const auto dir = out_dir(cfg);
  const auto d = design(cfg);
  Report r;
  r.add("config_hash", cfg.hash());
  r.add("z_p", d.z_p());
  r.add("meff", d.meff());
  const std::size_t w = cfg.detector.width;
  for (double m : cfg.magnifications) {
    const auto q = prediction(cfg, d, m);
    const double pitch = pitch_for(cfg, q.covariance());
    const Axis a0 = Axis::centered("x_k", w, pitch);
    const Axis a1 = Axis::centered("x_p", w, pitch);
    auto rho = Density2D::zeros(a0, a1);
    for (std::size_t i = 0; i < w; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        rho.at(i, j) = q.density(a0.coord(i), a1.coord(j));
      }
    }
    write_density(dir, "predict_" + mag_tag(m), rho.normalized(), cfg);
    const auto t = tilt_angle(q);
    r.add("theta_" + mag_tag(m), t.defined ? format_double(t.degrees) : std::string{"undefined"});
  }

  // Dense curve over the configured range for plotting.
  double lo = cfg.magnifications.front();
  double hi = lo;
  for (double m : cfg.magnifications) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  lo = std::min(lo, 0.1);
  hi = std::max(hi, 5.0);
  std::vector<double> ms;
  for (int k = 0; k <= 200; ++k) {
    ms.push_back(lo * std::pow(hi / lo, k / 200.0));
  }
  auto os = open_out(dir / "theta_curve.csv");
  os << "# config_hash=" << cfg.hash() << '\n' << "magnification,theta_deg\n";
  for (double m : ms) {
    os << format_double(m) << ',' << format_double(tilt_angle(prediction(cfg, d, m)).degrees) << '\n';
  }
  emit(dir / "predict.txt", cfg, r, log);
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const auto dir = out_dir(cfg);
  const auto d = design(cfg);
  Report r;
  r.add("config_hash", cfg.hash());
  r.add("frames", cfg.frames);
  for (std::size_t k = 0; k < cfg.magnifications.size(); ++k) {
    const double m = cfg.magnifications[k];
    const auto q = prediction(cfg, d, m);
    DetectorConfig det = cfg.detector;
    det.pixel_pitch = pitch_for(cfg, q.covariance());
    det.seed = stream_seed(cfg, 16 + k);
    auto stack = synthesize_frames(q, det, cfg.frames, thread_count());
    stack.metadata["config_hash"] = cfg.hash();
    stack.metadata["magnification"] = format_double(m);
    write_ppf(stack, (dir / ("frames_" + mag_tag(m) + ".ppf")).string());
    r.add("occupancy_" + mag_tag(m), stack.mean_occupancy(0));
    if (stack.mean_occupancy(0) > kOccupancyWarning) {
      log << "warning: " << mag_tag(m) << " occupancy " << stack.mean_occupancy(0)
          << " is high enough to lose coincidences to clipping\n";
    }
  }
  emit(dir / "simulate.txt", cfg, r, log);
}

void cmd_estimate(const RunConfig& cfg, std::ostream& log) {
  const auto dir = out_dir(cfg);
  EstimationOptions opt;
  opt.dark_order = cfg.dark_order;
  opt.dark_level = cfg.detector.dark_count_prob;
  Report r;
  r.add("config_hash", cfg.hash());
  for (double m : cfg.magnifications) {
    const auto path = dir / ("frames_" + mag_tag(m) + ".ppf");
    if (!fs::exists(path)) {
      throw UsageError{"missing input " + path.string() + " (run simulate first)"};
    }
    const auto stack = read_ppf(path.string());
    const auto it = stack.metadata.find("config_hash");
    if (it == stack.metadata.end() || it->second != cfg.hash()) {
      throw UsageError{path.string() + " was written with a different config"};
    }
    const auto rho = estimate_density(stack, opt);
    write_density(dir, "density_" + mag_tag(m), rho, cfg);
    r.add("frames_" + mag_tag(m), stack.size());
  }
  emit(dir / "estimate.txt", cfg, r, log);
}

void cmd_clean(const RunConfig& cfg, std::ostream& log) {
  const auto dir = out_dir(cfg);
  Report r;
  r.add("config_hash", cfg.hash());
  for (double m : cfg.magnifications) {
    const auto rho = read_density(dir / ("density_" + mag_tag(m) + ".csv"), cfg);
    CleaningDiagnostics diag;
    const auto cleaned = clean_density(rho, cfg.cleaning, &diag);
    write_density(dir, "clean_" + mag_tag(m), cleaned, cfg);
    r.add("marginal_cutoff_" + mag_tag(m), diag.marginal_cutoff);
    r.add("density_cutoff_" + mag_tag(m), diag.density_cutoff);
  }
  emit(dir / "clean.txt", cfg, r, log);
}

void cmd_fit(const RunConfig& cfg, std::ostream& log) {
  const auto dir = out_dir(cfg);
  const auto d = design(cfg);
  Report r;
  r.add("config_hash", cfg.hash());
  std::vector<TiltPoint> points;
  auto table = open_out(dir / "tilt.csv");
  table << "# config_hash=" << cfg.hash() << '\n'
        << "magnification,theta_pred_deg,theta_fit_deg,abs_theta_pred_deg,abs_theta_fit_deg\n";
  for (double m : cfg.magnifications) {
    const auto rho = read_density(dir / ("clean_" + mag_tag(m) + ".csv"), cfg);
    const auto fit = fit_gaussian_2d(rho);
    const double pred = tilt_angle(prediction(cfg, d, m)).degrees;
    const double got = fit.tilt().degrees;
    points.push_back(TiltPoint{m, got});
    r.add("theta_fit_" + mag_tag(m), got);
    r.add("theta_pred_" + mag_tag(m), pred);
    r.add("fit_rms_" + mag_tag(m), fit.residual_rms);
    write_density(dir, "residual_" + mag_tag(m), fit_residuals(rho, fit), cfg);
    table << format_double(m) << ',' << format_double(pred) << ',' << format_double(got) << ','
          << format_double(std::abs(pred)) << ',' << format_double(std::abs(got)) << '\n';
  }
  r.add("meff_design", d.meff());
  if (points.size() >= 3) {
    const CurveModel model{phase_plane_params(cfg.source), cfg.f_m, cfg.wavelength};
    const auto cf = fit_magnification_curve(points, model);
    r.add("meff_fit", cf.meff);
    r.add("meff_rel_error", std::abs(cf.meff - d.meff()) / d.meff());
    r.add("curve_rms_deg", cf.rms_deg);
  } else {
    log << "note: the Meff fit needs at least three magnifications\n";
  }
  emit(dir / "fit.txt", cfg, r, log);
}

void cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  std::ostringstream quiet;
  cmd_simulate(cfg, quiet);
  cmd_estimate(cfg, quiet);
  cmd_clean(cfg, quiet);
  cmd_fit(cfg, log);
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
  const auto dir = out_dir(cfg);
  std::vector<std::string> names{"calibrate.txt", "predict.txt", "theta_curve.csv", "simulate.txt",
                                 "estimate.txt",  "clean.txt",   "fit.txt",         "tilt.csv"};
  for (double m : cfg.magnifications) {
    for (const char* stem : {"predict_", "density_", "clean_"}) {
      names.push_back(stem + mag_tag(m) + ".csv");
    }
  }
  Report r;
  r.add("config_hash", cfg.hash());
  std::size_t missing = 0, stale = 0;
  for (const auto& n : names) {
    const auto p = dir / n;
    std::string status = "missing";
    if (fs::exists(p)) {
      status = hash_of_file(p) == cfg.hash() ? "ok" : "stale";
    }
    missing += status == "missing";
    stale += status == "stale";
    r.add("artifact:" + n, status);
  }
  r.add("missing", missing);
  r.add("stale", stale);
  if (fs::exists(dir / "fit.txt") && hash_of_file(dir / "fit.txt") == cfg.hash()) {
    std::ifstream is{dir / "fit.txt"};
    for (const auto& [k, v] : parse_key_values(is)) {
      if (k != "config_hash") {
        r.add(k, v);
      }
    }
  }
  emit(dir / "report.txt", cfg, r, log);
}

const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v{"calibrate", "predict", "simulate", "estimate",
                                          "clean",     "fit",     "sweep",    "report"};
  return v;
}

void run_verb(const std::string& verb, const RunConfig& cfg, std::ostream& log) {
  if (verb == "calibrate") {
    cmd_calibrate(cfg, log);
  } else if (verb == "predict") {
    cmd_predict(cfg, log);
  } else if (verb == "simulate") {
    cmd_simulate(cfg, log);
  } else if (verb == "estimate") {
    cmd_estimate(cfg, log);
  } else if (verb == "clean") {
    cmd_clean(cfg, log);
  } else if (verb == "fit") {
    cmd_fit(cfg, log);
  } else if (verb == "sweep") {
    cmd_sweep(cfg, log);
  } else if (verb == "report") {
    cmd_report(cfg, log);
  } else {
    throw UsageError{"unknown command '" + verb + "'"};
  }
}

}  // namespace purephase::cli
