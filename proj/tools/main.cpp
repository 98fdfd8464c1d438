#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

int main(int argc, char** argv) {
  using namespace purephase::cli;

  CLI::App app{"Pure phase entangled state pipeline: prediction, simulation, estimation, cleaning and fitting."};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string seed, out, frames, mags, mode;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--frames", frames, "frames per stack");
  app.add_option("--mag", mags, "comma-separated |M_m| list");
  app.add_option("--mode", mode, "1d or 2d detectors")->check(CLI::IsMember({"1d", "2d"}));
  for (const auto& v : verbs()) {
    app.add_subcommand(v)->fallthrough();
  }
  app.fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::map<std::string, std::string> overrides;
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) {
      overrides[key] = v;
    }
  };
  set("seed", seed);
  set("out", out);
  set("frames", frames);
  set("mode", mode);
  if (app.count("--mag")) {
    // An explicitly empty list must reach the validator.
    overrides["magnifications"] = mags;
  }

  try {
    const auto cfg = load_config(config_path, overrides);
    run_verb(app.get_subcommands().front()->get_name(), cfg, std::cout);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
