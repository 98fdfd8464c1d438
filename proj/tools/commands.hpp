#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace purephase::cli {

/// File-name tag of a magnification: 0.75 -> "m0p75".
std::string mag_tag(double magnification);

/// Worker threads: PUREPHASE_THREADS if set, else the hardware count.
unsigned thread_count();

// Each command writes its artifacts under cfg.out and echoes its report on `log`.
void cmd_calibrate(const RunConfig& cfg, std::ostream& log);
void cmd_predict(const RunConfig& cfg, std::ostream& log);
void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_estimate(const RunConfig& cfg, std::ostream& log);
void cmd_clean(const RunConfig& cfg, std::ostream& log);
void cmd_fit(const RunConfig& cfg, std::ostream& log);
/// simulate, estimate, clean and fit in sequence, then the tilt table.
void cmd_sweep(const RunConfig& cfg, std::ostream& log);
/// Summary of whatever artifacts exist, flagging ones from another config.
void cmd_report(const RunConfig& cfg, std::ostream& log);

const std::vector<std::string>& verbs();
void run_verb(const std::string& verb, const RunConfig& cfg, std::ostream& log);

}  // namespace purephase::cli
