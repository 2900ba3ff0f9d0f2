#pragma once

#include <iosfwd>

#include "json.hpp"

#include "run_config.hpp"

namespace mbs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitCrosscheck = 2;

int cmd_table1(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_curve(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_witness(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_crosscheck(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full command line: `mbs <subcommand> [--config file] [--key value ...]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Rounds every float in `j` to 12 significant digits.
nlohmann::json round_floats(nlohmann::json j);

}  // namespace mbs::cli
