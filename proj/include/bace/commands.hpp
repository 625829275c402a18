#pragma once

#include <iosfwd>

#include "bace/config.hpp"

namespace bace {

// Exit codes shared by the CLI: 0 success, 1 usage/config, 2 data/parse,
// 3 numeric.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Command bodies behind the CLI. Each is deterministic given (config, seed),
// writes only under cfg.out (plus cfg.checkpoint where stated), reports
// errors on `err`, and returns an exit code.
int run_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_synth(const RunConfig& cfg, std::ostream& out, std::ostream& err);

int exit_code_for_current_exception(std::ostream& err);

}  // namespace bace
