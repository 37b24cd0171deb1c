#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "checkerboard/commands.hpp"

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

// Runs the command-line entry point in-process.
inline CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "checkerboard");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = checkerboard::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}
