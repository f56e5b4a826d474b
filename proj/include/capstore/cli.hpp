#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "capstore/workload.hpp"

namespace capstore::cli {

enum ExitCode { kOk = 0, kInputError = 2, kInfeasible = 3, kProtocolViolation = 4 };

// Per-op footprint/cycle/access table plus the off-chip profile.
nlohmann::ordered_json analyze_json(const Workload& w);
std::string analyze_csv(const Workload& w);

std::string sha256_hex(std::string_view bytes);

// Thread cap from CAPSTORE_THREADS; 0 means one per hardware thread.
unsigned threads_from_env();

// Runs one subcommand. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace capstore::cli
