#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace stochfsi {

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<int> paths;
  std::optional<std::uint64_t> seed;
  int threads = 0;  ///< 0: STOCHFSI_THREADS, then hardware concurrency
};

/// Exit codes: 0 ok, 1 path failure or invariant violation, 2 configuration error.
int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);
/// Exit codes: 0 all invariants hold, 1 invariant failure, 3 unreadable or inconsistent snapshot.
int cmd_verify(const std::string& snapshot_path, std::ostream& out, std::ostream& err);
/// Exit codes as cmd_run.
int cmd_sweep(const RunOptions& opt, std::ostream& out, std::ostream& err);

int resolve_threads(int requested);

}  // namespace stochfsi
