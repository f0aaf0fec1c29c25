#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "stochfsi/config.hpp"
#include "stochfsi/scheme.hpp"

namespace stochfsi {

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Unreadable, truncated or inconsistent snapshot.
class SnapshotError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Snapshot {
  std::string config_text;  ///< canonical config the path was run with
  std::uint64_t config_hash = 0;
  TrajectoryRecord traj;
};

/// Little-endian binary encoding of a trajectory with its config.
std::string encode_snapshot(const Snapshot& snap);
/// Throws SnapshotError on any schema or consistency violation.
Snapshot decode_snapshot(const std::string& bytes);

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
void write_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(const std::string& path);

}  // namespace stochfsi
