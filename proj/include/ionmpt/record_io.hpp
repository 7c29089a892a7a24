#pragma once

#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ionmpt/circuit.hpp"

namespace ionmpt {

// Canonical decimal form of a rate; used in file keys and seed labels so
// that 0.075 means the same trajectory everywhere.
std::string format_rate(double p);

std::string record_to_json(const TrajectoryRecord& rec);
TrajectoryRecord record_from_json(const std::string& line);

// Serialization with the timing telemetry removed; equal trajectories give
// equal strings even though their wall times differ.
std::string record_canonical_json(const TrajectoryRecord& rec);

// Append-only JSON-lines sink; append() is safe to call from many threads.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void append(const std::string& line);

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

// Reads every well-formed record line; a torn trailing line (interrupted
// writer) is skipped rather than treated as corruption.
std::vector<TrajectoryRecord> read_records(const std::string& path);

using RunKey = std::tuple<int, std::string, int>;  // (n, p, run_index)

inline RunKey run_key(const TrajectoryRecord& rec) {
  return {rec.config.n_sites, format_rate(rec.config.meas_rate), rec.run_index};
}

// Keys of records already present in a JSONL file; complete_only restricts
// the scan to runs that finished within their budgets.
std::set<RunKey> scan_keys(const std::string& path, bool complete_only);

}  // namespace ionmpt
