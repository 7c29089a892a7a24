#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ionmpt/circuit.hpp"
#include "ionmpt/record_io.hpp"
#include "ionmpt/scaling.hpp"

namespace ionmpt {

struct MergeConflictError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceBudget {
  int max_bond = 0;     // 0 = unlimited
  double wall_s = 0.0;  // 0 = unlimited
};

struct SweepSpec {
  std::vector<int> n_values;
  std::vector<double> p_values;
  int runs_per_point = 500;
  CircuitConfig base;  // n_sites/meas_rate/master_seed filled per trajectory
  std::uint64_t master_seed = 1;
  std::string output_dir;
  ResourceBudget budget;
  Backend backend = Backend::Mps;
  int workers = 1;
  bool quiet = false;

  void validate() const;
};

// Streaming mean/variance accumulator; combine() uses the count-weighted
// moment update, so folding is associative and commutative up to roundoff.
struct Welford {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  void combine(const Welford& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double d = other.mean - mean;
    const double n = na + nb;
    mean += d * nb / n;
    m2 += other.m2 + d * d * na * nb / n;
    count += other.count;
  }
  double variance() const {
    return count > 1 ? m2 / (static_cast<double>(count) - 1.0) : 0.0;
  }
  double stderr_mean() const {
    return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

struct CellStats {
  int n = 0;
  double p = 0.0;
  std::string p_str;
  std::vector<double> alphas;
  // series[alpha_index][cycle] over completed runs
  std::vector<std::vector<Welford>> series;
  std::map<int, long> max_bond_hist;
  Welford discarded;
  std::set<int> run_indices;  // completed
  long incomplete = 0;

  long completed() const { return static_cast<long>(run_indices.size()); }
  int max_bond() const;
};

struct EnsembleResult {
  // keyed by (N, p); doubles compare exactly because every record of a cell
  // carries the same parsed value
  std::map<std::pair<int, double>, CellStats> cells;

  long total_completed() const;
  long total_incomplete() const;
};

std::uint64_t trajectory_seed(std::uint64_t master, int n, const std::string& p_str,
                              int run_index);

using ProgressFn = std::function<void(long done, long total)>;

// Runs the sweep's trajectories over a worker pool, appending each record to
// output_dir/records.jsonl as it completes, then aggregates the file.
// Completed (N, p, run) triples already present are skipped, which makes
// interrupted sweeps resumable.
EnsembleResult run_ensemble(const SweepSpec& spec, ProgressFn progress = {});

// Deterministic aggregation: records are deduplicated by (N, p, run)
// preferring complete ones, sorted, and folded in a fixed order, so the
// result is identical regardless of completion order or worker count.
EnsembleResult aggregate_records(std::vector<TrajectoryRecord> records);
EnsembleResult aggregate_file(const std::string& records_path);

EnsembleResult merge(const EnsembleResult& a, const EnsembleResult& b);

void write_aggregate_csv(const EnsembleResult& result, const std::string& path);
std::string aggregate_csv_string(const EnsembleResult& result);

// Final-cycle (or chosen-cycle) entropy table for the scaling tools.
EntropyDataset dataset_from_result(const EnsembleResult& result, double alpha,
                                   int cycle = -1);
EntropyDataset dataset_from_csv(const std::string& path, double alpha,
                                int cycle = -1);

}  // namespace ionmpt
