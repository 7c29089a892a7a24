#include "ionmpt/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace ionmpt {

void SweepSpec::validate() const {
  if (n_values.empty() || p_values.empty())
    throw std::invalid_argument("sweep: need at least one N and one p");
  for (int n : n_values)
    if (n < 4 || n % 2 != 0)
      throw std::invalid_argument("sweep: all N must be even and >= 4");
  for (double p : p_values)
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("sweep: rates must lie in [0,1]");
  if (runs_per_point < 1)
    throw std::invalid_argument("sweep: runs_per_point must be >= 1");
  if (workers < 1) throw std::invalid_argument("sweep: workers must be >= 1");
  if (output_dir.empty()) throw std::invalid_argument("sweep: output_dir required");
}

int CellStats::max_bond() const {
  return max_bond_hist.empty() ? 0 : max_bond_hist.rbegin()->first;
}

long EnsembleResult::total_completed() const {
  long t = 0;
  for (const auto& [key, cell] : cells) t += cell.completed();
  return t;
}

long EnsembleResult::total_incomplete() const {
  long t = 0;
  for (const auto& [key, cell] : cells) t += cell.incomplete;
  return t;
}

std::uint64_t trajectory_seed(std::uint64_t master, int n,
                              const std::string& p_str, int run_index) {
  std::string label = "traj|N=" + std::to_string(n) + "|p=" + p_str +
                      "|run=" + std::to_string(run_index);
  return derive_seed(master, label);
}

EnsembleResult aggregate_records(std::vector<TrajectoryRecord> records) {
  // Dedup by (N, p, run): keep a complete record over an aborted attempt.
  std::map<RunKey, std::size_t> chosen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunKey key = run_key(records[i]);
    const auto it = chosen.find(key);
    if (it == chosen.end()) {
      chosen[key] = i;
    } else if (!records[it->second].complete && records[i].complete) {
      it->second = i;
    }
  }

  std::vector<std::size_t> order;
  order.reserve(chosen.size());
  for (const auto& [key, idx] : chosen) order.push_back(idx);
  // RunKey sorts p lexicographically; fold in numeric (N, p, run) order so
  // the aggregate is byte-reproducible and readable.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const TrajectoryRecord& ra = records[a];
    const TrajectoryRecord& rb = records[b];
    if (ra.config.n_sites != rb.config.n_sites)
      return ra.config.n_sites < rb.config.n_sites;
    if (ra.config.meas_rate != rb.config.meas_rate)
      return ra.config.meas_rate < rb.config.meas_rate;
    return ra.run_index < rb.run_index;
  });

  EnsembleResult result;
  for (std::size_t idx : order) {
    const TrajectoryRecord& rec = records[idx];
    const std::pair<int, double> key{rec.config.n_sites, rec.config.meas_rate};
    CellStats& cell = result.cells[key];
    if (cell.series.empty()) {
      cell.n = rec.config.n_sites;
      cell.p = rec.config.meas_rate;
      cell.p_str = format_rate(cell.p);
      cell.alphas = rec.config.renyi_alphas;
      cell.series.resize(cell.alphas.size());
    }
    if (!rec.complete) {
      ++cell.incomplete;
      continue;
    }
    if (rec.entropy_series.size() != cell.series.size())
      throw std::runtime_error("aggregate: records disagree on alphas in one cell");
    for (std::size_t ai = 0; ai < rec.entropy_series.size(); ++ai) {
      auto& acc = cell.series[ai];
      const auto& vals = rec.entropy_series[ai];
      if (acc.size() < vals.size()) acc.resize(vals.size());
      for (std::size_t t = 0; t < vals.size(); ++t) acc[t].add(vals[t]);
    }
    ++cell.max_bond_hist[rec.max_bond_seen];
    cell.discarded.add(rec.total_discarded_weight);
    if (!cell.run_indices.insert(rec.run_index).second)
      throw MergeConflictError("aggregate: duplicate run index in one cell");
  }
  return result;
}

EnsembleResult aggregate_file(const std::string& records_path) {
  return aggregate_records(read_records(records_path));
}

EnsembleResult merge(const EnsembleResult& a, const EnsembleResult& b) {
  EnsembleResult out = a;
  for (const auto& [key, cell] : b.cells) {
    auto it = out.cells.find(key);
    if (it == out.cells.end()) {
      out.cells[key] = cell;
      continue;
    }
    CellStats& mine = it->second;
    if (mine.alphas != cell.alphas)
      throw MergeConflictError("merge: alpha sets differ in one cell");
    for (int run : cell.run_indices)
      if (mine.run_indices.count(run))
        throw MergeConflictError("merge: overlapping run indices");
    for (int run : cell.run_indices) mine.run_indices.insert(run);
    if (mine.series.size() < cell.series.size())
      mine.series.resize(cell.series.size());
    for (std::size_t ai = 0; ai < cell.series.size(); ++ai) {
      auto& dst = mine.series[ai];
      const auto& src = cell.series[ai];
      if (dst.size() < src.size()) dst.resize(src.size());
      for (std::size_t t = 0; t < src.size(); ++t) dst[t].combine(src[t]);
    }
    for (const auto& [bond, count] : cell.max_bond_hist)
      mine.max_bond_hist[bond] += count;
    mine.discarded.combine(cell.discarded);
    mine.incomplete += cell.incomplete;
  }
  return out;
}

std::string aggregate_csv_string(const EnsembleResult& result) {
  std::string out = "N,p,alpha,cycle,mean_S,stderr_S,n_runs\n";
  char buf[256];
  for (const auto& [key, cell] : result.cells) {
    for (std::size_t ai = 0; ai < cell.series.size(); ++ai) {
      for (std::size_t t = 0; t < cell.series[ai].size(); ++t) {
        const Welford& w = cell.series[ai][t];
        if (w.count == 0) continue;
        std::snprintf(buf, sizeof(buf), "%d,%s,%.6g,%zu,%.17g,%.17g,%ld\n",
                      cell.n, cell.p_str.c_str(), cell.alphas[ai], t + 1, w.mean,
                      w.stderr_mean(), w.count);
        out += buf;
      }
    }
  }
  return out;
}

void write_aggregate_csv(const EnsembleResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << aggregate_csv_string(result);
}

EntropyDataset dataset_from_result(const EnsembleResult& result, double alpha,
                                   int cycle) {
  EntropyDataset data;
  for (const auto& [key, cell] : result.cells) {
    int ai = -1;
    for (std::size_t i = 0; i < cell.alphas.size(); ++i)
      if (std::abs(cell.alphas[i] - alpha) < 1e-9) ai = static_cast<int>(i);
    if (ai < 0) continue;
    const auto& series = cell.series[ai];
    if (series.empty()) continue;
    const int t = cycle > 0 ? cycle - 1 : static_cast<int>(series.size()) - 1;
    if (t < 0 || t >= static_cast<int>(series.size())) continue;
    const Welford& w = series[t];
    if (w.count < 2) continue;
    EntropyPoint pt;
    pt.n = cell.n;
    pt.p = cell.p;
    pt.mean_s = w.mean;
    pt.stderr_s = w.stderr_mean();
    pt.n_runs = static_cast<int>(w.count);
    data.points.push_back(pt);
  }
  return data;
}

EntropyDataset dataset_from_csv(const std::string& path, double alpha, int cycle) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty aggregate file: " + path);

  struct Row {
    int n;
    double p, mean, err;
    int cycle, runs;
  };
  std::map<std::pair<int, double>, Row> last;  // chosen cycle per cell
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r;
    double a;
    char pbuf[64];
    if (std::sscanf(line.c_str(), "%d,%63[^,],%lf,%d,%lf,%lf,%d", &r.n, pbuf, &a,
                    &r.cycle, &r.mean, &r.err, &r.runs) != 7)
      throw std::runtime_error("bad aggregate row: " + line);
    if (std::abs(a - alpha) > 1e-9) continue;
    r.p = std::stod(pbuf);
    const std::pair<int, double> key{r.n, r.p};
    if (cycle > 0) {
      if (r.cycle == cycle) last[key] = r;
    } else {
      const auto it = last.find(key);
      if (it == last.end() || r.cycle > it->second.cycle) last[key] = r;
    }
  }
  EntropyDataset data;
  for (const auto& [key, r] : last) {
    if (r.runs < 2) continue;
    data.points.push_back({r.n, r.p, r.mean, r.err, r.runs});
  }
  return data;
}

EnsembleResult run_ensemble(const SweepSpec& spec, ProgressFn progress) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir);
  const std::string records_path =
      (fs::path(spec.output_dir) / "records.jsonl").string();

  const std::set<RunKey> done = scan_keys(records_path, /*complete_only=*/true);

  struct Task {
    int n;
    double p;
    std::string p_str;
    int run;
  };
  std::vector<Task> tasks;
  for (int n : spec.n_values) {
    for (double p : spec.p_values) {
      const std::string p_str = format_rate(p);
      for (int run = 0; run < spec.runs_per_point; ++run) {
        if (done.count({n, p_str, run})) continue;
        tasks.push_back({n, p, p_str, run});
      }
    }
  }
  // Cheap cells first: everything completes as early as possible if the
  // sweep is interrupted, and the expensive low-p large-N corner runs last.
  std::stable_sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) {
    const double ca = a.n * (0.4 - std::min(a.p, 0.4));
    const double cb = b.n * (0.4 - std::min(b.p, 0.4));
    return ca < cb;
  });

  const long total =
      static_cast<long>(spec.n_values.size() * spec.p_values.size()) *
      spec.runs_per_point;
  std::atomic<long> done_count{total - static_cast<long>(tasks.size())};

  JsonlWriter sink(records_path);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      CircuitConfig cfg = spec.base;
      cfg.n_sites = task.n;
      cfg.meas_rate = task.p;
      cfg.master_seed = trajectory_seed(spec.master_seed, task.n, task.p_str, task.run);
      cfg.bond_budget = spec.budget.max_bond;
      cfg.wall_budget_s = spec.budget.wall_s;
      TrajectoryRecord rec = run_trajectory(cfg, spec.backend);
      rec.run_index = task.run;
      sink.append(record_to_json(rec));
      const long d = done_count.fetch_add(1) + 1;
      if (progress) progress(d, total);
    }
  };

  if (spec.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < spec.workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  EnsembleResult result = aggregate_file(records_path);
  write_aggregate_csv(result,
                      (fs::path(spec.output_dir) / "aggregate.csv").string());
  return result;
}

}  // namespace ionmpt
