#include "ionmpt/record_io.hpp"

#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace ionmpt {

using nlohmann::json;

std::string format_rate(double p) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", p);
  return buf;
}

namespace {

json record_json(const TrajectoryRecord& rec, bool with_telemetry) {
  const CircuitConfig& c = rec.config;
  json j;
  j["schema"] = 1;
  j["n"] = c.n_sites;
  j["p"] = c.meas_rate;
  j["cycles"] = c.cycles();
  j["cutoff"] = c.truncation.cutoff;
  if (c.truncation.max_bond) j["max_bond_cap"] = *c.truncation.max_bond;
  else j["max_bond_cap"] = nullptr;
  j["reset"] = c.reset_after_measure;
  j["pd"] = c.crosstalk_rate;
  j["alphas"] = c.renyi_alphas;
  j["cut"] = c.cut();
  j["seed"] = rec.seed;
  j["run"] = rec.run_index;
  j["entropy"] = rec.entropy_series;
  j["n_events"] = rec.n_events;
  if (c.record_events) {
    json ev = json::array();
    for (const MeasurementEvent& e : rec.events)
      ev.push_back({e.cycle, e.half == LayerHalf::Even ? 0 : 1, e.site, e.outcome,
                    e.monitored ? 1 : 0});
    j["events"] = std::move(ev);
  }
  j["max_bond"] = rec.max_bond_seen;
  j["discarded"] = rec.total_discarded_weight;
  j["complete"] = rec.complete;
  if (!rec.complete) j["abort"] = rec.abort_reason;
  if (with_telemetry) j["wall_s"] = rec.wall_time_s;
  return j;
}

}  // namespace

std::string record_to_json(const TrajectoryRecord& rec) {
  return record_json(rec, true).dump();
}

std::string record_canonical_json(const TrajectoryRecord& rec) {
  return record_json(rec, false).dump();
}

TrajectoryRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  TrajectoryRecord rec;
  CircuitConfig& c = rec.config;
  c.n_sites = j.at("n").get<int>();
  c.meas_rate = j.at("p").get<double>();
  c.time_cycles = j.at("cycles").get<int>();
  c.truncation.cutoff = j.at("cutoff").get<double>();
  if (!j.at("max_bond_cap").is_null())
    c.truncation.max_bond = j.at("max_bond_cap").get<int>();
  c.reset_after_measure = j.at("reset").get<bool>();
  c.crosstalk_rate = j.at("pd").get<double>();
  c.renyi_alphas = j.at("alphas").get<std::vector<double>>();
  c.entropy_cut = j.at("cut").get<int>();
  c.record_events = j.contains("events");
  rec.seed = j.at("seed").get<std::uint64_t>();
  c.master_seed = rec.seed;
  rec.run_index = j.at("run").get<int>();
  rec.entropy_series = j.at("entropy").get<std::vector<std::vector<double>>>();
  rec.n_events = j.at("n_events").get<long>();
  if (j.contains("events")) {
    for (const json& e : j.at("events")) {
      MeasurementEvent ev;
      ev.cycle = e.at(0).get<int>();
      ev.half = e.at(1).get<int>() == 0 ? LayerHalf::Even : LayerHalf::Odd;
      ev.site = e.at(2).get<int>();
      ev.outcome = e.at(3).get<int>();
      ev.monitored = e.at(4).get<int>() != 0;
      rec.events.push_back(ev);
    }
  }
  rec.max_bond_seen = j.at("max_bond").get<int>();
  rec.total_discarded_weight = j.at("discarded").get<double>();
  rec.complete = j.at("complete").get<bool>();
  if (j.contains("abort")) rec.abort_reason = j.at("abort").get<std::string>();
  if (j.contains("wall_s")) rec.wall_time_s = j.at("wall_s").get<double>();
  return rec;
}

JsonlWriter::JsonlWriter(const std::string& path)
    : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("JsonlWriter: cannot open " + path);
}

void JsonlWriter::append(const std::string& line) {
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << line << '\n';
  out_.flush();
}

std::vector<TrajectoryRecord> read_records(const std::string& path) {
  // opening a directory "succeeds" on Linux but reads nothing; catch it
  if (std::filesystem::is_directory(path)) {
    const auto inner = std::filesystem::path(path) / "records.jsonl";
    if (std::filesystem::is_regular_file(inner)) return read_records(inner);
    throw std::runtime_error("read_records: " + path +
                             " is a directory without records.jsonl");
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_records: cannot open " + path);
  std::vector<TrajectoryRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const json::exception&) {
      // tolerate a torn final line from an interrupted writer
      if (!in.eof()) throw;
    }
  }
  return out;
}

std::set<RunKey> scan_keys(const std::string& path, bool complete_only) {
  std::set<RunKey> keys;
  std::ifstream in(path);
  if (!in) return keys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (complete_only && !j.at("complete").get<bool>()) continue;
      keys.insert({j.at("n").get<int>(), format_rate(j.at("p").get<double>()),
                   j.at("run").get<int>()});
    } catch (const json::exception&) {
      if (!in.eof()) throw;
    }
  }
  return keys;
}

}  // namespace ionmpt
