// Command-line front end: ensemble sweeps, aggregation, scaling analysis,
// noise estimators, and the MPS-vs-dense validation suite.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ionmpt/circuit.hpp"
#include "ionmpt/config_file.hpp"
#include "ionmpt/ensemble.hpp"
#include "ionmpt/random.hpp"
#include "ionmpt/scaling.hpp"

using namespace ionmpt;
namespace fs = std::filesystem;

namespace {

int default_workers() {
  if (const char* env = std::getenv("IONMPT_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 1;
}

Backend parse_backend(const std::string& name) {
  if (name == "mps") return Backend::Mps;
  if (name == "dense") return Backend::Dense;
  throw CLI::ValidationError("--backend", "expected 'mps' or 'dense'");
}

Parity parse_parity(const std::string& name) {
  if (name == "even") return Parity::Even;
  if (name == "odd") return Parity::Odd;
  throw CLI::ValidationError("--parity", "expected 'even' or 'odd'");
}

// ---------------------------------------------------------------------------
// minimal static SVG emission (entropy curves, collapse scatter)

struct SvgCanvas {
  double x_min, x_max, y_min, y_max;
  static constexpr int kW = 800, kH = 560, kPad = 60;
  std::string body;

  double px(double x) const {
    return kPad + (x - x_min) / (x_max - x_min) * (kW - 2 * kPad);
  }
  double py(double y) const {
    return kH - kPad - (y - y_min) / (y_max - y_min) * (kH - 2 * kPad);
  }
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& color) {
    body += "<polyline fill='none' stroke='" + color +
            "' stroke-width='1.5' points='";
    char buf[64];
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(x), py(y));
      body += buf;
    }
    body += "'/>\n";
  }
  void dot(double x, double y, const std::string& color) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "<circle cx='%.1f' cy='%.1f' r='3' fill='%s'/>\n", px(x),
                  py(y), color.c_str());
    body += buf;
  }
  void label(double x, double y, const std::string& text,
             const std::string& anchor = "middle") {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<text x='%.1f' y='%.1f' font-size='12' text-anchor='%s' "
                  "font-family='sans-serif'>%s</text>\n",
                  x, y, anchor.c_str(), text.c_str());
    body += buf;
  }
  void write(const std::string& path, const std::string& x_name,
             const std::string& y_name) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW
        << "' height='" << kH << "'>\n<rect width='100%' height='100%' "
        << "fill='white'/>\n";
    // frame and axis labels
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "<rect x='%d' y='%d' width='%d' height='%d' fill='none' "
                  "stroke='black'/>\n",
                  kPad, kPad, kW - 2 * kPad, kH - 2 * kPad);
    out << buf;
    for (int i = 0; i <= 4; ++i) {
      const double fx = x_min + (x_max - x_min) * i / 4.0;
      const double fy = y_min + (y_max - y_min) * i / 4.0;
      std::snprintf(buf, sizeof(buf),
                    "<text x='%.1f' y='%d' font-size='11' text-anchor='middle' "
                    "font-family='sans-serif'>%.3g</text>\n",
                    px(fx), kH - kPad + 18, fx);
      out << buf;
      std::snprintf(buf, sizeof(buf),
                    "<text x='%d' y='%.1f' font-size='11' text-anchor='end' "
                    "font-family='sans-serif'>%.3g</text>\n",
                    kPad - 6, py(fy) + 4, fy);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x='%d' y='%d' font-size='13' text-anchor='middle' "
                  "font-family='sans-serif'>%s</text>\n",
                  kW / 2, kH - 14, x_name.c_str());
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x='16' y='%d' font-size='13' text-anchor='middle' "
                  "font-family='sans-serif' transform='rotate(-90 16 %d)'>"
                  "%s</text>\n",
                  kH / 2, kH / 2, y_name.c_str());
    out << buf;
    out << body << "</svg>\n";
  }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

void plot_entropy_curves(const EnsembleResult& result, double alpha,
                         const std::string& path) {
  SvgCanvas svg{0.0, 1.0, 0.0, 0.0};
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>
      curves;
  for (const auto& [key, cell] : result.cells) {
    int ai = -1;
    for (std::size_t i = 0; i < cell.alphas.size(); ++i)
      if (std::abs(cell.alphas[i] - alpha) < 1e-9) ai = static_cast<int>(i);
    if (ai < 0) continue;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t t = 0; t < cell.series[ai].size(); ++t) {
      if (cell.series[ai][t].count == 0) continue;
      pts.push_back({static_cast<double>(t + 1), cell.series[ai][t].mean});
      svg.x_max = std::max(svg.x_max, static_cast<double>(t + 1));
      svg.y_max = std::max(svg.y_max, cell.series[ai][t].mean);
    }
    char name[64];
    std::snprintf(name, sizeof(name), "N=%d p=%s", cell.n, cell.p_str.c_str());
    curves.push_back({name, std::move(pts)});
  }
  if (curves.empty()) throw std::runtime_error("no cells with alpha requested");
  svg.x_min = 1.0;
  svg.y_max *= 1.08;
  int ci = 0;
  for (const auto& [name, pts] : curves) {
    const char* color = kPalette[ci % 8];
    svg.polyline(pts, color);
    svg.label(SvgCanvas::kW - SvgCanvas::kPad - 6,
              SvgCanvas::kPad + 16 + 14 * ci, name, "end");
    ++ci;
  }
  char ylab[32];
  std::snprintf(ylab, sizeof(ylab), "mean S_%g", alpha);
  svg.write(path, "cycle t", ylab);
}

void plot_collapse_scatter(const EntropyDataset& data, const CollapseFit& fit,
                           const std::string& path) {
  SvgCanvas svg{1e300, -1e300, 1e300, -1e300};
  struct Pt {
    int n;
    double x, y;
  };
  std::vector<Pt> pts;
  // same rescaling the objective uses: x = (p - p_c) N^(1/nu), y = S - S_N(p_c)
  std::map<int, std::vector<const EntropyPoint*>> by_n;
  for (const EntropyPoint& pt : data.points) by_n[pt.n].push_back(&pt);
  for (auto& [n, v] : by_n) {
    std::sort(v.begin(), v.end(), [](const EntropyPoint* a,
                                     const EntropyPoint* b) {
      return a->p < b->p;
    });
    // linear interpolation of S at p_c within this size
    double s_c = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      if (v[i]->p <= fit.p_c && fit.p_c <= v[i + 1]->p) {
        const double w = (fit.p_c - v[i]->p) / (v[i + 1]->p - v[i]->p);
        s_c = (1.0 - w) * v[i]->mean_s + w * v[i + 1]->mean_s;
        break;
      }
    }
    for (const EntropyPoint* pt : v) {
      const double x = (pt->p - fit.p_c) * std::pow(n, 1.0 / fit.nu);
      const double y = pt->mean_s - s_c;
      pts.push_back({n, x, y});
      svg.x_min = std::min(svg.x_min, x);
      svg.x_max = std::max(svg.x_max, x);
      svg.y_min = std::min(svg.y_min, y);
      svg.y_max = std::max(svg.y_max, y);
    }
  }
  const double mx = 0.05 * (svg.x_max - svg.x_min);
  const double my = 0.05 * (svg.y_max - svg.y_min);
  svg.x_min -= mx;
  svg.x_max += mx;
  svg.y_min -= my;
  svg.y_max += my;
  std::map<int, int> color_of;
  for (const Pt& pt : pts) {
    if (!color_of.count(pt.n))
      color_of[pt.n] = static_cast<int>(color_of.size());
    svg.dot(pt.x, pt.y, kPalette[color_of[pt.n] % 8]);
  }
  int ci = 0;
  for (const auto& [n, idx] : color_of) {
    char name[32];
    std::snprintf(name, sizeof(name), "N=%d", n);
    svg.label(SvgCanvas::kW - SvgCanvas::kPad - 6,
              SvgCanvas::kPad + 16 + 14 * ci++, name, "end");
  }
  char xlab[64];
  std::snprintf(xlab, sizeof(xlab), "(p - %.4f) N^(1/%.3f)", fit.p_c, fit.nu);
  svg.write(path, xlab, "S - S_N(p_c)");
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string config_path;
  std::vector<int> n_values;
  std::vector<double> p_values;
  int cycles = -1;
  int runs = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double cutoff = -1.0;
  int max_bond = -1;
  bool reset = false;
  bool no_reset = false;
  double crosstalk_pd = -1.0;
  std::vector<double> alphas;
  std::string backend;
  int workers = -1;
  std::string out;
  double wall_budget = -1.0;
  int bond_budget = -1;
  bool record_events = false;
  bool dry_run = false;
};

SweepSpec resolve_spec(const RunArgs& a) {
  SweepSpec spec;
  spec.runs_per_point = 500;
  spec.workers = default_workers();
  spec.base.record_events = false;

  if (!a.config_path.empty()) {
    const ConfigFile cfg = ConfigFile::load(a.config_path);
    spec.n_values = cfg.get_ints("n_values", spec.n_values);
    spec.p_values = cfg.get_doubles("p_values", spec.p_values);
    spec.runs_per_point = cfg.get_int("runs_per_point", spec.runs_per_point);
    spec.base.time_cycles = cfg.get_int("cycles", spec.base.time_cycles);
    spec.base.truncation.cutoff =
        cfg.get_double("cutoff", spec.base.truncation.cutoff);
    if (cfg.has("max_bond"))
      spec.base.truncation.max_bond = cfg.get_int("max_bond", 0);
    spec.base.reset_after_measure =
        cfg.get_bool("reset", spec.base.reset_after_measure);
    spec.base.crosstalk_rate =
        cfg.get_double("crosstalk_pd", spec.base.crosstalk_rate);
    spec.base.renyi_alphas = cfg.get_doubles("alphas", spec.base.renyi_alphas);
    if (cfg.has("seed"))
      spec.master_seed = std::stoull(cfg.get_string("seed", "1"));
    spec.backend = parse_backend(cfg.get_string(
        "backend", spec.backend == Backend::Mps ? "mps" : "dense"));
    spec.workers = cfg.get_int("workers", spec.workers);
    spec.output_dir = cfg.get_string("out", spec.output_dir);
    spec.budget.wall_s = cfg.get_double("wall_budget_s", spec.budget.wall_s);
    spec.budget.max_bond = cfg.get_int("bond_budget", spec.budget.max_bond);
    spec.base.record_events =
        cfg.get_bool("record_events", spec.base.record_events);
  }

  if (!a.n_values.empty()) spec.n_values = a.n_values;
  if (!a.p_values.empty()) spec.p_values = a.p_values;
  if (a.cycles >= 0) spec.base.time_cycles = a.cycles;
  if (a.runs >= 0) spec.runs_per_point = a.runs;
  if (a.seed_set) spec.master_seed = a.seed;
  if (a.cutoff >= 0.0) spec.base.truncation.cutoff = a.cutoff;
  if (a.max_bond >= 0) spec.base.truncation.max_bond = a.max_bond;
  if (a.reset) spec.base.reset_after_measure = true;
  if (a.no_reset) spec.base.reset_after_measure = false;
  if (a.crosstalk_pd >= 0.0) spec.base.crosstalk_rate = a.crosstalk_pd;
  if (!a.alphas.empty()) spec.base.renyi_alphas = a.alphas;
  if (!a.backend.empty()) spec.backend = parse_backend(a.backend);
  if (a.workers >= 1) spec.workers = a.workers;
  if (!a.out.empty()) spec.output_dir = a.out;
  if (a.wall_budget >= 0.0) spec.budget.wall_s = a.wall_budget;
  if (a.bond_budget >= 0) spec.budget.max_bond = a.bond_budget;
  if (a.record_events) spec.base.record_events = true;
  return spec;
}

void write_resolved_snapshot(const SweepSpec& spec) {
  nlohmann::json j;
  j["n_values"] = spec.n_values;
  j["p_values"] = spec.p_values;
  j["runs_per_point"] = spec.runs_per_point;
  j["cycles"] = spec.base.time_cycles;  // 0 means 2N per size
  j["cutoff"] = spec.base.truncation.cutoff;
  if (spec.base.truncation.max_bond)
    j["max_bond"] = *spec.base.truncation.max_bond;
  j["reset"] = spec.base.reset_after_measure;
  j["crosstalk_pd"] = spec.base.crosstalk_rate;
  j["alphas"] = spec.base.renyi_alphas;
  j["seed"] = spec.master_seed;
  j["backend"] = spec.backend == Backend::Mps ? "mps" : "dense";
  j["workers"] = spec.workers;
  j["wall_budget_s"] = spec.budget.wall_s;
  j["bond_budget"] = spec.budget.max_bond;
  j["record_events"] = spec.base.record_events;
  std::ofstream out(fs::path(spec.output_dir) / "resolved_config.json");
  out << j.dump(2) << "\n";
}

int cmd_run(const RunArgs& args) {
  SweepSpec spec = resolve_spec(args);
  const long planned =
      static_cast<long>(spec.n_values.size()) *
      static_cast<long>(spec.p_values.size()) * spec.runs_per_point;
  if (args.dry_run) {
    std::printf("planned trajectories: %ld (%zu sizes x %zu rates x %d runs)\n",
                planned, spec.n_values.size(), spec.p_values.size(),
                spec.runs_per_point);
    return 0;
  }
  spec.validate();
  fs::create_directories(spec.output_dir);
  write_resolved_snapshot(spec);

  const auto t0 = std::chrono::steady_clock::now();
  const EnsembleResult result =
      run_ensemble(spec, [&](long done, long total) {
        if (done % 100 == 0 || done == total) {
          const double dt = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
          std::fprintf(stderr, "progress: %ld/%ld (%.0f s)\n", done, total, dt);
        }
      });
  std::printf("completed %ld trajectories (%ld quarantined) -> %s\n",
              result.total_completed(), result.total_incomplete(),
              spec.output_dir.c_str());
  std::printf("records: %s\naggregate: %s\n",
              (fs::path(spec.output_dir) / "records.jsonl").c_str(),
              (fs::path(spec.output_dir) / "aggregate.csv").c_str());
  return 0;
}

int cmd_aggregate(const std::string& records, const std::string& out_csv,
                  const std::string& plot, double plot_alpha) {
  const EnsembleResult result = aggregate_file(records);
  if (out_csv.empty()) {
    std::fputs(aggregate_csv_string(result).c_str(), stdout);
  } else {
    write_aggregate_csv(result, out_csv);
    std::printf("wrote %s (%zu cells, %ld runs, %ld quarantined)\n",
                out_csv.c_str(), result.cells.size(), result.total_completed(),
                result.total_incomplete());
  }
  if (!plot.empty()) {
    plot_entropy_curves(result, plot_alpha, plot);
    std::printf("wrote %s\n", plot.c_str());
  }
  return 0;
}

int cmd_collapse(const std::string& data_csv, double alpha, int cycle,
                 const std::string& parity_name, const std::string& out_dir,
                 int resamples, std::uint64_t bootstrap_seed,
                 const std::string& plot) {
  EntropyDataset data = dataset_from_csv(data_csv, alpha, cycle);
  // odd half-chain sizes saturate lower; fitting one parity is the default
  if (parity_name != "all")
    data = data.filter_parity(parse_parity(parity_name));
  if (data.points.empty())
    throw std::runtime_error("no usable rows for alpha in " + data_csv);
  CollapseOptions opt;
  if (resamples > 0) opt.resamples = resamples;
  if (bootstrap_seed != 0) opt.seed = bootstrap_seed;
  const CollapseFit fit = fit_collapse(data, opt);

  nlohmann::json j;
  j["alpha"] = alpha;
  j["parity"] = parity_name;
  j["points"] = data.points.size();
  j["p_c"] = fit.p_c;
  j["p_c_err"] = fit.p_c_err;
  j["nu"] = fit.nu;
  j["nu_err"] = fit.nu_err;
  j["quality"] = fit.quality;
  j["converged"] = fit.converged;
  j["resamples"] = opt.resamples;
  std::printf("%s\n", j.dump(2).c_str());

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream rep(fs::path(out_dir) / "fit_report.json");
    rep << j.dump(2) << "\n";
    std::ofstream sc(fs::path(out_dir) / "collapse_scatter.csv");
    sc << "N,p,x,S,stderr_S\n";
    char buf[256];
    for (const EntropyPoint& pt : data.points) {
      const double x = (pt.p - fit.p_c) * std::pow(pt.n, 1.0 / fit.nu);
      std::snprintf(buf, sizeof(buf), "%d,%.10g,%.17g,%.17g,%.17g\n", pt.n,
                    pt.p, x, pt.mean_s, pt.stderr_s);
      sc << buf;
    }
    if (!plot.empty())
      plot_collapse_scatter(data, fit, (fs::path(out_dir) / plot).string());
    std::printf("wrote %s and collapse_scatter.csv\n",
                (fs::path(out_dir) / "fit_report.json").c_str());
  }
  return fit.converged ? 0 : 1;
}

int cmd_logfit(const std::string& data_csv, double alpha,
               const std::string& mode, double p, const std::string& form_name,
               const std::string& parity_name, int n_fit, int t_min, int t_max,
               int cycle) {
  nlohmann::json j;
  const auto to_json = [](const LogFit& f) {
    nlohmann::json o;
    o["slope"] = f.slope;
    o["slope_err"] = f.slope_err;
    o["intercept"] = f.intercept;
    o["intercept_err"] = f.intercept_err;
    return o;
  };

  const auto space_fit = [&](EntropyDataset data) {
    if (parity_name != "all")
      data = data.filter_parity(parse_parity(parity_name));
    std::vector<double> xs, ys, es;
    for (const EntropyPoint& pt : data.points) {
      if (std::abs(pt.p - p) > 1e-9) continue;
      xs.push_back(pt.n);
      ys.push_back(pt.mean_s);
      es.push_back(pt.stderr_s);
    }
    const OffsetForm form = form_name == "ln2NoverPi"
                                ? OffsetForm::Ln2NOverPi
                                : OffsetForm::LnN;
    return log_fit(xs, ys, es, form);
  };

  const auto time_fit = [&](const EnsembleResult& result) {
    const auto it = std::find_if(
        result.cells.begin(), result.cells.end(), [&](const auto& kv) {
          return kv.second.n == n_fit && std::abs(kv.second.p - p) < 1e-9;
        });
    if (it == result.cells.end())
      throw std::runtime_error("no records for requested N and p");
    int ai = -1;
    for (std::size_t i = 0; i < it->second.alphas.size(); ++i)
      if (std::abs(it->second.alphas[i] - alpha) < 1e-9)
        ai = static_cast<int>(i);
    if (ai < 0) throw std::runtime_error("alpha not recorded in these records");
    std::vector<double> xs, ys, es;
    for (int t = t_min; t <= t_max; ++t) {
      const Welford& w = it->second.series[ai].at(t - 1);
      xs.push_back(t);
      ys.push_back(w.mean);
      es.push_back(w.stderr_mean());
    }
    return log_fit(xs, ys, es, OffsetForm::LnN);
  };

  if (mode == "space") {
    // --data is the aggregate CSV here
    j = to_json(space_fit(dataset_from_csv(data_csv, alpha, cycle)));
    j["mode"] = "space";
  } else if (mode == "time") {
    // --data is records.jsonl here and below: the CSV keeps per-cycle rows,
    // but the time fit wants the run counts behind them too
    j = to_json(time_fit(aggregate_file(data_csv)));
    j["mode"] = "time";
  } else if (mode == "z") {
    const EnsembleResult result = aggregate_file(data_csv);
    const LogFit sp = space_fit(dataset_from_result(result, alpha, cycle));
    const LogFit tm = time_fit(result);
    const auto [z, z_err] = dynamical_exponent(tm, sp);
    j["space"] = to_json(sp);
    j["time"] = to_json(tm);
    j["z"] = z;
    j["z_err"] = z_err;
    j["mode"] = "z";
  } else {
    throw CLI::ValidationError("--mode", "expected space, time, or z");
  }
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

int cmd_msescan(const std::string& data_csv, double alpha,
                const std::string& parity_name, std::vector<double> ps,
                int cycle) {
  const EntropyDataset data = dataset_from_csv(data_csv, alpha, cycle);
  if (ps.empty()) {
    std::set<double> seen;
    for (const EntropyPoint& pt : data.points) seen.insert(pt.p);
    ps.assign(seen.begin(), seen.end());
  }
  const auto scan = mse_scan(data, ps, parse_parity(parity_name));
  double best_p = 0.0, best_r = 1e300;
  std::printf("p,R\n");
  for (const auto& [p, r] : scan) {
    std::printf("%.10g,%.10g\n", p, r);
    if (r < best_r) {
      best_r = r;
      best_p = p;
    }
  }
  std::printf("# minimum at p = %.10g (R = %.6g)\n", best_p, best_r);
  return 0;
}

int cmd_validate(int n, int seeds, std::vector<double> ps, int cycles) {
  if (ps.empty()) ps = {0.0, 0.1, 0.3};
  int checked = 0;
  double worst = 0.0;
  for (double p : ps) {
    for (bool reset : {false, true}) {
      for (int seed = 0; seed < seeds; ++seed) {
        CircuitConfig cfg;
        cfg.n_sites = n;
        cfg.meas_rate = p;
        cfg.time_cycles = cycles;
        cfg.reset_after_measure = reset;
        cfg.truncation.cutoff = 1e-12;
        cfg.master_seed = derive_seed(
            0x76616c6964617465ULL,
            "validate|N=" + std::to_string(n) + "|p=" + format_rate(p) +
                "|reset=" + (reset ? "1" : "0") + "|s=" + std::to_string(seed));
        const TrajectoryRecord a = run_trajectory(cfg, Backend::Mps);
        const TrajectoryRecord b = run_trajectory(cfg, Backend::Dense);
        ++checked;
        if (a.events.size() != b.events.size()) {
          std::fprintf(stderr,
                       "MISMATCH: event counts differ at p=%g reset=%d "
                       "seed=%d\n",
                       p, reset, seed);
          return 1;
        }
        for (std::size_t i = 0; i < a.events.size(); ++i)
          if (a.events[i].site != b.events[i].site ||
              a.events[i].outcome != b.events[i].outcome) {
            std::fprintf(stderr,
                         "MISMATCH: outcome %zu differs at p=%g reset=%d "
                         "seed=%d\n",
                         i, p, reset, seed);
            return 1;
          }
        for (std::size_t ai = 0; ai < a.entropy_series.size(); ++ai)
          for (std::size_t t = 0; t < a.entropy_series[ai].size(); ++t) {
            const double d =
                std::abs(a.entropy_series[ai][t] - b.entropy_series[ai][t]);
            worst = std::max(worst, d);
            if (d > 1e-6) {
              std::fprintf(stderr,
                           "MISMATCH: entropy differs by %.2e at p=%g "
                           "reset=%d seed=%d cycle=%zu\n",
                           d, p, reset, seed, t + 1);
              return 1;
            }
          }
      }
    }
  }
  std::printf("validated %d trajectory pairs at N=%d: outcomes identical, "
              "max entropy deviation %.2e\n",
              checked, n, worst);
  return 0;
}

int cmd_estimate(const std::string& mode, double p, double pd, double intensity,
                 double linewidth, double tau, double wavelength,
                 double distance, double rate, int n, int t) {
  if (mode == "effective-rate") {
    std::printf("%g\n", effective_rate(p, pd));
  } else if (mode == "emission") {
    std::printf("%g\n", crosstalk_emission_estimate(intensity, linewidth, tau));
  } else if (mode == "absorption") {
    const AbsorptionEstimate est =
        crosstalk_absorption_estimate(wavelength, distance, rate, tau);
    nlohmann::json j;
    j["sigma_m2"] = est.sigma_m2;
    j["radius_m"] = est.radius_m;
    j["fraction"] = est.fraction;
    j["p_d"] = est.p_d;
    std::printf("%s\n", j.dump(2).c_str());
  } else if (mode == "postselect") {
    const PostselectionCost cost = postselection_runs(n, p, t);
    nlohmann::json j;
    j["runs"] = cost.runs;
    j["log2_runs"] = cost.log2_runs;
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    throw CLI::ValidationError(
        "estimate", "expected effective-rate, emission, absorption, or "
                    "postselect");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory ensembles and scaling analysis for monitored "
               "ion-chain circuits"};
  app.require_subcommand(1);

  // run ----------------------------------------------------------------
  RunArgs run_args;
  CLI::App* run = app.add_subcommand(
      "run", "execute a (N, p) sweep of seeded trajectories");
  run->add_option("--config", run_args.config_path,
                  "key=value config file; flags override");
  run->add_option("--n", run_args.n_values, "chain sizes (even)")
      ->delimiter(',');
  run->add_option("--p", run_args.p_values, "measurement rates")
      ->delimiter(',');
  run->add_option("--cycles", run_args.cycles, "time cycles (0 = 2N)");
  run->add_option("--runs", run_args.runs, "trajectories per (N, p)");
  run->add_option("--seed", run_args.seed, "master seed")
      ->each([&](const std::string&) { run_args.seed_set = true; });
  run->add_option("--cutoff", run_args.cutoff, "SVD truncation cutoff");
  run->add_option("--max-bond", run_args.max_bond, "hard bond-dimension cap");
  run->add_flag("--reset", run_args.reset, "reset measured sites to |0>");
  run->add_flag("--no-reset", run_args.no_reset, "override config reset=true");
  run->add_option("--crosstalk-pd", run_args.crosstalk_pd,
                  "neighbor-measurement probability");
  run->add_option("--alphas", run_args.alphas, "Renyi orders to record")
      ->delimiter(',');
  run->add_option("--backend", run_args.backend, "mps | dense");
  run->add_option("--workers", run_args.workers,
                  "worker threads (default $IONMPT_WORKERS or 1)");
  run->add_option("--out", run_args.out, "output directory");
  run->add_option("--wall-budget", run_args.wall_budget,
                  "per-trajectory wall-time budget in seconds (0 = off)");
  run->add_option("--bond-budget", run_args.bond_budget,
                  "per-trajectory bond budget (0 = off)");
  run->add_flag("--record-events", run_args.record_events,
                "keep per-measurement event lists in records");
  run->add_flag("--dry-run", run_args.dry_run,
                "print planned trajectory count and exit");

  // aggregate ----------------------------------------------------------
  std::string agg_records, agg_out, agg_plot;
  double agg_alpha = 1.0;
  CLI::App* agg =
      app.add_subcommand("aggregate", "fold records.jsonl into a CSV table");
  agg->add_option("--records", agg_records, "records.jsonl path")->required();
  agg->add_option("--out", agg_out, "CSV path (default: stdout)");
  agg->add_option("--plot", agg_plot, "write entropy-curve SVG to this path");
  agg->add_option("--alpha", agg_alpha, "Renyi order for --plot");

  // collapse -----------------------------------------------------------
  std::string col_data, col_out, col_plot = "collapse.svg";
  double col_alpha = 1.0;
  int col_cycle = -1, col_resamples = 0;
  std::uint64_t col_seed = 0;
  std::string col_parity = "even";
  CLI::App* col = app.add_subcommand(
      "collapse", "fit (p_c, nu) by finite-size data collapse");
  col->add_option("--data", col_data, "aggregate.csv path")->required();
  col->add_option("--alpha", col_alpha, "Renyi order");
  col->add_option("--cycle", col_cycle, "cycle to read (-1 = last)");
  col->add_option("--parity", col_parity,
                  "half-chain parity to fit: even (default), odd, or all");
  col->add_option("--out", col_out,
                  "directory for fit_report.json, scatter CSV and SVG");
  col->add_option("--resamples", col_resamples, "bootstrap resamples");
  col->add_option("--bootstrap-seed", col_seed, "bootstrap RNG seed");

  // logfit ---------------------------------------------------------------
  std::string lf_data, lf_mode = "space", lf_form = "lnN", lf_parity = "all";
  double lf_alpha = 1.0, lf_p = 0.17;
  int lf_n = 20, lf_tmin = 3, lf_tmax = 16, lf_cycle = -1;
  CLI::App* lf = app.add_subcommand(
      "logfit", "weighted log fits in space, time, or their ratio z");
  lf->add_option("--data", lf_data,
                 "aggregate.csv (space) or records.jsonl (time, z)")
      ->required();
  lf->add_option("--mode", lf_mode, "space | time | z");
  lf->add_option("--alpha", lf_alpha, "Renyi order");
  lf->add_option("--p", lf_p, "measurement rate to fit at");
  lf->add_option("--form", lf_form, "lnN | ln2NoverPi (space mode)");
  lf->add_option("--parity", lf_parity, "even | odd | all (space mode)");
  lf->add_option("--fit-n", lf_n, "chain size for the time fit");
  lf->add_option("--t-min", lf_tmin, "first cycle of the time fit");
  lf->add_option("--t-max", lf_tmax, "last cycle of the time fit");
  lf->add_option("--cycle", lf_cycle, "cycle to read for space fits (-1 = last)");

  // msescan --------------------------------------------------------------
  std::string ms_data, ms_parity = "even";
  double ms_alpha = 1.0;
  std::vector<double> ms_ps;
  int ms_cycle = -1;
  CLI::App* ms = app.add_subcommand(
      "msescan", "scan R(p): residual of the alpha*ln(N)+b fit per rate");
  ms->add_option("--data", ms_data, "aggregate.csv path")->required();
  ms->add_option("--alpha", ms_alpha, "Renyi order");
  ms->add_option("--parity", ms_parity, "even | odd");
  ms->add_option("--p", ms_ps, "rates to scan (default: all in the file)")
      ->delimiter(',');
  ms->add_option("--cycle", ms_cycle, "cycle to read (-1 = last)");

  // estimate -------------------------------------------------------------
  std::string est_mode;
  double est_p = 0.0, est_pd = 0.0, est_intensity = 0.0, est_linewidth = 0.0;
  double est_tau = 0.0, est_wavelength = 0.0, est_distance = 0.0,
         est_rate = 0.0;
  int est_n = 0, est_t = 0;
  CLI::App* est = app.add_subcommand(
      "estimate", "closed-form noise and post-selection calculators");
  est->add_option("mode", est_mode,
                  "effective-rate | emission | absorption | postselect")
      ->required();
  est->add_option("--p", est_p, "measurement rate");
  est->add_option("--pd", est_pd, "crosstalk probability");
  est->add_option("--intensity", est_intensity, "relative beam intensity");
  est->add_option("--linewidth", est_linewidth, "linewidth (rad/s)");
  est->add_option("--tau", est_tau, "detection time (s)");
  est->add_option("--wavelength", est_wavelength, "photon wavelength (m)");
  est->add_option("--distance", est_distance, "ion spacing (m)");
  est->add_option("--rate", est_rate, "photon scatter rate (Hz)");
  est->add_option("--n", est_n, "chain size");
  est->add_option("--t", est_t, "circuit depth in cycles");

  // validate ---------------------------------------------------------------
  int val_n = 8, val_runs = 20, val_cycles = 0;
  std::vector<double> val_ps;
  CLI::App* val = app.add_subcommand(
      "validate", "MPS-vs-dense oracle equivalence at small N");
  val->add_option("--n", val_n, "chain size (<= 20)");
  val->add_option("--runs", val_runs, "seeds per configuration");
  val->add_option("--p", val_ps, "rates to check (default 0, 0.1, 0.3)")
      ->delimiter(',');
  val->add_option("--cycles", val_cycles, "time cycles (0 = 2N)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (agg->parsed())
      return cmd_aggregate(agg_records, agg_out, agg_plot, agg_alpha);
    if (col->parsed())
      return cmd_collapse(col_data, col_alpha, col_cycle, col_parity, col_out,
                          col_resamples, col_seed, col_plot);
    if (lf->parsed())
      return cmd_logfit(lf_data, lf_alpha, lf_mode, lf_p, lf_form, lf_parity,
                        lf_n, lf_tmin, lf_tmax, lf_cycle);
    if (ms->parsed())
      return cmd_msescan(ms_data, ms_alpha, ms_parity, ms_ps, ms_cycle);
    if (est->parsed())
      return cmd_estimate(est_mode, est_p, est_pd, est_intensity,
                          est_linewidth, est_tau, est_wavelength, est_distance,
                          est_rate, est_n, est_t);
    if (val->parsed()) return cmd_validate(val_n, val_runs, val_ps, val_cycles);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
