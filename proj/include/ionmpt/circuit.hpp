#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ionmpt/dense.hpp"
#include "ionmpt/gates.hpp"
#include "ionmpt/mps.hpp"
#include "ionmpt/random.hpp"

namespace ionmpt {

enum class Backend { Mps, Dense };

struct CircuitConfig {
  int n_sites = 0;
  double meas_rate = 0.0;      // per-site monitored measurement probability
  int time_cycles = 0;         // 0 -> 2 * n_sites
  TruncationPolicy truncation;
  bool reset_after_measure = false;
  double crosstalk_rate = 0.0;  // probability a measurement disturbs a neighbor
  std::vector<double> renyi_alphas = {1.0, 2.0};
  int entropy_cut = 0;          // 0 -> half chain
  std::uint64_t master_seed = 0;
  bool record_events = true;    // keep the full event list in the record
  int bond_budget = 0;          // abort the trajectory beyond this bond (0 = off)
  double wall_budget_s = 0.0;   // abort the trajectory beyond this time (0 = off)

  int cycles() const { return time_cycles > 0 ? time_cycles : 2 * n_sites; }
  int cut() const { return entropy_cut > 0 ? entropy_cut : n_sites / 2; }
  void validate() const;
};

// Which half of the cycle a measurement layer followed.
enum class LayerHalf { Even, Odd };

struct MeasurementEvent {
  int cycle = 0;
  LayerHalf half = LayerHalf::Even;
  int site = 0;
  int outcome = 0;      // +-1
  bool monitored = true;  // false for crosstalk-induced measurements
};

struct TrajectoryRecord {
  CircuitConfig config;
  std::uint64_t seed = 0;
  int run_index = -1;  // set by ensemble sweeps
  // entropy_series[i][t]: S_alpha for renyi_alphas[i] after cycle t
  std::vector<std::vector<double>> entropy_series;
  std::vector<MeasurementEvent> events;
  long n_events = 0;
  int max_bond_seen = 1;
  int final_bond = 1;  // bond dimension of the state after the last cycle
  double total_discarded_weight = 0.0;
  double wall_time_s = 0.0;
  bool complete = true;
  std::string abort_reason;
};

// Backend-neutral view of an evolving trajectory state, so the layer and
// trajectory drivers are written once and validated against both engines.
class CircuitState {
 public:
  virtual ~CircuitState() = default;
  virtual int n_sites() const = 0;
  virtual void apply_two_site(int site, const Mat4& u) = 0;
  virtual int measure_with_uniform(int site, double u) = 0;
  virtual void reset_site(int site) = 0;
  // entropies at one cut for several alpha, from a single spectrum
  virtual std::vector<double> entropies(int cut, const std::vector<double>& alphas) = 0;
  virtual int max_bond() const = 0;
  virtual double discarded_weight() const = 0;
};

class MpsCircuitState final : public CircuitState {
 public:
  MpsCircuitState(int n_sites, TruncationPolicy policy)
      : policy_(policy), state_(product_state(n_sites, 0)) {}

  int n_sites() const override { return state_.n_sites(); }
  void apply_two_site(int site, const Mat4& u) override {
    discarded_ += state_.apply_two_site(site, u, policy_);
  }
  int measure_with_uniform(int site, double u) override {
    return state_.measure_with_uniform(site, u);
  }
  void reset_site(int site) override { state_.reset_site(site); }
  std::vector<double> entropies(int cut, const std::vector<double>& alphas) override;
  int max_bond() const override { return state_.max_bond(); }
  double discarded_weight() const override { return discarded_; }

  MpsState& state() { return state_; }

 private:
  TruncationPolicy policy_;
  MpsState state_;
  double discarded_ = 0.0;
};

class DenseCircuitState final : public CircuitState {
 public:
  explicit DenseCircuitState(int n_sites) : state_(n_sites, 0) {}

  int n_sites() const override { return state_.n_sites(); }
  void apply_two_site(int site, const Mat4& u) override {
    state_.apply_two_site(site, u);
  }
  int measure_with_uniform(int site, double u) override {
    return state_.measure_with_uniform(site, u);
  }
  void reset_site(int site) override { state_.reset_site(site); }
  std::vector<double> entropies(int cut, const std::vector<double>& alphas) override;
  int max_bond() const override;
  double discarded_weight() const override { return 0.0; }

  DenseState& state() { return state_; }

 private:
  DenseState state_;
};

std::unique_ptr<CircuitState> make_state(Backend backend, const CircuitConfig& config);

void unitary_layer(CircuitState& state, const LayerPlan& plan);

struct MeasLayerOptions {
  double meas_rate = 0.0;
  bool reset = false;
  double crosstalk_rate = 0.0;
  int cycle = 0;
  LayerHalf half = LayerHalf::Even;
};

// One measurement layer: every site is flagged independently from the
// location stream (exactly one draw per site, in site order); flagged sites
// are measured in ascending order with outcome-stream randomness. Each
// monitored measurement may disturb one neighbor, decided by the crosstalk
// stream: a trigger draw always, a direction draw only away from the chain
// ends, and the neighbor's own outcome draw when it actually gets measured.
// A site is never measured twice in the same layer.
std::vector<MeasurementEvent> measurement_layer(CircuitState& state,
                                                TrajectoryStreams& streams,
                                                const MeasLayerOptions& options);

TrajectoryRecord run_trajectory(const CircuitConfig& config, Backend backend);

// Fraction of sites measured per layer once crosstalk is included,
// (1 + p_d - p * p_d) * p, exact for the bulk to first order in p_d.
double effective_rate(double p, double p_d);

// Evolves an ideal and a crosstalk-afflicted copy of the same trajectory in
// lockstep (shared angle, location and outcome draws) and returns the final
// overlap |<ideal|noisy>|^2. Dense backend; n_sites <= 20.
double coupled_fidelity_run(const CircuitConfig& config);

}  // namespace ionmpt
