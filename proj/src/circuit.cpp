#include "ionmpt/circuit.hpp"

#include <chrono>
#include <cmath>

namespace ionmpt {

void CircuitConfig::validate() const {
  if (n_sites < 4 || n_sites % 2 != 0)
    throw std::invalid_argument("config: n_sites must be even and >= 4");
  if (meas_rate < 0.0 || meas_rate > 1.0)
    throw std::invalid_argument("config: meas_rate must lie in [0,1]");
  if (time_cycles < 0)
    throw std::invalid_argument("config: time_cycles must be >= 0");
  if (!(truncation.cutoff >= 0.0))
    throw std::invalid_argument("config: cutoff must be >= 0");
  if (truncation.max_bond && *truncation.max_bond < 1)
    throw std::invalid_argument("config: max_bond must be >= 1");
  if (crosstalk_rate < 0.0 || crosstalk_rate > 1.0)
    throw std::invalid_argument("config: crosstalk_rate must lie in [0,1]");
  if (renyi_alphas.empty())
    throw std::invalid_argument("config: need at least one alpha");
  for (double a : renyi_alphas)
    if (!(a > 0.0))
      throw std::invalid_argument("config: alpha must be positive");
  if (entropy_cut != 0 && (entropy_cut < 1 || entropy_cut >= n_sites))
    throw std::invalid_argument("config: entropy_cut must be interior");
  if (bond_budget < 0 || wall_budget_s < 0.0)
    throw std::invalid_argument("config: budgets must be >= 0");
}

std::vector<double> MpsCircuitState::entropies(int cut,
                                               const std::vector<double>& alphas) {
  const SchmidtSpectrum spec = state_.schmidt_spectrum(cut);
  std::vector<double> out;
  out.reserve(alphas.size());
  for (double a : alphas) out.push_back(renyi_entropy(spec, a));
  return out;
}

std::vector<double> DenseCircuitState::entropies(int cut,
                                                 const std::vector<double>& alphas) {
  const SchmidtSpectrum spec = state_.schmidt_spectrum(cut);
  std::vector<double> out;
  out.reserve(alphas.size());
  for (double a : alphas) out.push_back(renyi_entropy(spec, a));
  return out;
}

int DenseCircuitState::max_bond() const {
  // Exact states have no truncation; report the worst-case Schmidt rank so
  // both backends expose the same signal shape.
  const int n = state_.n_sites();
  return 1 << (n / 2 < n - n / 2 ? n / 2 : n - n / 2);
}

std::unique_ptr<CircuitState> make_state(Backend backend, const CircuitConfig& config) {
  if (backend == Backend::Mps)
    return std::make_unique<MpsCircuitState>(config.n_sites, config.truncation);
  return std::make_unique<DenseCircuitState>(config.n_sites);
}

void unitary_layer(CircuitState& state, const LayerPlan& plan) {
  for (const GateSpec& g : plan.gates) state.apply_two_site(g.left_site, g.matrix);
}

std::vector<MeasurementEvent> measurement_layer(CircuitState& state,
                                                TrajectoryStreams& streams,
                                                const MeasLayerOptions& options) {
  const int n = state.n_sites();
  std::vector<char> flagged(n, 0);
  // one location draw per site, site order, regardless of rate
  for (int j = 0; j < n; ++j)
    flagged[j] = streams.locations.bernoulli(options.meas_rate) ? 1 : 0;

  std::vector<char> crosstalk_hit(n, 0);
  std::vector<MeasurementEvent> events;
  for (int j = 0; j < n; ++j) {
    if (!flagged[j]) continue;
    const int outcome = state.measure_with_uniform(j, streams.outcomes.uniform());
    events.push_back({options.cycle, options.half, j, outcome, true});
    if (options.reset) state.reset_site(j);

    if (options.crosstalk_rate > 0.0) {
      if (streams.crosstalk.bernoulli(options.crosstalk_rate)) {
        int nb;
        if (j == 0) nb = 1;
        else if (j == n - 1) nb = n - 2;
        else nb = streams.crosstalk.uniform() < 0.5 ? j - 1 : j + 1;
        if (!flagged[nb] && !crosstalk_hit[nb]) {
          const int nb_outcome =
              state.measure_with_uniform(nb, streams.crosstalk.uniform());
          crosstalk_hit[nb] = 1;
          events.push_back({options.cycle, options.half, nb, nb_outcome, false});
          if (options.reset) state.reset_site(nb);
        }
      }
    }
  }
  return events;
}

TrajectoryRecord run_trajectory(const CircuitConfig& config, Backend backend) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_s = [&start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };

  TrajectoryStreams streams = TrajectoryStreams::from_seed(config.master_seed);
  std::unique_ptr<CircuitState> state = make_state(backend, config);

  TrajectoryRecord rec;
  rec.config = config;
  rec.seed = config.master_seed;
  rec.entropy_series.resize(config.renyi_alphas.size());

  const int n = config.n_sites;
  const int cycles = config.cycles();
  const int cut = config.cut();

  for (int t = 0; t < cycles && rec.complete; ++t) {
    for (LayerHalf half : {LayerHalf::Even, LayerHalf::Odd}) {
      const LayerParity parity =
          half == LayerHalf::Even ? LayerParity::Even : LayerParity::Odd;
      unitary_layer(*state, plan_layer(parity, n, streams.angles));

      MeasLayerOptions mo;
      mo.meas_rate = config.meas_rate;
      mo.reset = config.reset_after_measure;
      mo.crosstalk_rate = config.crosstalk_rate;
      mo.cycle = t;
      mo.half = half;
      auto events = measurement_layer(*state, streams, mo);
      rec.n_events += static_cast<long>(events.size());
      if (config.record_events)
        rec.events.insert(rec.events.end(), events.begin(), events.end());

      rec.max_bond_seen = std::max(rec.max_bond_seen, state->max_bond());
      if (config.bond_budget > 0 && state->max_bond() > config.bond_budget) {
        rec.complete = false;
        rec.abort_reason = "bond_budget";
        break;
      }
      if (config.wall_budget_s > 0.0 && elapsed_s() > config.wall_budget_s) {
        rec.complete = false;
        rec.abort_reason = "wall_budget";
        break;
      }
    }
    if (!rec.complete) break;
    const std::vector<double> s = state->entropies(cut, config.renyi_alphas);
    for (std::size_t i = 0; i < s.size(); ++i) rec.entropy_series[i].push_back(s[i]);
    rec.max_bond_seen = std::max(rec.max_bond_seen, state->max_bond());
  }

  rec.final_bond = state->max_bond();
  rec.total_discarded_weight = state->discarded_weight();
  rec.wall_time_s = elapsed_s();
  return rec;
}

double effective_rate(double p, double p_d) {
  if (p < 0.0 || p > 1.0 || p_d < 0.0 || p_d > 1.0)
    throw std::invalid_argument("effective_rate: rates must lie in [0,1]");
  return (1.0 + p_d - p * p_d) * p;
}

double coupled_fidelity_run(const CircuitConfig& config) {
  config.validate();
  if (config.n_sites > DenseState::kMaxSites)
    throw CapabilityError("coupled_fidelity_run: chain too large for the dense oracle");

  TrajectoryStreams streams = TrajectoryStreams::from_seed(config.master_seed);
  DenseState ideal(config.n_sites, 0);
  DenseState noisy(config.n_sites, 0);

  const int n = config.n_sites;
  const int cycles = config.cycles();

  for (int t = 0; t < cycles; ++t) {
    for (LayerHalf half : {LayerHalf::Even, LayerHalf::Odd}) {
      const LayerParity parity =
          half == LayerHalf::Even ? LayerParity::Even : LayerParity::Odd;
      const LayerPlan plan = plan_layer(parity, n, streams.angles);
      for (const GateSpec& g : plan.gates) {
        ideal.apply_two_site(g.left_site, g.matrix);
        noisy.apply_two_site(g.left_site, g.matrix);
      }

      std::vector<char> flagged(n, 0);
      for (int j = 0; j < n; ++j)
        flagged[j] = streams.locations.bernoulli(config.meas_rate) ? 1 : 0;

      std::vector<char> crosstalk_hit(n, 0);
      for (int j = 0; j < n; ++j) {
        if (!flagged[j]) continue;
        // Shared uniform: both copies collapse with the same draw, each by
        // its own Born weights, so they stay comparable trajectory-wise.
        const double u = streams.outcomes.uniform();
        ideal.measure_with_uniform(j, u);
        noisy.measure_with_uniform(j, u);
        if (config.reset_after_measure) {
          ideal.reset_site(j);
          noisy.reset_site(j);
        }
        if (config.crosstalk_rate > 0.0 &&
            streams.crosstalk.bernoulli(config.crosstalk_rate)) {
          int nb;
          if (j == 0) nb = 1;
          else if (j == n - 1) nb = n - 2;
          else nb = streams.crosstalk.uniform() < 0.5 ? j - 1 : j + 1;
          if (!flagged[nb] && !crosstalk_hit[nb]) {
            noisy.measure_with_uniform(nb, streams.crosstalk.uniform());
            crosstalk_hit[nb] = 1;
            if (config.reset_after_measure) noisy.reset_site(nb);
          }
        }
      }
    }
  }
  return fidelity(ideal, noisy);
}

}  // namespace ionmpt
