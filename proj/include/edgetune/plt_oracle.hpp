#pragma once

#include "edgetune/config_space.hpp"
#include "edgetune/workload.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace edgetune {

/// Constants of the analytic page-load-time model. All phenomenology
/// lives here: per-algorithm loss response, slow-start ramp, buffer
/// overshoot, h2 multiplexing and head-of-line loss sensitivity, and the
/// noise process (lognormal body, Pareto spikes).
struct OracleParams {
    double mss_bytes = 1500;
    int http1_max_conns = 6;
    double buffer_factor = 1.0;

    double reno_loss_const = 1.22;
    double cubic_loss_const = 1.70;
    double vegas_share = 0.85;
    double vegas_loss_knee = 0.05;
    double bbr_share = 0.95;
    double bbr_loss_knee = 0.15;
    double bbr_cliff_share = 0.40;

    double h2_mux_gain = 0.85;
    int h2_mux_min_objects = 6;   // gain applies strictly above this
    double h2_mux_max_loss = 0.01;
    double h2_hol_alpha = 2.0;

    double pacing_overshoot_relief = 0.5;
    double autocork_per_small_object_ms = 0.5;
    long small_object_bytes = 2048;
    double autocork_off_throughput_penalty = 0.02;
    double low_latency_transfer_gain = 0.02;

    double noise_sigma_log = 0.1;
    double tail_spike_prob = 0.02;
    double tail_spike_pareto_alpha = 1.5;
};

nlohmann::json oracle_params_to_json(const OracleParams& p);
OracleParams oracle_params_from_json(const nlohmann::json& j);

/// Deterministic page load time in milliseconds.
double noiseless_plt(const Configuration& c, const NetworkCondition& n,
                     const Website& w, const OracleParams& p);

/// Multiplicative noise factor: lognormal body plus, with probability
/// tail_spike_prob, a Pareto(alpha, x_min=1) spike.
double noise_multiplier(const OracleParams& p, std::mt19937_64& rng);

/// Noisy observation: noiseless_plt times noise_multiplier.
double plt(const Configuration& c, const NetworkCondition& n, const Website& w,
           const OracleParams& p, std::mt19937_64& rng);

/// Exhaustive noiseless argmin over the full 768-point space, ties to the
/// lowest configuration id.
std::pair<Configuration, double> optimal_config(const NetworkCondition& n,
                                                const Website& w,
                                                const OracleParams& p);

/// Argmin over an explicit candidate list (knob-restricted spaces).
std::pair<Configuration, double> optimal_config_in(
    const std::vector<Configuration>& candidates, const NetworkCondition& n,
    const Website& w, const OracleParams& p);

/// Dense cache of noiseless PLT over a condition grid x website list x
/// all 768 configurations. Off-grid lookups snap per dimension by
/// log-space distance.
class PLTTensor {
  public:
    PLTTensor() = default;

    static PLTTensor build(std::vector<double> grid_bandwidth_kbps,
                           std::vector<double> grid_rtt_ms,
                           std::vector<double> grid_loss_rate,
                           std::vector<Website> websites,
                           const OracleParams& params);

    double lookup(const Configuration& c, const NetworkCondition& n,
                  const std::string& website_id) const;

    std::size_t cell_count() const { return bw_.size() * rtt_.size() * loss_.size(); }
    const std::vector<double>& values() const { return values_; }
    const OracleParams& params() const { return params_; }

    void save(const std::string& path) const;  // binary + JSON sidecar
    static PLTTensor load(const std::string& path);

  private:
    std::vector<double> bw_, rtt_, loss_;  // sorted grid axes
    std::vector<Website> websites_;
    OracleParams params_;
    std::vector<double> values_;  // [(cell * nsites + site) * 768 + config]

    std::size_t site_index(const std::string& website_id) const;
};

}  // namespace edgetune
