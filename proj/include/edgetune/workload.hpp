#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace edgetune {

struct NetworkCondition {
    double bandwidth_kbps = 0.0;
    double rtt_ms = 0.0;
    double loss_rate = 0.0;  // clamped to [0, 0.5]
};

struct Website {
    std::string website_id;
    int object_count = 1;
    long avg_object_bytes = 1;
    long html_bytes = 1;
    std::string category;
};

struct SessionPhase {
    NetworkCondition condition;
    std::int64_t duration_ms = 0;
};

struct ClientSession {
    std::string client_id;
    std::string website_id;
    std::int64_t arrival_ms = 0;
    std::vector<SessionPhase> phases;  // contiguous from arrival_ms

    std::int64_t end_ms() const;
};

/// One sampling distribution: lognormal(mu, sigma), uniform(a, b), or an
/// empirical value list drawn uniformly.
struct Distribution {
    enum class Kind { Lognormal, Uniform, Empirical };
    Kind kind = Kind::Uniform;
    double a = 0.0;  // mu / lower bound
    double b = 0.0;  // sigma / upper bound
    std::vector<double> values;

    double sample(std::mt19937_64& rng) const;
    static Distribution lognormal(double mu, double sigma);
    static Distribution uniform(double a, double b);
    static Distribution empirical(std::vector<double> values);
};

struct WorkloadSpec {
    Distribution bandwidth_kbps = Distribution::uniform(8000, 8000);
    Distribution rtt_ms = Distribution::uniform(50, 50);
    Distribution loss_rate = Distribution::uniform(0, 0);
    int session_count = 0;
    int client_count = 0;  // 0: one fresh client per session
    double arrival_rate_per_min = 60.0;  // Poisson process
    std::int64_t session_horizon_ms = 120000;
    /// Mass of this distribution below session_horizon_ms is the
    /// probability of a mid-session condition change.
    Distribution change_time_ms = Distribution::uniform(1e12, 1e12);
    double perturbation_scale = 0.0;  // lognormal sigma on post-change dims
    double client_jitter_scale = 0.0;  // lognormal sigma around client base
    std::vector<Website> websites;
    std::uint64_t seed = 0;
};

/// Synthesizes sessions from the spec's distributions. Clients keep a
/// stable base condition; per-session conditions jitter around it.
/// Deterministic for a fixed seed.
std::vector<ClientSession> generate_sessions(const WorkloadSpec& spec);

/// Reads the phase-per-row trace CSV
/// (client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,rtt_ms,loss_rate)
/// and groups rows into sessions. Phase starts are relative to arrival
/// and must be contiguous; the final phase gets `last_phase_ms`.
std::vector<ClientSession> ingest_trace(const std::string& path,
                                        std::int64_t last_phase_ms = 60000);

void write_trace(const std::string& path,
                 const std::vector<ClientSession>& sessions);

/// Condition of the phase containing t_ms (half-open [start, start+dur)
/// intervals); past the last phase the last condition persists.
NetworkCondition condition_at(const ClientSession& session, std::int64_t t_ms);

NetworkCondition clamp_condition(NetworkCondition c);

Website website_from_json(const nlohmann::json& j);
std::vector<Website> websites_from_json(const nlohmann::json& j);
Distribution distribution_from_json(const nlohmann::json& j);

/// Parses a workload spec document. Websites come from a "websites"
/// array or a "websites_file" path (resolved relative to base_dir).
WorkloadSpec workload_spec_from_json(const nlohmann::json& j,
                                     const std::string& base_dir = ".");
WorkloadSpec load_workload_spec(const std::string& path);

}  // namespace edgetune
