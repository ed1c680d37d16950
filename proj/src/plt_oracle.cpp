#include "edgetune/plt_oracle.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace edgetune {

double noiseless_plt(const Configuration& c, const NetworkCondition& n,
                     const Website& w, const OracleParams& p) {
    const double loss = n.loss_rate;
    const double rtt_s = n.rtt_ms / 1000.0;
    const double link_bps = n.bandwidth_kbps * 1000.0;
    const double mss_bits = p.mss_bytes * 8.0;

    // 1. connection parallelism
    const int conns = c.http == HttpVersion::H1_1
                          ? std::min(p.http1_max_conns, w.object_count)
                          : 1;

    // 2. per-connection throughput cap by congestion control
    const double fair_bps = link_bps / conns;
    double cap_bps = fair_bps;
    switch (c.cc) {
        case CongestionControl::Reno:
            if (loss > 0.0)
                cap_bps = std::min(fair_bps,
                                   p.reno_loss_const * mss_bits /
                                       (rtt_s * std::sqrt(loss)));
            break;
        case CongestionControl::Cubic:
            if (loss > 0.0)
                cap_bps = std::min(fair_bps,
                                   p.cubic_loss_const * mss_bits /
                                       (rtt_s * std::sqrt(loss)));
            break;
        case CongestionControl::Vegas:
            cap_bps = loss < p.vegas_loss_knee
                          ? p.vegas_share * fair_bps
                          : p.vegas_share * fair_bps * (1.0 - loss);
            break;
        case CongestionControl::Bbr:
            cap_bps = loss < p.bbr_loss_knee ? p.bbr_share * fair_bps
                                             : p.bbr_cliff_share * fair_bps;
            break;
    }

    // 3. achieved throughput
    double thr_bps = std::min(link_bps, conns * cap_bps);
    if (c.autocorking == 0) thr_bps *= 1.0 - p.autocork_off_throughput_penalty;

    // 4. bytes to move
    double total_bytes =
        static_cast<double>(w.html_bytes) +
        static_cast<double>(w.object_count) * w.avg_object_bytes;
    if (c.http == HttpVersion::H2 && w.object_count > p.h2_mux_min_objects &&
        loss < p.h2_mux_max_loss)
        total_bytes *= p.h2_mux_gain;

    // 5/6. setup plus transfer. The transfer is the slower of the
    // slow-start doubling geometry (rtt-bound, from conns * icw) and the
    // achieved line rate (throughput-bound); splitting the total into a
    // line-rate "steady" part and the doubling excess keeps later terms
    // scale-correct while staying weakly decreasing in bandwidth.
    const double setup_ms = 2.0 * n.rtt_ms;
    const double initial_window_bytes = conns * c.icw * p.mss_bytes;
    const double doubling_ms =
        n.rtt_ms * std::log2(total_bytes / initial_window_bytes + 1.0);
    double steady_ms = total_bytes * 8.0 * 1000.0 / thr_bps;
    double ramp_ms = std::max(0.0, doubling_ms - steady_ms);

    // 7. initial-window overshoot against BDP + buffer
    const double bdp_bytes = link_bps * rtt_s / 8.0;
    const double buffer_bytes =
        std::max(16.0 * p.mss_bytes, p.buffer_factor * bdp_bytes);
    const double excess_bytes = std::max(
        0.0, conns * c.icw * p.mss_bytes - (bdp_bytes + buffer_bytes));
    double overshoot_ms = std::max(200.0, 2.0 * n.rtt_ms) * excess_bytes /
                          (bdp_bytes + buffer_bytes);
    if (c.pacing == Pacing::Fq) overshoot_ms *= 1.0 - p.pacing_overshoot_relief;

    // 8. h2 head-of-line amplification under loss
    const double h2_hol_ms =
        c.http == HttpVersion::H1_1
            ? 0.0
            : (setup_ms + ramp_ms + steady_ms) * p.h2_hol_alpha * loss *
                  std::min(w.object_count, 30) / 30.0;

    // 9. autocorking delay on small-object pages
    const double small_object_ms =
        (c.autocorking == 1 && w.avg_object_bytes < p.small_object_bytes)
            ? p.autocork_per_small_object_ms * w.object_count
            : 0.0;

    // 10. low-latency mode trims the transfer portion
    if (c.low_latency == 1) {
        const double g = 1.0 - p.low_latency_transfer_gain;
        ramp_ms *= g;
        steady_ms *= g;
    }

    // 11. slow_start_after_idle is inert in this model.
    return setup_ms + ramp_ms + steady_ms + overshoot_ms + h2_hol_ms +
           small_object_ms;
}

double noise_multiplier(const OracleParams& p, std::mt19937_64& rng) {
    double m = 1.0;
    if (p.noise_sigma_log > 0.0) {
        std::normal_distribution<double> n(0.0, p.noise_sigma_log);
        m = std::exp(n(rng));
    }
    if (p.tail_spike_prob > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < p.tail_spike_prob) {
            const double v = std::max(u(rng), 1e-12);
            m *= std::pow(v, -1.0 / p.tail_spike_pareto_alpha);
        }
    }
    return m;
}

double plt(const Configuration& c, const NetworkCondition& n, const Website& w,
           const OracleParams& p, std::mt19937_64& rng) {
    return noiseless_plt(c, n, w, p) * noise_multiplier(p, rng);
}

std::pair<Configuration, double> optimal_config(const NetworkCondition& n,
                                                const Website& w,
                                                const OracleParams& p) {
    Configuration best;
    double best_plt = std::numeric_limits<double>::infinity();
    for (int id = 0; id < 768; ++id) {
        const Configuration c = Configuration::from_id(id);
        const double v = noiseless_plt(c, n, w, p);
        if (v < best_plt) {
            best_plt = v;
            best = c;
        }
    }
    return {best, best_plt};
}

std::pair<Configuration, double> optimal_config_in(
    const std::vector<Configuration>& candidates, const NetworkCondition& n,
    const Website& w, const OracleParams& p) {
    if (candidates.empty())
        throw std::invalid_argument("optimal_config_in: empty candidate list");
    Configuration best;
    double best_plt = std::numeric_limits<double>::infinity();
    int best_id = std::numeric_limits<int>::max();
    for (const auto& c : candidates) {
        const double v = noiseless_plt(c, n, w, p);
        const int id = c.id();
        if (v < best_plt || (v == best_plt && id < best_id)) {
            best_plt = v;
            best = c;
            best_id = id;
        }
    }
    return {best, best_plt};
}

namespace {

std::size_t nearest_log_index(const std::vector<double>& axis, double x,
                              double offset = 0.0) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    const double lx = std::log(x + offset);
    for (std::size_t i = 0; i < axis.size(); ++i) {
        const double d = std::abs(std::log(axis[i] + offset) - lx);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

constexpr char kTensorMagic[8] = {'P', 'L', 'T', 'T', 'N', 'S', 'R', '1'};

std::uint64_t fnv1a(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

nlohmann::json oracle_params_to_json(const OracleParams& p) {
    return nlohmann::json{
        {"mss_bytes", p.mss_bytes},
        {"http1_max_conns", p.http1_max_conns},
        {"buffer_factor", p.buffer_factor},
        {"reno_loss_const", p.reno_loss_const},
        {"cubic_loss_const", p.cubic_loss_const},
        {"vegas_share", p.vegas_share},
        {"vegas_loss_knee", p.vegas_loss_knee},
        {"bbr_share", p.bbr_share},
        {"bbr_loss_knee", p.bbr_loss_knee},
        {"bbr_cliff_share", p.bbr_cliff_share},
        {"h2_mux_gain", p.h2_mux_gain},
        {"h2_mux_min_objects", p.h2_mux_min_objects},
        {"h2_mux_max_loss", p.h2_mux_max_loss},
        {"h2_hol_alpha", p.h2_hol_alpha},
        {"pacing_overshoot_relief", p.pacing_overshoot_relief},
        {"autocork_per_small_object_ms", p.autocork_per_small_object_ms},
        {"small_object_bytes", p.small_object_bytes},
        {"autocork_off_throughput_penalty", p.autocork_off_throughput_penalty},
        {"low_latency_transfer_gain", p.low_latency_transfer_gain},
        {"noise_sigma_log", p.noise_sigma_log},
        {"tail_spike_prob", p.tail_spike_prob},
        {"tail_spike_pareto_alpha", p.tail_spike_pareto_alpha}};
}

OracleParams oracle_params_from_json(const nlohmann::json& j) {
    OracleParams p;
    p.mss_bytes = j.value("mss_bytes", p.mss_bytes);
    p.http1_max_conns = j.value("http1_max_conns", p.http1_max_conns);
    p.buffer_factor = j.value("buffer_factor", p.buffer_factor);
    p.reno_loss_const = j.value("reno_loss_const", p.reno_loss_const);
    p.cubic_loss_const = j.value("cubic_loss_const", p.cubic_loss_const);
    p.vegas_share = j.value("vegas_share", p.vegas_share);
    p.vegas_loss_knee = j.value("vegas_loss_knee", p.vegas_loss_knee);
    p.bbr_share = j.value("bbr_share", p.bbr_share);
    p.bbr_loss_knee = j.value("bbr_loss_knee", p.bbr_loss_knee);
    p.bbr_cliff_share = j.value("bbr_cliff_share", p.bbr_cliff_share);
    p.h2_mux_gain = j.value("h2_mux_gain", p.h2_mux_gain);
    p.h2_mux_min_objects = j.value("h2_mux_min_objects", p.h2_mux_min_objects);
    p.h2_mux_max_loss = j.value("h2_mux_max_loss", p.h2_mux_max_loss);
    p.h2_hol_alpha = j.value("h2_hol_alpha", p.h2_hol_alpha);
    p.pacing_overshoot_relief =
        j.value("pacing_overshoot_relief", p.pacing_overshoot_relief);
    p.autocork_per_small_object_ms =
        j.value("autocork_per_small_object_ms", p.autocork_per_small_object_ms);
    p.small_object_bytes = j.value("small_object_bytes", p.small_object_bytes);
    p.autocork_off_throughput_penalty = j.value(
        "autocork_off_throughput_penalty", p.autocork_off_throughput_penalty);
    p.low_latency_transfer_gain =
        j.value("low_latency_transfer_gain", p.low_latency_transfer_gain);
    p.noise_sigma_log = j.value("noise_sigma_log", p.noise_sigma_log);
    p.tail_spike_prob = j.value("tail_spike_prob", p.tail_spike_prob);
    p.tail_spike_pareto_alpha =
        j.value("tail_spike_pareto_alpha", p.tail_spike_pareto_alpha);
    return p;
}

PLTTensor PLTTensor::build(std::vector<double> grid_bandwidth_kbps,
                           std::vector<double> grid_rtt_ms,
                           std::vector<double> grid_loss_rate,
                           std::vector<Website> websites,
                           const OracleParams& params) {
    if (grid_bandwidth_kbps.empty() || grid_rtt_ms.empty() ||
        grid_loss_rate.empty() || websites.empty())
        throw std::invalid_argument("tensor build: empty grid or website list");

    PLTTensor t;
    t.bw_ = std::move(grid_bandwidth_kbps);
    t.rtt_ = std::move(grid_rtt_ms);
    t.loss_ = std::move(grid_loss_rate);
    std::sort(t.bw_.begin(), t.bw_.end());
    std::sort(t.rtt_.begin(), t.rtt_.end());
    std::sort(t.loss_.begin(), t.loss_.end());
    t.websites_ = std::move(websites);
    t.params_ = params;

    const std::size_t entries = t.cell_count() * t.websites_.size() * 768;
    if (entries > 100000000ULL)
        throw std::invalid_argument("tensor build: more than 1e8 entries");

    t.values_.resize(entries);
    std::size_t idx = 0;
    for (double bw : t.bw_)
        for (double rtt : t.rtt_)
            for (double loss : t.loss_)
                for (const auto& site : t.websites_)
                    for (int id = 0; id < 768; ++id)
                        t.values_[idx++] = noiseless_plt(
                            Configuration::from_id(id),
                            NetworkCondition{bw, rtt, loss}, site, params);
    return t;
}

std::size_t PLTTensor::site_index(const std::string& website_id) const {
    for (std::size_t i = 0; i < websites_.size(); ++i)
        if (websites_[i].website_id == website_id) return i;
    throw std::invalid_argument("tensor lookup: unknown website " + website_id);
}

double PLTTensor::lookup(const Configuration& c, const NetworkCondition& n,
                         const std::string& website_id) const {
    const std::size_t bi = nearest_log_index(bw_, n.bandwidth_kbps);
    const std::size_t ri = nearest_log_index(rtt_, n.rtt_ms);
    // loss may be zero; shift into positive territory before the log
    const std::size_t li = nearest_log_index(loss_, n.loss_rate, 1e-4);
    const std::size_t cell = (bi * rtt_.size() + ri) * loss_.size() + li;
    const std::size_t site = site_index(website_id);
    return values_[(cell * websites_.size() + site) * 768 + c.id()];
}

void PLTTensor::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write(kTensorMagic, sizeof(kTensorMagic));
    auto write_u64 = [&](std::uint64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    auto write_axis = [&](const std::vector<double>& a) {
        write_u64(a.size());
        out.write(reinterpret_cast<const char*>(a.data()),
                  a.size() * sizeof(double));
    };
    write_axis(bw_);
    write_axis(rtt_);
    write_axis(loss_);
    write_u64(websites_.size());
    write_u64(values_.size());
    out.write(reinterpret_cast<const char*>(values_.data()),
              values_.size() * sizeof(double));

    nlohmann::json sites = nlohmann::json::array();
    for (const auto& w : websites_)
        sites.push_back({{"website_id", w.website_id},
                         {"object_count", w.object_count},
                         {"avg_object_bytes", w.avg_object_bytes},
                         {"html_bytes", w.html_bytes},
                         {"category", w.category}});
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a(
                      values_.data(), values_.size() * sizeof(double))));
    nlohmann::json side{{"grid_bandwidth_kbps", bw_},
                        {"grid_rtt_ms", rtt_},
                        {"grid_loss_rate", loss_},
                        {"websites", sites},
                        {"params", oracle_params_to_json(params_)},
                        {"value_hash_fnv1a", hash_hex}};
    std::ofstream sidecar(path + ".json");
    if (!sidecar) throw std::runtime_error("cannot open for write: " + path + ".json");
    sidecar << side.dump(2) << "\n";
}

PLTTensor PLTTensor::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tensor file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad tensor file magic");
    auto read_u64 = [&]() {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    auto read_axis = [&](std::vector<double>& a) {
        a.resize(read_u64());
        in.read(reinterpret_cast<char*>(a.data()), a.size() * sizeof(double));
    };
    PLTTensor t;
    read_axis(t.bw_);
    read_axis(t.rtt_);
    read_axis(t.loss_);
    const std::uint64_t nsites = read_u64();
    t.values_.resize(read_u64());
    in.read(reinterpret_cast<char*>(t.values_.data()),
            t.values_.size() * sizeof(double));
    if (!in) throw std::runtime_error("truncated tensor file");

    std::ifstream sidecar(path + ".json");
    if (!sidecar) throw std::runtime_error("missing tensor sidecar: " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(sidecar);
    t.params_ = oracle_params_from_json(side.at("params"));
    for (const auto& j : side.at("websites")) {
        Website w;
        w.website_id = j.at("website_id").get<std::string>();
        w.object_count = j.at("object_count").get<int>();
        w.avg_object_bytes = j.at("avg_object_bytes").get<long>();
        w.html_bytes = j.at("html_bytes").get<long>();
        w.category = j.value("category", "");
        t.websites_.push_back(std::move(w));
    }
    if (t.websites_.size() != nsites)
        throw std::runtime_error("tensor sidecar website count mismatch");
    return t;
}

}  // namespace edgetune
