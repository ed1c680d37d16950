#include "edgetune/workload.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace edgetune {

std::int64_t ClientSession::end_ms() const {
    std::int64_t t = arrival_ms;
    for (const auto& p : phases) t += p.duration_ms;
    return t;
}

Distribution Distribution::lognormal(double mu, double sigma) {
    Distribution d;
    d.kind = Kind::Lognormal;
    d.a = mu;
    d.b = sigma;
    return d;
}

Distribution Distribution::uniform(double a, double b) {
    Distribution d;
    d.kind = Kind::Uniform;
    d.a = a;
    d.b = b;
    return d;
}

Distribution Distribution::empirical(std::vector<double> values) {
    Distribution d;
    d.kind = Kind::Empirical;
    d.values = std::move(values);
    return d;
}

double Distribution::sample(std::mt19937_64& rng) const {
    switch (kind) {
        case Kind::Lognormal: {
            std::normal_distribution<double> n(a, b);
            return std::exp(n(rng));
        }
        case Kind::Uniform: {
            if (a == b) return a;
            std::uniform_real_distribution<double> u(a, b);
            return u(rng);
        }
        case Kind::Empirical: {
            if (values.empty())
                throw std::invalid_argument("empirical distribution is empty");
            std::uniform_int_distribution<std::size_t> u(0, values.size() - 1);
            return values[u(rng)];
        }
    }
    return a;
}

NetworkCondition clamp_condition(NetworkCondition c) {
    c.bandwidth_kbps = std::max(1.0, c.bandwidth_kbps);
    c.rtt_ms = std::max(1.0, c.rtt_ms);
    c.loss_rate = std::clamp(c.loss_rate, 0.0, 0.5);
    return c;
}

std::vector<ClientSession> generate_sessions(const WorkloadSpec& spec) {
    if (spec.websites.empty())
        throw std::invalid_argument("generate_sessions: empty website catalog");
    if (spec.session_count < 0)
        throw std::invalid_argument("generate_sessions: negative session count");

    std::mt19937_64 rng(spec.seed);
    const int clients =
        spec.client_count > 0 ? spec.client_count : spec.session_count;

    std::vector<NetworkCondition> base(clients);
    for (auto& c : base) {
        c.bandwidth_kbps = spec.bandwidth_kbps.sample(rng);
        c.rtt_ms = spec.rtt_ms.sample(rng);
        c.loss_rate = spec.loss_rate.sample(rng);
        c = clamp_condition(c);
    }

    auto jittered = [&](const NetworkCondition& c,
                        double sigma) -> NetworkCondition {
        if (sigma <= 0.0) return c;
        std::normal_distribution<double> n(0.0, sigma);
        NetworkCondition out = c;
        out.bandwidth_kbps *= std::exp(n(rng));
        out.rtt_ms *= std::exp(n(rng));
        out.loss_rate *= std::exp(n(rng));
        return clamp_condition(out);
    };

    std::exponential_distribution<double> interarrival(
        spec.arrival_rate_per_min / 60000.0);
    std::uniform_int_distribution<int> client_pick(0, clients - 1);
    std::uniform_int_distribution<std::size_t> site_pick(0,
                                                         spec.websites.size() - 1);

    std::vector<ClientSession> sessions;
    sessions.reserve(spec.session_count);
    double clock_ms = 0.0;
    std::int64_t last_arrival = -1;
    for (int i = 0; i < spec.session_count; ++i) {
        clock_ms += interarrival(rng);
        const int client = client_pick(rng);

        ClientSession s;
        s.client_id = "c" + std::to_string(client);
        s.website_id = spec.websites[site_pick(rng)].website_id;
        // strictly increasing integer arrivals keep (client, arrival)
        // unique, which the trace format relies on
        s.arrival_ms =
            std::max(static_cast<std::int64_t>(clock_ms), last_arrival + 1);
        last_arrival = s.arrival_ms;

        const NetworkCondition start =
            jittered(base[client], spec.client_jitter_scale);
        const double change_ms = spec.change_time_ms.sample(rng);
        if (change_ms < static_cast<double>(spec.session_horizon_ms) &&
            change_ms >= 1.0) {
            NetworkCondition post = jittered(start, spec.perturbation_scale);
            s.phases.push_back({start, static_cast<std::int64_t>(change_ms)});
            s.phases.push_back(
                {post, spec.session_horizon_ms -
                           static_cast<std::int64_t>(change_ms)});
        } else {
            s.phases.push_back({start, spec.session_horizon_ms});
        }
        sessions.push_back(std::move(s));
    }
    return sessions;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    return out;
}

[[noreturn]] void row_error(int line_no, const std::string& what) {
    throw std::runtime_error("trace line " + std::to_string(line_no) + ": " +
                             what);
}

}  // namespace

std::vector<ClientSession> ingest_trace(const std::string& path,
                                        std::int64_t last_phase_ms) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);

    struct Row {
        std::int64_t phase_start_ms;
        NetworkCondition condition;
    };
    // (client_id, arrival_ms, website_id) -> phase rows
    std::map<std::tuple<std::string, std::int64_t, std::string>, std::vector<Row>>
        grouped;
    std::vector<std::tuple<std::string, std::int64_t, std::string>> order;

    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line !=
                "client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,"
                "rtt_ms,loss_rate")
                row_error(line_no, "missing or malformed header");
            header_seen = true;
            continue;
        }
        auto fields = split_csv_row(line);
        if (fields.size() != 7) row_error(line_no, "expected 7 fields");
        Row row;
        std::int64_t arrival;
        std::string client = fields[0], site = fields[2];
        try {
            arrival = std::stoll(fields[1]);
            row.phase_start_ms = std::stoll(fields[3]);
            row.condition.bandwidth_kbps = std::stod(fields[4]);
            row.condition.rtt_ms = std::stod(fields[5]);
            row.condition.loss_rate = std::stod(fields[6]);
        } catch (const std::exception&) {
            row_error(line_no, "unparseable numeric field");
        }
        if (row.condition.loss_rate < 0.0 || row.condition.loss_rate > 0.5)
            row_error(line_no, "loss_rate out of range");
        if (row.condition.bandwidth_kbps <= 0.0)
            row_error(line_no, "bandwidth_kbps out of range");
        if (row.condition.rtt_ms <= 0.0) row_error(line_no, "rtt_ms out of range");
        if (row.phase_start_ms < 0) row_error(line_no, "negative phase start");

        auto key = std::make_tuple(client, arrival, site);
        if (grouped.find(key) == grouped.end()) order.push_back(key);
        grouped[key].push_back(row);
    }

    std::vector<ClientSession> sessions;
    sessions.reserve(order.size());
    for (const auto& key : order) {
        auto rows = grouped[key];
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            return a.phase_start_ms < b.phase_start_ms;
        });
        if (rows.front().phase_start_ms != 0)
            throw std::runtime_error("non-contiguous phases for client " +
                                     std::get<0>(key) +
                                     ": first phase must start at 0");
        ClientSession s;
        s.client_id = std::get<0>(key);
        s.arrival_ms = std::get<1>(key);
        s.website_id = std::get<2>(key);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::int64_t end = i + 1 < rows.size()
                                         ? rows[i + 1].phase_start_ms
                                         : rows[i].phase_start_ms + last_phase_ms;
            if (end <= rows[i].phase_start_ms)
                throw std::runtime_error("non-contiguous phases for client " +
                                         std::get<0>(key) +
                                         ": non-increasing phase starts");
            s.phases.push_back({rows[i].condition, end - rows[i].phase_start_ms});
        }
        sessions.push_back(std::move(s));
    }
    std::stable_sort(sessions.begin(), sessions.end(),
                     [](const ClientSession& a, const ClientSession& b) {
                         return a.arrival_ms < b.arrival_ms;
                     });
    return sessions;
}

void write_trace(const std::string& path,
                 const std::vector<ClientSession>& sessions) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,rtt_"
           "ms,loss_rate\n";
    char buf[256];
    for (const auto& s : sessions) {
        std::int64_t start = 0;
        for (const auto& p : s.phases) {
            std::snprintf(buf, sizeof(buf), "%s,%lld,%s,%lld,%.6f,%.6f,%.8f\n",
                          s.client_id.c_str(),
                          static_cast<long long>(s.arrival_ms),
                          s.website_id.c_str(), static_cast<long long>(start),
                          p.condition.bandwidth_kbps, p.condition.rtt_ms,
                          p.condition.loss_rate);
            out << buf;
            start += p.duration_ms;
        }
    }
}

NetworkCondition condition_at(const ClientSession& session, std::int64_t t_ms) {
    if (t_ms < session.arrival_ms)
        throw std::invalid_argument("condition_at: time before session arrival");
    std::int64_t start = session.arrival_ms;
    for (const auto& p : session.phases) {
        if (t_ms < start + p.duration_ms) return p.condition;
        start += p.duration_ms;
    }
    return session.phases.back().condition;  // last condition persists
}

Website website_from_json(const nlohmann::json& j) {
    Website w;
    w.website_id = j.at("website_id").get<std::string>();
    w.object_count = j.at("object_count").get<int>();
    w.avg_object_bytes = j.at("avg_object_bytes").get<long>();
    w.html_bytes = j.at("html_bytes").get<long>();
    w.category = j.value("category", "");
    if (w.object_count < 1 || w.avg_object_bytes <= 0 || w.html_bytes <= 0)
        throw std::invalid_argument("invalid website record: " + w.website_id);
    return w;
}

std::vector<Website> websites_from_json(const nlohmann::json& j) {
    std::vector<Website> out;
    for (const auto& item : j) out.push_back(website_from_json(item));
    return out;
}

Distribution distribution_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "lognormal")
        return Distribution::lognormal(j.at("mu").get<double>(),
                                       j.at("sigma").get<double>());
    if (kind == "uniform")
        return Distribution::uniform(j.at("a").get<double>(),
                                     j.at("b").get<double>());
    if (kind == "empirical")
        return Distribution::empirical(j.at("values").get<std::vector<double>>());
    throw std::invalid_argument("unknown distribution kind: " + kind);
}

WorkloadSpec workload_spec_from_json(const nlohmann::json& j,
                                     const std::string& base_dir) {
    WorkloadSpec spec;
    spec.bandwidth_kbps = distribution_from_json(j.at("bandwidth_kbps"));
    spec.rtt_ms = distribution_from_json(j.at("rtt_ms"));
    spec.loss_rate = distribution_from_json(j.at("loss_rate"));
    spec.session_count = j.at("session_count").get<int>();
    spec.client_count = j.value("client_count", 0);
    spec.arrival_rate_per_min =
        j.value("arrival_rate_per_min", spec.arrival_rate_per_min);
    spec.session_horizon_ms = j.value("session_horizon_ms",
                                      spec.session_horizon_ms);
    if (j.contains("change_time_ms"))
        spec.change_time_ms = distribution_from_json(j.at("change_time_ms"));
    spec.perturbation_scale =
        j.value("perturbation_scale", spec.perturbation_scale);
    spec.client_jitter_scale =
        j.value("client_jitter_scale", spec.client_jitter_scale);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("websites")) {
        spec.websites = websites_from_json(j.at("websites"));
    } else if (j.contains("websites_file")) {
        const auto path = std::filesystem::path(base_dir) /
                          j.at("websites_file").get<std::string>();
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open websites file: " +
                                     path.string());
        spec.websites = websites_from_json(nlohmann::json::parse(in));
    }
    return spec;
}

WorkloadSpec load_workload_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open workload spec: " + path);
    return workload_spec_from_json(
        nlohmann::json::parse(in),
        std::filesystem::path(path).parent_path().string());
}

}  // namespace edgetune
