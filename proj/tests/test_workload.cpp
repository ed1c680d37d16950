#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edgetune/workload.hpp"

#include <filesystem>
#include <fstream>

using namespace edgetune;

namespace {

WorkloadSpec base_spec() {
    WorkloadSpec spec;
    spec.session_count = 200;
    spec.client_count = 20;
    spec.arrival_rate_per_min = 600;
    spec.session_horizon_ms = 120000;
    spec.bandwidth_kbps = Distribution::lognormal(std::log(8000.0), 0.5);
    spec.rtt_ms = Distribution::lognormal(std::log(100.0), 0.4);
    spec.loss_rate = Distribution::uniform(0.0, 0.05);
    spec.websites = {{"a", 10, 4000, 20000, "news"},
                     {"b", 80, 12000, 60000, "shopping"}};
    spec.seed = 42;
    return spec;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("zero change probability yields single-phase sessions") {
    WorkloadSpec spec = base_spec();
    spec.change_time_ms = Distribution::uniform(1e12, 1e12);  // never in horizon
    for (const auto& s : generate_sessions(spec)) {
        CHECK(s.phases.size() == 1);
        CHECK(s.phases[0].duration_ms == spec.session_horizon_ms);
    }
}

TEST_CASE("generation is deterministic per seed") {
    WorkloadSpec spec = base_spec();
    spec.change_time_ms = Distribution::uniform(30000, 240000);
    spec.perturbation_scale = 0.3;
    const auto a = generate_sessions(spec);
    const auto b = generate_sessions(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].client_id == b[i].client_id);
        CHECK(a[i].arrival_ms == b[i].arrival_ms);
        REQUIRE(a[i].phases.size() == b[i].phases.size());
        for (std::size_t ph = 0; ph < a[i].phases.size(); ++ph)
            CHECK(a[i].phases[ph].condition.bandwidth_kbps ==
                  b[i].phases[ph].condition.bandwidth_kbps);
    }
    spec.seed = 43;
    const auto c = generate_sessions(spec);
    bool any_differs = false;
    for (std::size_t i = 0; i < a.size() && !any_differs; ++i)
        any_differs = a[i].phases[0].condition.bandwidth_kbps !=
                      c[i].phases[0].condition.bandwidth_kbps;
    CHECK(any_differs);
}

TEST_CASE("degenerate distributions pin every phase") {
    WorkloadSpec spec = base_spec();
    spec.bandwidth_kbps = Distribution::uniform(1000, 1000);
    spec.change_time_ms = Distribution::uniform(30000, 60000);  // always change
    spec.perturbation_scale = 0.0;
    for (const auto& s : generate_sessions(spec))
        for (const auto& p : s.phases) CHECK(p.condition.bandwidth_kbps == 1000);
}

TEST_CASE("two-phase sessions split the horizon at the change time") {
    WorkloadSpec spec = base_spec();
    spec.change_time_ms = Distribution::uniform(40000, 50000);
    spec.perturbation_scale = 0.25;
    int two_phase = 0;
    for (const auto& s : generate_sessions(spec)) {
        REQUIRE(s.phases.size() == 2);
        ++two_phase;
        CHECK(s.phases[0].duration_ms >= 40000);
        CHECK(s.phases[0].duration_ms <= 50000);
        CHECK(s.phases[0].duration_ms + s.phases[1].duration_ms ==
              spec.session_horizon_ms);
    }
    CHECK(two_phase == spec.session_count);
}

TEST_CASE("empty website catalog is rejected") {
    WorkloadSpec spec = base_spec();
    spec.websites.clear();
    CHECK_THROWS(generate_sessions(spec));
}

TEST_CASE("trace ingestion groups contiguous phases") {
    const auto path = write_temp(
        "edgetune_trace_ok.csv",
        "client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,rtt_ms,"
        "loss_rate\n"
        "# comment line\n"
        "c1,0,siteA,0,5000,80,0.01\n"
        "c1,0,siteA,60000,2500,160,0.02\n");
    const auto sessions = ingest_trace(path);
    REQUIRE(sessions.size() == 1);
    const auto& s = sessions[0];
    CHECK(s.client_id == "c1");
    CHECK(s.website_id == "siteA");
    REQUIRE(s.phases.size() == 2);
    CHECK(s.phases[0].duration_ms == 60000);
    CHECK(s.phases[0].condition.bandwidth_kbps == 5000);
    CHECK(s.phases[1].condition.rtt_ms == 160);
    std::filesystem::remove(path);
}

TEST_CASE("empty trace file yields no sessions") {
    const auto path = write_temp(
        "edgetune_trace_empty.csv",
        "client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,rtt_ms,"
        "loss_rate\n");
    CHECK(ingest_trace(path).empty());
    std::filesystem::remove(path);
}

TEST_CASE("out-of-range loss is reported with its line number") {
    const auto path = write_temp(
        "edgetune_trace_loss.csv",
        "client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,rtt_ms,"
        "loss_rate\n"
        "c1,0,siteA,0,5000,80,1.2\n");
    CHECK_THROWS_WITH(ingest_trace(path),
                      doctest::Contains("loss_rate out of range"));
    CHECK_THROWS_WITH(ingest_trace(path), doctest::Contains("line 2"));
    std::filesystem::remove(path);
}

TEST_CASE("malformed rows are rejected with their line number") {
    const auto path = write_temp(
        "edgetune_trace_bad.csv",
        "client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,rtt_ms,"
        "loss_rate\n"
        "c1,0,siteA,0,5000,80,0.01\n"
        "c2,zero,siteA,0,5000,80,0.01\n");
    CHECK_THROWS_WITH(ingest_trace(path), doctest::Contains("line 3"));
    std::filesystem::remove(path);
}

TEST_CASE("non-contiguous phases are rejected") {
    const auto path = write_temp(
        "edgetune_trace_gap.csv",
        "client_id,arrival_ms,website_id,phase_start_ms,bandwidth_kbps,rtt_ms,"
        "loss_rate\n"
        "c1,0,siteA,5000,5000,80,0.01\n");
    CHECK_THROWS_WITH(ingest_trace(path), doctest::Contains("non-contiguous"));
    std::filesystem::remove(path);
}

TEST_CASE("trace round-trips through write_trace") {
    WorkloadSpec spec = base_spec();
    spec.change_time_ms = Distribution::uniform(30000, 240000);
    spec.perturbation_scale = 0.3;
    const auto sessions = generate_sessions(spec);
    const auto path =
        (std::filesystem::temp_directory_path() / "edgetune_rt.csv").string();
    write_trace(path, sessions);
    const auto back = ingest_trace(path);
    REQUIRE(back.size() == sessions.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].client_id == sessions[i].client_id);
        CHECK(back[i].phases.size() == sessions[i].phases.size());
        CHECK(back[i].phases[0].condition.rtt_ms ==
              doctest::Approx(sessions[i].phases[0].condition.rtt_ms)
                  .epsilon(1e-6));
    }
    std::filesystem::remove(path);
}

TEST_CASE("condition_at respects half-open phase intervals") {
    ClientSession s;
    s.client_id = "c";
    s.website_id = "w";
    s.arrival_ms = 1000;
    s.phases = {{NetworkCondition{5000, 80, 0.0}, 60000},
                {NetworkCondition{2500, 160, 0.1}, 30000}};

    CHECK(condition_at(s, 1000).bandwidth_kbps == 5000);
    CHECK(condition_at(s, 60999).bandwidth_kbps == 5000);
    // boundary belongs to the second phase
    CHECK(condition_at(s, 61000).bandwidth_kbps == 2500);
    // past the end the last condition persists
    CHECK(condition_at(s, 1000000).rtt_ms == 160);
    CHECK_THROWS(condition_at(s, 999));
}

TEST_CASE("workload spec parses from JSON") {
    const auto sites = write_temp("edgetune_sites.json",
                                  R"([{"website_id":"x","object_count":5,
                                       "avg_object_bytes":3000,
                                       "html_bytes":15000,
                                       "category":"search"}])");
    const auto spec_path = write_temp(
        "edgetune_spec.json",
        R"({"session_count": 10,
            "client_count": 3,
            "seed": 7,
            "bandwidth_kbps": {"kind":"lognormal","mu":9.0,"sigma":0.5},
            "rtt_ms": {"kind":"uniform","a":50,"b":150},
            "loss_rate": {"kind":"empirical","values":[0.0,0.01,0.05]},
            "websites_file": "edgetune_sites.json"})");
    const WorkloadSpec spec = load_workload_spec(spec_path);
    CHECK(spec.session_count == 10);
    CHECK(spec.client_count == 3);
    CHECK(spec.seed == 7);
    CHECK(spec.websites.size() == 1);
    CHECK(spec.websites[0].website_id == "x");
    const auto sessions = generate_sessions(spec);
    CHECK(sessions.size() == 10);
    std::filesystem::remove(sites);
    std::filesystem::remove(spec_path);
}
