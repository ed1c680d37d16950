#include "edgetune/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace edgetune {

namespace {

std::uint64_t fnv1a_str(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t h = seed ^ (salt + 0x9E3779B97F4A7C15ULL);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return h;
}

int pop_of_client(const std::string& client_id, int pops) {
    if (pops <= 1) return 0;
    // explicit "pop<k>:" prefix wins; otherwise hash the id
    if (client_id.rfind("pop", 0) == 0) {
        const auto colon = client_id.find(':');
        if (colon != std::string::npos && colon > 3) {
            try {
                const int p = std::stoi(client_id.substr(3, colon - 3));
                if (p >= 0 && p < pops) return p;
            } catch (const std::exception&) {
            }
        }
    }
    return static_cast<int>(fnv1a_str(client_id) % pops);
}

struct ClientEstimate {
    bool seen = false;
    NetworkCondition estimate;
};

struct ActiveSession {
    const ClientSession* session = nullptr;
    const Website* website = nullptr;
    int pop = 0;
    int class_id = -1;
    FeatureVector features;
    std::string arm;
    std::vector<Configuration> phase_configs;
    std::optional<Configuration> rule_decision;  // last known class decision
    std::size_t next_phase = 1;
};

// Per-PoP classifier state at the manager side.
struct PopLearning {
    std::optional<NCModel> nc;
    std::vector<PerformanceSample> pre_model;  // default-served telemetry
};

}  // namespace

ConfigSpace ExperimentConfig::config_space() const {
    if (!knob_mask) return ConfigSpace::full();
    return ConfigSpace::restricted(*knob_mask);
}

void ExperimentConfig::validate() const {
    if (!workload && trace_path.empty())
        throw ConfigError("experiment: need a workload spec or a trace path");
    if (workload && workload->websites.empty())
        throw ConfigError("experiment: workload has no websites");
    if (!workload && trace_websites.empty())
        throw ConfigError("experiment: trace runs need a website catalog");
    if (!trace_path.empty() && !workload &&
        !std::filesystem::exists(trace_path))
        throw ConfigError("experiment: trace file does not exist: " + trace_path);
    bool any_feature = false;
    for (bool b : feature_mask) any_feature |= b;
    if (!any_feature) throw ConfigError("experiment: empty feature mask");
    bool any_nc = false;
    for (bool b : nc_feature_mask) any_nc |= b;
    if (!any_nc) throw ConfigError("experiment: empty clustering feature mask");
    if (strategy.ensemble.epsilon < 0.0 || strategy.ensemble.epsilon > 1.0)
        throw ConfigError("experiment: epsilon out of [0,1]");
    if (topology.pops < 1) throw ConfigError("experiment: pops must be >= 1");
    if (topology.update_interval_ms <= 0)
        throw ConfigError("experiment: update interval must be > 0");
    if (topology.delay_ms < 0)
        throw ConfigError("experiment: delay must be >= 0");
    if (nc_k < 0 || nc_k > kClassStride)
        throw ConfigError("experiment: nc_k out of range");
    try {
        (void)config_space();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("experiment: ") + e.what());
    }
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    const std::vector<ClientSession> sessions =
        cfg.workload ? generate_sessions(*cfg.workload)
                     : ingest_trace(cfg.trace_path);
    const std::vector<Website>& catalog =
        cfg.workload ? cfg.workload->websites : cfg.trace_websites;
    std::map<std::string, const Website*> sites;
    for (const auto& w : catalog) sites[w.website_id] = &w;
    for (const auto& s : sessions)
        if (!sites.count(s.website_id))
            throw ConfigError("experiment: session references unknown website " +
                              s.website_id);

    const ConfigSpace space = cfg.config_space();
    const std::vector<Configuration> space_list = space.enumerate();
    const Configuration default_cfg = default_config();

    SimQueue queue;
    ControlPlane cp(cfg.topology, queue);

    StrategyOptions options = cfg.strategy;
    options.oracle = cfg.oracle;
    options.seed = cfg.seed;
    std::vector<std::unique_ptr<Strategy>> strategies;
    for (int m = 0; m < cp.manager_count(); ++m)
        strategies.push_back(make_strategy(cfg.algo, space, options));
    const bool needs_class = strategies[0]->needs_class();
    const bool needs_true = strategies[0]->needs_true_condition();

    std::vector<PopLearning> pop_learning(cfg.topology.pops);
    std::mt19937_64 noise_rng(mix_seed(cfg.seed, fnv1a_str("noise")));
    std::mt19937_64 estimator_rng(mix_seed(cfg.seed, fnv1a_str("estimator")));
    std::map<std::string, ClientEstimate> estimates;

    RunResult result;
    result.rows.reserve(sessions.size());
    std::vector<ActiveSession> active(sessions.size());

    auto pops_of_manager = [&](int m) {
        std::vector<int> pops;
        if (cfg.topology.mode == Topology::Mode::Global) {
            for (int p = 0; p < cfg.topology.pops; ++p) pops.push_back(p);
        } else {
            pops.push_back(m);
        }
        return pops;
    };

    // manager-side learning callbacks
    for (int m = 0; m < cp.manager_count(); ++m) {
        Manager& mgr = cp.manager(m);
        Strategy* strat = strategies[m].get();

        mgr.on_telemetry = [&, strat](const PerformanceSample& sample) {
            if (!needs_class) {
                strat->feedback(sample);
                return;
            }
            const int pop = pop_of_client(sample.client_id, cfg.topology.pops);
            PopLearning& pl = pop_learning[pop];
            if (!pl.nc) {
                pl.pre_model.push_back(sample);
                return;
            }
            PerformanceSample s = sample;
            if (s.class_id < 0)
                s.class_id = namespaced_class(pop, classify(*pl.nc, s.features));
            strat->feedback(s);
        };

        mgr.on_tick = [&, m, strat](std::int64_t) {
            bool fitted_now = false;
            if (needs_class) {
                for (int pop : pops_of_manager(m)) {
                    PopLearning& pl = pop_learning[pop];
                    if (pl.nc) continue;
                    const int wanted = std::max(cfg.nc_min_samples,
                                                cfg.nc_k > 0 ? cfg.nc_k : 2);
                    if (static_cast<int>(pl.pre_model.size()) < wanted) continue;

                    std::vector<FeatureVector> feats;
                    std::vector<double> plts;
                    for (const auto& s : pl.pre_model) {
                        feats.push_back(s.features);
                        plts.push_back(s.plt_ms);
                    }
                    int k = cfg.nc_k;
                    if (k <= 0)
                        k = choose_k(feats, plts, cfg.nc_cv_threshold,
                                     cfg.nc_k_max,
                                     mix_seed(cfg.seed, 0xCC00 + pop),
                                     cfg.nc_feature_mask);
                    k = std::min<int>(k, static_cast<int>(feats.size()));
                    std::mt19937_64 rng(mix_seed(cfg.seed, 0x4C0000 + pop));
                    pl.nc = fit_netclass(feats, k, rng, cfg.nc_feature_mask);
                    fitted_now = true;

                    // retro-classify the buffered default-served samples
                    for (auto& s : pl.pre_model) {
                        s.class_id =
                            namespaced_class(pop, classify(*pl.nc, s.features));
                        strat->feedback(s);
                    }
                    pl.pre_model.clear();
                }
            }

            bool any_nc = !needs_class;
            for (int pop : pops_of_manager(m))
                any_nc |= pop_learning[pop].nc.has_value();
            if (!any_nc) return;

            const DTree* tree = strat->on_model_update(cfg.feature_mask);
            const long new_samples = mgr.tick_sample_counts().empty()
                                         ? 0
                                         : mgr.tick_sample_counts().back().second;
            if (!fitted_now && new_samples == 0) return;  // nothing to publish

            if (cfg.drift_detection) {
                if (auto* bandit = ensemble_controller(*strat)) {
                    std::vector<int> ids;
                    for (const auto& [id, cs] : bandit->classes())
                        ids.push_back(id);
                    for (int id : ids)
                        if (bandit->maybe_reset_on_drift(id))
                            ++result.drift_resets;
                }
            }

            NCRuleMap rules;
            rules.version = mgr.next_version();
            for (int pop : pops_of_manager(m))
                if (pop_learning[pop].nc)
                    rules.nc_models.emplace(pop, *pop_learning[pop].nc);
            rules.class_decisions = strat->class_decisions();
            if (tree) rules.tree = *tree;
            mgr.push_rules(std::move(rules));
        };
    }
    cp.start();

    auto noise_factor = [&]() {
        return cfg.noise ? noise_multiplier(cfg.oracle, noise_rng) : 1.0;
    };

    // schedule every session's arrival, later phase starts, and end
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const ClientSession& s = sessions[i];
        ActiveSession& as = active[i];
        as.session = &s;
        as.website = sites.at(s.website_id);
        as.pop = pop_of_client(s.client_id, cfg.topology.pops);

        queue.schedule(s.arrival_ms, [&, i](std::int64_t now) {
            ActiveSession& as = active[i];
            const ClientSession& session = *as.session;

            ClientEstimate& est = estimates[session.client_id];
            if (!est.seen) {
                const NetworkCondition& truth = session.phases[0].condition;
                std::uniform_real_distribution<double> fuzz(
                    1.0 - cfg.estimator.first_sight_fuzz,
                    1.0 + cfg.estimator.first_sight_fuzz);
                est.estimate.bandwidth_kbps =
                    truth.bandwidth_kbps * fuzz(estimator_rng);
                est.estimate.rtt_ms = truth.rtt_ms * fuzz(estimator_rng);
                est.estimate.loss_rate = std::clamp(
                    truth.loss_rate * fuzz(estimator_rng), 0.0, 0.5);
                est.seen = true;
            }
            as.features.bandwidth_kbps = est.estimate.bandwidth_kbps;
            as.features.rtt_ms = est.estimate.rtt_ms;
            as.features.loss_rate = est.estimate.loss_rate;
            as.features.complexity =
                static_cast<double>(as.website->object_count) *
                as.website->avg_object_bytes;

            Agent& agent = cp.agent(as.pop);
            Strategy& strat = *strategies[cp.manager_of_pop(as.pop).index()];

            Configuration decided = default_cfg;
            if (needs_class) {
                const auto looked = agent.lookup(as.features);
                as.class_id = looked.class_id;
                if (looked.from_rule) as.rule_decision = looked.config;
                if (as.class_id < 0) {
                    as.arm = arm::kDefault;
                    decided = looked.config;
                } else {
                    DecisionContext ctx{session.client_id, as.class_id,
                                        as.features, nullptr, as.website, now};
                    auto [config, tag] = strat.decide(ctx);
                    decided = config;
                    as.arm = tag;
                }
            } else {
                as.class_id = agent.classify_features(as.features).value_or(-1);
                const NetworkCondition truth = session.phases[0].condition;
                DecisionContext ctx{session.client_id, as.class_id, as.features,
                                    needs_true ? &truth : nullptr, as.website,
                                    now};
                auto [config, tag] = strat.decide(ctx);
                decided = config;
                as.arm = tag;
            }
            as.phase_configs.push_back(decided);
            result.decisions.emplace_back(now, as.arm);
        });

        std::int64_t phase_start = s.arrival_ms;
        for (std::size_t ph = 1; ph < s.phases.size(); ++ph) {
            phase_start += s.phases[ph - 1].duration_ms;
            queue.schedule(phase_start, [&, i, ph](std::int64_t) {
                ActiveSession& as = active[i];
                Configuration next = as.phase_configs.back();
                if (cfg.algo == StrategyKind::Optimal) {
                    next = optimal_config_in(
                               space_list, as.session->phases[ph].condition,
                               *as.website, cfg.oracle)
                               .first;
                } else if (as.class_id >= 0) {
                    const auto& decisions =
                        cp.agent(as.pop).snapshot().class_decisions;
                    auto it = decisions.find(as.class_id);
                    if (it != decisions.end() &&
                        (!as.rule_decision || !(it->second == *as.rule_decision))) {
                        next = it->second;  // mid-session reconfiguration
                        as.rule_decision = it->second;
                    }
                }
                as.phase_configs.push_back(next);
            });
        }

        queue.schedule(s.end_ms(), [&, i](std::int64_t now) {
            ActiveSession& as = active[i];
            const ClientSession& session = *as.session;

            double total = 0.0;
            for (const auto& p : session.phases) total += p.duration_ms;

            double realized = 0.0, dflt = 0.0, optimal = 0.0;
            for (std::size_t ph = 0; ph < session.phases.size(); ++ph) {
                const auto& phase = session.phases[ph];
                const double w = phase.duration_ms / total;
                const double mult = noise_factor();
                realized += w * mult *
                            noiseless_plt(as.phase_configs[ph], phase.condition,
                                          *as.website, cfg.oracle);
                dflt += w * mult *
                        noiseless_plt(default_cfg, phase.condition, *as.website,
                                      cfg.oracle);
                optimal += w * mult *
                           optimal_config_in(space_list, phase.condition,
                                             *as.website, cfg.oracle)
                               .second;
            }

            ResultRow row;
            row.ts_ms = session.arrival_ms;
            row.client_id = session.client_id;
            row.class_id = as.class_id;
            row.website_id = session.website_id;
            row.algo = to_cstring(cfg.algo);
            row.arm = as.arm;
            for (const auto& c : as.phase_configs) row.config_ids.push_back(c.id());
            row.plt_ms = realized;
            row.default_plt_ms = dflt;
            row.optimal_plt_ms = optimal;
            result.rows.push_back(std::move(row));

            // fold observed conditions into the client's running estimate
            ClientEstimate& est = estimates[session.client_id];
            for (const auto& p : session.phases) {
                const double a = cfg.estimator.alpha;
                est.estimate.bandwidth_kbps =
                    a * p.condition.bandwidth_kbps +
                    (1.0 - a) * est.estimate.bandwidth_kbps;
                est.estimate.rtt_ms =
                    a * p.condition.rtt_ms + (1.0 - a) * est.estimate.rtt_ms;
                est.estimate.loss_rate =
                    a * p.condition.loss_rate + (1.0 - a) * est.estimate.loss_rate;
            }

            PerformanceSample sample;
            sample.client_id = session.client_id;
            sample.class_id = as.class_id;
            sample.features = as.features;
            sample.website_id = session.website_id;
            sample.config_id = as.phase_configs.front().id();
            sample.plt_ms = realized;
            sample.ts_ms = now;
            sample.arm = as.arm;
            sample.condition_changed = session.phases.size() > 1;
            cp.manager_of_pop(as.pop).send_telemetry(std::move(sample));
        });
    }

    std::int64_t horizon = 0;
    for (const auto& s : sessions) horizon = std::max(horizon, s.end_ms());
    queue.run_until(horizon + cfg.topology.delay_ms + 1);

    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const ResultRow& a, const ResultRow& b) {
                         return a.ts_ms < b.ts_ms;
                     });
    std::stable_sort(result.decisions.begin(), result.decisions.end(),
                     [](const auto& a, const auto& b) {
                         return a.first < b.first;
                     });
    for (int m = 0; m < cp.manager_count(); ++m) {
        result.tick_sample_counts[m] = cp.manager(m).tick_sample_counts();
        for (const auto& [class_id, config] : strategies[m]->class_decisions())
            result.final_class_decisions[class_id] = config.id();
    }
    return result;
}

void write_results_csv(const std::string& path, const RunResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << kResultsHeader << "\n";
    char buf[512];
    for (const auto& r : result.rows) {
        std::string ids;
        for (std::size_t i = 0; i < r.config_ids.size(); ++i) {
            if (i) ids += ';';
            ids += std::to_string(r.config_ids[i]);
        }
        std::snprintf(buf, sizeof(buf), "%lld,%s,%d,%s,%s,%s,%s,%.4f,%.4f,%.4f\n",
                      static_cast<long long>(r.ts_ms), r.client_id.c_str(),
                      r.class_id, r.website_id.c_str(), r.algo.c_str(),
                      r.arm.c_str(), ids.c_str(), r.plt_ms, r.default_plt_ms,
                      r.optimal_plt_ms);
        out << buf;
    }
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw std::runtime_error("bad results header in " + path);
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string field;
        ResultRow r;
        std::getline(is, field, ',');
        r.ts_ms = std::stoll(field);
        std::getline(is, r.client_id, ',');
        std::getline(is, field, ',');
        r.class_id = std::stoi(field);
        std::getline(is, r.website_id, ',');
        std::getline(is, r.algo, ',');
        std::getline(is, r.arm, ',');
        std::getline(is, field, ',');
        {
            std::istringstream ids(field);
            std::string id;
            while (std::getline(ids, id, ';'))
                r.config_ids.push_back(std::stoi(id));
        }
        std::getline(is, field, ',');
        r.plt_ms = std::stod(field);
        std::getline(is, field, ',');
        r.default_plt_ms = std::stod(field);
        std::getline(is, field, ',');
        r.optimal_plt_ms = std::stod(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

void run_experiment_to_file(const ExperimentConfig& cfg) {
    if (cfg.out_path.empty())
        throw ConfigError("experiment: no output path configured");
    const RunResult result = run_experiment(cfg);
    write_results_csv(cfg.out_path, result);

    nlohmann::json meta = experiment_config_to_json(cfg);
    meta.erase("workload");  // digest below stands in for the full spec
    char hash_hex[32];
    std::snprintf(
        hash_hex, sizeof(hash_hex), "%016llx",
        static_cast<unsigned long long>(
            fnv1a_str(experiment_config_to_json(cfg).dump())));
    meta["config_hash"] = hash_hex;
    meta["session_count"] = result.rows.size();
    meta["drift_resets"] = result.drift_resets;
    std::ofstream side(cfg.out_path + ".meta.json");
    if (!side)
        throw std::runtime_error("cannot open for write: " + cfg.out_path +
                                 ".meta.json");
    side << meta.dump(2) << "\n";
}

namespace {

nlohmann::json distribution_to_json(const Distribution& d) {
    switch (d.kind) {
        case Distribution::Kind::Lognormal:
            return {{"kind", "lognormal"}, {"mu", d.a}, {"sigma", d.b}};
        case Distribution::Kind::Uniform:
            return {{"kind", "uniform"}, {"a", d.a}, {"b", d.b}};
        case Distribution::Kind::Empirical:
            return {{"kind", "empirical"}, {"values", d.values}};
    }
    return {};
}

nlohmann::json workload_spec_to_json(const WorkloadSpec& spec) {
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& w : spec.websites)
        sites.push_back({{"website_id", w.website_id},
                         {"object_count", w.object_count},
                         {"avg_object_bytes", w.avg_object_bytes},
                         {"html_bytes", w.html_bytes},
                         {"category", w.category}});
    return nlohmann::json{
        {"bandwidth_kbps", distribution_to_json(spec.bandwidth_kbps)},
        {"rtt_ms", distribution_to_json(spec.rtt_ms)},
        {"loss_rate", distribution_to_json(spec.loss_rate)},
        {"session_count", spec.session_count},
        {"client_count", spec.client_count},
        {"arrival_rate_per_min", spec.arrival_rate_per_min},
        {"session_horizon_ms", spec.session_horizon_ms},
        {"change_time_ms", distribution_to_json(spec.change_time_ms)},
        {"perturbation_scale", spec.perturbation_scale},
        {"client_jitter_scale", spec.client_jitter_scale},
        {"seed", spec.seed},
        {"websites", sites}};
}

std::vector<std::string> feature_mask_names(const FeatureMask& mask) {
    static const char* names[] = {"bandwidth", "rtt", "loss", "complexity"};
    std::vector<std::string> out;
    for (int d = 0; d < kFeatureCount; ++d)
        if (mask[d]) out.push_back(names[d]);
    return out;
}

FeatureMask feature_mask_from_names(const std::vector<std::string>& names) {
    FeatureMask mask{false, false, false, false};
    for (const auto& f : names) {
        if (f == "bandwidth") mask[0] = true;
        else if (f == "rtt") mask[1] = true;
        else if (f == "loss") mask[2] = true;
        else if (f == "complexity") mask[3] = true;
        else throw ConfigError("unknown feature name: " + f);
    }
    return mask;
}

}  // namespace

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j{
        {"algo", to_cstring(cfg.algo)},
        {"oracle", oracle_params_to_json(cfg.oracle)},
        {"topology",
         {{"mode", cfg.topology.mode == Topology::Mode::Global ? "global"
                                                               : "local"},
          {"pops", cfg.topology.pops},
          {"delay_ms", cfg.topology.delay_ms},
          {"update_interval_ms", cfg.topology.update_interval_ms}}},
        {"epsilon", cfg.strategy.ensemble.epsilon},
        {"best_window", cfg.strategy.ensemble.best_window},
        {"mab_epsilon0", cfg.strategy.mab_epsilon0},
        {"cherrypick_init_sample", cfg.strategy.cherrypick_init_sample},
        {"cherrypick_ei_threshold", cfg.strategy.cherrypick_ei_threshold},
        {"feature_mask", feature_mask_names(cfg.feature_mask)},
        {"nc_feature_mask", feature_mask_names(cfg.nc_feature_mask)},
        {"nc_k", cfg.nc_k},
        {"nc_cv_threshold", cfg.nc_cv_threshold},
        {"nc_k_max", cfg.nc_k_max},
        {"nc_min_samples", cfg.nc_min_samples},
        {"noise", cfg.noise},
        {"drift_detection", cfg.drift_detection},
        {"estimator",
         {{"alpha", cfg.estimator.alpha},
          {"first_sight_fuzz", cfg.estimator.first_sight_fuzz}}},
        {"seed", cfg.seed},
        {"out", cfg.out_path}};
    if (cfg.knob_mask) j["knob_mask"] = *cfg.knob_mask;
    if (cfg.workload) j["workload"] = workload_spec_to_json(*cfg.workload);
    if (!cfg.trace_path.empty()) j["trace"] = cfg.trace_path;
    return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::string& base_dir) {
    ExperimentConfig cfg;
    try {
        if (j.contains("workload"))
            cfg.workload = workload_spec_from_json(j.at("workload"), base_dir);
        else if (j.contains("workload_file"))
            cfg.workload = load_workload_spec(
                (std::filesystem::path(base_dir) /
                 j.at("workload_file").get<std::string>())
                    .string());
        if (j.contains("trace"))
            cfg.trace_path = (std::filesystem::path(base_dir) /
                              j.at("trace").get<std::string>())
                                 .string();
        if (j.contains("websites_file")) {
            const auto path = std::filesystem::path(base_dir) /
                              j.at("websites_file").get<std::string>();
            std::ifstream in(path);
            if (!in)
                throw ConfigError("cannot open websites file: " + path.string());
            cfg.trace_websites = websites_from_json(nlohmann::json::parse(in));
        }
        if (j.contains("oracle"))
            cfg.oracle = oracle_params_from_json(j.at("oracle"));
        if (j.contains("algo"))
            cfg.algo = strategy_kind_from_name(j.at("algo").get<std::string>());
        if (j.contains("topology")) {
            const auto& t = j.at("topology");
            const std::string mode = t.value("mode", "global");
            if (mode == "global")
                cfg.topology.mode = Topology::Mode::Global;
            else if (mode == "local")
                cfg.topology.mode = Topology::Mode::LocalPerPop;
            else
                throw ConfigError("unknown topology mode: " + mode);
            cfg.topology.pops = t.value("pops", 1);
            cfg.topology.delay_ms = t.value("delay_ms", 0LL);
            cfg.topology.update_interval_ms =
                t.value("update_interval_ms", 120000LL);
        }
        cfg.strategy.ensemble.epsilon =
            j.value("epsilon", cfg.strategy.ensemble.epsilon);
        cfg.strategy.ensemble.best_window =
            j.value("best_window", cfg.strategy.ensemble.best_window);
        cfg.strategy.mab_epsilon0 =
            j.value("mab_epsilon0", cfg.strategy.mab_epsilon0);
        cfg.strategy.cherrypick_init_sample = j.value(
            "cherrypick_init_sample", cfg.strategy.cherrypick_init_sample);
        cfg.strategy.cherrypick_ei_threshold = j.value(
            "cherrypick_ei_threshold", cfg.strategy.cherrypick_ei_threshold);
        if (j.contains("feature_mask"))
            cfg.feature_mask = feature_mask_from_names(
                j.at("feature_mask").get<std::vector<std::string>>());
        if (j.contains("nc_feature_mask"))
            cfg.nc_feature_mask = feature_mask_from_names(
                j.at("nc_feature_mask").get<std::vector<std::string>>());
        if (j.contains("knob_mask"))
            cfg.knob_mask = j.at("knob_mask").get<std::vector<std::string>>();
        cfg.nc_k = j.value("nc_k", cfg.nc_k);
        cfg.nc_cv_threshold = j.value("nc_cv_threshold", cfg.nc_cv_threshold);
        cfg.nc_k_max = j.value("nc_k_max", cfg.nc_k_max);
        cfg.nc_min_samples = j.value("nc_min_samples", cfg.nc_min_samples);
        cfg.noise = j.value("noise", cfg.noise);
        cfg.drift_detection = j.value("drift_detection", cfg.drift_detection);
        if (j.contains("estimator")) {
            cfg.estimator.alpha =
                j.at("estimator").value("alpha", cfg.estimator.alpha);
            cfg.estimator.first_sight_fuzz = j.at("estimator").value(
                "first_sight_fuzz", cfg.estimator.first_sight_fuzz);
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.out_path = j.value("out", cfg.out_path);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open experiment config: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    return experiment_config_from_json(
        j, std::filesystem::path(path).parent_path().string());
}

std::vector<std::pair<std::string, RunResult>> ablate(
    const ExperimentConfig& base, const std::string& axis,
    const std::vector<std::vector<std::string>>& subsets) {
    if (axis != "features" && axis != "knobs")
        throw ConfigError("ablate: axis must be 'features' or 'knobs'");

    std::vector<std::pair<std::string, RunResult>> out;
    for (const auto& subset : subsets) {
        ExperimentConfig cfg = base;
        std::string name;
        for (const auto& s : subset) name += (name.empty() ? "" : "+") + s;
        if (name.empty()) name = "none";

        if (axis == "features") {
            FeatureMask mask{false, false, false, false};
            for (const auto& f : subset) {
                if (f == "bandwidth") mask[0] = true;
                else if (f == "rtt") mask[1] = true;
                else if (f == "loss") mask[2] = true;
                else if (f == "complexity") mask[3] = true;
                else throw ConfigError("ablate: unknown feature " + f);
            }
            bool any = false;
            for (bool b : mask) any |= b;
            if (!any) throw ConfigError("ablate: empty feature subset");
            cfg.feature_mask = mask;
            // clustering uses the subset's network dimensions; latency is
            // the fallback axis when the subset has none
            FeatureMask nc{mask[0], mask[1], mask[2], false};
            if (!nc[0] && !nc[1] && !nc[2]) nc[1] = true;
            cfg.nc_feature_mask = nc;
        } else {
            cfg.knob_mask = subset;  // an empty subset pins every knob
        }
        out.emplace_back(name, run_experiment(cfg));
    }
    return out;
}

}  // namespace edgetune
