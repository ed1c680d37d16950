// Command-line front end: workload generation, oracle tensor builds,
// experiment runs, reporting and ablations.

#include "edgetune/harness.hpp"
#include "edgetune/plt_oracle.hpp"
#include "edgetune/report.hpp"
#include "edgetune/workload.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw edgetune::ConfigError("empty grid axis: " + csv);
    return out;
}

std::vector<std::vector<std::string>> parse_subsets(const std::string& arg) {
    // "cc;cc,icw;" -> {{"cc"}, {"cc","icw"}, {}}
    std::vector<std::vector<std::string>> out;
    std::stringstream ss(arg);
    std::string subset;
    while (std::getline(ss, subset, ';')) {
        std::vector<std::string> names;
        std::stringstream inner(subset);
        std::string name;
        while (std::getline(inner, name, ','))
            if (!name.empty()) names.push_back(name);
        out.push_back(std::move(names));
    }
    return out;
}

edgetune::ExperimentConfig build_run_config(
    const std::string& config_path, const std::string& workload_path,
    const std::string& trace_path, const std::string& websites_path,
    const std::string& algo, std::uint64_t seed, long long update_interval,
    const std::string& topology, long long delay, int pops, double epsilon,
    bool no_noise, int nc_k, const std::string& feature_mask,
    const std::string& knob_mask, const std::string& out) {
    using namespace edgetune;

    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_experiment_config(config_path);
    if (!workload_path.empty()) cfg.workload = load_workload_spec(workload_path);
    if (!trace_path.empty()) cfg.trace_path = trace_path;
    if (!websites_path.empty()) {
        std::ifstream in(websites_path);
        if (!in) throw ConfigError("cannot open websites file: " + websites_path);
        cfg.trace_websites = websites_from_json(nlohmann::json::parse(in));
    }
    if (!algo.empty()) cfg.algo = strategy_kind_from_name(algo);
    if (seed != 0) cfg.seed = seed;
    if (update_interval > 0) cfg.topology.update_interval_ms = update_interval;
    if (!topology.empty()) {
        if (topology == "global")
            cfg.topology.mode = Topology::Mode::Global;
        else if (topology == "local")
            cfg.topology.mode = Topology::Mode::LocalPerPop;
        else
            throw ConfigError("unknown topology: " + topology);
    }
    if (delay >= 0) cfg.topology.delay_ms = delay;
    if (pops > 0) cfg.topology.pops = pops;
    if (epsilon >= 0.0) cfg.strategy.ensemble.epsilon = epsilon;
    if (no_noise) cfg.noise = false;
    if (nc_k >= 0) cfg.nc_k = nc_k;
    if (!feature_mask.empty()) {
        std::vector<std::string> names;
        std::stringstream ss(feature_mask);
        std::string n;
        while (std::getline(ss, n, ',')) names.push_back(n);
        nlohmann::json j{{"feature_mask", names}};
        cfg.feature_mask =
            experiment_config_from_json(j).feature_mask;  // reuse the parser
    }
    if (!knob_mask.empty()) {
        std::vector<std::string> names;
        if (knob_mask != "none") {
            std::stringstream ss(knob_mask);
            std::string n;
            while (std::getline(ss, n, ',')) names.push_back(n);
        }
        cfg.knob_mask = names;
    }
    if (!out.empty()) cfg.out_path = out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace edgetune;

    CLI::App app{"trace-driven web-stack configuration tuning laboratory"};
    app.require_subcommand(1);

    // gen-workload
    auto* gen = app.add_subcommand("gen-workload",
                                   "synthesize client sessions from a spec");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "workload spec JSON")->required();
    gen->add_option("-o,--out", gen_out, "output trace CSV")->required();

    // build-oracle
    auto* build = app.add_subcommand("build-oracle",
                                     "precompute the PLT tensor cache");
    std::string grid_bw, grid_rtt, grid_loss, sites_path, params_path, tensor_out;
    build->add_option("--grid-bw", grid_bw, "bandwidth axis, kbps CSV")->required();
    build->add_option("--grid-rtt", grid_rtt, "rtt axis, ms CSV")->required();
    build->add_option("--grid-loss", grid_loss, "loss axis CSV")->required();
    build->add_option("--websites", sites_path, "website catalog JSON")->required();
    build->add_option("--params", params_path, "oracle params JSON");
    build->add_option("-o,--out", tensor_out, "output tensor file")->required();

    // run
    auto* run = app.add_subcommand("run", "run one experiment");
    std::string run_config, run_workload, run_trace, run_sites, run_algo;
    std::string run_topology, run_feature_mask, run_knob_mask, run_out;
    std::uint64_t run_seed = 0;
    long long run_interval = 0, run_delay = -1;
    int run_pops = 0, run_nc_k = -1;
    double run_epsilon = -1.0;
    bool run_no_noise = false;
    run->add_option("--config", run_config, "experiment config JSON");
    run->add_option("--workload", run_workload, "workload spec JSON");
    run->add_option("--trace", run_trace, "session trace CSV");
    run->add_option("--websites", run_sites, "website catalog JSON (traces)");
    run->add_option("--algo", run_algo,
                    "default|brute|brute-nc|bo|bo-nc|cherrypick-nc|mab-nc|"
                    "optimal|ensemble|ensemble-nogp|ensemble-nodt");
    run->add_option("--seed", run_seed, "run seed");
    run->add_option("--update-interval", run_interval, "model update period, ms");
    run->add_option("--topology", run_topology, "global|local");
    run->add_option("--delay", run_delay, "manager-agent delay, ms");
    run->add_option("--pops", run_pops, "number of PoPs");
    run->add_option("--epsilon", run_epsilon, "degree of randomness");
    run->add_flag("--no-noise", run_no_noise, "disable oracle noise");
    run->add_option("--nc-k", run_nc_k, "network class count (0 = auto)");
    run->add_option("--feature-mask", run_feature_mask,
                    "bandwidth,rtt,loss,complexity subset");
    run->add_option("--knob-mask", run_knob_mask,
                    "free knobs, e.g. cc,icw ('none' pins all)");
    run->add_option("-o,--out", run_out, "results CSV path");

    // report
    auto* rep = app.add_subcommand("report", "summarize results files");
    std::vector<std::string> rep_inputs;
    std::string rep_out = "report";
    long long rep_interval = 0;
    bool rep_svg = false;
    rep->add_option("inputs", rep_inputs, "results CSV files")->required();
    rep->add_option("--out", rep_out, "output file prefix");
    rep->add_option("--update-interval", rep_interval,
                    "bucket width ms (default: from .meta.json)");
    rep->add_flag("--svg", rep_svg, "also write SVG plots");

    // ablate
    auto* abl = app.add_subcommand("ablate", "compare feature or knob subsets");
    std::string abl_config, abl_axis, abl_subsets, abl_out = "ablate";
    abl->add_option("--config", abl_config, "experiment config JSON")->required();
    abl->add_option("--axis", abl_axis, "features|knobs")->required();
    abl->add_option("--subsets", abl_subsets,
                    "semicolon-separated comma lists, e.g. 'cc;autocorking'")
        ->required();
    abl->add_option("--out", abl_out, "output file prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            const WorkloadSpec spec = load_workload_spec(gen_spec);
            write_trace(gen_out, generate_sessions(spec));
            std::cout << "wrote " << gen_out << "\n";
        } else if (build->parsed()) {
            OracleParams params;
            if (!params_path.empty()) {
                std::ifstream in(params_path);
                if (!in)
                    throw ConfigError("cannot open params file: " + params_path);
                params = oracle_params_from_json(nlohmann::json::parse(in));
            }
            std::ifstream sites_in(sites_path);
            if (!sites_in)
                throw ConfigError("cannot open websites file: " + sites_path);
            auto tensor = PLTTensor::build(
                parse_grid(grid_bw), parse_grid(grid_rtt), parse_grid(grid_loss),
                websites_from_json(nlohmann::json::parse(sites_in)), params);
            tensor.save(tensor_out);
            std::cout << "wrote " << tensor_out << " (" << tensor.values().size()
                      << " entries)\n";
        } else if (run->parsed()) {
            ExperimentConfig cfg = build_run_config(
                run_config, run_workload, run_trace, run_sites, run_algo,
                run_seed, run_interval, run_topology, run_delay, run_pops,
                run_epsilon, run_no_noise, run_nc_k, run_feature_mask,
                run_knob_mask, run_out);
            if (cfg.out_path.empty()) throw ConfigError("run: -o/--out required");
            run_experiment_to_file(cfg);
            std::cout << "wrote " << cfg.out_path << "\n";
        } else if (rep->parsed()) {
            std::vector<ResultRow> rows;
            long long interval = rep_interval;
            for (const auto& path : rep_inputs) {
                auto batch = read_results_csv(path);
                rows.insert(rows.end(), batch.begin(), batch.end());
                if (interval <= 0) {
                    std::ifstream meta(path + ".meta.json");
                    if (meta) {
                        const auto j = nlohmann::json::parse(meta);
                        interval = j.at("topology")
                                       .at("update_interval_ms")
                                       .get<long long>();
                    }
                }
            }
            if (interval <= 0)
                throw ConfigError(
                    "report: no .meta.json found; pass --update-interval");
            write_report(rep_out, build_report(rows, interval), rep_svg);
            std::cout << "wrote " << rep_out << "_*.csv\n";
        } else if (abl->parsed()) {
            ExperimentConfig base = load_experiment_config(abl_config);
            const auto subsets = parse_subsets(abl_subsets);
            if (subsets.empty()) throw ConfigError("ablate: no subsets given");
            auto results = ablate(base, abl_axis, subsets);

            std::ofstream out(abl_out + "_summary.csv");
            if (!out)
                throw std::runtime_error("cannot open for write: " + abl_out +
                                         "_summary.csv");
            out << "subset,p10,p25,p50,p75,p90,p95,p99\n";
            for (const auto& [name, result] : results) {
                write_results_csv(abl_out + "_" + name + ".csv", result);
                const Report r = build_report(
                    result.rows, base.topology.update_interval_ms);
                out << name;
                for (int q : {10, 25, 50, 75, 90, 95, 99})
                    out << "," << r.improvement_percentiles.at(q);
                out << "\n";
            }
            std::cout << "wrote " << abl_out << "_summary.csv\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
