// planesim: multi-plane Clos fabric simulator CLI.
//
//   planesim run <scenario.json> [--seed N] [--out DIR] [--assert]
//   planesim sweep <scenario.json> --param key=v1,v2,... [--out DIR] [--assert]
//   planesim validate <scenario.json>
//   planesim export <metrics_raw.json> [--out DIR]
//   planesim report [topology flags]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "planesim/harness.hpp"

using namespace planesim;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

// Applies "a.b.c=value" onto a JSON document, parsing the value as JSON when
// possible and as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& dotted, const std::string& value) {
    nlohmann::json* cur = &doc;
    std::string path = dotted;
    size_t pos;
    while ((pos = path.find('.')) != std::string::npos) {
        cur = &(*cur)[path.substr(0, pos)];
        path = path.substr(pos + 1);
    }
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    (*cur)[path] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
}

int finish_run(const Scenario& sc, const std::string& out_dir, bool assert_mode) {
    MetricsLog log;
    RunOutcome outcome = run_scenario(sc, &log, out_dir);
    printf("run %s: seed=%llu duration=%.3fs\n", sc.name.c_str(),
           static_cast<unsigned long long>(sc.seed), to_sec(sc.duration));
    for (const auto& [k, v] : log.summary_values) {
        if (k.rfind(".mean_gbps") != std::string::npos || k.rfind("collective.") == 0 ||
            k == "workload.complete")
            printf("  %-32s %.4f\n", k.c_str(), v);
    }
    if (!out_dir.empty()) printf("  outputs: %s/{metrics.csv,summary.json,ev_activity.csv,plotdata/}\n",
                                 out_dir.c_str());
    if (!outcome.conservation_ok) printf("  WARNING: packet conservation ledger unbalanced\n");
    int rc = 0;
    for (const std::string& f : outcome.failed_asserts) {
        printf("  ASSERT FAILED: %s\n", f.c_str());
        rc = 1;
    }
    if (!outcome.failed_asserts.empty() && !assert_mode) rc = 0;
    if (assert_mode && !outcome.workload_complete) {
        printf("  ASSERT FAILED: workload did not complete\n");
        rc = 1;
    }
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"planesim: packet-level simulator of multi-plane Clos AI fabrics"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, param, raw_path;
    uint64_t seed_override = 0;
    bool seed_set = false, assert_mode = false;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--seed", seed_override, "override the scenario seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--out", out_dir, "output directory (default out/<scenario>)");
    run->add_flag("--assert", assert_mode, "exit nonzero when scenario asserts fail");

    auto* sweep = app.add_subcommand("sweep", "run a scenario over parameter values");
    sweep->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sweep->add_option("--param", param, "dotted key and comma-separated values, e.g. workload.msg_size=4096,65536")
        ->required();
    sweep->add_option("--seed", seed_override, "override the scenario seed")->each([&](const std::string&) {
        seed_set = true;
    });
    sweep->add_option("--out", out_dir, "output directory (default out/<scenario>_sweep)");
    sweep->add_flag("--assert", assert_mode, "exit nonzero when any run's asserts fail");

    auto* validate = app.add_subcommand("validate", "parse and validate a scenario");
    validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

    auto* exp = app.add_subcommand("export", "regenerate csv/plotdata from a saved metrics_raw.json");
    exp->add_option("raw", raw_path, "metrics_raw.json from a previous run")->required();
    exp->add_option("--out", out_dir, "output directory (default alongside input)");

    auto* report = app.add_subcommand("report", "print the capacity/cost report for a topology");
    uint32_t radix = 512, planes = 8, down = 256, up = 256;
    double gbps = 100.0;
    report->add_option("--radix", radix, "switch radix (ports)");
    report->add_option("--planes", planes, "plane count");
    report->add_option("--downlinks", down, "T0 downlinks");
    report->add_option("--uplinks", up, "T0 uplinks");
    report->add_option("--gbps", gbps, "link speed in Gb/s");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            Scenario sc = Scenario::from_file(scenario_path);
            if (seed_set) {
                sc.seed = seed_override;
                sc.seed_explicit = true;
            }
            if (out_dir.empty()) out_dir = "out/" + stem_of(scenario_path);
            return finish_run(sc, out_dir, assert_mode);
        }
        if (*sweep) {
            size_t eq = param.find('=');
            if (eq == std::string::npos) throw ConfigError("--param expects key=v1,v2,...");
            std::string key = param.substr(0, eq);
            std::vector<std::string> values;
            std::stringstream vs(param.substr(eq + 1));
            std::string tok;
            while (std::getline(vs, tok, ',')) values.push_back(tok);
            if (values.empty()) throw ConfigError("--param has no values");
            if (out_dir.empty()) out_dir = "out/" + stem_of(scenario_path) + "_sweep";
            std::filesystem::create_directories(out_dir);
            std::string base = read_file(scenario_path);
            nlohmann::json doc = nlohmann::json::parse(base);
            std::string sweep_csv = "param,value,";
            bool header_done = false;
            std::string plot = "# " + key + " mean_gbps\n";
            int rc = 0;
            for (const std::string& v : values) {
                nlohmann::json patched = doc;
                apply_override(patched, key, v);
                Scenario sc = Scenario::from_json_text(patched.dump(), stem_of(scenario_path) + "_" + v);
                if (seed_set) {
                    sc.seed = seed_override;
                    sc.seed_explicit = true;
                }
                MetricsLog log;
                std::string run_dir = out_dir + "/" + key + "=" + v;
                RunOutcome outcome = run_scenario(sc, &log, run_dir);
                if (assert_mode && (!outcome.failed_asserts.empty() || !outcome.workload_complete)) rc = 1;
                double mean = 0;
                int n = 0;
                for (const auto& [k2, val] : log.summary_values) {
                    if (k2.rfind(".mean_gbps") != std::string::npos) {
                        mean += val;
                        ++n;
                    }
                }
                double algbw = log.summary_values.count("collective.algbw_gbps")
                                   ? log.summary_values.at("collective.algbw_gbps")
                                   : (n ? mean / n : 0.0);
                if (!header_done) {
                    sweep_csv += "mean_gbps,algbw_gbps,complete\n";
                    header_done = true;
                }
                char row[256];
                snprintf(row, sizeof row, "%s,%s,%.6f,%.6f,%d\n", key.c_str(), v.c_str(), n ? mean / n : 0.0,
                         algbw, outcome.workload_complete ? 1 : 0);
                sweep_csv += row;
                plot += v + " " + std::to_string(algbw) + "\n";
                printf("sweep %s=%s: algbw=%.4f Gb/s complete=%d\n", key.c_str(), v.c_str(), algbw,
                       outcome.workload_complete);
            }
            std::ofstream(out_dir + "/sweep_summary.csv") << sweep_csv;
            std::filesystem::create_directories(out_dir + "/plotdata");
            std::ofstream(out_dir + "/plotdata/bandwidth_vs_param.dat") << plot;
            return rc;
        }
        if (*validate) {
            Scenario sc = Scenario::from_file(scenario_path);
            printf("%s: valid\n", scenario_path.c_str());
            printf("%s\n", nlohmann::json::parse(sc.resolved_json()).dump(2).c_str());
            return 0;
        }
        if (*exp) {
            MetricsLog log = MetricsLog::from_raw_json(read_file(raw_path));
            if (out_dir.empty())
                out_dir = std::filesystem::path(raw_path).parent_path().string();
            if (out_dir.empty()) out_dir = ".";
            log.write_all(out_dir);
            printf("exported to %s\n", out_dir.c_str());
            return 0;
        }
        if (*report) {
            TopologySpec spec;
            spec.switch_radix = radix;
            spec.planes = planes;
            spec.t0_downlinks = down;
            spec.t0_uplinks = up;
            spec.link_speed_bps = static_cast<uint64_t>(gbps * 1e9);
            printf("%s\n", capacity_report(spec).to_json().c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
