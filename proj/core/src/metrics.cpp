#include "planesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace planesim {

namespace {
std::string fmt(double v) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
} // namespace

void MetricsLog::trace(SimTime t, uint32_t flow, const char* event, uint64_t psn, uint32_t ev, uint32_t plane) {
    if (!trace_enabled) return;
    nlohmann::ordered_json j;
    j["time_us"] = to_us(t);
    j["qp"] = flow;
    j["event"] = event;
    j["psn"] = psn;
    j["ev"] = ev;
    j["plane"] = plane;
    trace_lines.push_back(j.dump());
}

std::vector<double>& MetricsLog::series_ref(const std::string& name) { return series[name]; }

double MetricsLog::series_mean(const std::string& name, size_t from, size_t to) const {
    auto it = series.find(name);
    if (it == series.end() || it->second.empty()) return 0;
    const auto& v = it->second;
    size_t hi = std::min(to, v.size());
    if (from >= hi) return 0;
    double sum = 0;
    for (size_t i = from; i < hi; ++i) sum += v[i];
    return sum / static_cast<double>(hi - from);
}

std::string MetricsLog::csv() const {
    std::string out = "time_s,series,value\n";
    for (size_t i = 0; i < sample_times.size(); ++i) {
        std::string t = fmt(to_sec(sample_times[i]));
        for (const auto& [name, vals] : series) {
            if (i >= vals.size()) continue;
            out += t;
            out += ',';
            out += name;
            out += ',';
            out += fmt(vals[i]);
            out += '\n';
        }
    }
    return out;
}

std::string MetricsLog::ev_activity_csv() const {
    std::string out = "time_us,flow,nic,ev,plane,event\n";
    char buf[128];
    for (const EvActivityRow& r : ev_rows) {
        snprintf(buf, sizeof buf, "%.3f,%u,%u,%u,%u,", to_us(r.t), r.flow, r.nic, r.ev, r.plane);
        out += buf;
        out += r.event;
        out += '\n';
    }
    return out;
}

std::string MetricsLog::summary_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["duration_s"] = to_sec(duration);
    j["sample_interval_s"] = to_sec(sample_interval);
    if (!resolved_config_json.empty()) {
        j["resolved_config"] = nlohmann::ordered_json::parse(resolved_config_json, nullptr, false);
    }
    nlohmann::ordered_json vals = nlohmann::ordered_json::object();
    for (const auto& [k, v] : summary_values) vals[k] = v;
    j["values"] = std::move(vals);
    nlohmann::ordered_json info = nlohmann::ordered_json::object();
    for (const auto& [k, v] : summary_info) info[k] = v;
    j["info"] = std::move(info);
    if (!latencies_us.empty()) {
        nlohmann::ordered_json lat = nlohmann::ordered_json::object();
        for (const auto& [flow, v] : latencies_us) {
            std::vector<double> s = v;
            std::sort(s.begin(), s.end());
            auto pct = [&](double p) {
                if (s.empty()) return 0.0;
                double idx = p * static_cast<double>(s.size() - 1);
                return s[static_cast<size_t>(idx + 0.5)];
            };
            double mean = 0;
            for (double x : s) mean += x;
            if (!s.empty()) mean /= static_cast<double>(s.size());
            lat["flow" + std::to_string(flow)] = {{"count", s.size()},
                                                  {"mean_us", mean},
                                                  {"p50_us", pct(0.5)},
                                                  {"p99_us", pct(0.99)},
                                                  {"min_us", s.empty() ? 0.0 : s.front()},
                                                  {"max_us", s.empty() ? 0.0 : s.back()}};
        }
        j["latency"] = std::move(lat);
    }
    return j.dump(2);
}

std::string MetricsLog::to_raw_json() const {
    nlohmann::ordered_json j;
    j["sample_interval_ps"] = sample_interval;
    j["duration_ps"] = duration;
    j["seed"] = seed;
    j["resolved_config"] = resolved_config_json;
    j["sample_times_ps"] = sample_times;
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : series) s[k] = v;
    j["series"] = std::move(s);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const EvActivityRow& r : ev_rows)
        rows.push_back({{"t", r.t}, {"flow", r.flow}, {"nic", r.nic}, {"ev", r.ev}, {"plane", r.plane},
                        {"event", r.event}});
    j["ev_rows"] = std::move(rows);
    nlohmann::ordered_json lat = nlohmann::ordered_json::object();
    for (const auto& [flow, v] : latencies_us) lat[std::to_string(flow)] = v;
    j["latencies_us"] = std::move(lat);
    nlohmann::ordered_json vals = nlohmann::ordered_json::object();
    for (const auto& [k, v] : summary_values) vals[k] = v;
    j["summary_values"] = std::move(vals);
    nlohmann::ordered_json info = nlohmann::ordered_json::object();
    for (const auto& [k, v] : summary_info) info[k] = v;
    j["summary_info"] = std::move(info);
    return j.dump();
}

MetricsLog MetricsLog::from_raw_json(const std::string& text) {
    MetricsLog log;
    nlohmann::json j = nlohmann::json::parse(text);
    log.sample_interval = j.at("sample_interval_ps").get<SimTime>();
    log.duration = j.at("duration_ps").get<SimTime>();
    log.seed = j.at("seed").get<uint64_t>();
    log.resolved_config_json = j.at("resolved_config").get<std::string>();
    log.sample_times = j.at("sample_times_ps").get<std::vector<SimTime>>();
    for (auto it = j.at("series").begin(); it != j.at("series").end(); ++it)
        log.series[it.key()] = it.value().get<std::vector<double>>();
    for (const auto& r : j.at("ev_rows"))
        log.ev_rows.push_back(EvActivityRow{r.at("t").get<SimTime>(), r.at("flow").get<uint32_t>(),
                                            r.at("nic").get<uint32_t>(), r.at("ev").get<uint32_t>(),
                                            r.at("plane").get<uint32_t>(), r.at("event").get<std::string>()});
    for (auto it = j.at("latencies_us").begin(); it != j.at("latencies_us").end(); ++it)
        log.latencies_us[static_cast<uint32_t>(std::stoul(it.key()))] = it.value().get<std::vector<double>>();
    for (auto it = j.at("summary_values").begin(); it != j.at("summary_values").end(); ++it)
        log.summary_values[it.key()] = it.value().get<double>();
    for (auto it = j.at("summary_info").begin(); it != j.at("summary_info").end(); ++it)
        log.summary_info[it.key()] = it.value().get<std::string>();
    return log;
}

void MetricsLog::write_all(const std::string& out_dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/plotdata");
    auto put = [](const std::string& path, const std::string& content) {
        std::ofstream f(path, std::ios::binary);
        f << content;
    };
    put(out_dir + "/metrics.csv", csv());
    put(out_dir + "/summary.json", summary_json());
    put(out_dir + "/ev_activity.csv", ev_activity_csv());
    if (trace_enabled) {
        std::ofstream f(out_dir + "/trace.jsonl", std::ios::binary);
        for (const auto& l : trace_lines) f << l << '\n';
    }

    // plotdata/throughput_vs_time.dat: one column per goodput series
    {
        std::vector<std::string> cols;
        for (const auto& [name, vals] : series)
            if (name.size() > 5 && name.rfind(".gbps") == name.size() - 5) cols.push_back(name);
        std::string out = "# time_s";
        for (const auto& c : cols) out += " " + c;
        out += '\n';
        for (size_t i = 0; i < sample_times.size(); ++i) {
            out += fmt(to_sec(sample_times[i]));
            for (const auto& c : cols) {
                const auto& v = series.at(c);
                out += ' ';
                out += fmt(i < v.size() ? v[i] : 0);
            }
            out += '\n';
        }
        put(out_dir + "/plotdata/throughput_vs_time.dat", out);
    }
    // plotdata/loss_vs_time.dat: drops, trims, retransmits
    {
        std::vector<std::string> cols;
        for (const auto& [name, vals] : series) {
            if (name.rfind(".loss") != std::string::npos || name.rfind(".retx") != std::string::npos ||
                name.rfind("fabric.drops") != std::string::npos || name.rfind("fabric.trims") != std::string::npos)
                cols.push_back(name);
        }
        std::string out = "# time_s";
        for (const auto& c : cols) out += " " + c;
        out += '\n';
        for (size_t i = 0; i < sample_times.size(); ++i) {
            out += fmt(to_sec(sample_times[i]));
            for (const auto& c : cols) {
                const auto& v = series.at(c);
                out += ' ';
                out += fmt(i < v.size() ? v[i] : 0);
            }
            out += '\n';
        }
        put(out_dir + "/plotdata/loss_vs_time.dat", out);
    }
    // plotdata/ev_activity.dat: Gantt segments per (flow, nic, ev)
    {
        struct SegKey {
            uint32_t flow, nic, ev;
            bool operator<(const SegKey& o) const {
                return std::tie(flow, nic, ev) < std::tie(o.flow, o.nic, o.ev);
            }
        };
        struct State {
            std::string state;
            SimTime since;
            uint32_t plane;
        };
        std::map<SegKey, State> cur;
        std::string out = "# flow nic ev plane t_start_s t_end_s state\n";
        char buf[192];
        auto emit = [&](const SegKey& k, const State& s, SimTime end) {
            snprintf(buf, sizeof buf, "%u %u %u %u %s %s %s\n", k.flow, k.nic, k.ev, s.plane,
                     fmt(to_sec(s.since)).c_str(), fmt(to_sec(end)).c_str(), s.state.c_str());
            out += buf;
        };
        for (const EvActivityRow& r : ev_rows) {
            if (r.ev == 0) continue; // plane park markers
            SegKey k{r.flow, r.nic, r.ev};
            std::string st;
            if (r.event == "initial" || r.event == "activated" || r.event == "reactivated") st = "active";
            else if (r.event == "deactivated") st = "inactive";
            else if (r.event == "resurrected") st = "backup";
            else continue;
            auto it = cur.find(k);
            if (it != cur.end()) {
                emit(k, it->second, r.t);
                it->second = State{st, r.t, r.plane};
            } else {
                cur[k] = State{st, r.t, r.plane};
            }
        }
        for (const auto& [k, s] : cur) emit(k, s, duration);
        put(out_dir + "/plotdata/ev_activity.dat", out);
    }
}

} // namespace planesim
