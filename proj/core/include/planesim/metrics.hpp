#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "planesim/sim_time.hpp"

namespace planesim {

class MetricsSink {
  public:
    virtual ~MetricsSink() = default;
    virtual void ev_transition(SimTime t, uint32_t flow, uint32_t nic, uint32_t ev, uint32_t plane,
                               const char* event) = 0;
    virtual void trace(SimTime t, uint32_t flow, const char* event, uint64_t psn, uint32_t ev,
                       uint32_t plane) = 0;
    virtual void latency_sample(uint32_t flow, SimTime rtt_halved) = 0;
};

struct EvActivityRow {
    SimTime t = 0;
    uint32_t flow = 0;
    uint32_t nic = 0;
    uint32_t ev = 0;
    uint32_t plane = 0;
    std::string event;
};

// Everything a run records. Time series are sampled on a fixed interval;
// exports are pure functions of this structure so plots reproduce from logs.
class MetricsLog : public MetricsSink {
  public:
    SimTime sample_interval = 200 * kMillisecond;
    SimTime duration = 0;
    uint64_t seed = 0;
    std::string resolved_config_json; // defaults echoed for reproducibility

    std::vector<SimTime> sample_times;
    // series name -> one value per sample; names sort deterministically
    std::map<std::string, std::vector<double>> series;

    std::vector<EvActivityRow> ev_rows;
    std::map<uint32_t, std::vector<double>> latencies_us; // per flow
    std::vector<std::string> trace_lines;
    bool trace_enabled = false;

    std::map<std::string, double> summary_values;   // scalar results
    std::map<std::string, std::string> summary_info; // strings (config echo etc.)

    void ev_transition(SimTime t, uint32_t flow, uint32_t nic, uint32_t ev, uint32_t plane,
                       const char* event) override {
        ev_rows.push_back(EvActivityRow{t, flow, nic, ev, plane, event});
    }
    void trace(SimTime t, uint32_t flow, const char* event, uint64_t psn, uint32_t ev, uint32_t plane) override;
    void latency_sample(uint32_t flow, SimTime rtt_halved) override {
        latencies_us[flow].push_back(to_us(rtt_halved));
    }

    std::vector<double>& series_ref(const std::string& name);
    double series_mean(const std::string& name, size_t from = 0, size_t to = SIZE_MAX) const;

    // metrics.csv: time_s,series,value (fixed-precision; byte-stable per seed)
    std::string csv() const;
    std::string ev_activity_csv() const;
    std::string summary_json() const;

    void write_all(const std::string& out_dir) const; // metrics.csv, summary.json, ev_activity.csv, plotdata/

    // lossless round-trip of the log itself, so exports can be regenerated
    std::string to_raw_json() const;
    static MetricsLog from_raw_json(const std::string& text);
};

} // namespace planesim
