#include "planesim/scenario.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace planesim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

template <typename T>
T get_or(const json& j, const std::string& path, const std::string& key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path + "." + key, e.what());
    }
}

const json& member(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) fail(path, "missing required key '" + key + "'");
    return j.at(key);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) fail(path + "." + it.key(), "unknown key");
    }
}

} // namespace

Scenario Scenario::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << f.rdbuf();
    std::string stem = path;
    size_t slash = stem.find_last_of('/');
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    size_t dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    Scenario s = from_json_text(ss.str(), stem);
    return s;
}

Scenario Scenario::from_json_text(const std::string& text, const std::string& source) {
    json j = json::parse(text, nullptr, false, true);
    if (j.is_discarded()) throw ConfigError(source + ": invalid JSON");
    Scenario s;
    s.name = source;
    check_keys(j, source,
               {"schema_version", "name", "seed", "duration_s", "sample_interval_s", "drain_s", "locator",
                "topology", "fabric", "transport", "workload", "failures", "clustermapper", "denylist",
                "asserts", "trace"});
    s.schema_version = get_or<uint32_t>(j, source, "schema_version", 1);
    if (s.schema_version != 1) fail(source + ".schema_version", "unsupported version");
    s.name = get_or<std::string>(j, source, "name", source);
    if (j.contains("seed")) {
        s.seed = j.at("seed").get<uint64_t>();
        s.seed_explicit = true;
    } else {
        // Reproducibility contract: auto-generate, then echo in the log header.
        s.seed = std::random_device{}();
        s.seed_explicit = false;
    }
    s.duration = from_sec(get_or<double>(j, source, "duration_s", 2.0));
    s.sample_interval = from_sec(get_or<double>(j, source, "sample_interval_s", 0.2));
    s.drain = from_sec(get_or<double>(j, source, "drain_s", 2.0));
    s.locator = get_or<uint32_t>(j, source, "locator", 0xfbf00000u);
    s.trace = get_or<bool>(j, source, "trace", false);

    if (j.contains("topology")) {
        const json& t = j.at("topology");
        std::string p = source + ".topology";
        check_keys(t, p,
                   {"switch_radix", "planes", "nic_ports_per_plane", "link_speed_gbps", "t0_downlinks",
                    "t0_uplinks", "propagation_delay_us", "tiers"});
        s.topo.switch_radix = get_or<uint32_t>(t, p, "switch_radix", 8);
        s.topo.planes = get_or<uint32_t>(t, p, "planes", 2);
        s.topo.nic_ports_per_plane = get_or<uint32_t>(t, p, "nic_ports_per_plane", 1);
        s.topo.link_speed_bps = static_cast<uint64_t>(get_or<double>(t, p, "link_speed_gbps", 1.0) * 1e9);
        s.topo.t0_downlinks = get_or<uint32_t>(t, p, "t0_downlinks", s.topo.switch_radix / 2);
        s.topo.t0_uplinks = get_or<uint32_t>(t, p, "t0_uplinks", s.topo.switch_radix - s.topo.t0_downlinks);
        s.topo.propagation_delay = from_us(get_or<double>(t, p, "propagation_delay_us", 1.0));
        s.topo.tiers = get_or<uint32_t>(t, p, "tiers", 2);
    }
    if (j.contains("fabric")) {
        const json& f = j.at("fabric");
        std::string p = source + ".fabric";
        check_keys(f, p,
                   {"mtu", "queue_capacity_bytes", "ecn_min_frac", "ecn_max_frac", "ecn", "trim",
                    "trim_queue_packets", "pfc_xoff_bytes", "pfc_xon_bytes"});
        s.fabric.mtu = get_or<uint32_t>(f, p, "mtu", 4096);
        s.fabric.queue_capacity_bytes = get_or<uint64_t>(f, p, "queue_capacity_bytes", 0);
        s.fabric.ecn_min_frac = get_or<double>(f, p, "ecn_min_frac", 0.2);
        s.fabric.ecn_max_frac = get_or<double>(f, p, "ecn_max_frac", 0.8);
        s.fabric.ecn_enabled = get_or<bool>(f, p, "ecn", true);
        s.fabric.trim_enabled = get_or<bool>(f, p, "trim", true);
        s.fabric.trim_queue_packets = get_or<uint32_t>(f, p, "trim_queue_packets", 64);
        s.fabric.pfc_xoff_bytes = get_or<uint64_t>(f, p, "pfc_xoff_bytes", 0);
        s.fabric.pfc_xon_bytes = get_or<uint64_t>(f, p, "pfc_xon_bytes", 0);
    }

    if (j.contains("transport")) {
        const json& t = j.at("transport");
        std::string p = source + ".transport";
        check_keys(t, p, {"kind", "mrc", "roce"});
        std::string kind = get_or<std::string>(t, p, "kind", "mrc");
        if (kind == "mrc") s.transport = TransportKind::Mrc;
        else if (kind == "roce") s.transport = TransportKind::Roce;
        else fail(p + ".kind", "expected 'mrc' or 'roce', got '" + kind + "'");
        if (t.contains("mrc")) {
            const json& m = t.at("mrc");
            std::string mp = p + ".mrc";
            check_keys(m, mp,
                       {"size_target", "backup_target", "window_bytes", "penalty_rtts", "reorder_window",
                        "rto_rtts", "sack_interval_us", "sack_burst", "sack_window", "probe_interval_ms",
                        "resurrect_threshold", "remap_latency_ms", "retx_inflate_packets"});
            s.mrc.size_target = get_or<uint32_t>(m, mp, "size_target", 128);
            s.mrc.backup_target = get_or<uint32_t>(m, mp, "backup_target", 128);
            s.mrc.window_bytes = get_or<uint64_t>(m, mp, "window_bytes", 0);
            s.mrc.penalty_rtts = get_or<double>(m, mp, "penalty_rtts", 4.0);
            s.mrc.reorder_window = get_or<uint32_t>(m, mp, "reorder_window", 64);
            s.mrc.rto_rtts = get_or<double>(m, mp, "rto_rtts", 8.0);
            s.mrc.sack_interval = from_us(get_or<double>(m, mp, "sack_interval_us", 2.0));
            s.mrc.sack_burst = get_or<uint32_t>(m, mp, "sack_burst", 16);
            s.mrc.sack_window = get_or<uint32_t>(m, mp, "sack_window", 256);
            s.mrc.probe_interval = from_ms(get_or<double>(m, mp, "probe_interval_ms", 10.0));
            s.mrc.resurrect_threshold = get_or<uint32_t>(m, mp, "resurrect_threshold", 3);
            s.mrc.remap_latency = from_ms(get_or<double>(m, mp, "remap_latency_ms", 100.0));
            s.mrc.retx_inflate_packets = get_or<uint32_t>(m, mp, "retx_inflate_packets", 8);
        }
        if (t.contains("roce")) {
            const json& r = t.at("roce");
            std::string rp = p + ".roce";
            check_keys(r, rp,
                       {"pfc", "dcqcn", "profile", "window_bytes", "rto_rtts", "ack_every", "ack_interval_us"});
            s.roce_pfc = get_or<bool>(r, rp, "pfc", true);
            s.roce.dcqcn = get_or<bool>(r, rp, "dcqcn", true);
            s.dcqcn_profile = get_or<std::string>(r, rp, "profile", "default");
            if (s.dcqcn_profile != "default" && s.dcqcn_profile != "aggressive" &&
                s.dcqcn_profile != "most_aggressive")
                fail(rp + ".profile", "expected default|aggressive|most_aggressive");
            s.roce.dcqcn_params = DcqcnParams::profile(s.dcqcn_profile);
            s.roce.window_bytes = get_or<uint64_t>(r, rp, "window_bytes", 0);
            s.roce.rto_rtts = get_or<double>(r, rp, "rto_rtts", 16.0);
            s.roce.ack_every = get_or<uint32_t>(r, rp, "ack_every", 8);
            s.roce.ack_interval = from_us(get_or<double>(r, rp, "ack_interval_us", 4.0));
        }
    }

    if (j.contains("workload")) {
        const json& w = j.at("workload");
        std::string p = source + ".workload";
        check_keys(w, p,
                   {"kind", "msg_size", "bidir", "pairs", "cross_t1", "queue_depth", "qps", "nodes",
                    "node_count", "rounds", "iters", "fan_in", "victim", "src_racks", "dst_racks"});
        std::string kind = get_or<std::string>(w, p, "kind", "write_bw");
        if (kind == "write_bw") s.workload.kind = WorkloadSpec::Kind::WriteBw;
        else if (kind == "write_lat") s.workload.kind = WorkloadSpec::Kind::WriteLat;
        else if (kind == "ring_allreduce") s.workload.kind = WorkloadSpec::Kind::RingAllreduce;
        else if (kind == "all_to_all") s.workload.kind = WorkloadSpec::Kind::AllToAll;
        else if (kind == "incast") s.workload.kind = WorkloadSpec::Kind::Incast;
        else if (kind == "permutation") s.workload.kind = WorkloadSpec::Kind::Permutation;
        else fail(p + ".kind", "unknown workload '" + kind + "'");
        s.workload.msg_size = get_or<uint64_t>(w, p, "msg_size", 32768);
        s.workload.bidir = get_or<bool>(w, p, "bidir", false);
        if (w.contains("pairs")) {
            for (size_t i = 0; i < w.at("pairs").size(); ++i) {
                const json& pr = w.at("pairs").at(i);
                if (!pr.is_array() || pr.size() != 2)
                    fail(p + ".pairs[" + std::to_string(i) + "]", "expected [src, dst]");
                s.workload.pairs.emplace_back(pr.at(0).get<uint32_t>(), pr.at(1).get<uint32_t>());
            }
        }
        s.workload.cross_t1 = get_or<bool>(w, p, "cross_t1", true);
        s.workload.queue_depth = get_or<uint32_t>(w, p, "queue_depth", 4);
        s.workload.qps = get_or<uint32_t>(w, p, "qps", 1);
        if (w.contains("nodes")) s.workload.nodes = w.at("nodes").get<std::vector<uint32_t>>();
        s.workload.node_count = get_or<uint32_t>(w, p, "node_count", 0);
        s.workload.rounds = get_or<uint32_t>(w, p, "rounds", 1);
        s.workload.iters = get_or<uint32_t>(w, p, "iters", 1000);
        s.workload.fan_in = get_or<uint32_t>(w, p, "fan_in", 7);
        s.workload.victim = get_or<bool>(w, p, "victim", true);
        if (w.contains("src_racks")) s.workload.src_racks = w.at("src_racks").get<std::vector<uint32_t>>();
        if (w.contains("dst_racks")) s.workload.dst_racks = w.at("dst_racks").get<std::vector<uint32_t>>();
    }

    if (j.contains("failures")) {
        const json& arr = j.at("failures");
        for (size_t i = 0; i < arr.size(); ++i) {
            const json& f = arr.at(i);
            std::string p = source + ".failures[" + std::to_string(i) + "]";
            check_keys(f, p,
                       {"kind", "time_s", "duration_s", "link", "switch", "rate", "nic", "plane", "ev", "flow",
                        "active_index", "transceiver_group"});
            FailureSpec fs;
            std::string kind = member(f, p, "kind").get<std::string>();
            fs.time = from_sec(get_or<double>(f, p, "time_s", 0.0));
            fs.duration = from_sec(get_or<double>(f, p, "duration_s", 0.0));
            auto parse_link = [&](FailureSpec& out) {
                const json& l = member(f, p, "link");
                std::string lp = p + ".link";
                check_keys(l, lp, {"type", "nic", "plane", "t0", "uplink"});
                std::string type = member(l, lp, "type").get<std::string>();
                if (type == "nic_t0") {
                    out.link_type = FailureSpec::LinkType::NicT0;
                    out.nic = member(l, lp, "nic").get<uint32_t>();
                    out.plane = member(l, lp, "plane").get<uint32_t>();
                } else if (type == "t0_t1") {
                    out.link_type = FailureSpec::LinkType::T0T1;
                    out.plane = member(l, lp, "plane").get<uint32_t>();
                    out.t0 = member(l, lp, "t0").get<uint32_t>();
                    out.uplink = member(l, lp, "uplink").get<uint32_t>();
                } else {
                    fail(lp + ".type", "expected nic_t0 or t0_t1");
                }
            };
            auto parse_switch = [&](FailureSpec& out) {
                const json& sw = member(f, p, "switch");
                std::string sp = p + ".switch";
                check_keys(sw, sp, {"tier", "plane", "index"});
                uint32_t tier = member(sw, sp, "tier").get<uint32_t>();
                if (tier != 0 && tier != 1) fail(sp + ".tier", "expected 0 or 1");
                out.is_t1 = tier == 1;
                out.plane = member(sw, sp, "plane").get<uint32_t>();
                out.index = member(sw, sp, "index").get<uint32_t>();
            };
            if (kind == "link_down") {
                fs.kind = FailureSpec::Kind::LinkDown;
                parse_link(fs);
            } else if (kind == "link_up") {
                fs.kind = FailureSpec::Kind::LinkUp;
                parse_link(fs);
            } else if (kind == "link_flap") {
                fs.kind = FailureSpec::Kind::LinkFlap;
                parse_link(fs);
                if (fs.duration == 0) fail(p + ".duration_s", "link_flap needs a down window");
            } else if (kind == "transceiver_flap") {
                fs.kind = FailureSpec::Kind::TransceiverFlap;
                fs.nic = member(f, p, "nic").get<uint32_t>();
                fs.transceiver_group = get_or<uint32_t>(f, p, "transceiver_group", 0);
                if (fs.duration == 0) fail(p + ".duration_s", "transceiver_flap needs a down window");
            } else if (kind == "switch_blackhole") {
                fs.kind = FailureSpec::Kind::SwitchBlackhole;
                parse_switch(fs);
            } else if (kind == "switch_reboot") {
                fs.kind = FailureSpec::Kind::SwitchReboot;
                parse_switch(fs);
                if (fs.duration == 0) fail(p + ".duration_s", "switch_reboot needs a reboot duration");
            } else if (kind == "ev_drop_rate") {
                fs.kind = FailureSpec::Kind::EvDropRate;
                fs.rate = member(f, p, "rate").get<double>();
                if (f.contains("ev")) {
                    fs.ev_explicit = true;
                    fs.ev = f.at("ev").get<uint32_t>();
                } else {
                    fs.flow = get_or<uint32_t>(f, p, "flow", 0);
                    fs.active_index = get_or<uint32_t>(f, p, "active_index", 0);
                }
            } else if (kind == "random_drop") {
                fs.kind = FailureSpec::Kind::RandomDrop;
                fs.rate = member(f, p, "rate").get<double>();
                fs.scope_nic = get_or<int64_t>(f, p, "nic", -1);
                fs.scope_plane = get_or<int64_t>(f, p, "plane", -1);
            } else {
                fail(p + ".kind", "unknown failure kind '" + kind + "'");
            }
            if (fs.kind == FailureSpec::Kind::EvDropRate || fs.kind == FailureSpec::Kind::RandomDrop) {
                fs.scope_nic = get_or<int64_t>(f, p, "nic", fs.scope_nic);
                fs.scope_plane = get_or<int64_t>(f, p, "plane", fs.scope_plane);
            }
            s.failures.push_back(fs);
        }
    }

    if (j.contains("clustermapper")) {
        const json& c = j.at("clustermapper");
        std::string p = source + ".clustermapper";
        check_keys(c, p,
                   {"enabled", "period_ms", "window_ms", "lossy_threshold", "down_consecutive",
                    "denylist_down_t0t1"});
        s.cm_enabled = get_or<bool>(c, p, "enabled", true);
        s.cm.period = from_ms(get_or<double>(c, p, "period_ms", 1.0));
        s.cm.window = from_ms(get_or<double>(c, p, "window_ms", 1000.0));
        s.cm.lossy_threshold = get_or<double>(c, p, "lossy_threshold", 0.005);
        s.cm.down_consecutive = get_or<uint32_t>(c, p, "down_consecutive", 10);
        s.cm.denylist_down_t0t1 = get_or<bool>(c, p, "denylist_down_t0t1", false);
    }

    if (j.contains("denylist")) {
        const json& arr = j.at("denylist");
        for (size_t i = 0; i < arr.size(); ++i) {
            const json& e = arr.at(i);
            std::string p = source + ".denylist[" + std::to_string(i) + "]";
            check_keys(e, p, {"nic", "plane", "t0", "uplink"});
            DenylistEntry de;
            if (e.contains("nic")) de.nic = e.at("nic").get<uint32_t>();
            if (e.contains("plane")) de.plane = e.at("plane").get<uint32_t>();
            if (e.contains("t0")) de.t0 = e.at("t0").get<uint32_t>();
            if (e.contains("uplink")) de.uplink = e.at("uplink").get<uint32_t>();
            s.denylist.push_back(de);
        }
    }

    if (j.contains("asserts")) {
        const json& arr = j.at("asserts");
        for (size_t i = 0; i < arr.size(); ++i) {
            const json& a = arr.at(i);
            std::string p = source + ".asserts[" + std::to_string(i) + "]";
            check_keys(a, p, {"metric", "op", "value", "tolerance"});
            ScenarioAssert sa;
            sa.metric = member(a, p, "metric").get<std::string>();
            sa.op = member(a, p, "op").get<std::string>();
            sa.value = member(a, p, "value").get<double>();
            sa.tolerance = get_or<double>(a, p, "tolerance", 0.0);
            if (sa.op != ">=" && sa.op != "<=" && sa.op != "==" && sa.op != ">" && sa.op != "<")
                fail(p + ".op", "unknown comparison '" + sa.op + "'");
            s.asserts.push_back(sa);
        }
    }

    s.validate();
    return s;
}

void Scenario::validate() const {
    topo.validate();
    Topology t(topo); // cheap at desk scale; gives us id bounds
    uint32_t nics = t.nic_count();
    auto check_nic = [&](uint64_t nic, const std::string& path) {
        if (nic >= nics)
            fail(path, "NIC " + std::to_string(nic) + " does not exist (nic_count=" + std::to_string(nics) + ")");
    };
    std::string p = name + ".workload";
    for (size_t i = 0; i < workload.pairs.size(); ++i) {
        check_nic(workload.pairs[i].first, p + ".pairs[" + std::to_string(i) + "][0]");
        check_nic(workload.pairs[i].second, p + ".pairs[" + std::to_string(i) + "][1]");
        if (workload.pairs[i].first == workload.pairs[i].second)
            fail(p + ".pairs[" + std::to_string(i) + "]", "self-pair rejected");
    }
    for (size_t i = 0; i < workload.nodes.size(); ++i)
        check_nic(workload.nodes[i], p + ".nodes[" + std::to_string(i) + "]");
    uint32_t groups = static_cast<uint32_t>(topo.t0_groups());
    for (uint32_t r : workload.src_racks)
        if (r >= groups) fail(p + ".src_racks", "rack " + std::to_string(r) + " does not exist");
    for (uint32_t r : workload.dst_racks)
        if (r >= groups) fail(p + ".dst_racks", "rack " + std::to_string(r) + " does not exist");
    if (workload.kind == WorkloadSpec::Kind::Incast) {
        if (workload.fan_in + 1 > groups)
            fail(p + ".fan_in", "cross-spine incast needs fan_in+1 T0 groups, topology has " +
                                    std::to_string(groups));
    }
    if (workload.qps == 0) fail(p + ".qps", "must be >= 1");

    for (size_t i = 0; i < failures.size(); ++i) {
        const FailureSpec& f = failures[i];
        std::string fp = name + ".failures[" + std::to_string(i) + "]";
        if (f.time > duration) fail(fp + ".time_s", "beyond scenario duration");
        if (f.link_type == FailureSpec::LinkType::NicT0) {
            check_nic(f.nic, fp + ".link.nic");
            if (f.plane >= topo.planes) fail(fp + ".link.plane", "plane out of range");
        } else if (f.link_type == FailureSpec::LinkType::T0T1) {
            if (f.plane >= topo.planes) fail(fp + ".link.plane", "plane out of range");
            if (f.t0 >= t.t0_per_plane()) fail(fp + ".link.t0", "T0 index out of range");
            if (f.uplink >= topo.t0_uplinks) fail(fp + ".link.uplink", "uplink out of range");
        }
        if (f.kind == FailureSpec::Kind::SwitchBlackhole || f.kind == FailureSpec::Kind::SwitchReboot) {
            if (f.plane >= topo.planes) fail(fp + ".switch.plane", "plane out of range");
            uint32_t lim = f.is_t1 ? t.t1_per_plane() : t.t0_per_plane();
            if (f.index >= lim) fail(fp + ".switch.index", "switch index out of range");
        }
        if (f.kind == FailureSpec::Kind::TransceiverFlap) {
            check_nic(f.nic, fp + ".nic");
            if (f.transceiver_group * 4 >= topo.planes)
                fail(fp + ".transceiver_group", "group covers no ports (planes=" + std::to_string(topo.planes) +
                                                    ")");
        }
        if ((f.kind == FailureSpec::Kind::EvDropRate || f.kind == FailureSpec::Kind::RandomDrop) &&
            (f.rate < 0 || f.rate > 1))
            fail(fp + ".rate", "must be within [0,1]");
    }
}

std::string Scenario::resolved_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = schema_version;
    j["name"] = name;
    j["seed"] = seed;
    j["seed_explicit"] = seed_explicit;
    j["duration_s"] = to_sec(duration);
    j["sample_interval_s"] = to_sec(sample_interval);
    j["drain_s"] = to_sec(drain);
    j["locator"] = locator;
    j["topology"] = {
        {"switch_radix", topo.switch_radix},
        {"planes", topo.planes},
        {"nic_ports_per_plane", topo.nic_ports_per_plane},
        {"link_speed_gbps", static_cast<double>(topo.link_speed_bps) / 1e9},
        {"t0_downlinks", topo.t0_downlinks},
        {"t0_uplinks", topo.t0_uplinks},
        {"propagation_delay_us", to_us(topo.propagation_delay)},
        {"tiers", topo.tiers},
    };
    j["fabric"] = {
        {"mtu", fabric.mtu},
        {"queue_capacity_bytes", fabric.queue_capacity_bytes},
        {"ecn_min_frac", fabric.ecn_min_frac},
        {"ecn_max_frac", fabric.ecn_max_frac},
        {"ecn", fabric.ecn_enabled},
        {"trim", fabric.trim_enabled},
        {"trim_queue_packets", fabric.trim_queue_packets},
    };
    j["transport"]["kind"] = transport == TransportKind::Mrc ? "mrc" : "roce";
    j["transport"]["mrc"] = {
        {"size_target", mrc.size_target},
        {"backup_target", mrc.backup_target},
        {"window_bytes", mrc.window_bytes},
        {"penalty_rtts", mrc.penalty_rtts},
        {"reorder_window", mrc.reorder_window},
        {"rto_rtts", mrc.rto_rtts},
        {"sack_interval_us", to_us(mrc.sack_interval)},
        {"sack_burst", mrc.sack_burst},
        {"sack_window", mrc.sack_window},
        {"probe_interval_ms", to_us(mrc.probe_interval) / 1000.0},
        {"resurrect_threshold", mrc.resurrect_threshold},
        {"remap_latency_ms", to_us(mrc.remap_latency) / 1000.0},
        {"retx_inflate_packets", mrc.retx_inflate_packets},
    };
    j["transport"]["roce"] = {
        {"pfc", roce_pfc},
        {"dcqcn", roce.dcqcn},
        {"profile", dcqcn_profile},
        {"window_bytes", roce.window_bytes},
        {"rto_rtts", roce.rto_rtts},
        {"ack_every", roce.ack_every},
        {"ack_interval_us", to_us(roce.ack_interval)},
    };
    const char* wk = "write_bw";
    switch (workload.kind) {
    case WorkloadSpec::Kind::WriteBw: wk = "write_bw"; break;
    case WorkloadSpec::Kind::WriteLat: wk = "write_lat"; break;
    case WorkloadSpec::Kind::RingAllreduce: wk = "ring_allreduce"; break;
    case WorkloadSpec::Kind::AllToAll: wk = "all_to_all"; break;
    case WorkloadSpec::Kind::Incast: wk = "incast"; break;
    case WorkloadSpec::Kind::Permutation: wk = "permutation"; break;
    }
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& pr : workload.pairs) pairs.push_back({pr.first, pr.second});
    j["workload"] = {
        {"kind", wk},
        {"msg_size", workload.msg_size},
        {"bidir", workload.bidir},
        {"pairs", std::move(pairs)},
        {"cross_t1", workload.cross_t1},
        {"queue_depth", workload.queue_depth},
        {"qps", workload.qps},
        {"nodes", workload.nodes},
        {"node_count", workload.node_count},
        {"rounds", workload.rounds},
        {"iters", workload.iters},
        {"fan_in", workload.fan_in},
        {"victim", workload.victim},
        {"src_racks", workload.src_racks},
        {"dst_racks", workload.dst_racks},
    };
    j["failure_count"] = failures.size();
    j["clustermapper"] = {{"enabled", cm_enabled}, {"period_ms", to_us(cm.period) / 1000.0}};
    j["denylist_entries"] = denylist.size();
    j["trace"] = trace;
    return j.dump();
}

} // namespace planesim
