#include <benchmark/benchmark.h>

#include "planesim/harness.hpp"

using namespace planesim;

namespace {

Scenario write_bw_scenario(uint32_t planes, double duration_s) {
    Scenario sc;
    sc.seed = 1;
    sc.duration = from_sec(duration_s);
    sc.drain = from_sec(0.2);
    sc.sample_interval = 100 * kMillisecond;
    sc.topo.switch_radix = 8;
    sc.topo.planes = planes;
    sc.topo.t0_downlinks = 4;
    sc.topo.t0_uplinks = 4;
    sc.topo.link_speed_bps = 1'000'000'000ull;
    sc.mrc.size_target = 32;
    sc.workload.kind = WorkloadSpec::Kind::WriteBw;
    sc.workload.msg_size = 32768;
    sc.workload.queue_depth = 8;
    return sc;
}

void BM_ForwardStep(benchmark::State& state) {
    TopologySpec spec;
    spec.switch_radix = 16;
    spec.planes = 4;
    spec.t0_downlinks = 8;
    spec.t0_uplinks = 8;
    Topology topo(spec);
    Srv6Allocation alloc(topo, 0xfbf00000u);
    Srv6Address addr = alloc.build_template(9).specialize(PathId{1, 3, topo.downlink_of(9), false});
    const SwitchSrv6Config& t1 = alloc.t1_config(1, 3);
    Srv6Address at_t1 = addr; // T1 is the first named switch
    for (auto _ : state) {
        ForwardResult r = forward_step(t1, at_t1);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_ForwardStep);

void BM_EcmpSelect(benchmark::State& state) {
    uint32_t i = 0;
    for (auto _ : state) {
        FlowFields f;
        f.src_ip = i++;
        f.dst_ip = 42;
        f.src_port = static_cast<uint16_t>(i);
        benchmark::DoNotOptimize(ecmp_select(f, 256, 7));
    }
}
BENCHMARK(BM_EcmpSelect);

// End-to-end events/second of a saturated 2-NIC write_bw sim.
void BM_WriteBwSim(benchmark::State& state) {
    uint64_t events = 0;
    for (auto _ : state) {
        Sim sim(write_bw_scenario(static_cast<uint32_t>(state.range(0)), 0.05));
        sim.run();
        events += sim.loop().events_processed();
    }
    state.counters["events/s"] =
        benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_WriteBwSim)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
