import math

import pytest

from simlive.kernel import Kernel, NS_PER_SEC, RngStream, ns
from simlive.netsim import (
    DropReason, InvalidInterval, InvalidParams, InvalidTopology, MoveNode,
    RadioState, Reset, SetMeanInterval, SetPreset, SimParams, Simulation,
    Topology, TopologyNode, UnknownNode, UnknownPreset, builtin_preset_names,
    load_preset,
)


def two_node_topology(distance=20.0):
    return Topology("pair", [TopologyNode(0, 0.0, 0.0, sink=True),
                             TopologyNode(1, distance, 0.0)])


def recording_sim(topology, variant="csma", params=None, seed=1):
    sim = Simulation(topology, variant, params or SimParams(), seed=seed)
    sim.windows = []
    sim.set_recording(True, True)
    sim.on_window = sim.windows.append
    return sim


# --- construction ---------------------------------------------------------------

def test_two_node_topology_routes_one_hop():
    sim = Simulation(two_node_topology(), "csma", SimParams(), seed=1)
    assert sim._nodes[1].parent == 0
    assert sim._nodes[1].routed


def test_two_sinks_rejected():
    topo = Topology("bad", [TopologyNode(0, 0, 0, sink=True),
                            TopologyNode(1, 5, 0, sink=True)])
    with pytest.raises(InvalidTopology):
        Simulation(topo, "csma", SimParams(), seed=1)


def test_bad_params_rejected():
    with pytest.raises(InvalidParams):
        Simulation(two_node_topology(), "csma", SimParams(queue_capacity=0), seed=1)
    with pytest.raises(InvalidParams):
        Simulation(two_node_topology(), "tdma",
                   SimParams(tdma_slot_s=0.001, airtime_s=0.004), seed=1)


def test_build_starts_nodes_asleep_then_mac_policy():
    sim = Simulation(two_node_topology(), "tdma", SimParams(), seed=1)
    assert all(n.radio is RadioState.SLEEP for n in sim._nodes_sorted)
    sim2 = Simulation(two_node_topology(), "csma", SimParams(), seed=1)
    assert all(n.radio is RadioState.RX for n in sim2._nodes_sorted)


def test_identical_builds_fire_identical_first_100_events():
    class TracingKernel(Kernel):
        def __init__(self, seed):
            super().__init__(seed)
            self.trace = []

        def _fire(self, handle):
            if len(self.trace) < 100:
                self.trace.append((handle.time, handle.seq))
            super()._fire(handle)

    traces = []
    for _ in range(2):
        k = TracingKernel(17)
        Simulation(load_preset("star"), "csma", SimParams(), seed=17, kernel=k)
        k.run_until(ns(5))
        traces.append(list(k.trace))
    assert traces[0] == traces[1]
    assert len(traces[0]) == 100


# --- traffic generation ------------------------------------------------------------

def test_interval_change_does_not_reschedule_pending_generation():
    sim = Simulation(two_node_topology(), "tdma",
                     SimParams(mean_interval_s=2.0), seed=3)
    gens = []
    sim.trace_generation = lambda nid, t: gens.append(t)
    sim.kernel.run_until(ns(1.0))
    sim.apply_command(SetMeanInterval(0.05))
    sim.kernel.run_until(ns(6.0))

    stream = RngStream(3, "traffic.1")
    expected, t = [], 0
    while True:
        mean = 0.05 if t >= ns(1.0) else 2.0
        t += stream.exponential_ns(mean)
        if t > ns(6.0):
            break
        expected.append(t)
    assert gens == expected


def test_full_queue_generates_overflow_drop():
    params = SimParams(mean_interval_s=0.001, queue_capacity=4)
    sim = recording_sim(two_node_topology(distance=500.0), "csma", params)
    sim.kernel.run_until(ns(0.5))
    # node 1 is routeless at 500 m, so its queue drains as NO_ROUTE instantly;
    # bring it in range but keep the channel jammed instead: simplest check is
    # a connected pair at saturating load
    sim2 = recording_sim(two_node_topology(), "csma", params, seed=2)
    sim2.kernel.run_until(ns(2))
    t = sim2.totals()
    assert t["drops"][DropReason.QUEUE_OVERFLOW] > 0
    assert len(sim2._nodes[1].queue) <= 4


def test_poisson_count_oracle():
    sim = Simulation(two_node_topology(), "tdma",
                     SimParams(mean_interval_s=0.5), seed=9)
    sim.kernel.run_until(ns(200))
    n = sim.totals()["generated"]
    # Poisson(400): 3 sigma = 60
    assert abs(n - 400) <= 60


def test_sink_does_not_generate():
    sim = recording_sim(two_node_topology(), "tdma")
    sim.kernel.run_until(ns(5))
    assert all(r.origin == 1 for r in [])  # placeholder: origin check below
    gens = []
    sim2 = Simulation(two_node_topology(), "tdma", SimParams(), seed=4)
    sim2.trace_generation = lambda nid, t: gens.append(nid)
    sim2.kernel.run_until(ns(5))
    assert set(gens) == {1}


# --- CSMA behaviour ------------------------------------------------------------------

def test_sole_transmitter_delivers_first_attempt():
    sim = Simulation(two_node_topology(), "csma",
                     SimParams(mean_interval_s=5.0), seed=6)
    deliveries = []
    sim.trace_delivery = lambda pkt, t: deliveries.append(pkt)
    sim.kernel.run_until(ns(30))
    assert deliveries
    assert all(p.retries == 0 for p in deliveries)
    t = sim.totals()
    assert t["delivered"] == len(deliveries)
    assert sum(t["drops"].values()) == 0


def test_busy_channel_all_attempts_gives_access_failure():
    # second transmitter occupies the air for five full seconds; contenders
    # are mutually in range so carrier sense actually sees the busy channel
    params = SimParams(airtime_s=5.0, tdma_slot_s=6.0, mean_interval_s=0.3)
    topo = Topology("triangle", [TopologyNode(0, 0.0, 0.0, sink=True),
                                 TopologyNode(1, 20.0, 0.0),
                                 TopologyNode(2, -8.0, 0.0)])
    sim = recording_sim(topo, "csma", params, seed=5)
    sim.kernel.run_until(ns(4))
    assert sim.totals()["drops"][DropReason.CHANNEL_ACCESS_FAILURE] > 0


def test_retry_count_never_exceeds_limit():
    sim = recording_sim(load_preset("star"), "csma",
                        SimParams(mean_interval_s=0.05), seed=8)
    seen = []
    sim.trace_delivery = lambda pkt, t: seen.append(pkt.retries)
    sim.kernel.run_until(ns(10))
    limit = sim.params.max_retries
    assert all(0 <= r <= limit for r in seen)


def test_moved_out_of_range_drops_no_route_at_dequeue():
    sim = recording_sim(two_node_topology(), "csma",
                        SimParams(mean_interval_s=0.2))
    sim.kernel.run_until(ns(2))
    sim.apply_command(MoveNode(1, 900.0, 900.0))
    before = sim.totals()["drops"][DropReason.NO_ROUTE]
    sim.kernel.run_until(ns(6))
    assert sim.totals()["drops"][DropReason.NO_ROUTE] > before
    assert sim.totals()["delivered"] == sim.windows[0].delivered + sum(
        w.delivered for w in sim.windows[1:])


# --- TDMA behaviour ---------------------------------------------------------------------

def test_tdma_saturated_star_is_collision_free():
    sim = recording_sim(load_preset("star"), "tdma",
                        SimParams(mean_interval_s=0.01), seed=2)
    sim.kernel.run_until(ns(10))
    drops = sim.totals()["drops"]
    assert drops[DropReason.CHANNEL_ACCESS_FAILURE] == 0
    assert drops[DropReason.RETRY_EXHAUSTED] == 0
    assert sim.totals()["delivered"] > 0


def test_tdma_idle_owner_sleeps_and_parent_listens():
    sim = Simulation(load_preset("star"), "tdma",
                     SimParams(mean_interval_s=1e6), seed=1)
    slot = sim.params.tdma_slot_ns
    # middle of node 3's slot: owner has an empty queue -> sleeps; the sink
    # (its routing parent) performs the slot-listen
    sim.kernel.run_until(3 * slot + slot // 2)
    assert sim.node_radio(3) is RadioState.SLEEP
    assert sim.node_radio(0) is RadioState.RX
    assert sim.node_radio(5) is RadioState.SLEEP


def test_tdma_delivery_latency_closed_form():
    params = SimParams(mean_interval_s=50.0)
    sim = Simulation(load_preset("star"), "tdma", params, seed=12)
    deliveries = []
    gens = []
    sim.trace_delivery = lambda pkt, t: deliveries.append((pkt.origin, t))
    sim.trace_generation = lambda nid, t: gens.append((nid, t))
    sim.kernel.run_until(ns(10))
    assert deliveries

    slot = params.tdma_slot_ns
    airtime = params.airtime_ns
    frame = slot * 15
    by_origin = {}
    for nid, t in gens:
        by_origin.setdefault(nid, []).append(t)
    for origin, arrival in deliveries[:8]:
        created = by_origin[origin].pop(0)
        own = origin  # star ids equal slot order
        # earliest transmit start: creation if it fits in the running own
        # slot, else the next own slot start
        gslot, offset = divmod(created, slot)
        if gslot % 15 == own and offset + airtime < slot:
            start = created
        else:
            k = gslot
            while True:
                k += 1
                if k % 15 == own:
                    break
            start = k * slot
        assert arrival == start + airtime
        assert arrival - created <= frame


def test_tdma_multihop_forwarding_on_line():
    sim = recording_sim(load_preset("line"), "tdma",
                        SimParams(mean_interval_s=0.5), seed=3)
    sim.kernel.run_until(ns(20))
    t = sim.totals()
    assert t["delivered"] > 0
    assert t["generated"] == (t["delivered"] + sum(t["drops"].values())
                              + t["queued"] + t["in_flight"])


# --- power accounting ----------------------------------------------------------------

def sink_only(variant):
    topo = Topology("solo", [TopologyNode(0, 0.0, 0.0, sink=True)])
    sim = Simulation(topo, variant, SimParams(tdma_slot_s=0.005), seed=1)
    sim.windows = []
    sim.set_recording(True, True)
    sim.on_window = sim.windows.append
    return sim


def test_continuous_rx_window_is_19mw():
    sim = sink_only("csma")   # contention radios listen continuously
    sim.kernel.run_until(ns(1))
    w = sim.windows[0]
    assert w.per_node_mw[0] == pytest.approx(19.0, rel=1e-9)
    assert w.total_mw == pytest.approx(19.0, rel=1e-9)


def test_mixed_tx_sleep_window_closed_form():
    # csma keeps no slot schedule, so forced radio states stay put
    sim = sink_only("csma")
    node = sim._nodes[0]
    k = sim.kernel
    k.schedule(0, lambda: sim._set_radio(node, RadioState.TX))
    k.schedule(ns(0.25), lambda: sim._set_radio(node, RadioState.SLEEP))
    k.run_until(ns(1))
    w = sim.windows[0]
    assert w.per_node_mw[0] == pytest.approx(36 * 0.25 + 0.02 * 0.75, rel=1e-9)


def test_zero_duration_state_change_accumulates_nothing():
    sim = sink_only("tdma")
    node = sim._nodes[0]
    before = node.win_energy_mj
    sim._set_radio(node, RadioState.TX)
    sim._set_radio(node, RadioState.SLEEP)
    assert node.win_energy_mj == before


def test_power_bounds_hold_everywhere():
    for variant in ("csma", "tdma"):
        sim = recording_sim(load_preset("grid"), variant,
                            SimParams(mean_interval_s=0.1), seed=4)
        sim.kernel.run_until(ns(8))
        for w in sim.windows:
            for mw in w.per_node_mw.values():
                assert 0.02 - 1e-12 <= mw <= 36.0 + 1e-12


def test_radio_time_conservation_per_window():
    sim = recording_sim(load_preset("star"), "tdma",
                        SimParams(mean_interval_s=0.05), seed=6)
    checks = []
    sim.on_window = lambda w: checks.append(
        set(sim.last_window_durations_ns.values()))
    sim.kernel.run_until(ns(10))
    assert checks
    assert all(c == {NS_PER_SEC} for c in checks)


# --- windows and recording gating -----------------------------------------------------

def test_window_counter_snapshot_and_reset():
    sim = recording_sim(load_preset("star"), "csma",
                        SimParams(mean_interval_s=0.05), seed=7)
    sim.kernel.run_until(ns(3))
    w0, w1, w2 = sim.windows
    assert (w0.index, w1.index, w2.index) == (0, 1, 2)
    totals = sim.totals()
    assert sum(w.generated for w in sim.windows) == totals["generated"]
    assert sum(w.delivered for w in sim.windows) == totals["delivered"]
    for reason in DropReason:
        assert sum(w.drops[reason] for w in sim.windows) == totals["drops"][reason]


def test_no_recording_means_no_windows_and_no_drop_buffer():
    sim = Simulation(load_preset("star"), "csma",
                     SimParams(mean_interval_s=0.02), seed=3)
    called = []
    sim.on_window = called.append
    sim.kernel.run_until(ns(5))
    assert called == []
    assert sim.drop_record_buffer_len() == 0
    assert sim.totals()["generated"] > 0   # the simulation itself kept going


def test_subscribe_mid_window_first_payload_next_boundary():
    sim = Simulation(load_preset("star"), "csma",
                     SimParams(mean_interval_s=0.1), seed=3)
    wins = []
    sim.on_window = wins.append
    sim.kernel.run_until(ns(3.4))
    sim.set_recording(True, True)
    sim.kernel.run_until(ns(4.0))
    assert [w.index for w in wins] == [3]
    sim.kernel.run_until(ns(6.0))
    assert [w.index for w in wins] == [3, 4, 5]


def test_drop_records_have_position_and_reason():
    sim = recording_sim(load_preset("star"), "csma",
                        SimParams(mean_interval_s=0.01), seed=5)
    sim.kernel.run_until(ns(3))
    records = [r for w in sim.windows for r in w.drop_records]
    assert records
    for r in records[:50]:
        x, y = sim.node_position(r.node)
        assert isinstance(r.reason, DropReason)
        assert r.t >= 0
    # the open-window buffer stays bounded by one window's worth
    assert sim.drop_record_buffer_len() <= len(records)


def test_memory_stays_bounded_without_drop_subscribers():
    sim = Simulation(load_preset("star"), "csma",
                     SimParams(mean_interval_s=0.02), seed=5)
    sim.set_recording(True, False)   # counters only, no located-drop retention
    sim.on_window = lambda w: None
    sim.kernel.run_until(ns(10))
    assert sim.drop_record_buffer_len() == 0


# --- commands -----------------------------------------------------------------------

def test_move_unknown_node():
    sim = Simulation(load_preset("grid"), "csma", SimParams(), seed=1)
    with pytest.raises(UnknownNode):
        sim.apply_command(MoveNode(99, 1.0, 1.0))


def test_set_preset_tables_verbatim():
    sim = Simulation(load_preset("star"), "csma", SimParams(), seed=1)
    sim.apply_command(SetPreset("line"))
    line = load_preset("line")
    for n in line.nodes:
        assert sim.node_position(n.id) == (n.x, n.y)
    sim.apply_command(SetPreset("grid"))
    grid = load_preset("grid")
    for n in grid.nodes:
        assert sim.node_position(n.id) == (n.x, n.y)
    assert sim.preset_name == "grid"


def test_set_preset_incompatible_node_set():
    sim = Simulation(two_node_topology(), "csma", SimParams(), seed=1)
    with pytest.raises(InvalidTopology):
        sim.apply_command(SetPreset("star"))


def test_unknown_preset():
    sim = Simulation(load_preset("star"), "csma", SimParams(), seed=1)
    with pytest.raises(UnknownPreset):
        sim.apply_command(SetPreset("doughnut"))


def test_invalid_interval():
    sim = Simulation(load_preset("star"), "csma", SimParams(), seed=1)
    for bad in (0, -1.0, float("nan"), float("inf")):
        with pytest.raises(InvalidInterval):
            sim.apply_command(SetMeanInterval(bad))


def test_move_node_triggers_topology_notification():
    sim = Simulation(load_preset("grid"), "csma", SimParams(), seed=1)
    seen = []
    sim.on_topology_changed = seen.append
    sim.apply_command(MoveNode(3, 10.0, 12.5))
    assert len(seen) == 1
    moved = next(n for n in seen[0]["nodes"] if n["id"] == 3)
    assert (moved["x"], moved["y"]) == (10.0, 12.5)
    assert seen[0]["preset"] == "grid"


def test_reset_restores_initial_preset_and_trace():
    def fresh_windows(seed, horizon):
        sim = recording_sim(load_preset("grid"), "csma", SimParams(), seed=seed)
        sim.kernel.run_until(ns(horizon))
        return sim.windows

    reference = fresh_windows(21, 10)
    sim = recording_sim(load_preset("grid"), "csma", SimParams(), seed=21)
    k = sim.kernel
    k.schedule(ns(4), lambda: sim.apply_command(SetMeanInterval(0.03)))
    k.schedule(ns(9), lambda: sim.apply_command(MoveNode(5, 300.0, 300.0)))
    k.run_until(ns(30))
    k.schedule(k.now(), lambda: sim.apply_command(Reset()))
    sim.windows.clear()
    k.run_until(ns(40))
    assert sim.windows == reference
    grid = load_preset("grid")
    for n in grid.nodes:
        assert sim.node_position(n.id) == (n.x, n.y)


def test_conservation_for_both_variants_over_many_seeds():
    for variant in ("csma", "tdma"):
        for seed in (1, 2, 3):
            sim = Simulation(load_preset("star"), variant,
                             SimParams(mean_interval_s=0.05), seed=seed)
            sim.set_recording(True, False)
            failures = []

            def audit(window):
                t = sim.totals()
                lhs = t["generated"]
                rhs = (t["delivered"] + sum(t["drops"].values())
                       + t["queued"] + t["in_flight"])
                if lhs != rhs:
                    failures.append((window.index, lhs, rhs))

            sim.on_window = audit
            sim.kernel.run_until(ns(12))
            assert not failures


def test_info_reports_current_mean():
    sim = Simulation(load_preset("star"), "csma", SimParams(), seed=1, label="CSMA demo")
    sim.apply_command(SetMeanInterval(0.25))
    info = sim.info()
    assert info["mean_interval_s"] == 0.25
    assert info["label"] == "CSMA demo"
    assert info["protocol"] == "CSMA"
    assert info["seed"] == 1


def test_builtin_preset_names():
    assert set(builtin_preset_names()) == {"line", "grid", "star"}
    for name in builtin_preset_names():
        topo = load_preset(name)
        assert len(topo.nodes) == 15
        assert topo.sink_id == 0
