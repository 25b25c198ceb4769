import json
import threading
import time

import pytest

from simlive import control as ctl
from simlive.config import InstanceConfig
from simlive.control import ControlSurface, bind
from simlive.endpoint import (
    Client, DuplicateRegistration, Endpoint, RemoteError, client_connect, start,
)
from simlive.host import SimHost
from simlive.kernel import ns
from simlive.netsim import SimParams, Simulation, Topology, TopologyNode
from simlive.schemas import validate_payload


def tiny_topology():
    return Topology("tiny", [TopologyNode(0, 0.0, 0.0, sink=True),
                             TopologyNode(1, 15.0, 0.0),
                             TopologyNode(2, -15.0, 0.0)])


@pytest.fixture
def host(tmp_path):
    topo_file = tmp_path / "tiny.json"
    topo_file.write_text(json.dumps({
        "name": "tiny",
        "nodes": [{"id": 0, "x": 0.0, "y": 0.0, "sink": True},
                  {"id": 1, "x": 15.0, "y": 0.0, "sink": False},
                  {"id": 2, "x": -15.0, "y": 0.0, "sink": False}],
    }))
    cfg = InstanceConfig(port=0, protocol="csma", preset=str(topo_file),
                         seed=5, pace=25.0, mean_interval_s=0.4, label="demo A")
    with SimHost(cfg) as h:
        yield h


def collect_events(client, topic, n, timeout=10.0):
    got = []
    done = threading.Event()

    def sink(args, kwargs):
        got.append(args[0])
        if len(got) >= n:
            done.set()

    sub = client.subscribe(topic, sink)
    assert done.wait(timeout), f"only {len(got)} events on {topic}"
    client.unsubscribe(sub)
    return got


def test_bound_catalogue_is_callable(host):
    with client_connect(host.url) as client:
        info = client.call("sim.info")[0][0]
        assert info["protocol"] == "CSMA"
        assert info["label"] == "demo A"
        assert info["seed"] == 5
        assert info["mean_interval_s"] == 0.4


def test_unbound_endpoint_has_no_procedures():
    ep = start(0)
    try:
        with client_connect(ep.url) as client:
            with pytest.raises(RemoteError) as err:
                client.call("sim.info")
            assert err.value.uri == "wamp.error.no_such_procedure"
    finally:
        ep.shutdown()


def test_double_bind_rejected(host):
    with pytest.raises(DuplicateRegistration):
        ControlSurface(host.sim, host.endpoint).bind()


def test_set_interval_read_after_write(host):
    with client_connect(host.url) as client:
        ack = client.call("sim.traffic.set_interval", [0.25])[0][0]
        assert ack == {"mean_interval_s": 0.25}
        info = client.call("sim.info")[0][0]
        assert info["mean_interval_s"] == 0.25


def test_move_node_read_after_write(host):
    with client_connect(host.url) as client:
        client.call("sim.topology.move_node", [2, 10.0, 12.5])
        topo = client.call("sim.topology.get")[0][0]
        moved = next(n for n in topo["nodes"] if n["id"] == 2)
        assert (moved["x"], moved["y"]) == (10.0, 12.5)
        validate_payload("topology.changed", topo)


def test_domain_errors_translate_to_uris(host):
    with client_connect(host.url) as client:
        with pytest.raises(RemoteError) as e1:
            client.call("sim.topology.move_node", [99, 0.0, 0.0])
        assert e1.value.uri == "sim.error.unknown_node"
        with pytest.raises(RemoteError) as e2:
            client.call("sim.traffic.set_interval", [-1.0])
        assert e2.value.uri == "sim.error.invalid_argument"
        with pytest.raises(RemoteError) as e3:
            client.call("sim.topology.set_preset", ["doughnut"])
        assert e3.value.uri == "sim.error.unknown_preset"
        with pytest.raises(RemoteError) as e4:
            client.call("sim.traffic.set_interval", ["fast"])
        assert e4.value.uri == "sim.error.invalid_argument"
        with pytest.raises(RemoteError) as e5:
            client.call("sim.topology.move_node", [1])
        assert e5.value.uri == "sim.error.invalid_argument"


def test_power_topic_publishes_once_per_window(host):
    with client_connect(host.url) as client:
        events = collect_events(client, "stats.power", 4)
    indices = [e["window"] for e in events]
    assert indices == sorted(indices)
    assert len(set(indices)) == len(indices)   # exactly one per window
    for e in events:
        validate_payload("stats.power", e)
        assert set(e["per_node"]) == {"0", "1", "2"}


def test_packets_topic_schema_and_counters(host):
    with client_connect(host.url) as client:
        events = collect_events(client, "stats.packets", 3)
    for e in events:
        validate_payload("stats.packets", e)
        assert e["generated"] >= e["delivered"]


def test_drops_topic_only_contains_window_records(host):
    with client_connect(host.url) as client:
        client.call("sim.traffic.set_interval", [0.01])   # force overflow drops
        events = collect_events(client, "stats.drops.located", 3)
    reasons = {"QUEUE_OVERFLOW", "CHANNEL_ACCESS_FAILURE",
               "RETRY_EXHAUSTED", "NO_ROUTE"}
    assert any(e["drops"] for e in events)
    for e in events:
        validate_payload("stats.drops.located", e)
        for record in e["drops"]:
            assert record["reason"] in reasons


def test_recording_disabled_without_subscribers(host):
    time.sleep(0.3)
    assert host.sim.recording == (False, False)
    with client_connect(host.url) as client:
        sub = client.subscribe("stats.power", lambda a, k: None)
        deadline = time.monotonic() + 5
        while host.sim.recording != (True, False) and time.monotonic() < deadline:
            time.sleep(0.02)
        assert host.sim.recording == (True, False)
        client.unsubscribe(sub)
        deadline = time.monotonic() + 5
        while host.sim.recording != (False, False) and time.monotonic() < deadline:
            time.sleep(0.02)
        assert host.sim.recording == (False, False)


def test_drop_subscriber_enables_located_recording(host):
    with client_connect(host.url) as client:
        sub = client.subscribe("stats.drops.located", lambda a, k: None)
        deadline = time.monotonic() + 5
        while host.sim.recording != (True, True) and time.monotonic() < deadline:
            time.sleep(0.02)
        assert host.sim.recording == (True, True)
        client.unsubscribe(sub)


def test_reset_restarts_window_indices(host):
    with client_connect(host.url) as client:
        first = collect_events(client, "stats.power", 2)
        assert first[0]["window"] >= 0
        client.call("sim.control.reset")
        after = collect_events(client, "stats.power", 2)
    assert after[0]["window"] == 0
    assert after[1]["window"] == 1


def test_topology_changed_published_on_move(host):
    got = []
    with client_connect(host.url) as client:
        client.subscribe("topology.changed", lambda a, k: got.append(a[0]))
        client.call("sim.topology.move_node", [1, 40.0, 40.0])
        deadline = time.monotonic() + 5
        while not got and time.monotonic() < deadline:
            time.sleep(0.02)
    assert got
    validate_payload("topology.changed", got[0])
    moved = next(n for n in got[0]["nodes"] if n["id"] == 1)
    assert (moved["x"], moved["y"]) == (40.0, 40.0)


def test_three_subscribers_share_one_window_roll(host):
    clients = [client_connect(host.url) for _ in range(3)]
    try:
        buckets = [[] for _ in clients]
        events = [threading.Event() for _ in clients]
        for i, c in enumerate(clients):
            def sink(args, kwargs, i=i):
                buckets[i].append(args[0])
                if len(buckets[i]) >= 3:
                    events[i].set()
            c.subscribe("stats.power", sink)
        for e in events:
            assert e.wait(10)
        common = min(len(b) for b in buckets)
        assert buckets[0][:common] == buckets[1][:common] == buckets[2][:common]
    finally:
        for c in clients:
            c.close()
