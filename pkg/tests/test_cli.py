import json
import os
import signal
import subprocess
import sys
import time

import pytest

from simlive.config import ConfigError, InstanceConfig, config_from_dict, load_config
from simlive.host import SimHost
from simlive.schemas import validate_payload

CLI = [sys.executable, "-m", "simlive.cli"]


def run_cli(*args, timeout=30):
    return subprocess.run(CLI + list(args), capture_output=True, text=True,
                          timeout=timeout)


@pytest.fixture(scope="module")
def live_host():
    cfg = InstanceConfig(port=0, protocol="tdma", preset="star", seed=9,
                         pace=20.0, mean_interval_s=0.3, label="TDMA demo")
    with SimHost(cfg) as host:
        yield host


# --- config handling -----------------------------------------------------------

def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "csma.json"
    path.write_text(json.dumps({"port": 9002, "protocol": "csma", "seed": 4,
                                "pace": 2.0, "label": "CSMA",
                                "params": {"queue_capacity": 16}}))
    cfg = load_config(path)
    assert cfg.port == 9002
    assert cfg.sim_params().queue_capacity == 16
    assert cfg.effective_label == "CSMA"


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"portt": 9002})
    assert "portt" in str(err.value) or "additional" in str(err.value).lower()


def test_malformed_config_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "port": 9002,\n  "pace": ,\n}\n')
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert ":3:" in str(err.value)


def test_serve_rejects_malformed_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "pace": ,\n}\n')
    proc = run_cli("serve", "--config", str(path))
    assert proc.returncode == 2
    assert ":2:" in proc.stderr


def test_serve_rejects_zero_pace(tmp_path):
    path = tmp_path / "ok.json"
    path.write_text("{}")
    proc = run_cli("serve", "--config", str(path), "--pace", "0")
    assert proc.returncode == 2
    assert "pace" in proc.stderr


def test_serve_exit_code_on_occupied_port(live_host):
    proc = run_cli("serve", "--port", str(live_host.endpoint.port),
                   "--pace", "5")
    assert proc.returncode == 3
    assert "bind" in proc.stderr.lower()


# --- call ------------------------------------------------------------------------

def test_call_info_prints_json(live_host):
    proc = run_cli("call", live_host.url, "sim.info")
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    assert doc["protocol"] == "TDMA"
    assert doc["label"] == "TDMA demo"


def test_call_unknown_procedure_exit_one(live_host):
    proc = run_cli("call", live_host.url, "no.such.proc")
    assert proc.returncode == 1
    assert "wamp.error.no_such_procedure" in proc.stderr


def test_call_with_positional_args(live_host):
    proc = run_cli("call", live_host.url, "sim.traffic.set_interval", "[0.2]")
    assert proc.returncode == 0
    assert json.loads(proc.stdout) == {"mean_interval_s": 0.2}
    back = run_cli("call", live_host.url, "sim.info")
    assert json.loads(back.stdout)["mean_interval_s"] == 0.2


def test_call_with_keyword_args(live_host):
    proc = run_cli("call", live_host.url, "sim.topology.move_node",
                   '{"id": 3, "x": 55.0, "y": 44.0}')
    assert proc.returncode == 0
    topo = json.loads(run_cli("call", live_host.url, "sim.topology.get").stdout)
    node = next(n for n in topo["nodes"] if n["id"] == 3)
    assert (node["x"], node["y"]) == (55.0, 44.0)


def test_call_fan_out_to_two_instances():
    a = SimHost(InstanceConfig(port=0, protocol="csma", pace=10.0, label="A"))
    b = SimHost(InstanceConfig(port=0, protocol="tdma", pace=10.0, label="B"))
    with a, b:
        for url in (a.url, b.url):
            proc = run_cli("call", url, "sim.control.reset")
            assert proc.returncode == 0
        infos = [json.loads(run_cli("call", url, "sim.info").stdout)
                 for url in (a.url, b.url)]
    assert [i["label"] for i in infos] == ["A", "B"]


def test_call_connect_failure(live_host):
    proc = run_cli("call", "ws://127.0.0.1:9", "sim.info")
    assert proc.returncode == 1


# --- tail ------------------------------------------------------------------------

def test_tail_count_streams_schema_valid_lines(live_host):
    proc = run_cli("tail", live_host.url, "stats.power", "--count", "3")
    assert proc.returncode == 0
    lines = [line for line in proc.stdout.splitlines() if line.strip()]
    assert len(lines) == 3
    for line in lines:
        validate_payload("stats.power", json.loads(line))


def test_tail_seconds_mode(live_host):
    proc = run_cli("tail", live_host.url, "stats.packets", "--seconds", "1.0")
    assert proc.returncode == 0
    for line in proc.stdout.splitlines():
        if line.strip():
            validate_payload("stats.packets", json.loads(line))


def test_tail_unknown_topic_waits_quietly(live_host):
    # topics are not pre-declared: subscribing is legal, it just sees nothing
    proc = run_cli("tail", live_host.url, "stats.unheard_of", "--seconds", "0.5")
    assert proc.returncode == 0
    assert proc.stdout.strip() == ""


# --- serve lifecycle ----------------------------------------------------------------

def test_serve_stops_cleanly_on_sigterm(tmp_path):
    cfg = tmp_path / "serve.json"
    cfg.write_text(json.dumps({"port": 0, "protocol": "tdma", "pace": 10.0}))
    proc = subprocess.Popen(CLI + ["serve", "--config", str(cfg)],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                            text=True)
    try:
        assert "listening on ws://" in proc.stdout.readline()
        proc.send_signal(signal.SIGTERM)
        proc.communicate(timeout=10)
        assert proc.returncode == 0
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.communicate()


def test_serve_starts_and_stops_cleanly(tmp_path):
    cfg = tmp_path / "serve.json"
    cfg.write_text(json.dumps({"port": 0, "protocol": "csma", "pace": 10.0,
                               "seed": 2}))
    proc = subprocess.Popen(CLI + ["serve", "--config", str(cfg)],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                            text=True)
    try:
        line = proc.stdout.readline()
        assert "listening on ws://" in line
        url = line.split()[2]
        check = run_cli("call", url, "sim.info")
        assert check.returncode == 0
        proc.send_signal(signal.SIGINT)
        out, err = proc.communicate(timeout=10)
        assert proc.returncode == 0
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.communicate()
