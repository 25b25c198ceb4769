#!/usr/bin/env python3
"""Regenerate tests/data/wire_golden.json.

Frames are laid out here by hand from the WAMP basic-profile array formats
and serialised with plain json.dumps; the production codec is deliberately
not imported, so the corpus stays an independent check on it.

Corpus entry shape:
    {"name": ..., "frame": "<wire text>", "tag": "trivial"|"derived",
     "scenario": optional str,
     "expect": {"type": "...", ...fields...}       # decodes to this message
       or {"reject": "malformed"|"unsupported"}}   # decode must reject
Entries with "canonical": true must also re-encode byte-identically.
"""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "wire_golden.json"


def frame(*fields):
    return json.dumps(list(fields), separators=(",", ":"), ensure_ascii=False)


def good(name, raw, tag, expect, scenario=None, canonical=True):
    entry = {"name": name, "frame": raw, "tag": tag, "expect": expect,
             "canonical": canonical}
    if scenario:
        entry["scenario"] = scenario
    return entry


def bad(name, raw, reject, tag="trivial"):
    return {"name": name, "frame": raw, "tag": tag, "canonical": False,
            "expect": {"reject": reject}}


entries = []

# -- one canonical frame per supported variant --------------------------------
entries += [
    good("hello_minimal", frame(1, "realm1", {"roles": {"subscriber": {}, "caller": {}}}),
         "trivial",
         {"type": "hello", "realm": "realm1",
          "details": {"roles": {"subscriber": {}, "caller": {}}}}),
    good("welcome_minimal", frame(2, 887766, {"roles": {"broker": {}, "dealer": {}}}),
         "trivial",
         {"type": "welcome", "session": 887766,
          "details": {"roles": {"broker": {}, "dealer": {}}}}),
    good("abort_plain", frame(3, {"message": "received HELLO twice"},
                              "wamp.error.protocol_violation"),
         "trivial",
         {"type": "abort", "details": {"message": "received HELLO twice"},
          "reason": "wamp.error.protocol_violation"}),
    good("goodbye_close", frame(6, {}, "wamp.close.goodbye_and_out"),
         "trivial",
         {"type": "goodbye", "details": {}, "reason": "wamp.close.goodbye_and_out"}),
    good("error_no_such_procedure", frame(8, 48, 7, {}, "wamp.error.no_such_procedure"),
         "derived",
         {"type": "error", "request_type": 48, "request": 7, "details": {},
          "error": "wamp.error.no_such_procedure"}),
    good("error_with_args", frame(8, 48, 41, {}, "sim.error.invalid_argument",
                                  ["mean interval must be positive"]),
         "derived",
         {"type": "error", "request_type": 48, "request": 41, "details": {},
          "error": "sim.error.invalid_argument",
          "args": ["mean interval must be positive"]}),
    good("subscribe_power", frame(32, 1, {}, "stats.power"),
         "trivial",
         {"type": "subscribe", "request": 1, "options": {}, "topic": "stats.power"}),
    good("subscribed_power", frame(33, 1, 5512315355),
         "trivial",
         {"type": "subscribed", "request": 1, "subscription": 5512315355}),
    good("unsubscribe", frame(34, 85346237, 5512315355),
         "trivial",
         {"type": "unsubscribe", "request": 85346237, "subscription": 5512315355}),
    good("unsubscribed", frame(35, 85346237),
         "trivial",
         {"type": "unsubscribed", "request": 85346237}),
    good("event_positional", frame(36, 55, 901, {}, [12.5]),
         "derived",
         {"type": "event", "subscription": 55, "publication": 901, "details": {},
          "args": [12.5]}),
    good("call_no_args", frame(48, 7, {}, "sim.control.reset"),
         "trivial",
         {"type": "call", "request": 7, "options": {}, "procedure": "sim.control.reset"}),
    good("result_bare", frame(50, 7, {}),
         "trivial",
         {"type": "result", "request": 7, "details": {}}),
]

# -- payload-bearing edge shapes ----------------------------------------------
entries += [
    good("call_kwargs_placeholder", frame(48, 11, {}, "sim.topology.move_node",
                                          [], {"id": 3, "x": 10.0, "y": 12.5}),
         "derived",
         {"type": "call", "request": 11, "options": {}, "procedure": "sim.topology.move_node",
          "args": [], "kwargs": {"id": 3, "x": 10.0, "y": 12.5}}),
    good("result_args_kwargs", frame(50, 11, {}, ["ok"], {"applied": True}),
         "derived",
         {"type": "result", "request": 11, "details": {}, "args": ["ok"],
          "kwargs": {"applied": True}}),
    good("event_kwargs_only", frame(36, 9, 77, {}, [], {"window": 3}),
         "derived",
         {"type": "event", "subscription": 9, "publication": 77, "details": {},
          "args": [], "kwargs": {"window": 3}}),
    good("id_bounds_max", frame(33, 9007199254740992, 1),
         "derived",
         {"type": "subscribed", "request": 9007199254740992, "subscription": 1}),
    good("uri_deep", frame(32, 2, {}, "stats.drops.located"),
         "trivial",
         {"type": "subscribe", "request": 2, "options": {}, "topic": "stats.drops.located"}),
    good("unicode_payload", frame(50, 13, {}, ["consumo de energía: 9.015 mW"]),
         "derived",
         {"type": "result", "request": 13, "details": {},
          "args": ["consumo de energía: 9.015 mW"]}),
]

# -- widget connection scenarios against the paired instances -----------------
# Scenario 1: power-chart widget attaches to ws://localhost:9002 (first instance).
entries += [
    good("s1_hello", frame(1, "simlive", {"roles": {"subscriber": {}, "caller": {}}}),
         "derived",
         {"type": "hello", "realm": "simlive",
          "details": {"roles": {"subscriber": {}, "caller": {}}}},
         scenario="power_widget_9002"),
    good("s1_welcome", frame(2, 4125131539, {"roles": {"broker": {}, "dealer": {}}}),
         "derived",
         {"type": "welcome", "session": 4125131539,
          "details": {"roles": {"broker": {}, "dealer": {}}}},
         scenario="power_widget_9002"),
    good("s1_subscribe", frame(32, 1, {}, "stats.power"),
         "derived",
         {"type": "subscribe", "request": 1, "options": {}, "topic": "stats.power"},
         scenario="power_widget_9002"),
    good("s1_subscribed", frame(33, 1, 2295354749),
         "derived",
         {"type": "subscribed", "request": 1, "subscription": 2295354749},
         scenario="power_widget_9002"),
    good("s1_event_window", frame(36, 2295354749, 6093072557, {},
                                  [{"window": 17, "total_mw": 27.31,
                                    "per_node": {"0": 19.0, "1": 4.155, "2": 4.155}}]),
         "derived",
         {"type": "event", "subscription": 2295354749, "publication": 6093072557,
          "details": {},
          "args": [{"window": 17, "total_mw": 27.31,
                    "per_node": {"0": 19.0, "1": 4.155, "2": 4.155}}]},
         scenario="power_widget_9002"),
]

# Scenario 2: the same widget's second session, ws://localhost:9003.
entries += [
    good("s2_hello", frame(1, "simlive", {"roles": {"subscriber": {}, "caller": {}}}),
         "derived",
         {"type": "hello", "realm": "simlive",
          "details": {"roles": {"subscriber": {}, "caller": {}}}},
         scenario="power_widget_9003"),
    good("s2_welcome", frame(2, 1830847514, {"roles": {"broker": {}, "dealer": {}}}),
         "derived",
         {"type": "welcome", "session": 1830847514,
          "details": {"roles": {"broker": {}, "dealer": {}}}},
         scenario="power_widget_9003"),
    good("s2_subscribe", frame(32, 1, {}, "stats.power"),
         "derived",
         {"type": "subscribe", "request": 1, "options": {}, "topic": "stats.power"},
         scenario="power_widget_9003"),
    good("s2_subscribed", frame(33, 1, 7347811387),
         "derived",
         {"type": "subscribed", "request": 1, "subscription": 7347811387},
         scenario="power_widget_9003"),
    good("s2_event_window", frame(36, 7347811387, 904671113, {},
                                  [{"window": 17, "total_mw": 290.4,
                                    "per_node": {"0": 19.0, "1": 135.7, "2": 135.7}}]),
         "derived",
         {"type": "event", "subscription": 7347811387, "publication": 904671113,
          "details": {},
          "args": [{"window": 17, "total_mw": 290.4,
                    "per_node": {"0": 19.0, "1": 135.7, "2": 135.7}}]},
         scenario="power_widget_9003"),
]

# Scenario 3: one slider movement fanned out to both instances, then teardown.
entries += [
    good("s3_call_9002", frame(48, 21, {}, "sim.traffic.set_interval", [0.25]),
         "derived",
         {"type": "call", "request": 21, "options": {},
          "procedure": "sim.traffic.set_interval", "args": [0.25]},
         scenario="slider_fanout"),
    good("s3_call_9003", frame(48, 14, {}, "sim.traffic.set_interval", [0.25]),
         "derived",
         {"type": "call", "request": 14, "options": {},
          "procedure": "sim.traffic.set_interval", "args": [0.25]},
         scenario="slider_fanout"),
    good("s3_result_9002", frame(50, 21, {}, [{"mean_interval_s": 0.25}]),
         "derived",
         {"type": "result", "request": 21, "details": {},
          "args": [{"mean_interval_s": 0.25}]},
         scenario="slider_fanout"),
    good("s3_result_9003", frame(50, 14, {}, [{"mean_interval_s": 0.25}]),
         "derived",
         {"type": "result", "request": 14, "details": {},
          "args": [{"mean_interval_s": 0.25}]},
         scenario="slider_fanout"),
    good("s3_goodbye", frame(6, {}, "wamp.close.system_shutdown"),
         "derived",
         {"type": "goodbye", "details": {}, "reason": "wamp.close.system_shutdown"},
         scenario="slider_fanout"),
]

# -- frames that must be rejected ----------------------------------------------
entries += [
    bad("unsupported_999", frame(999, 1, {}), "unsupported"),
    bad("unsupported_publish", frame(16, 1, {}, "stats.power"), "unsupported"),
    bad("unsupported_register", frame(64, 1, {}, "sim.info"), "unsupported"),
    bad("subscribe_bad_request_id", frame(32, "x", {}, "t"), "malformed"),
    bad("not_an_array", json.dumps({"type": 32}), "malformed"),
    bad("empty_array", "[]", "malformed"),
    bad("not_json", "hello there", "malformed"),
    bad("code_is_float", frame(32.0, 1, {}, "stats.power"), "malformed"),
    bad("hello_bad_realm", frame(1, "Realm.One", {}), "malformed"),
    bad("call_arity_short", frame(48, 7), "malformed"),
    bad("id_zero", frame(35, 0), "malformed"),
    bad("id_too_big", frame(35, 9007199254740993), "malformed"),
    bad("args_not_list", frame(48, 7, {}, "sim.info", {"oops": 1}), "malformed"),
]


def main():
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(entries, indent=1, ensure_ascii=False) + "\n",
                   encoding="utf-8")
    print(f"wrote {len(entries)} entries -> {OUT}")


if __name__ == "__main__":
    main()
