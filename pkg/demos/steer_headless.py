#!/usr/bin/env python3
"""Walk through the whole remote-control catalogue against one instance.

Starts a CSMA instance in-process at 10x pace, watches its per-second
statistics, then steers it: crank the traffic up, drag a node out of range,
and finally reset.  Everything printed comes over the wire, exactly as a
browser widget would see it.
"""

import threading
import time

from simlive.config import InstanceConfig
from simlive.endpoint import client_connect
from simlive.host import SimHost

PACE = 10.0


def watch(client, topic, seconds, label):
    lines = []
    done = threading.Event()

    def sink(args, kwargs):
        lines.append(args[0])
        if len(lines) >= seconds:
            done.set()

    sub = client.subscribe(topic, sink)
    done.wait((seconds + 2) / PACE * 1.5 + 2)
    client.unsubscribe(sub)
    print(f"\n== {label}")
    for line in lines[:seconds]:
        if topic == "stats.drops.located":
            head = ", ".join(
                f"node {d['node']} {d['reason']} at ({d['x']:.0f},{d['y']:.0f})"
                for d in line["drops"][:3])
            print(f"   window {line['window']}: {len(line['drops'])} drops"
                  + (f" [{head}, ...]" if head else ""))
        else:
            print("  ", line)
    return lines


def main():
    config = InstanceConfig(port=0, protocol="csma", preset="star",
                            seed=7, pace=PACE, mean_interval_s=0.3)
    with SimHost(config) as host:
        with client_connect(host.url) as client:
            info = client.call("sim.info")[0][0]
            print(f"connected to {host.url}: {info}")

            watch(client, "stats.packets", 4, "relaxed traffic, one line per second")

            print("\n-> sim.traffic.set_interval [0.02]  (oversaturate)")
            client.call("sim.traffic.set_interval", [0.02])
            watch(client, "stats.packets", 4, "saturated: drops appear")
            watch(client, "stats.drops.located", 2, "where the drops happen")

            print("\n-> sim.topology.move_node [8, 400.0, 400.0]  (strand node 8)")
            client.call("sim.topology.move_node", [8, 400.0, 400.0])
            watch(client, "stats.packets", 3, "node 8 now drops NO_ROUTE")

            print("\n-> sim.control.reset")
            client.call("sim.control.reset")
            watch(client, "stats.power", 3, "fresh epoch, windows start at 0")

            topo = client.call("sim.topology.get")[0][0]
            spot = next(n for n in topo["nodes"] if n["id"] == 8)
            print(f"\nnode 8 after reset, back on the preset: {spot}")


if __name__ == "__main__":
    main()
