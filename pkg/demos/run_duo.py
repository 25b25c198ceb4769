#!/usr/bin/env python3
"""Launch the paired two-protocol demo: TDMA on :9002 and CSMA on :9003.

Both instances share the star preset and seed so the only difference a
dashboard sees is the MAC.  Stop with Ctrl-C; both hosts say GOODBYE to
their sessions on the way down.

    python demos/run_duo.py [--seed N] [--pace F] [--mean S]
"""

import argparse
import signal
import subprocess
import sys
import time

SPEC = [("tdma", 9002, "TDMA"), ("csma", 9003, "CSMA")]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--pace", type=float, default=1.0)
    parser.add_argument("--mean", type=float, default=0.1,
                        help="initial mean packet interval, seconds")
    args = parser.parse_args()

    procs = []
    for protocol, port, label in SPEC:
        cmd = [sys.executable, "-m", "simlive.cli", "serve",
               "--protocol", protocol, "--port", str(port),
               "--seed", str(args.seed), "--pace", str(args.pace),
               "--label", label, "--preset", "star"]
        procs.append(subprocess.Popen(cmd))
        print(f"{label}: ws://localhost:{port} (pid {procs[-1].pid})")

    print("\nTry, from another shell:")
    print("  simhost tail ws://localhost:9002 stats.power --count 5")
    print("  simhost call ws://localhost:9003 sim.traffic.set_interval '[0.02]'")
    print("  for p in 9002 9003; do simhost call ws://localhost:$p sim.control.reset; done")
    try:
        while all(p.poll() is None for p in procs):
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        for p in procs:
            if p.poll() is None:
                p.send_signal(signal.SIGINT)
        for p in procs:
            p.wait(timeout=10)


if __name__ == "__main__":
    main()
