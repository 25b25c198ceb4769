"""Assembles one live instance: simulation thread + endpoint + control surface."""

from __future__ import annotations

import logging
import threading

from .config import InstanceConfig
from .control import ControlSurface
from .endpoint import Endpoint
from .netsim import Simulation
from .netsim.presets import resolve_topology

log = logging.getLogger(__name__)


class SimHost:
    """Owns the paced kernel thread and the endpoint for one instance."""

    def __init__(self, config: InstanceConfig):
        config.validate()
        self.config = config
        topology = resolve_topology(config.preset)
        self.sim = Simulation(topology, config.protocol, config.sim_params(),
                              seed=config.seed, label=config.effective_label)
        self.endpoint = Endpoint(config.port)
        self.surface = ControlSurface(self.sim, self.endpoint)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        return self.endpoint.url

    def start(self) -> "SimHost":
        self.endpoint.start()     # PortInUse/BindFailure surface to the caller
        self.surface.bind()
        self._thread = threading.Thread(
            target=self.sim.kernel.run_paced,
            args=(self.config.pace, self._stop),
            name=f"sim:{self.config.effective_label}", daemon=True)
        self._thread.start()
        log.info("instance %r (%s, preset %s, seed %d) live at %s, pace %.3gx",
                 self.config.effective_label, self.config.protocol,
                 self.config.preset, self.config.seed, self.url,
                 self.config.pace)
        return self

    def stop(self) -> None:
        self._stop.set()
        self.sim.kernel.inject(lambda: None)   # wake the paced loop
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.endpoint.shutdown()

    def __enter__(self) -> "SimHost":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
