/** The widget set.  Each widget owns one responsibility: subscribe to a
 * topic, or fan a control RPC out to every configured endpoint, or both.
 * Chart titles and series names come from WidgetConfig labels (or sim.info),
 * never from hardcoded protocol names.
 */

import { WidgetFrame, WidgetRegistry } from "./base.js";
import { LineChart } from "./chart.js";
import { Connection, ConnectionManager, FanOutResult, fanOutCall } from "./connection.js";
import { applyLayout, exportLayout, parseLayout, serializeLayout } from "./layout.js";
import {
  DropsPayload, PacketsPayload, PowerPayload, TopologyNode, TopologyPayload,
  WidgetConfig, checkConfig,
} from "./types.js";

const DROP_COLOURS: Record<string, string> = {
  QUEUE_OVERFLOW: "#ff7f0e",
  CHANNEL_ACCESS_FAILURE: "#d62728",
  RETRY_EXHAUSTED: "#9467bd",
  NO_ROUTE: "#7f7f7f",
};

abstract class Widget {
  readonly frame: WidgetFrame;
  protected connections: Connection[];

  constructor(title: string, protected config: WidgetConfig,
              protected manager: ConnectionManager,
              registry?: WidgetRegistry) {
    const container = checkConfig(config);
    this.frame = new WidgetFrame(config.container, container, title);
    this.connections = manager.getAll(config.urls);
    registry?.register(this.frame);
  }

  protected showConnectionState(): void {
    const badge = document.createElement("div");
    badge.className = "conn-state";
    this.frame.handle.appendChild(badge);
    const refresh = () => {
      const down = this.connections.filter((c) => c.state !== "up").length;
      badge.textContent = down === 0 ? "" : `${down} endpoint(s) disconnected`;
    };
    for (const connection of this.connections) {
      connection.onState(refresh);
    }
  }
}

/** Per-second power comparison across instances, one series per label. */
export class PowerChartWidget extends Widget {
  readonly chart: LineChart;

  constructor(config: WidgetConfig, manager: ConnectionManager,
              registry?: WidgetRegistry) {
    super("Total Power Consumption [mW]", config, manager, registry);
    this.chart = new LineChart(this.frame.body, {
      maxPoints: (config.options?.maxPoints as number) ?? 300,
    });
    this.showConnectionState();
    this.connections.forEach((connection, i) => {
      const label = config.labels[i];
      this.chart.addSeries(label);
      connection.subscribe("stats.power", (args) => {
        const payload = args[0] as PowerPayload;
        this.chart.push(label, payload.total_mw);
      });
    });
  }
}

/** Delivered and dropped packets per second, drop reasons coloured apart. */
export class PacketHistoryWidget extends Widget {
  readonly chart: LineChart;

  constructor(config: WidgetConfig, manager: ConnectionManager,
              registry?: WidgetRegistry) {
    super(`Packet History (${config.labels[0]})`, config, manager, registry);
    this.chart = new LineChart(this.frame.body, {
      maxPoints: (config.options?.maxPoints as number) ?? 300,
    });
    this.chart.addSeries("delivered");
    for (const reason of Object.keys(DROP_COLOURS)) {
      this.chart.addSeries(reason);
    }
    this.showConnectionState();
    this.connections[0].subscribe("stats.packets", (args) => {
      const payload = args[0] as PacketsPayload;
      this.chart.push("delivered", payload.delivered);
      for (const [reason, count] of Object.entries(payload.drops)) {
        this.chart.push(reason, count);
      }
    });
  }
}

/** Where packets were lost during the last few seconds of wall time. */
export class DropLocationWidget extends Widget {
  private records: { wall: number; x: number; y: number; reason: string }[] = [];
  private svg: SVGSVGElement;
  retentionSeconds: number;

  constructor(config: WidgetConfig, manager: ConnectionManager,
              registry?: WidgetRegistry) {
    super(`Dropped Packets (${config.labels[0]})`, config, manager, registry);
    this.retentionSeconds = (config.options?.retentionSeconds as number) ?? 10;
    this.svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.svg.setAttribute("viewBox", "0 0 120 120");
    this.svg.style.width = "100%";
    this.frame.body.appendChild(this.svg);
    this.showConnectionState();
    this.connections[0].subscribe("stats.drops.located", (args) => {
      const payload = args[0] as DropsPayload;
      const wall = Date.now();
      for (const record of payload.drops) {
        this.records.push({ wall, x: record.x, y: record.y, reason: record.reason });
      }
      this.prune();
      this.render();
    });
  }

  prune(now = Date.now()): void {
    const cutoff = now - this.retentionSeconds * 1000;
    this.records = this.records.filter((r) => r.wall >= cutoff);
  }

  count(): number {
    return this.records.length;
  }

  render(): void {
    this.svg.textContent = "";
    for (const record of this.records) {
      const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", record.x.toFixed(1));
      dot.setAttribute("cy", record.y.toFixed(1));
      dot.setAttribute("r", "1.5");
      dot.setAttribute("fill", DROP_COLOURS[record.reason] ?? "#000");
      dot.setAttribute("data-reason", record.reason);
      this.svg.appendChild(dot);
    }
  }
}

/** Current topology with node drag and drop; drag-end issues move_node to
 * every endpoint (continuous mode available behind an option). */
export class TopologyWidget extends Widget {
  private svg: SVGSVGElement;
  private nodes: TopologyNode[] = [];
  private continuous: boolean;
  lastFanOut: FanOutResult[] | null = null;

  constructor(config: WidgetConfig, manager: ConnectionManager,
              registry?: WidgetRegistry) {
    super("Topology", config, manager, registry);
    this.continuous = Boolean(config.options?.continuousMoves);
    this.svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.svg.setAttribute("viewBox", "0 0 120 120");
    this.svg.style.width = "100%";
    this.frame.body.appendChild(this.svg);
    this.showConnectionState();
    this.connections[0].subscribe("topology.changed", (args) => {
      this.setNodes((args[0] as TopologyPayload).nodes);
    });
    const primary = this.connections[0];
    const fetch = (state: string) => {
      if (state === "up") {
        primary.call("sim.topology.get").then((args) => {
          this.setNodes((args[0] as TopologyPayload).nodes);
        }).catch(() => undefined);
      }
    };
    primary.onState(fetch);
  }

  setNodes(nodes: TopologyNode[]): void {
    this.nodes = nodes.map((n) => ({ ...n }));
    this.render();
  }

  getNodes(): TopologyNode[] {
    return this.nodes.map((n) => ({ ...n }));
  }

  /** Local position update during a drag; nothing goes on the wire. */
  dragTo(id: number, x: number, y: number): void {
    const node = this.nodes.find((n) => n.id === id);
    if (!node) {
      return;
    }
    node.x = x;
    node.y = y;
    this.render();
    if (this.continuous) {
      void this.pushMove(id, x, y);
    }
  }

  /** Drag-end: the one moment a non-continuous widget issues the RPC. */
  async dragEnd(id: number, x: number, y: number): Promise<FanOutResult[]> {
    this.dragTo(id, x, y);
    if (this.continuous) {
      return this.lastFanOut ?? [];
    }
    return this.pushMove(id, x, y);
  }

  private async pushMove(id: number, x: number, y: number): Promise<FanOutResult[]> {
    this.lastFanOut = await fanOutCall(this.connections, "sim.topology.move_node",
                                       [id, x, y]);
    return this.lastFanOut;
  }

  render(): void {
    this.svg.textContent = "";
    for (const node of this.nodes) {
      const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", String(node.x));
      dot.setAttribute("cy", String(node.y));
      dot.setAttribute("r", node.sink ? "4" : "2.5");
      dot.setAttribute("fill", node.sink ? "#d62728" : "#1f77b4");
      dot.setAttribute("data-node", String(node.id));
      let dragging = false;
      dot.addEventListener("pointerdown", () => { dragging = true; });
      dot.addEventListener("pointermove", (ev: PointerEvent) => {
        if (dragging) {
          this.dragTo(node.id, ev.offsetX, ev.offsetY);
        }
      });
      dot.addEventListener("pointerup", (ev: PointerEvent) => {
        if (dragging) {
          dragging = false;
          void this.dragEnd(node.id, ev.offsetX, ev.offsetY);
        }
      });
      this.svg.appendChild(dot);
    }
  }
}

/** Switch every endpoint between the predefined topology layouts. */
export class PresetSwitcherWidget extends Widget {
  lastFanOut: FanOutResult[] | null = null;

  constructor(config: WidgetConfig, manager: ConnectionManager,
              registry?: WidgetRegistry) {
    super("Topology Presets", config, manager, registry);
    const names = (config.options?.presets as string[]) ?? ["line", "grid", "star"];
    for (const name of names) {
      const button = document.createElement("button");
      button.textContent = name;
      button.dataset.preset = name;
      button.addEventListener("click", () => void this.select(name));
      this.frame.body.appendChild(button);
    }
    this.showConnectionState();
  }

  async select(name: string): Promise<FanOutResult[]> {
    this.lastFanOut = await fanOutCall(this.connections,
                                       "sim.topology.set_preset", [name]);
    return this.lastFanOut;
  }
}

/** Slider over the mean delay between packets; one change, one RPC per
 * endpoint. */
export class TrafficSliderWidget extends Widget {
  readonly slider: HTMLInputElement;
  private readout: HTMLElement;
  lastFanOut: FanOutResult[] | null = null;

  constructor(config: WidgetConfig, manager: ConnectionManager,
              registry?: WidgetRegistry) {
    super("Traffic: mean delay between packets [s]", config, manager, registry);
    const min = (config.options?.minSeconds as number) ?? 0.01;
    const max = (config.options?.maxSeconds as number) ?? 2.0;
    this.slider = document.createElement("input");
    this.slider.type = "range";
    this.slider.min = String(min);
    this.slider.max = String(max);
    this.slider.step = "0.01";
    this.slider.value = String((config.options?.initialSeconds as number) ?? 0.5);
    this.readout = document.createElement("span");
    this.readout.className = "slider-value";
    this.readout.textContent = `${this.slider.value} s`;
    this.slider.addEventListener("input", () => {
      this.readout.textContent = `${this.slider.value} s`;
    });
    // "change" fires once per released interaction, not per pixel
    this.slider.addEventListener("change", () => void this.apply());
    this.frame.body.appendChild(this.slider);
    this.frame.body.appendChild(this.readout);
    this.showConnectionState();
  }

  async apply(): Promise<FanOutResult[]> {
    const mean = parseFloat(this.slider.value);
    this.lastFanOut = await fanOutCall(this.connections,
                                       "sim.traffic.set_interval", [mean]);
    return this.lastFanOut;
  }
}

/** One click resets every configured simulation. */
export class ResetButtonWidget extends Widget {
  readonly button: HTMLButtonElement;
  lastFanOut: FanOutResult[] | null = null;

  constructor(config: WidgetConfig, manager: ConnectionManager,
              registry?: WidgetRegistry) {
    super("Reset", config, manager, registry);
    this.button = document.createElement("button");
    this.button.textContent = "Reset all simulations";
    this.button.addEventListener("click", () => void this.reset());
    this.frame.body.appendChild(this.button);
    this.showConnectionState();
  }

  async reset(): Promise<FanOutResult[]> {
    this.lastFanOut = await fanOutCall(this.connections, "sim.control.reset");
    return this.lastFanOut;
  }
}

/** Lock/unlock widget positioning and export/load layout presets. */
export class MetaWidget {
  readonly frame: WidgetFrame;
  readonly lockToggle: HTMLInputElement;

  constructor(containerId: string, private registry: WidgetRegistry) {
    const container = document.getElementById(containerId);
    if (!container) {
      throw new Error(`widget container #${containerId} does not exist`);
    }
    this.frame = new WidgetFrame(containerId, container, "View");
    registry.register(this.frame);

    const label = document.createElement("label");
    this.lockToggle = document.createElement("input");
    this.lockToggle.type = "checkbox";
    this.lockToggle.checked = !registry.isLocked;
    this.lockToggle.addEventListener("change", () => {
      registry.setLocked(!this.lockToggle.checked);
    });
    label.appendChild(this.lockToggle);
    label.appendChild(document.createTextNode(" unlock positioning"));

    const exportButton = document.createElement("button");
    exportButton.textContent = "Export view";
    exportButton.addEventListener("click", () => this.download());

    const loadInput = document.createElement("input");
    loadInput.type = "file";
    loadInput.addEventListener("change", () => {
      const file = loadInput.files?.[0];
      if (file) {
        void file.text().then((text) => this.loadPreset(parseLayout(text)));
      }
    });

    this.frame.body.appendChild(label);
    this.frame.body.appendChild(exportButton);
    this.frame.body.appendChild(loadInput);
  }

  exportPreset(name = "view") {
    return exportLayout(this.registry, name);
  }

  loadPreset(preset: ReturnType<MetaWidget["exportPreset"]>): void {
    applyLayout(this.registry, preset);
  }

  private download(): void {
    const blob = new Blob([serializeLayout(this.exportPreset())],
                          { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "view.json";
    link.click();
    URL.revokeObjectURL(link.href);
  }
}
