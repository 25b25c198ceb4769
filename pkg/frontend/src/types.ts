/** Payloads published by simulation instances, one per simulated second. */

export interface PowerPayload {
  window: number;
  total_mw: number;
  per_node: Record<string, number>;
}

export interface PacketsPayload {
  window: number;
  generated: number;
  delivered: number;
  drops: Record<string, number>;
}

export interface DropRecord {
  t: number;
  node: number;
  x: number;
  y: number;
  reason: string;
}

export interface DropsPayload {
  window: number;
  drops: DropRecord[];
}

export interface TopologyNode {
  id: number;
  x: number;
  y: number;
  sink: boolean;
}

export interface TopologyPayload {
  name: string;
  preset: string;
  nodes: TopologyNode[];
}

export interface SimInfo {
  label: string;
  protocol: string;
  version: string;
  seed: number;
  mean_interval_s: number;
}

/** Configuration shared by every widget. */
export interface WidgetConfig {
  /** DOM id of the container the widget renders into. */
  container: string;
  /** One simulation endpoint URL per chart series / control target. */
  urls: string[];
  /** Labels parallel to urls; all user-visible series names come from here. */
  labels: string[];
  options?: Record<string, unknown>;
}

export function checkConfig(config: WidgetConfig): HTMLElement {
  if (config.urls.length === 0 || config.urls.length !== config.labels.length) {
    throw new Error("widget config needs equal-length, nonempty urls and labels");
  }
  const el = document.getElementById(config.container);
  if (!el) {
    throw new Error(`widget container #${config.container} does not exist`);
  }
  return el;
}
