/** Dependency-free multi-series line chart rendered as SVG.
 *
 * Retained points are capped so day-long demos cannot grow memory: when a
 * series exceeds maxPoints the oldest value falls off the front.
 */

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                 "#8c564b", "#17becf", "#7f7f7f"];

export interface LineChartOptions {
  maxPoints?: number;
  width?: number;
  height?: number;
  yLabel?: string;
}

export class LineChart {
  readonly maxPoints: number;
  private readonly width: number;
  private readonly height: number;
  private data = new Map<string, number[]>();
  private svg: SVGSVGElement;
  private legend: HTMLElement;

  constructor(parent: HTMLElement, options: LineChartOptions = {}) {
    this.maxPoints = options.maxPoints ?? 300;
    this.width = options.width ?? 420;
    this.height = options.height ?? 160;
    this.svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.svg.setAttribute("viewBox", `0 0 ${this.width} ${this.height}`);
    this.svg.setAttribute("class", "line-chart");
    this.svg.style.width = "100%";
    this.legend = document.createElement("div");
    this.legend.className = "chart-legend";
    parent.appendChild(this.svg);
    parent.appendChild(this.legend);
  }

  /** Declare a series; order of declaration fixes its colour. */
  addSeries(label: string): void {
    if (!this.data.has(label)) {
      this.data.set(label, []);
      this.renderLegend();
    }
  }

  push(label: string, value: number): void {
    this.addSeries(label);
    const points = this.data.get(label)!;
    points.push(value);
    if (points.length > this.maxPoints) {
      points.shift();
    }
    this.render();
  }

  seriesLabels(): string[] {
    return [...this.data.keys()];
  }

  seriesValues(label: string): number[] {
    return [...(this.data.get(label) ?? [])];
  }

  private colour(index: number): string {
    return PALETTE[index % PALETTE.length];
  }

  private renderLegend(): void {
    this.legend.textContent = "";
    let i = 0;
    for (const label of this.data.keys()) {
      const item = document.createElement("span");
      item.className = "legend-item";
      item.style.color = this.colour(i);
      item.textContent = `■ ${label}`;
      this.legend.appendChild(item);
      i += 1;
    }
  }

  render(): void {
    this.svg.textContent = "";
    let maxY = 0;
    let maxX = 1;
    for (const points of this.data.values()) {
      maxX = Math.max(maxX, points.length - 1);
      for (const v of points) {
        maxY = Math.max(maxY, v);
      }
    }
    if (maxY === 0) {
      maxY = 1;
    }
    const pad = 4;
    const scaleX = (this.width - 2 * pad) / maxX;
    const scaleY = (this.height - 2 * pad) / maxY;
    let i = 0;
    for (const [label, points] of this.data.entries()) {
      const path = points
        .map((v, x) => `${(pad + x * scaleX).toFixed(1)},`
          + `${(this.height - pad - v * scaleY).toFixed(1)}`)
        .join(" ");
      const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
      line.setAttribute("points", path);
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", this.colour(i));
      line.setAttribute("stroke-width", "1.5");
      line.setAttribute("data-series", label);
      this.svg.appendChild(line);
      i += 1;
    }
  }
}
