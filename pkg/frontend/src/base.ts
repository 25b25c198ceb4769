/** Widget frames: a titled, draggable box plus the registry that the meta
 * widget and layout presets operate on.  Frame dragging is only active
 * while the registry is unlocked; content-level interactions (for example
 * dragging topology nodes) are the widget's own business and stay live.
 */

export interface WidgetGeometry {
  left: number;
  top: number;
  width: number;
  height: number;
  visible: boolean;
}

export class WidgetFrame {
  readonly root: HTMLElement;
  readonly handle: HTMLElement;
  readonly body: HTMLElement;
  private locked = true;

  constructor(readonly id: string, container: HTMLElement, title: string) {
    this.root = document.createElement("div");
    this.root.className = "widget";
    this.root.dataset.widget = id;
    this.handle = document.createElement("div");
    this.handle.className = "handle";
    const heading = document.createElement("h2");
    heading.textContent = title;
    this.handle.appendChild(heading);
    this.body = document.createElement("div");
    this.body.className = "widget-body";
    this.root.appendChild(this.handle);
    this.root.appendChild(this.body);
    container.appendChild(this.root);
    this.handle.addEventListener("pointerdown", (ev) => this.beginDrag(ev));
  }

  setLocked(locked: boolean): void {
    this.locked = locked;
    this.root.classList.toggle("unlocked", !locked);
  }

  get isLocked(): boolean {
    return this.locked;
  }

  setVisible(visible: boolean): void {
    this.root.style.display = visible ? "" : "none";
  }

  geometry(): WidgetGeometry {
    return {
      left: parseFloat(this.root.style.left || "0"),
      top: parseFloat(this.root.style.top || "0"),
      width: parseFloat(this.root.style.width || "0"),
      height: parseFloat(this.root.style.height || "0"),
      visible: this.root.style.display !== "none",
    };
  }

  applyGeometry(geometry: WidgetGeometry): void {
    this.root.style.position = "absolute";
    this.root.style.left = `${geometry.left}px`;
    this.root.style.top = `${geometry.top}px`;
    if (geometry.width > 0) {
      this.root.style.width = `${geometry.width}px`;
    }
    if (geometry.height > 0) {
      this.root.style.height = `${geometry.height}px`;
    }
    this.setVisible(geometry.visible);
  }

  private beginDrag(down: PointerEvent): void {
    if (this.locked) {
      return;
    }
    const startX = down.clientX;
    const startY = down.clientY;
    const origin = this.geometry();
    this.root.style.position = "absolute";
    const move = (ev: PointerEvent) => {
      this.root.style.left = `${origin.left + ev.clientX - startX}px`;
      this.root.style.top = `${origin.top + ev.clientY - startY}px`;
    };
    const up = () => {
      document.removeEventListener("pointermove", move);
      document.removeEventListener("pointerup", up);
    };
    document.addEventListener("pointermove", move);
    document.addEventListener("pointerup", up);
  }
}

export class WidgetRegistry {
  private frames = new Map<string, WidgetFrame>();
  private locked = true;

  register(frame: WidgetFrame): void {
    this.frames.set(frame.id, frame);
    frame.setLocked(this.locked);
  }

  get(id: string): WidgetFrame | undefined {
    return this.frames.get(id);
  }

  ids(): string[] {
    return [...this.frames.keys()];
  }

  setLocked(locked: boolean): void {
    this.locked = locked;
    for (const frame of this.frames.values()) {
      frame.setLocked(locked);
    }
  }

  get isLocked(): boolean {
    return this.locked;
  }
}
