/** Layout presets: widget visibility, position and size as a standalone
 * JSON document, restorable on a fresh page load. */

import { WidgetGeometry, WidgetRegistry } from "./base.js";

export interface LayoutPreset {
  name: string;
  widgets: Record<string, WidgetGeometry>;
}

export function exportLayout(registry: WidgetRegistry, name: string): LayoutPreset {
  const widgets: Record<string, WidgetGeometry> = {};
  for (const id of registry.ids()) {
    widgets[id] = registry.get(id)!.geometry();
  }
  return { name, widgets };
}

/** Applies a preset; widgets the preset names but the page lacks are
 * skipped with a console warning. */
export function applyLayout(registry: WidgetRegistry, preset: LayoutPreset): void {
  for (const [id, geometry] of Object.entries(preset.widgets)) {
    const frame = registry.get(id);
    if (!frame) {
      console.warn(`layout preset ${preset.name}: no widget ${id} on this page`);
      continue;
    }
    frame.applyGeometry(geometry);
  }
}

export function serializeLayout(preset: LayoutPreset): string {
  return JSON.stringify(preset, null, 2);
}

export function parseLayout(text: string): LayoutPreset {
  const doc = JSON.parse(text) as LayoutPreset;
  if (typeof doc !== "object" || doc === null || typeof doc.widgets !== "object") {
    throw new Error("not a layout preset document");
  }
  return doc;
}
