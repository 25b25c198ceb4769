export { WidgetFrame, WidgetRegistry } from "./base.js";
export { LineChart } from "./chart.js";
export {
  Connection, ConnectionManager, FanOutResult, fanOutCall,
} from "./connection.js";
export {
  LayoutPreset, applyLayout, exportLayout, parseLayout, serializeLayout,
} from "./layout.js";
export * from "./types.js";
export { RemoteError, WampSession } from "./wamp.js";
export {
  DropLocationWidget, MetaWidget, PacketHistoryWidget, PowerChartWidget,
  PresetSwitcherWidget, ResetButtonWidget, TopologyWidget, TrafficSliderWidget,
} from "./widgets.js";
