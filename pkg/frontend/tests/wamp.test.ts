import { describe, expect, it } from "vitest";

import { RemoteError, WampSession } from "../src/wamp.js";
import { MockEndpoint, mockNetwork, waitFor } from "./mock.js";

function setup() {
  const endpoint = new MockEndpoint("ws://sim-a");
  const factory = mockNetwork([endpoint]);
  return { endpoint, factory };
}

describe("WampSession", () => {
  it("completes the handshake and exposes the session id", async () => {
    const { factory } = setup();
    const session = await WampSession.connect("ws://sim-a", factory);
    expect(session.sessionId).toBeGreaterThan(0);
    expect(session.alive).toBe(true);
  });

  it("maps CALL to RESULT payloads", async () => {
    const { endpoint, factory } = setup();
    endpoint.procedures.set("sim.info", () => [{ label: "A", protocol: "CSMA" }]);
    const session = await WampSession.connect("ws://sim-a", factory);
    const args = await session.call("sim.info");
    expect(args).toEqual([{ label: "A", protocol: "CSMA" }]);
    expect(endpoint.callsTo("sim.info")).toHaveLength(1);
  });

  it("rejects calls with the remote error uri", async () => {
    const { endpoint, factory } = setup();
    endpoint.errors.set("sim.broken", "sim.error.invalid_argument");
    const session = await WampSession.connect("ws://sim-a", factory);
    await expect(session.call("sim.broken", [1])).rejects.toMatchObject({
      uri: "sim.error.invalid_argument",
    });
    await expect(session.call("sim.broken")).rejects.toBeInstanceOf(RemoteError);
  });

  it("routes EVENT frames to the subscription handler in order", async () => {
    const { endpoint, factory } = setup();
    const session = await WampSession.connect("ws://sim-a", factory);
    const seen: unknown[] = [];
    await session.subscribe("stats.power", (args) => seen.push(args[0]));
    endpoint.publish("stats.power", { window: 1, total_mw: 10, per_node: {} });
    endpoint.publish("stats.power", { window: 2, total_mw: 11, per_node: {} });
    endpoint.publish("stats.packets", { window: 2 });   // different topic
    await waitFor(() => seen.length === 2);
    expect((seen[0] as { window: number }).window).toBe(1);
    expect((seen[1] as { window: number }).window).toBe(2);
  });

  it("omits empty argument tails from CALL frames", async () => {
    const { endpoint, factory } = setup();
    const frames: unknown[][] = [];
    const session = await WampSession.connect("ws://sim-a", factory);
    const socket = endpoint.sockets[0];
    const original = socket.serverReceive!;
    socket.serverReceive = (frame) => {
      frames.push(frame);
      original(frame);
    };
    await session.call("sim.control.reset");
    expect(frames[0]).toEqual([48, expect.any(Number), {}, "sim.control.reset"]);
  });

  it("replies to GOODBYE and settles pending calls on close", async () => {
    const { endpoint, factory } = setup();
    const session = await WampSession.connect("ws://sim-a", factory);
    endpoint.sockets[0].deliver([6, {}, "wamp.close.system_shutdown"]);
    await waitFor(() => !session.alive);
  });
});
