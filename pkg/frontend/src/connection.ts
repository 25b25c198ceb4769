/** Shared per-URL sessions with automatic reconnect and resubscribe.
 *
 * Widgets never own sockets: they register interest in topics and issue
 * calls through a Connection obtained from the manager, so two widgets on
 * the same URL share one session, and an endpoint restart is repaired
 * behind their backs (exponential backoff capped at five seconds).
 */

import { EventHandler, WampSession, WsFactory } from "./wamp.js";

export type ConnectionState = "connecting" | "up" | "down";
export type StateListener = (state: ConnectionState) => void;
export type Unsubscribe = () => void;

const BACKOFF_START_MS = 250;
const BACKOFF_CAP_MS = 5000;

export class Connection {
  state: ConnectionState = "down";
  private session: WampSession | null = null;
  private wanted = new Map<string, Set<EventHandler>>();   // topic -> handlers
  private listeners = new Set<StateListener>();
  private backoffMs = BACKOFF_START_MS;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(readonly url: string, private factory?: WsFactory) {}

  start(): this {
    this.stopped = false;
    void this.attempt();
    return this;
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.session?.close();
    this.session = null;
    this.setState("down");
  }

  onState(listener: StateListener): Unsubscribe {
    this.listeners.add(listener);
    listener(this.state);
    return () => this.listeners.delete(listener);
  }

  /** Interest survives reconnects; returns a deregistration function. */
  subscribe(topic: string, handler: EventHandler): Unsubscribe {
    let handlers = this.wanted.get(topic);
    const firstForTopic = !handlers;
    if (!handlers) {
      handlers = new Set();
      this.wanted.set(topic, handlers);
    }
    handlers.add(handler);
    if (firstForTopic && this.session?.alive) {
      void this.wireTopic(this.session, topic);
    }
    return () => {
      const set = this.wanted.get(topic);
      if (set) {
        set.delete(handler);
        if (set.size === 0) {
          this.wanted.delete(topic);
        }
      }
    };
  }

  async call(procedure: string, args: unknown[] = [],
             kwargs: Record<string, unknown> = {}): Promise<unknown[]> {
    if (!this.session?.alive) {
      throw new Error(`${this.url} is not connected`);
    }
    return this.session.call(procedure, args, kwargs);
  }

  private setState(state: ConnectionState): void {
    if (this.state !== state) {
      this.state = state;
      for (const listener of this.listeners) {
        listener(state);
      }
    }
  }

  private async attempt(): Promise<void> {
    if (this.stopped) {
      return;
    }
    this.setState("connecting");
    try {
      const session = await WampSession.connect(this.url, this.factory);
      this.session = session;
      this.backoffMs = BACKOFF_START_MS;
      session.onclose = () => {
        this.session = null;
        this.setState("down");
        this.scheduleRetry();
      };
      for (const topic of this.wanted.keys()) {
        await this.wireTopic(session, topic);
      }
      this.setState("up");
    } catch {
      this.setState("down");
      this.scheduleRetry();
    }
  }

  private scheduleRetry(): void {
    if (this.stopped || this.timer !== null) {
      return;
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.attempt();
    }, this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_CAP_MS);
  }

  private async wireTopic(session: WampSession, topic: string): Promise<void> {
    try {
      await session.subscribe(topic, (args, kwargs) => {
        const handlers = this.wanted.get(topic);
        if (handlers) {
          for (const handler of handlers) {
            handler(args, kwargs);
          }
        }
      });
    } catch {
      // session died mid-subscribe; the reconnect path will retry
    }
  }
}

export class ConnectionManager {
  private pool = new Map<string, Connection>();

  constructor(private factory?: WsFactory) {}

  get(url: string): Connection {
    let connection = this.pool.get(url);
    if (!connection) {
      connection = new Connection(url, this.factory).start();
      this.pool.set(url, connection);
    }
    return connection;
  }

  getAll(urls: string[]): Connection[] {
    return urls.map((url) => this.get(url));
  }

  stopAll(): void {
    for (const connection of this.pool.values()) {
      connection.stop();
    }
    this.pool.clear();
  }
}

export interface FanOutResult {
  url: string;
  ok: boolean;
  value?: unknown[];
  error?: Error;
}

/** One user interaction, one identical CALL per endpoint; failures are
 * reported per endpoint and never block the others. */
export async function fanOutCall(connections: Connection[], procedure: string,
                                 args: unknown[] = [],
                                 kwargs: Record<string, unknown> = {}):
    Promise<FanOutResult[]> {
  const settled = await Promise.allSettled(
    connections.map((c) => c.call(procedure, args, kwargs)));
  return settled.map((result, i) => result.status === "fulfilled"
    ? { url: connections[i].url, ok: true, value: result.value }
    : { url: connections[i].url, ok: false,
        error: result.reason instanceof Error
          ? result.reason : new Error(String(result.reason)) });
}
