/** Minimal WAMP caller/subscriber over a WebSocket, JSON serialisation.
 *
 * Speaks the basic-profile subset the simulation endpoints understand:
 * HELLO/WELCOME handshake, SUBSCRIBE/EVENT, CALL/RESULT/ERROR, GOODBYE.
 * Frames are JSON arrays whose first element is the message code.
 */

export const enum Code {
  HELLO = 1,
  WELCOME = 2,
  ABORT = 3,
  GOODBYE = 6,
  ERROR = 8,
  SUBSCRIBE = 32,
  SUBSCRIBED = 33,
  UNSUBSCRIBE = 34,
  UNSUBSCRIBED = 35,
  EVENT = 36,
  CALL = 48,
  RESULT = 50,
}

export const SUBPROTOCOL = "wamp.2.json";
export const REALM = "simlive";

export type EventHandler = (args: unknown[], kwargs: Record<string, unknown>) => void;
export type WsFactory = (url: string, subprotocol: string) => WebSocket;

export class RemoteError extends Error {
  constructor(public uri: string, public details: unknown[] = []) {
    super(uri);
  }
}

interface Pending {
  resolve: (frame: unknown[]) => void;
  reject: (err: Error) => void;
}

const defaultFactory: WsFactory = (url, subprotocol) => new WebSocket(url, subprotocol);

export class WampSession {
  sessionId = 0;
  private nextRequest = 1;
  private pending = new Map<number, Pending>();
  private handlers = new Map<number, EventHandler>();   // subscription-id keyed
  private closed = false;
  onclose: (() => void) | null = null;

  private constructor(private ws: WebSocket) {}

  /** Open a socket, run the HELLO/WELCOME handshake, start dispatching. */
  static connect(url: string, factory: WsFactory = defaultFactory,
                 timeoutMs = 5000): Promise<WampSession> {
    return new Promise((resolve, reject) => {
      let ws: WebSocket;
      try {
        ws = factory(url, SUBPROTOCOL);
      } catch (err) {
        reject(err instanceof Error ? err : new Error(String(err)));
        return;
      }
      const session = new WampSession(ws);
      const timer = setTimeout(() => {
        ws.close();
        reject(new Error(`handshake with ${url} timed out`));
      }, timeoutMs);
      ws.onopen = () => {
        ws.send(JSON.stringify([Code.HELLO, REALM,
          { roles: { subscriber: {}, caller: {} } }]));
      };
      ws.onerror = () => {
        clearTimeout(timer);
        reject(new Error(`connection to ${url} failed`));
      };
      ws.onclose = () => {
        clearTimeout(timer);
        session.teardown();
        reject(new Error(`connection to ${url} closed during handshake`));
      };
      ws.onmessage = (event: MessageEvent) => {
        const frame = JSON.parse(String(event.data)) as unknown[];
        if (frame[0] === Code.WELCOME) {
          clearTimeout(timer);
          session.sessionId = frame[1] as number;
          ws.onmessage = (ev: MessageEvent) => session.dispatch(String(ev.data));
          ws.onclose = () => session.teardown();
          ws.onerror = () => undefined;
          resolve(session);
        } else if (frame[0] === Code.ABORT) {
          clearTimeout(timer);
          ws.close();
          reject(new RemoteError(frame[2] as string));
        }
      };
    });
  }

  get alive(): boolean {
    return !this.closed;
  }

  private dispatch(raw: string): void {
    let frame: unknown[];
    try {
      frame = JSON.parse(raw) as unknown[];
    } catch {
      return;   // tolerate garbage; the endpoint never sends any
    }
    const code = frame[0] as number;
    if (code === Code.EVENT) {
      const handler = this.handlers.get(frame[1] as number);
      if (handler) {
        handler((frame[4] as unknown[]) ?? [],
                (frame[5] as Record<string, unknown>) ?? {});
      }
    } else if (code === Code.RESULT || code === Code.SUBSCRIBED
               || code === Code.UNSUBSCRIBED) {
      const pending = this.pending.get(frame[1] as number);
      if (pending) {
        this.pending.delete(frame[1] as number);
        pending.resolve(frame);
      }
    } else if (code === Code.ERROR) {
      const pending = this.pending.get(frame[2] as number);
      if (pending) {
        this.pending.delete(frame[2] as number);
        pending.reject(new RemoteError(frame[4] as string,
                                       (frame[5] as unknown[]) ?? []));
      }
    } else if (code === Code.GOODBYE) {
      try {
        this.ws.send(JSON.stringify([Code.GOODBYE, {}, "wamp.close.goodbye_and_out"]));
      } catch {
        // socket already gone
      }
      this.ws.close();
      this.teardown();
    }
  }

  private roundtrip(request: number, frame: unknown[]): Promise<unknown[]> {
    return new Promise((resolve, reject) => {
      if (this.closed) {
        reject(new Error("session is closed"));
        return;
      }
      this.pending.set(request, { resolve, reject });
      this.ws.send(JSON.stringify(frame));
    });
  }

  async call(procedure: string, args: unknown[] = [],
             kwargs: Record<string, unknown> = {}): Promise<unknown[]> {
    const request = this.nextRequest++;
    const frame: unknown[] = [Code.CALL, request, {}, procedure];
    if (args.length || Object.keys(kwargs).length) {
      frame.push(args);
    }
    if (Object.keys(kwargs).length) {
      frame.push(kwargs);
    }
    const reply = await this.roundtrip(request, frame);
    return (reply[3] as unknown[]) ?? [];
  }

  async subscribe(topic: string, handler: EventHandler): Promise<number> {
    const request = this.nextRequest++;
    const reply = await this.roundtrip(request, [Code.SUBSCRIBE, request, {}, topic]);
    const subscription = reply[2] as number;
    this.handlers.set(subscription, handler);
    return subscription;
  }

  async unsubscribe(subscription: number): Promise<void> {
    this.handlers.delete(subscription);
    const request = this.nextRequest++;
    await this.roundtrip(request, [Code.UNSUBSCRIBE, request, subscription]);
  }

  close(): void {
    if (!this.closed) {
      try {
        this.ws.send(JSON.stringify([Code.GOODBYE, {}, "wamp.close.system_shutdown"]));
      } catch {
        // best effort
      }
      this.ws.close();
      this.teardown();
    }
  }

  private teardown(): void {
    if (this.closed) {
      return;
    }
    this.closed = true;
    for (const pending of this.pending.values()) {
      pending.reject(new Error("connection closed"));
    }
    this.pending.clear();
    this.handlers.clear();
    if (this.onclose) {
      this.onclose();
    }
  }
}
