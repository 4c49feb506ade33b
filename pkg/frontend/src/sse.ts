/**
 * Snapshot stream subscription over server-sent events (GET /stream).
 *
 * Snapshots are delivered to the handler in arrival order.  On connection
 * loss the stream reopens after a delay; the dashboard keeps rendering the
 * last good snapshot in the meantime.  The EventSource construction is
 * injectable so tests can drive the stream without a network.
 */

export interface EventSourceLike {
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface StreamHandlers {
  /** Called once per received event with the decoded JSON payload. */
  onSnapshot: (raw: unknown) => void;
  /** Called when the connection drops (before the reconnect timer starts). */
  onDrop?: () => void;
  /** Called when a received event is not valid JSON. */
  onGarbage?: (data: string) => void;
}

export interface SnapshotStream {
  close(): void;
}

const defaultFactory: EventSourceFactory = (url) =>
  new EventSource(url) as unknown as EventSourceLike;

export function openSnapshotStream(
  url: string,
  handlers: StreamHandlers,
  makeSource: EventSourceFactory = defaultFactory,
  retryMs = 2000,
): SnapshotStream {
  let closed = false;
  let source: EventSourceLike | null = null;
  let retryTimer: ReturnType<typeof setTimeout> | null = null;

  const connect = (): void => {
    if (closed) return;
    source = makeSource(url);
    source.onmessage = (ev) => {
      let payload: unknown;
      try {
        payload = JSON.parse(ev.data);
      } catch {
        handlers.onGarbage?.(ev.data);
        return;
      }
      handlers.onSnapshot(payload);
    };
    source.onerror = () => {
      if (closed) return;
      source?.close();
      source = null;
      handlers.onDrop?.();
      retryTimer = setTimeout(connect, retryMs);
    };
  };

  connect();

  return {
    close(): void {
      closed = true;
      if (retryTimer !== null) clearTimeout(retryTimer);
      source?.close();
      source = null;
    },
  };
}
