// Feed subscription. The stream type is the few corners of EventSource
// we touch, so tests can hand in a plain object instead of a browser one.

export interface Notice {
  seq: number;
  event_count: number;
  changed: string[];
  state?: string;
}

export interface EventStream {
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type StreamFactory = (url: string) => EventStream;

export interface FeedHandlers {
  onNotice(notice: Notice): void;
  onTerminal?(notice: Notice): void;
  onError?(ev: unknown): void;
}

export class Feed {
  private stream: EventStream | null = null;
  lastSeq = -1;

  constructor(
    private readonly urlFor: (since?: number) => string,
    private readonly factory: StreamFactory,
  ) {}

  get open(): boolean {
    return this.stream !== null;
  }

  /** Connect, resuming after the last seen seq on reconnects. */
  connect(handlers: FeedHandlers): void {
    this.close();
    const url = this.urlFor(this.lastSeq >= 0 ? this.lastSeq : undefined);
    const stream = this.factory(url);
    this.stream = stream;
    stream.onmessage = (ev) => {
      let notice: Notice;
      try {
        notice = JSON.parse(ev.data) as Notice;
      } catch {
        return; // keepalive or garbage
      }
      this.lastSeq = notice.seq;
      handlers.onNotice(notice);
      if (notice.state !== undefined) {
        // terminal notice: the server ends the stream after this
        this.close();
        handlers.onTerminal?.(notice);
      }
    };
    stream.onerror = (ev) => handlers.onError?.(ev);
  }

  close(): void {
    this.stream?.close();
    this.stream = null;
  }
}
