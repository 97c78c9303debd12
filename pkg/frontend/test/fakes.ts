// In-memory stand-ins for the service and the notice stream. The fake
// keeps every payload internally consistent (one seq) so tests can check
// that rendered numbers match the "service" values verbatim.

import type {
  GlobalPanel,
  HistogramDoc,
  KnowledgeDoc,
  SeriesRow,
  SessionHandle,
} from "../src/api.js";
import type { EventStream } from "../src/sse.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function jsonResponse(body: unknown, status = 200): Response {
  const res = {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: () => Promise.resolve(body),
  };
  return res as unknown as Response;
}

export function makeRow(overrides: Partial<SeriesRow> = {}): SeriesRow {
  return {
    bucket_start: "2015-01-21T19:00:00.000+01:00",
    nb_tw: 1,
    nb_rtw: 1,
    new_users: 2,
    bkt_avg_gap_tw_s: null,
    bkt_avg_gap_rtw_s: null,
    cum_nb_tw: 1,
    cum_nb_rtw: 1,
    cum_nb_us: 2,
    cum_avg_tw_per_user: 0.5,
    cum_avg_rtw_per_user: 0.5,
    cum_avg_gap_tw_s: null,
    cum_avg_gap_rtw_s: null,
    ...overrides,
  };
}

export class FakeService {
  calls: string[] = [];
  pending: Array<{ url: string; release: () => void }> = [];
  manual = false;

  seq = 0;
  state: SessionHandle["state"] = "Created";
  events = 0;
  total: number | null = 5;
  createStatus = 201;
  createDetail = "";
  controlStatus = 200;
  controlDetail = "";
  lastCreateBody: unknown = null;

  global: GlobalPanel = {
    global: {
      nb_tw: 2,
      nb_rtw: 1,
      nb_us: 2,
      avg_tw_per_user: 1.0,
      avg_rtw_per_user: 0.5,
      avg_gap_tw_s: 5400.0,
      avg_gap_rtw_s: null,
    },
    filter_stats: { seen: 5, accepted: 3, rejected_keyword: 1, rejected_language: 0, duplicates_dropped: 1 },
    local: { population: 2, graph_miss: 0 },
    start_ts: "2015-01-21T19:00:00.000+01:00",
  };
  series: SeriesRow[] = [
    makeRow(),
    makeRow({
      bucket_start: "2015-01-21T20:00:00.000+01:00",
      nb_tw: 1,
      nb_rtw: 0,
      new_users: 0,
      bkt_avg_gap_tw_s: 5400.0,
      cum_nb_tw: 2,
      cum_avg_tw_per_user: 1.0,
      cum_avg_gap_tw_s: 5400.0,
    }),
  ];
  distributions: Record<string, HistogramDoc> = {};
  knowledge: KnowledgeDoc = {
    k: 10,
    top_words: [{ word: "launch", count: 1 }, { word: "demo", count: 1 }],
    top_links: [{ url: "http://x.io", count: 1 }],
    top_users: [{ user: "alice", count: 2 }, { user: "bob", count: 1 }],
    top_tweets: [{ id: "m1", count: 1, captured: true }],
  };
  presets = [
    { name: "hololens_like", description: "broadcast", params: {}, targets: {} },
    { name: "syriza_like", description: "viral", params: {}, targets: {} },
  ];
  sessions: SessionHandle[] = [];

  constructor() {
    for (const field of ["nb_messages", "nb_fe", "nb_fg_p", "total_r", "elapsed_h"]) {
      this.distributions[field] = {
        field,
        population: 2,
        share_at_zero: field === "nb_messages" ? 0.0 : 0.5,
        share_at_one: field === "nb_messages" ? 0.5 : null,
        bins: [
          [0.0, 0.0, 1],
          [1.0, 2.0, 1],
        ],
      };
    }
  }

  handle(): SessionHandle {
    return {
      id: "s1",
      state: this.state,
      config: {
        keywords: ["holo"],
        language: null,
        start_ts: null,
        duration_s: null,
        bucket_s: 3600.0,
        display_offset_hours: 1.0,
        legacy_140: false,
      },
      source: { kind: "replay", log: "log.jsonl" },
      progress: { events: this.events, total: this.total },
      error: null,
    };
  }

  countOf(fragment: string): number {
    return this.calls.filter((c) => c.includes(fragment)).length;
  }

  release(n = Infinity): void {
    const batch = this.pending.splice(0, n);
    for (const p of batch) p.release();
  }

  fetch: FetchLike = (url, init) => {
    this.calls.push(url);
    const respond = (): Response => this.route(url, init);
    if (!this.manual) return Promise.resolve(respond());
    return new Promise<Response>((resolve) => {
      this.pending.push({ url, release: () => resolve(respond()) });
    });
  };

  private env(data: unknown): unknown {
    return { seq: this.seq, data };
  }

  private route(url: string, init?: RequestInit): Response {
    const path = url.replace(/^\/api\/v1/, "");
    if (path === "/health") return jsonResponse({ status: "ok" });
    if (path === "/presets") return jsonResponse(this.presets);
    if (path === "/sessions" && init?.method === "POST") {
      this.lastCreateBody = JSON.parse(String(init.body));
      if (this.createStatus >= 400) return jsonResponse({ detail: this.createDetail }, this.createStatus);
      return jsonResponse(this.env(this.handle()), 201);
    }
    if (path === "/sessions") return jsonResponse(this.env(this.sessions));
    const m = /^\/sessions\/([^/]+)(\/.*)?$/.exec(path);
    if (!m) return jsonResponse({ detail: `no route: ${path}` }, 404);
    const rest = m[2] ?? "";
    if (rest === "" ) return jsonResponse(this.env(this.handle()));
    if (rest === "/control") {
      if (this.controlStatus >= 400) return jsonResponse({ detail: this.controlDetail }, this.controlStatus);
      return jsonResponse(this.env(this.handle()));
    }
    if (rest === "/global") return jsonResponse(this.env(this.global));
    if (rest.startsWith("/series")) return jsonResponse(this.env(this.series));
    if (rest.startsWith("/local/distribution")) {
      const field = /field=([a-z_]+)/.exec(rest)?.[1] ?? "";
      const doc = this.distributions[field];
      if (!doc) return jsonResponse({ detail: `unknown field: ${field}` }, 400);
      return jsonResponse(this.env(doc));
    }
    if (rest.startsWith("/knowledge")) {
      const k = Number(/k=(\d+)/.exec(rest)?.[1] ?? "10");
      return jsonResponse(this.env({ ...this.knowledge, k }));
    }
    return jsonResponse({ detail: `no route: ${rest}` }, 404);
  }
}

export class FakeStream implements EventStream {
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  closed = false;

  constructor(readonly url: string) {}

  close(): void {
    this.closed = true;
  }

  emit(notice: unknown): void {
    this.onmessage?.({ data: JSON.stringify(notice) });
  }
}

export function streamRecorder(): { factory: (url: string) => FakeStream; streams: FakeStream[] } {
  const streams: FakeStream[] = [];
  return {
    streams,
    factory: (url: string) => {
      const s = new FakeStream(url);
      streams.push(s);
      return s;
    },
  };
}
