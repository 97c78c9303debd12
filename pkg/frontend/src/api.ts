// Typed wrappers over /api/v1. Every panel endpoint returns
// {seq, data} so callers can tell which event count a number belongs to.

export interface Envelope<T> {
  seq: number;
  data: T;
}

export interface SessionConfigWire {
  keywords: string[];
  language: string | null;
  start_ts: string | null;
  duration_s: number | null;
  bucket_s: number;
  display_offset_hours: number;
  legacy_140: boolean;
}

export interface SessionHandle {
  id: string;
  state: "Created" | "Running" | "Paused" | "Finished" | "Failed";
  config: SessionConfigWire;
  source: { kind: string; [key: string]: unknown };
  progress: { events: number; total: number | null };
  error: string | null;
}

export interface GlobalIndicators {
  nb_tw: number;
  nb_rtw: number;
  nb_us: number;
  avg_tw_per_user: number | null;
  avg_rtw_per_user: number | null;
  avg_gap_tw_s: number | null;
  avg_gap_rtw_s: number | null;
}

export interface FilterStats {
  seen: number;
  accepted: number;
  rejected_keyword: number;
  rejected_language: number;
  duplicates_dropped: number;
}

export interface GlobalPanel {
  global: GlobalIndicators;
  filter_stats: FilterStats;
  local: { population: number; graph_miss: number };
  start_ts: string | null;
}

export interface SeriesRow {
  bucket_start: string;
  nb_tw: number;
  nb_rtw: number;
  new_users: number;
  bkt_avg_gap_tw_s: number | null;
  bkt_avg_gap_rtw_s: number | null;
  cum_nb_tw: number;
  cum_nb_rtw: number;
  cum_nb_us: number;
  cum_avg_tw_per_user: number | null;
  cum_avg_rtw_per_user: number | null;
  cum_avg_gap_tw_s: number | null;
  cum_avg_gap_rtw_s: number | null;
}

export interface HistogramDoc {
  field: string;
  population: number;
  share_at_zero: number | null;
  share_at_one: number | null;
  bins: Array<[number, number, number]>;
}

export interface KnowledgeDoc {
  k: number;
  top_words: Array<{ word: string; count: number }>;
  top_links: Array<{ url: string; count: number }>;
  top_users: Array<{ user: string; count: number }>;
  top_tweets: Array<{ id: string; count: number; captured: boolean }>;
}

export interface PresetDoc {
  name: string;
  description: string;
  params: Record<string, unknown>;
  targets: Record<string, number>;
}

export interface CreateSessionBody {
  source: { kind: string; [key: string]: unknown };
  config: { keywords: string[]; [key: string]: unknown };
  pace?: number;
  id?: string;
}

export type ControlAction = "start" | "pause" | "resume" | "stop";

/** "90s" / "15m" / "2h" / "1d" / bare seconds -> seconds, or null. */
export function parseDurationS(text: string): number | null {
  const m = /^(\d+(?:\.\d+)?)(s|m|h|d)?$/.exec(text.trim());
  if (!m) return null;
  const unit = m[2] ?? "s";
  const mult = unit === "s" ? 1 : unit === "m" ? 60 : unit === "h" ? 3600 : 86400;
  return Number(m[1]) * mult;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function unwrap<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = `${res.status} ${res.statusText}`;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export class Api {
  constructor(
    private readonly base: string = "/api/v1",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.base + path).then((res) => unwrap<T>(res));
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((res) => unwrap<T>(res));
  }

  health(): Promise<{ status: string }> {
    return this.get("/health");
  }

  presets(): Promise<PresetDoc[]> {
    return this.get("/presets");
  }

  createSession(body: CreateSessionBody): Promise<Envelope<SessionHandle>> {
    return this.post("/sessions", body);
  }

  sessions(): Promise<Envelope<SessionHandle[]>> {
    return this.get("/sessions");
  }

  session(id: string): Promise<Envelope<SessionHandle>> {
    return this.get(`/sessions/${id}`);
  }

  control(id: string, action: ControlAction): Promise<Envelope<SessionHandle>> {
    return this.post(`/sessions/${id}/control`, { action });
  }

  globalPanel(id: string): Promise<Envelope<GlobalPanel>> {
    return this.get(`/sessions/${id}/global`);
  }

  series(id: string, bucket?: string): Promise<Envelope<SeriesRow[]>> {
    const q = bucket ? `?bucket=${encodeURIComponent(bucket)}` : "";
    return this.get(`/sessions/${id}/series${q}`);
  }

  distribution(id: string, field: string): Promise<Envelope<HistogramDoc>> {
    return this.get(`/sessions/${id}/local/distribution?field=${encodeURIComponent(field)}`);
  }

  knowledge(id: string, k: number): Promise<Envelope<KnowledgeDoc>> {
    return this.get(`/sessions/${id}/knowledge?k=${k}`);
  }

  feedUrl(id: string, since?: number): string {
    const q = since !== undefined ? `?since=${since}` : "";
    return `${this.base}/sessions/${id}/feed${q}`;
  }
}
