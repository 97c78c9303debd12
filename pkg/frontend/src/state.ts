// Dashboard state: which panels are stale, what was last fetched, and
// the catalogue of overlayable indicators. Numbers are stored exactly as
// fetched; nothing here aggregates or rescales them.

import type {
  Envelope,
  GlobalPanel,
  HistogramDoc,
  KnowledgeDoc,
  SeriesRow,
  SessionHandle,
} from "./api.js";
import type { Notice } from "./sse.js";

// Feed notices name these; filter stats ride on the /global payload so
// both names map to the same fetch.
export type PanelGroup = "global" | "series" | "local" | "knowledge";

export const PANEL_GROUPS: readonly PanelGroup[] = ["global", "series", "local", "knowledge"];

export function groupForChange(name: string): PanelGroup | null {
  if (name === "filter" || name === "global") return "global";
  if (name === "series" || name === "local" || name === "knowledge") return name;
  return null;
}

export const LOCAL_FIELDS = ["nb_messages", "nb_fe", "nb_fg_p", "total_r", "elapsed_h"] as const;
export type LocalField = (typeof LOCAL_FIELDS)[number];

export type SeriesMode = "bkt" | "cum";

export interface IndicatorSpec {
  id: string;
  label: string;
  color: string;
  // column to plot in each mode; the per-user averages only exist as
  // cumulative ratios, so both modes read the same column for those
  bkt: keyof SeriesRow;
  cum: keyof SeriesRow;
}

export const INDICATORS: readonly IndicatorSpec[] = [
  { id: "nb_tw", label: "NbTw", color: "#2470c2", bkt: "nb_tw", cum: "cum_nb_tw" },
  { id: "nb_rtw", label: "NbRTw", color: "#c24a24", bkt: "nb_rtw", cum: "cum_nb_rtw" },
  { id: "new_users", label: "New users", color: "#1e9e57", bkt: "new_users", cum: "cum_nb_us" },
  { id: "avg_gap_tw", label: "AVG(T_tw)", color: "#8247c9", bkt: "bkt_avg_gap_tw_s", cum: "cum_avg_gap_tw_s" },
  { id: "avg_gap_rtw", label: "AVG(T_rtw)", color: "#c29a24", bkt: "bkt_avg_gap_rtw_s", cum: "cum_avg_gap_rtw_s" },
  { id: "avg_tw_user", label: "AVG(Tw/Us)", color: "#24a9c2", bkt: "cum_avg_tw_per_user", cum: "cum_avg_tw_per_user" },
  { id: "avg_rtw_user", label: "AVG(RTw/Us)", color: "#c22488", bkt: "cum_avg_rtw_per_user", cum: "cum_avg_rtw_per_user" },
];

export interface Model {
  handle: SessionHandle | null;
  globalPanel: Envelope<GlobalPanel> | null;
  series: Envelope<SeriesRow[]> | null;
  distributions: Partial<Record<LocalField, Envelope<HistogramDoc>>>;
  knowledge: Envelope<KnowledgeDoc> | null;
  selected: Set<string>;
  mode: SeriesMode;
  bucket: string;
  topK: number;
  launcherError: string | null;
  panelErrors: Partial<Record<PanelGroup, string>>;
  feedState: "idle" | "live" | "done";
}

export function freshModel(): Model {
  return {
    handle: null,
    globalPanel: null,
    series: null,
    distributions: {},
    knowledge: null,
    selected: new Set(INDICATORS.map((s) => s.id)),
    mode: "bkt",
    bucket: "",
    topK: 10,
    launcherError: null,
    panelErrors: {},
    feedState: "idle",
  };
}

/**
 * Per-panel refetch gate: at most one request in flight per panel, and
 * any notices that land mid-flight coalesce into a single follow-up.
 */
export class PanelScheduler {
  private dirty = new Set<PanelGroup>();
  private inflight = new Map<PanelGroup, Promise<void>>();

  constructor(private readonly refetch: (panel: PanelGroup) => Promise<void>) {}

  applyNotice(notice: Notice): void {
    for (const name of notice.changed) {
      const group = groupForChange(name);
      if (group) this.mark(group);
    }
  }

  mark(panel: PanelGroup): void {
    this.dirty.add(panel);
    this.pump(panel);
  }

  markAll(): void {
    for (const panel of PANEL_GROUPS) this.mark(panel);
  }

  private pump(panel: PanelGroup): void {
    if (this.inflight.has(panel) || !this.dirty.has(panel)) return;
    this.dirty.delete(panel);
    const run = this.refetch(panel)
      .catch(() => {
        // refetch callbacks record their own errors; the gate only sequences
      })
      .then(() => {
        this.inflight.delete(panel);
        this.pump(panel);
      });
    this.inflight.set(panel, run);
  }

  /** Resolves once every scheduled refetch (including follow-ups) is done. */
  async settle(): Promise<void> {
    while (this.inflight.size > 0) {
      await Promise.all([...this.inflight.values()]);
    }
  }
}
