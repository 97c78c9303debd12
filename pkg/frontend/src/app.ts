// Wires the launcher and panels to the service: create/control calls,
// the notice feed, and per-panel refetches gated by PanelScheduler.

import { Api, ApiError, parseDurationS, type PresetDoc, type SessionHandle } from "./api.js";
import { Feed, type Notice, type StreamFactory } from "./sse.js";
import {
  freshModel,
  LOCAL_FIELDS,
  PanelScheduler,
  type Model,
  type PanelGroup,
  type SeriesMode,
} from "./state.js";
import {
  distributionsHtml,
  knowledgeHtml,
  launcherHtml,
  layoutHtml,
  overlayHtml,
  summaryHtml,
} from "./panels.js";

export class DashboardApp {
  model: Model = freshModel();
  presets: PresetDoc[] = [];
  sessions: SessionHandle[] = [];

  private readonly scheduler = new PanelScheduler((p) => this.refetchPanel(p));
  private feed: Feed | null = null;
  private ops: Array<Promise<unknown>> = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly streams: StreamFactory,
  ) {
    root.innerHTML = layoutHtml();
    this.wireEvents();
    this.renderPanels();
  }

  /** Initial data: presets for the launcher, existing sessions to attach to. */
  init(): Promise<void> {
    return this.track(
      Promise.all([this.api.presets(), this.api.sessions()]).then(([presets, sessions]) => {
        this.presets = presets;
        this.sessions = sessions.data;
        this.renderLauncher();
      }),
    );
  }

  /** Waits until every started call and scheduled refetch has landed. */
  async settle(): Promise<void> {
    while (this.ops.length > 0) {
      const batch = this.ops;
      this.ops = [];
      await Promise.all(batch);
    }
    await this.scheduler.settle();
  }

  private track<T>(p: Promise<T>): Promise<void> {
    const done = p.then(
      () => undefined,
      () => undefined,
    );
    this.ops.push(done);
    return done;
  }

  private $(sel: string): HTMLElement {
    const el = this.root.querySelector(sel);
    if (!el) throw new Error(`missing element: ${sel}`);
    return el as HTMLElement;
  }

  // -- session lifecycle ----------------------------------------------------

  createSession(input: {
    keywords: string;
    language?: string;
    bucket?: string;
    pace?: string;
    kind: string;
    preset?: string;
    log?: string;
    graph?: string;
  }): Promise<void> {
    const keywords = input.keywords
      .split(",")
      .map((k) => k.trim())
      .filter((k) => k !== "");
    const config: Record<string, unknown> = { keywords };
    if (input.language) config.language = input.language;
    if (input.bucket) {
      const seconds = parseDurationS(input.bucket);
      if (seconds === null || seconds <= 0) {
        this.model.launcherError = `unparseable bucket: ${input.bucket}`;
        this.renderLauncher();
        return Promise.resolve();
      }
      config.bucket_s = seconds;
    }
    const source: Record<string, unknown> = { kind: input.kind };
    if (input.kind === "generator" && input.preset) source.preset = input.preset;
    if (input.kind === "replay") {
      source.log = input.log ?? "";
      if (input.graph) source.graph = input.graph;
    }
    const body: Record<string, unknown> = { source, config };
    if (input.pace) body.pace = Number(input.pace);
    return this.track(
      this.api
        .createSession(body as never)
        .then((env) => {
          this.model = freshModel();
          this.model.handle = env.data;
          this.model.bucket = "";
          this.attachFeed();
          this.scheduler.markAll();
          this.renderLauncher();
          this.renderPanels();
        })
        .catch((err) => this.launcherFail(err)),
    );
  }

  attach(id: string): Promise<void> {
    return this.track(
      this.api
        .session(id)
        .then((env) => {
          this.model = freshModel();
          this.model.handle = env.data;
          if (env.data.state === "Finished" || env.data.state === "Failed") {
            this.model.feedState = "done"; // pull mode, no feed
          } else {
            this.attachFeed();
          }
          this.scheduler.markAll();
          this.renderLauncher();
          this.renderPanels();
        })
        .catch((err) => this.launcherFail(err)),
    );
  }

  control(action: "start" | "pause" | "resume" | "stop"): Promise<void> {
    const handle = this.model.handle;
    if (!handle) return Promise.resolve();
    return this.track(
      this.api
        .control(handle.id, action)
        .then((env) => {
          this.model.handle = env.data;
          this.model.launcherError = null;
          this.renderLauncher();
        })
        .catch((err) => this.launcherFail(err)),
    );
  }

  private launcherFail(err: unknown): void {
    this.model.launcherError = err instanceof ApiError ? err.message : String(err);
    this.renderLauncher();
  }

  private attachFeed(): void {
    this.feed?.close();
    const handle = this.model.handle;
    if (!handle) return;
    const id = handle.id;
    this.feed = new Feed((since) => this.api.feedUrl(id, since), this.streams);
    this.model.feedState = "live";
    this.feed.connect({
      onNotice: (n) => this.onNotice(n),
      onTerminal: (n) => this.onTerminal(n),
    });
  }

  private onNotice(notice: Notice): void {
    const handle = this.model.handle;
    if (handle) {
      handle.progress.events = notice.event_count;
      this.updateStatus(handle);
    }
    this.scheduler.applyNotice(notice);
  }

  private onTerminal(notice: Notice): void {
    this.model.feedState = "done";
    // final state arrived; re-pull the handle and every panel so the
    // page settles on exactly what the service reports
    const handle = this.model.handle;
    if (handle && notice.state) {
      handle.state = notice.state as SessionHandle["state"];
    }
    this.track(
      this.api.session(this.model.handle?.id ?? "").then((env) => {
        this.model.handle = env.data;
        this.renderLauncher();
      }),
    );
    this.scheduler.markAll();
    this.renderLauncher();
  }

  // -- panel refetches ------------------------------------------------------

  private refetchPanel(panel: PanelGroup): Promise<void> {
    const handle = this.model.handle;
    if (!handle) return Promise.resolve();
    const id = handle.id;
    const done = (fn: () => void) => {
      delete this.model.panelErrors[panel];
      fn();
      this.renderPanel(panel);
    };
    const fail = (err: unknown) => {
      this.model.panelErrors[panel] = err instanceof ApiError ? err.message : String(err);
      this.renderPanel(panel);
    };
    switch (panel) {
      case "global":
        return this.api.globalPanel(id).then((env) => done(() => (this.model.globalPanel = env)), fail);
      case "series":
        return this.api
          .series(id, this.model.bucket || undefined)
          .then((env) => done(() => (this.model.series = env)), fail);
      case "local":
        return Promise.all(LOCAL_FIELDS.map((f) => this.api.distribution(id, f))).then(
          (envs) =>
            done(() => {
              envs.forEach((env, i) => {
                this.model.distributions[LOCAL_FIELDS[i]!] = env;
              });
            }),
          fail,
        );
      case "knowledge":
        return this.api.knowledge(id, this.model.topK).then((env) => done(() => (this.model.knowledge = env)), fail);
    }
  }

  // -- view-only controls ---------------------------------------------------

  toggleIndicator(indId: string, on: boolean): void {
    if (on) this.model.selected.add(indId);
    else this.model.selected.delete(indId);
    this.renderPanel("series"); // cached rows, no refetch
  }

  setMode(mode: SeriesMode): void {
    this.model.mode = mode;
    this.renderPanel("series"); // cached rows, no refetch
  }

  setBucket(bucket: string): void {
    this.model.bucket = bucket;
    this.scheduler.mark("series"); // server regroups; only /series refetched
  }

  setTopK(k: number): void {
    this.model.topK = k;
    this.scheduler.mark("knowledge"); // only /knowledge refetched
  }

  refreshSessions(): Promise<void> {
    return this.track(
      this.api.sessions().then((env) => {
        this.sessions = env.data;
        this.renderLauncher();
      }),
    );
  }

  // -- rendering ------------------------------------------------------------

  private renderLauncher(): void {
    const form = this.root.querySelector<HTMLFormElement>("#create-form");
    const saved: Record<string, string> = {};
    if (form) {
      for (const el of Array.from(form.elements)) {
        const input = el as HTMLInputElement | HTMLSelectElement;
        if (input.name) saved[input.name] = input.value;
      }
    }
    this.$("#launcher").innerHTML = launcherHtml(this.presets, this.sessions, this.model);
    const next = this.root.querySelector<HTMLFormElement>("#create-form");
    if (next && Object.keys(saved).length > 0) {
      for (const el of Array.from(next.elements)) {
        const input = el as HTMLInputElement | HTMLSelectElement;
        if (input.name && saved[input.name] !== undefined) input.value = saved[input.name]!;
      }
    }
    this.syncLauncherState();
  }

  private syncLauncherState(): void {
    const form = this.root.querySelector<HTMLFormElement>("#create-form");
    if (!form) return;
    const keywords = (form.elements.namedItem("keywords") as HTMLInputElement).value;
    const submit = this.$("#create-btn") as HTMLButtonElement;
    submit.disabled = keywords.trim() === "";
    const kind = (form.elements.namedItem("kind") as HTMLSelectElement).value;
    for (const label of Array.from(this.root.querySelectorAll<HTMLElement>("#create-form [data-for]"))) {
      label.hidden = label.dataset.for !== kind;
    }
  }

  private updateStatus(handle: SessionHandle): void {
    const state = this.root.querySelector("#session-status [data-role=state]");
    if (state) state.textContent = handle.state;
    const progress = this.root.querySelector("#session-status [data-role=progress]");
    if (progress) {
      progress.textContent =
        `${handle.progress.events}` + (handle.progress.total !== null ? `/${handle.progress.total}` : "");
    }
  }

  private renderPanel(panel: PanelGroup): void {
    const err = this.model.panelErrors[panel];
    switch (panel) {
      case "global":
        this.$("#summary-panel").innerHTML = summaryHtml(this.model.globalPanel, err);
        break;
      case "series":
        this.$("#overlay-panel").innerHTML = overlayHtml(this.model, err);
        break;
      case "local":
        this.$("#dist-panel").innerHTML = distributionsHtml(this.model.distributions, err);
        break;
      case "knowledge":
        this.$("#knowledge-panel").innerHTML = knowledgeHtml(this.model.knowledge, this.model.topK, err);
        break;
    }
  }

  private renderPanels(): void {
    this.renderPanel("global");
    this.renderPanel("series");
    this.renderPanel("local");
    this.renderPanel("knowledge");
  }

  // -- event wiring ---------------------------------------------------------

  private wireEvents(): void {
    this.root.addEventListener("input", (ev) => {
      const target = ev.target as HTMLElement;
      if (target.matches("#create-form input[name=keywords]")) this.syncLauncherState();
    });
    this.root.addEventListener("change", (ev) => {
      const target = ev.target as HTMLInputElement & HTMLSelectElement;
      if (target.matches("#create-form select[name=kind]")) this.syncLauncherState();
      else if (target.matches("#overlay-controls input[data-ind]")) {
        this.toggleIndicator(target.dataset.ind ?? "", target.checked);
      } else if (target.matches("#overlay-controls select[name=mode]")) {
        this.setMode(target.value as SeriesMode);
      } else if (target.matches("#overlay-controls input[name=series-bucket]")) {
        this.setBucket(target.value.trim());
      } else if (target.matches("#knowledge-panel input[name=topk]")) {
        const k = Number(target.value);
        if (Number.isFinite(k) && k >= 1) this.setTopK(k);
      } else if (target.matches("#session-pick")) {
        if (target.value) void this.attach(target.value);
      }
    });
    this.root.addEventListener("submit", (ev) => {
      const target = ev.target as HTMLElement;
      if (!target.matches("#create-form")) return;
      ev.preventDefault();
      const form = target as HTMLFormElement;
      const value = (name: string): string =>
        (form.elements.namedItem(name) as HTMLInputElement | HTMLSelectElement | null)?.value ?? "";
      void this.createSession({
        keywords: value("keywords"),
        language: value("language") || undefined,
        bucket: value("bucket") || undefined,
        pace: value("pace") || undefined,
        kind: value("kind"),
        preset: value("preset") || undefined,
        log: value("log") || undefined,
        graph: value("graph") || undefined,
      });
    });
    this.root.addEventListener("click", (ev) => {
      const target = ev.target as HTMLElement;
      if (target.matches("#controls button[data-action]")) {
        void this.control(target.dataset.action as "start" | "pause" | "resume" | "stop");
      } else if (target.matches("#refresh-sessions")) {
        void this.refreshSessions();
      }
    });
  }
}
