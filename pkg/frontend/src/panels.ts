// Pure HTML renderers. Every number is printed exactly as the service
// sent it; absent values show as "-", never 0. Event wiring lives in app.ts.

import type { GlobalPanel, Envelope, HistogramDoc, KnowledgeDoc, PresetDoc, SessionHandle } from "./api.js";
import { barsSvg, legendHtml, overlaySvg } from "./charts.js";
import { INDICATORS, LOCAL_FIELDS, type Model } from "./state.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function show(value: number | string | null | undefined): string {
  if (value === null || value === undefined) return "-";
  return esc(String(value));
}

export function layoutHtml(): string {
  return `
  <header><h1>diffscope</h1><span id="health"></span></header>
  <section id="launcher" class="card"></section>
  <main>
    <section id="overlay-panel" class="card"></section>
    <aside id="knowledge-panel" class="card"></aside>
  </main>
  <section id="summary-panel" class="card"></section>
  <section id="dist-panel" class="card"></section>`;
}

export function launcherHtml(presets: PresetDoc[], sessions: SessionHandle[], model: Model): string {
  const handle = model.handle;
  const presetOpts = presets
    .map((p) => `<option value="${esc(p.name)}">${esc(p.name)}</option>`)
    .join("");
  const sessionOpts = sessions
    .map((s) => `<option value="${esc(s.id)}">${esc(s.id)} (${s.state})</option>`)
    .join("");
  const st = handle
    ? `<div id="session-status">session <b>${esc(handle.id)}</b> &mdash; <span data-role="state">${handle.state}</span>` +
      ` &mdash; <span data-role="progress">${handle.progress.events}${handle.progress.total !== null ? "/" + handle.progress.total : ""}</span> events` +
      (handle.error ? ` &mdash; <span class="error">${esc(handle.error)}</span>` : "") +
      `</div>`
    : "";
  const controls = handle
    ? `<div id="controls">` +
      `<button data-action="start" ${handle.state !== "Created" ? "disabled" : ""}>start</button>` +
      `<button data-action="pause" ${handle.state !== "Running" ? "disabled" : ""}>pause</button>` +
      `<button data-action="resume" ${handle.state !== "Paused" ? "disabled" : ""}>resume</button>` +
      `<button data-action="stop" ${handle.state !== "Running" && handle.state !== "Paused" ? "disabled" : ""}>stop</button>` +
      `</div>`
    : "";
  return `
  <form id="create-form">
    <label>keywords <input name="keywords" placeholder="comma,separated" value=""></label>
    <label>language <input name="language" size="4"></label>
    <label>bucket <input name="bucket" size="5" value="1h"></label>
    <label>pace <input name="pace" size="5" placeholder="unpaced"></label>
    <label>source
      <select name="kind">
        <option value="generator">generator</option>
        <option value="replay">replay</option>
        <option value="live">live</option>
      </select>
    </label>
    <label data-for="generator">preset <select name="preset">${presetOpts}</select></label>
    <label data-for="replay" hidden>log <input name="log" placeholder="path/to/log.jsonl"></label>
    <label data-for="replay" hidden>graph <input name="graph" placeholder="optional graph.jsonl"></label>
    <button type="submit" id="create-btn" disabled>create</button>
  </form>
  <div>
    attach <select id="session-pick"><option value="">pick session</option>${sessionOpts}</select>
    <button type="button" id="refresh-sessions">refresh</button>
  </div>
  ${st}${controls}
  <div id="launcher-error" class="error">${model.launcherError ? esc(model.launcherError) : ""}</div>`;
}

export function summaryHtml(panel: Envelope<GlobalPanel> | null, error?: string): string {
  if (error) return `<h2>session summary</h2><div class="error">${esc(error)}</div>`;
  if (!panel) return `<h2>session summary</h2><p class="empty">no data yet</p>`;
  const g = panel.data.global;
  const f = panel.data.filter_stats;
  const rows: Array<[string, number | string | null]> = [
    ["NbTw", g.nb_tw],
    ["NbRTw", g.nb_rtw],
    ["NbUs", g.nb_us],
    ["AVG(Tw/Us)", g.avg_tw_per_user],
    ["AVG(RTw/Us)", g.avg_rtw_per_user],
    ["AVG(T_tw) s", g.avg_gap_tw_s],
    ["AVG(T_rtw) s", g.avg_gap_rtw_s],
  ];
  const cells = rows
    .map(([label, v]) => `<tr><th>${esc(label)}</th><td data-ind="${esc(label)}">${show(v)}</td></tr>`)
    .join("");
  return `
  <h2>session summary <span class="seq" data-seq="${panel.seq}">seq ${panel.seq}</span></h2>
  <table id="global-table">${cells}</table>
  <p id="filter-line">seen ${f.seen}, accepted ${f.accepted}, keyword-rejected ${f.rejected_keyword},
     language-rejected ${f.rejected_language}, duplicates ${f.duplicates_dropped}</p>
  <p id="local-line">population <b data-role="population">${panel.data.local.population}</b>,
     graph misses ${panel.data.local.graph_miss}, started ${show(panel.data.start_ts)}</p>`;
}

export function overlayHtml(model: Model, error?: string): string {
  const boxes = INDICATORS.map(
    (s) =>
      `<label class="ind"><input type="checkbox" data-ind="${s.id}" ${model.selected.has(s.id) ? "checked" : ""}>` +
      `<i style="background:${s.color}"></i>${esc(s.label)}</label>`,
  ).join("");
  const head = `
  <h2>indicator overlay ${model.series ? `<span class="seq" data-seq="${model.series.seq}">seq ${model.series.seq}</span>` : ""}</h2>
  <div id="overlay-controls">
    ${boxes}
    <select name="mode">
      <option value="bkt" ${model.mode === "bkt" ? "selected" : ""}>per bucket</option>
      <option value="cum" ${model.mode === "cum" ? "selected" : ""}>cumulative</option>
    </select>
    <label>bucket <input name="series-bucket" size="5" value="${esc(model.bucket)}" placeholder="engine"></label>
  </div>`;
  if (error) return `${head}<div class="error">${esc(error)}</div>`;
  const rows = model.series?.data ?? [];
  const specs = INDICATORS.filter((s) => model.selected.has(s.id));
  const chart =
    rows.length === 0 || specs.length === 0
      ? `<div id="chart" class="empty">${rows.length === 0 ? "no buckets yet" : "no series selected"}</div>`
      : `<div id="chart">${overlaySvg(rows, specs, model.mode)}</div><div id="legend">${legendHtml(rows, specs, model.mode)}</div>`;
  return head + chart;
}

export function distributionsHtml(
  dists: Model["distributions"],
  error?: string,
): string {
  if (error) return `<h2>local indicator distributions</h2><div class="error">${esc(error)}</div>`;
  const cards = LOCAL_FIELDS.map((field) => {
    const env = dists[field];
    if (!env) return `<div class="dist" data-field="${field}"><h3>${field}</h3><p class="empty">no data</p></div>`;
    const h: HistogramDoc = env.data;
    return `
    <div class="dist" data-field="${field}">
      <h3>${field} <span class="seq" data-seq="${env.seq}">seq ${env.seq}</span></h3>
      ${barsSvg(h.bins)}
      <p>population <b data-role="population">${h.population}</b>,
         at zero ${show(h.share_at_zero)}, at one ${show(h.share_at_one)}</p>
    </div>`;
  }).join("");
  return `<h2>local indicator distributions</h2><div id="dist-grid">${cards}</div>`;
}

export function knowledgeHtml(env: Envelope<KnowledgeDoc> | null, topK: number, error?: string): string {
  const head = `
  <h2>knowledge ${env ? `<span class="seq" data-seq="${env.seq}">seq ${env.seq}</span>` : ""}</h2>
  <label>top <input name="topk" type="number" min="1" size="3" value="${topK}"></label>`;
  if (error) return `${head}<div class="error">${esc(error)}</div>`;
  if (!env) return `${head}<p class="empty">no data yet</p>`;
  const k = env.data;
  const list = (title: string, items: string[]): string =>
    `<div class="top-list"><h3>${esc(title)}</h3><ol>${items.map((i) => `<li>${i}</li>`).join("")}</ol></div>`;
  return (
    head +
    list("words", k.top_words.map((w) => `${esc(w.word)} <span class="count">${w.count}</span>`)) +
    list("links", k.top_links.map((l) => `${esc(l.url)} <span class="count">${l.count}</span>`)) +
    list("users", k.top_users.map((u) => `${esc(u.user)} <span class="count">${u.count}</span>`)) +
    list(
      "cited tweets",
      k.top_tweets.map(
        (t) => `${esc(t.id)}${t.captured ? "" : " (uncaptured)"} <span class="count">${t.count}</span>`,
      ),
    )
  );
}
