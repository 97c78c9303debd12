// Hand-rolled SVG charts. Series are min-max scaled per line so counts
// and second-valued averages share one canvas; the numbers themselves are
// only ever shown verbatim (legend, tooltips, tables), never rescaled.

import type { SeriesRow } from "./api.js";
import type { IndicatorSpec, SeriesMode } from "./state.js";

export const CHART_W = 640;
export const CHART_H = 240;
const PAD = 8;

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function seriesValues(
  rows: SeriesRow[],
  spec: IndicatorSpec,
  mode: SeriesMode,
): Array<number | null> {
  const key = mode === "bkt" ? spec.bkt : spec.cum;
  return rows.map((row) => {
    const v = row[key];
    return typeof v === "number" ? v : null;
  });
}

/**
 * Path data for one polyline; null values break the line into separate
 * `M` segments so missing averages render as gaps, never as zeros.
 */
export function linePath(values: Array<number | null>, w = CHART_W, h = CHART_H): string {
  const xs = values.length > 1 ? (w - 2 * PAD) / (values.length - 1) : 0;
  const present = values.filter((v): v is number => v !== null);
  if (present.length === 0) return "";
  const lo = Math.min(...present);
  const hi = Math.max(...present);
  const span = hi - lo || 1;
  const parts: string[] = [];
  let pen = false;
  values.forEach((v, i) => {
    if (v === null) {
      pen = false;
      return;
    }
    const x = PAD + i * xs;
    const y = h - PAD - ((v - lo) / span) * (h - 2 * PAD);
    parts.push(`${pen ? "L" : "M"}${x.toFixed(1)},${y.toFixed(1)}`);
    pen = true;
  });
  return parts.join(" ");
}

export function overlaySvg(
  rows: SeriesRow[],
  specs: IndicatorSpec[],
  mode: SeriesMode,
): string {
  const paths = specs
    .map((spec) => {
      const d = linePath(seriesValues(rows, spec, mode));
      if (!d) return "";
      return `<path class="line" data-series="${spec.id}" d="${d}" fill="none" stroke="${spec.color}" stroke-width="1.5"/>`;
    })
    .filter((p) => p !== "")
    .join("");
  return (
    `<svg viewBox="0 0 ${CHART_W} ${CHART_H}" role="img">` +
    `<rect width="${CHART_W}" height="${CHART_H}" fill="none" stroke="#ccc"/>` +
    paths +
    `</svg>`
  );
}

export function barsSvg(bins: Array<[number, number, number]>, w = 220, h = 90): string {
  if (bins.length === 0) {
    return `<svg viewBox="0 0 ${w} ${h}" role="img"><rect width="${w}" height="${h}" fill="none" stroke="#ccc"/></svg>`;
  }
  const peak = Math.max(...bins.map((b) => b[2])) || 1;
  const bw = (w - 2 * PAD) / bins.length;
  const bars = bins
    .map(([lo, , count], i) => {
      const bh = (count / peak) * (h - 2 * PAD);
      const x = PAD + i * bw;
      const y = h - PAD - bh;
      return (
        `<rect class="bar" data-lo="${lo}" data-count="${count}" ` +
        `x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${Math.max(bw - 1, 1).toFixed(1)}" ` +
        `height="${bh.toFixed(1)}" fill="#5b8bc9"/>`
      );
    })
    .join("");
  return `<svg viewBox="0 0 ${w} ${h}" role="img">${bars}</svg>`;
}

/** Legend entries show the latest value exactly as fetched. */
export function legendHtml(
  rows: SeriesRow[],
  specs: IndicatorSpec[],
  mode: SeriesMode,
): string {
  return specs
    .map((spec) => {
      const values = seriesValues(rows, spec, mode);
      let last: number | null = null;
      for (let i = values.length - 1; i >= 0; i--) {
        const v = values[i];
        if (v !== null && v !== undefined) {
          last = v;
          break;
        }
      }
      const shown = last === null ? "-" : String(last);
      return (
        `<span class="legend-item" data-series="${spec.id}">` +
        `<i style="background:${spec.color}"></i>${esc(spec.label)}: ` +
        `<b data-value="${spec.id}">${esc(shown)}</b></span>`
      );
    })
    .join("");
}
