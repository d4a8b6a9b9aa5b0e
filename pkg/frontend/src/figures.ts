/**
 * Figure renderers over harness sweep tables.
 *
 * Four kinds, mirroring the standard diagnostics: phase-diagram
 * heatmaps (with an optional analytic critical-line overlay read from
 * a second, closed-form table), observable-vs-p crossover curves per
 * spin size, the trajectory variance of the half-cut entropy, and
 * Binder-ratio panels.
 *
 * The plotting layer contains no physics: every plotted number is a
 * raw cell of the source CSV (positions are scaled copies), points are
 * connected in table order, and each series carries a SHA-256 checksum
 * of exactly the cells it plots so the figure can be audited against
 * the table.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { seriesChecksum } from "./checksum.js";
import {
  Table,
  cell,
  distinct,
  filterRows,
  num,
  parseTable,
  requireColumns,
} from "./csv.js";
import {
  DEFAULT_FRAME,
  Frame,
  SERIES_COLORS,
  axes,
  document,
  esc,
  extent,
  linearScale,
  rampColor,
} from "./svg.js";

export type FigureKind = "heatmap" | "crossover" | "variance-peak" | "binder";

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
  /** observable row selector; defaults: heatmap "O2", crossover "R2" */
  observable?: string;
  /** analytics table providing the p_c overlay for heatmaps */
  overlay?: string;
  title?: string;
}

export interface RenderResult {
  output: string;
  checksums: Record<string, string>;
}

interface Series {
  label: string;
  /** interleaved raw cells [x1, y1, x2, y2, ...] exactly as plotted */
  cells: string[];
}

function checksumComment(checksums: Record<string, string>): string {
  const body = Object.entries(checksums)
    .map(([k, v]) => `${k}=${v}`)
    .join(" ");
  return `<metadata id="series-checksums">${esc(body)}</metadata>`;
}

function seriesFromRows(
  table: Table,
  rows: string[][],
  xcol: string,
  ycol: string,
  label: string,
): Series {
  const cells: string[] = [];
  for (const r of rows) {
    cells.push(cell(table, r, xcol), cell(table, r, ycol));
  }
  return { label, cells };
}

function polyline(s: Series, color: string, sx: (v: number) => number, sy: (v: number) => number): string {
  const pts: string[] = [];
  const marks: string[] = [];
  for (let i = 0; i < s.cells.length; i += 2) {
    const px = sx(num(s.cells[i]));
    const py = sy(num(s.cells[i + 1]));
    pts.push(`${px},${py}`);
    marks.push(`<circle cx="${px}" cy="${py}" r="3" fill="${color}"/>`);
  }
  return (
    `<polyline fill="none" stroke="${color}" stroke-width="1.8" ` +
    `data-series="${esc(s.label)}" data-checksum="${seriesChecksum(s.cells)}" ` +
    `points="${pts.join(" ")}"/>` + marks.join("")
  );
}

function legend(f: Frame, labels: string[]): string {
  return labels
    .map(
      (lab, i) =>
        `<rect x="${f.width - f.right - 130}" y="${f.top + 6 + 18 * i}" width="12" height="12" fill="${SERIES_COLORS[i % SERIES_COLORS.length]}"/>` +
        `<text x="${f.width - f.right - 112}" y="${f.top + 16 + 18 * i}" font-size="12">${esc(lab)}</text>`,
    )
    .join("\n");
}

function lineFigure(
  table: Table,
  spec: FigureSpec,
  observable: string,
  ycol: "mean" | "variance",
  ylabel: string,
): { svg: string; checksums: Record<string, string> } {
  requireColumns(table, ["S", "p", "observable", ycol]);
  const all = filterRows(table, { observable });
  if (all.length === 0) {
    throw new Error(`no rows with observable=${observable}`);
  }
  const sValues = distinct({ columns: table.columns, rows: all }, "S");
  const series: Series[] = sValues.map((s) =>
    seriesFromRows(table, all.filter((r) => cell(table, r, "S") === s), "p", ycol,
      s === "" ? observable : `S = ${s}`),
  );
  const f = DEFAULT_FRAME;
  const xs = all.map((r) => num(cell(table, r, "p")));
  const ys = all.map((r) => num(cell(table, r, ycol)));
  const xdom = extent(xs);
  const ydom = extent([...ys, 0]);
  const sx = linearScale(xdom, [f.left, f.width - f.right]);
  const sy = linearScale(ydom, [f.height - f.bottom, f.top]);
  const body = [
    axes(f, xdom, ydom, "control rate p", ylabel),
    ...series.map((s, i) => polyline(s, SERIES_COLORS[i % SERIES_COLORS.length], sx, sy)),
    legend(f, series.map((s) => s.label)),
  ].join("\n");
  const checksums = Object.fromEntries(series.map((s) => [s.label, seriesChecksum(s.cells)]));
  const svg = document(f, spec.title ?? `${ylabel} vs p`, body, checksumComment(checksums));
  return { svg, checksums };
}

function heatmapFigure(
  table: Table,
  spec: FigureSpec,
  overlay: Table | null,
): { svg: string; checksums: Record<string, string> } {
  const observable = spec.observable ?? "O2";
  requireColumns(table, ["k", "a", "p", "observable", "mean"]);
  const rows = filterRows(table, { observable });
  if (rows.length === 0) {
    throw new Error(`no rows with observable=${observable}`);
  }
  const sub = { columns: table.columns, rows };
  // vertical axis: whichever of a / k the sweep actually varied
  const aVals = distinct(sub, "a");
  const kVals = distinct(sub, "k");
  const yname = aVals.length > 1 || kVals.length === 1 ? "a" : "k";
  const yRaw = yname === "a" ? aVals : kVals;
  const pRaw = distinct(sub, "p");

  const cells: string[] = [];
  for (const r of rows) {
    cells.push(cell(table, r, "p"), cell(table, r, yname), cell(table, r, "mean"));
  }
  const checksums: Record<string, string> = { [observable]: seriesChecksum(cells) };

  const f = DEFAULT_FRAME;
  const ps = pRaw.map(num).sort((x, y) => x - y);
  const yvs = yRaw.map(num).sort((x, y) => x - y);
  const dx = ps.length > 1 ? ps[1] - ps[0] : 0.1;
  const dy = yvs.length > 1 ? yvs[1] - yvs[0] : 0.1;
  const xdom: [number, number] = [ps[0] - dx / 2, ps[ps.length - 1] + dx / 2];
  const ydom: [number, number] = [yvs[0] - dy / 2, yvs[yvs.length - 1] + dy / 2];
  const sx = linearScale(xdom, [f.left, f.width - f.right]);
  const sy = linearScale(ydom, [f.height - f.bottom, f.top]);
  const vmax = Math.max(...rows.map((r) => num(cell(table, r, "mean"))), 1e-300);

  const rects: string[] = [];
  for (const r of rows) {
    const p = num(cell(table, r, "p"));
    const y = num(cell(table, r, yname));
    const v = num(cell(table, r, "mean"));
    const x0 = sx(p - dx / 2);
    const y0 = sy(y + dy / 2);
    rects.push(
      `<rect x="${x0}" y="${y0}" width="${sx(p + dx / 2) - x0}" height="${sy(y - dy / 2) - y0}" ` +
        `fill="${rampColor(v / vmax)}"/>`,
    );
  }

  let overlayPart = "";
  if (overlay) {
    requireColumns(overlay, ["k", "a", "observable", "mean"]);
    const orows = filterRows(overlay, { observable: "p_c" });
    if (orows.length > 0) {
      const s: Series = { label: "p_c", cells: [] };
      for (const r of orows) {
        s.cells.push(cell(overlay, r, "mean"), cell(overlay, r, yname));
      }
      checksums["p_c"] = seriesChecksum(s.cells);
      const pts = [];
      for (let i = 0; i < s.cells.length; i += 2) {
        pts.push(`${sx(num(s.cells[i]))},${sy(num(s.cells[i + 1]))}`);
      }
      overlayPart =
        `<polyline fill="none" stroke="white" stroke-width="2.5" stroke-dasharray="6 3" ` +
        `data-series="p_c" data-checksum="${checksums["p_c"]}" points="${pts.join(" ")}"/>`;
    }
  }

  const body = [
    rects.join("\n"),
    overlayPart,
    axes(f, xdom, ydom, "control rate p", yname === "a" ? "control strength a" : "kick strength k"),
  ].join("\n");
  const svg = document(
    f, spec.title ?? `${observable} phase diagram`, body, checksumComment(checksums),
  );
  return { svg, checksums };
}

export function renderToString(spec: FigureSpec): RenderResult & { svg: string } {
  const table = parseTable(readFileSync(spec.input, "utf8"));
  if (table.rows.length === 0) {
    throw new Error(`${spec.input}: CSV has a header but no data rows`);
  }
  let out: { svg: string; checksums: Record<string, string> };
  switch (spec.kind) {
    case "heatmap": {
      const overlay = spec.overlay
        ? parseTable(readFileSync(spec.overlay, "utf8"))
        : null;
      out = heatmapFigure(table, spec, overlay);
      break;
    }
    case "crossover":
      out = lineFigure(table, spec, spec.observable ?? "R2", "mean",
        spec.observable ?? "R2");
      break;
    case "variance-peak":
      out = lineFigure(table, spec, spec.observable ?? "S_bip", "variance",
        `Var(${spec.observable ?? "S_bip"})`);
      break;
    case "binder":
      out = lineFigure(table, spec, spec.observable ?? "S_bip_binder", "mean",
        "Binder ratio");
      break;
    default:
      throw new Error(`unknown figure kind: ${(spec as FigureSpec).kind}`);
  }
  return { output: spec.output, checksums: out.checksums, svg: out.svg };
}

/** Render and write the SVG; nothing is written if rendering fails. */
export function render(spec: FigureSpec): RenderResult {
  const { svg, checksums } = renderToString(spec);
  mkdirSync(dirname(spec.output), { recursive: true });
  writeFileSync(spec.output, svg, "utf8");
  return { output: spec.output, checksums };
}
