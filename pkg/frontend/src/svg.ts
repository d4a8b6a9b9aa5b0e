/** Small hand-rolled SVG toolkit: scales, axes, color ramp. */

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_FRAME: Frame = {
  width: 640, height: 440, left: 70, right: 30, top: 40, bottom: 55,
};

export function linearScale(domain: [number, number], range: [number, number]) {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function ticks(lo: number, hi: number, n = 5): number[] {
  const out: number[] = [];
  for (let i = 0; i <= n; i++) out.push(lo + ((hi - lo) * i) / n);
  return out;
}

const fmt = (v: number) => {
  const a = Math.abs(v);
  if (a !== 0 && (a < 1e-3 || a >= 1e4)) return v.toExponential(1);
  return String(Math.round(v * 1000) / 1000);
};

export function axes(
  f: Frame,
  x: [number, number],
  y: [number, number],
  xlabel: string,
  ylabel: string,
): string {
  const sx = linearScale(x, [f.left, f.width - f.right]);
  const sy = linearScale(y, [f.height - f.bottom, f.top]);
  const parts: string[] = [];
  parts.push(
    `<line x1="${f.left}" y1="${f.height - f.bottom}" x2="${f.width - f.right}" ` +
      `y2="${f.height - f.bottom}" stroke="black"/>`,
    `<line x1="${f.left}" y1="${f.top}" x2="${f.left}" y2="${f.height - f.bottom}" stroke="black"/>`,
  );
  for (const t of ticks(x[0], x[1])) {
    const px = sx(t);
    parts.push(
      `<line x1="${px}" y1="${f.height - f.bottom}" x2="${px}" y2="${f.height - f.bottom + 5}" stroke="black"/>`,
      `<text x="${px}" y="${f.height - f.bottom + 20}" font-size="11" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(y[0], y[1])) {
    const py = sy(t);
    parts.push(
      `<line x1="${f.left - 5}" y1="${py}" x2="${f.left}" y2="${py}" stroke="black"/>`,
      `<text x="${f.left - 8}" y="${py + 4}" font-size="11" text-anchor="end">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(f.left + f.width - f.right) / 2}" y="${f.height - 12}" font-size="13" text-anchor="middle">${esc(xlabel)}</text>`,
    `<text x="16" y="${(f.top + f.height - f.bottom) / 2}" font-size="13" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${(f.top + f.height - f.bottom) / 2})">${esc(ylabel)}</text>`,
  );
  return parts.join("\n");
}

export const SERIES_COLORS = [
  "#1b6ca8", "#d1495b", "#2e933c", "#8d5a97", "#e68a00", "#3f3f3f",
];

/** Dark-blue -> yellow ramp for heatmap cells, v in [0, 1]. */
export function rampColor(v: number): string {
  const stops: Array<[number, [number, number, number]]> = [
    [0.0, [20, 11, 52]],
    [0.35, [57, 84, 143]],
    [0.65, [60, 154, 120]],
    [0.85, [180, 205, 70]],
    [1.0, [250, 231, 85]],
  ];
  const u = Math.min(1, Math.max(0, v));
  for (let i = 1; i < stops.length; i++) {
    if (u <= stops[i][0]) {
      const [u0, c0] = stops[i - 1];
      const [u1, c1] = stops[i];
      const w = (u - u0) / (u1 - u0);
      const c = c0.map((x, j) => Math.round(x + w * (c1[j] - x)));
      return `rgb(${c[0]},${c[1]},${c[2]})`;
    }
  }
  return "rgb(250,231,85)";
}

export function document(f: Frame, title: string, body: string, meta: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${f.width}" height="${f.height}" ` +
      `viewBox="0 0 ${f.width} ${f.height}" font-family="sans-serif">`,
    `<rect width="${f.width}" height="${f.height}" fill="white"/>`,
    `<text x="${f.width / 2}" y="24" font-size="15" text-anchor="middle">${esc(title)}</text>`,
    meta,
    body,
    "</svg>",
    "",
  ].join("\n");
}
