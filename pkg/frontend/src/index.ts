export { parseTable, requireColumns, filterRows, distinct, cell, num } from "./csv.js";
export { seriesChecksum } from "./checksum.js";
export { render, renderToString } from "./figures.js";
export type { FigureKind, FigureSpec, RenderResult } from "./figures.js";
