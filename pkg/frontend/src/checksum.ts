import { createHash } from "node:crypto";

/**
 * Checksum of a plotted series: SHA-256 over the raw CSV cells in plot
 * order. Renderers stamp this into the figure; consumers can recompute
 * it from the source table to verify that plotting altered nothing.
 */
export function seriesChecksum(cells: string[]): string {
  return createHash("sha256").update(cells.join("\n"), "utf8").digest("hex");
}
