/**
 * Render a figure from a sweep table.
 *
 *   node dist/cli.js --kind heatmap --input runs/classical/table.csv \
 *       --out figures/phase.svg [--overlay runs/analytics/table.csv] \
 *       [--observable O2] [--title "..."]
 */

import { FigureKind, FigureSpec, render } from "./figures.js";

function parseArgs(argv: string[]): FigureSpec {
  const opts: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    opts[key.slice(2)] = argv[i + 1];
  }
  for (const required of ["kind", "input", "out"]) {
    if (!(required in opts)) throw new Error(`--${required} is required`);
  }
  const kinds: FigureKind[] = ["heatmap", "crossover", "variance-peak", "binder"];
  if (!kinds.includes(opts.kind as FigureKind)) {
    throw new Error(`--kind must be one of ${kinds.join(", ")}`);
  }
  return {
    kind: opts.kind as FigureKind,
    input: opts.input,
    output: opts.out,
    overlay: opts.overlay,
    observable: opts.observable,
    title: opts.title,
  };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const res = render(spec);
    console.log(`wrote ${res.output}`);
    for (const [name, sum] of Object.entries(res.checksums)) {
      console.log(`  ${name}: ${sum.slice(0, 16)}...`);
    }
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

process.exitCode = main(process.argv.slice(2));
