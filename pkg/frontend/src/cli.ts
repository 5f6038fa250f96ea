#!/usr/bin/env node

/**
 * Render figures from waistlab JSON/CSV reports.
 *
 * Usage:
 *   waistlab-figures --kind waist-profile --input profile.json --out profile.svg
 *
 * Exit codes: 0 rendered, 1 schema or I/O failure, 2 usage error.
 */

import { realpathSync } from 'fs';
import { fileURLToPath } from 'url';
import { FIGURE_KINDS, FigureKind, FigureSpec, render } from './figures.js';
import { SchemaError } from './schema.js';

const USAGE = `usage: waistlab-figures --kind KIND --input REPORT [--input REPORT ...] --out FILE.svg
               [--title TEXT] [--x-label TEXT] [--y-label TEXT]

kinds: ${FIGURE_KINDS.join(', ')}

Inputs are waistlab JSON report documents or the per-kind CSV tables the
CLI writes with --csv. Every input is schema-validated before plotting.`;

class UsageError extends Error {}

/** Parse argv (no binary prefix) into a figure spec. */
export function parseArgs(argv: string[]): FigureSpec | 'help' {
  let kind: string | undefined;
  let output: string | undefined;
  const inputs: string[] = [];
  const labels: { title?: string; xLabel?: string; yLabel?: string } = {};

  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = (): string => {
      i += 1;
      if (i >= argv.length) throw new UsageError(`option ${arg} needs a value`);
      return argv[i];
    };
    switch (arg) {
      case '-h':
      case '--help':
        return 'help';
      case '--kind':
        kind = next();
        break;
      case '--input':
        inputs.push(next());
        break;
      case '--out':
        output = next();
        break;
      case '--title':
        labels.title = next();
        break;
      case '--x-label':
        labels.xLabel = next();
        break;
      case '--y-label':
        labels.yLabel = next();
        break;
      default:
        throw new UsageError(`unknown option ${arg}`);
    }
  }

  if (kind === undefined) throw new UsageError('option --kind is required');
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(`unknown figure kind '${kind}'`);
  }
  if (inputs.length === 0) throw new UsageError('at least one --input is required');
  if (output === undefined) throw new UsageError('option --out is required');
  return { kind: kind as FigureKind, inputs, output, ...labels };
}

/** CLI body; returns the process exit code. */
export function main(argv: string[]): number {
  let spec: FigureSpec | 'help';
  try {
    spec = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`error: ${err.message}`);
      console.error(USAGE);
      return 2;
    }
    throw err;
  }
  if (spec === 'help') {
    console.log(USAGE);
    return 0;
  }
  try {
    const path = render(spec);
    console.error(`${spec.kind}: wrote ${path}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    if (err instanceof Error && 'code' in err) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly = (() => {
  if (process.argv[1] === undefined) return false;
  try {
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
})();
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
