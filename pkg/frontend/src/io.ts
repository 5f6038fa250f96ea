/**
 * Input loading: JSON report documents and the per-kind CSV tables the
 * CLI writes next to them.
 */

import { readFileSync } from 'fs';
import { basename } from 'path';
import Papa from 'papaparse';
import {
  ReportDocument,
  ReportRecord,
  SchemaError,
  validateDocument,
  validateRecord,
} from './schema.js';

/** One loaded input file, JSON or CSV, reduced to its records. */
export interface LoadedInput {
  path: string;
  source: string;
  command?: string;
  seed?: number;
  records: ReportRecord[];
}

function loadJson(path: string): LoadedInput {
  const source = basename(path);
  let value: unknown;
  try {
    value = JSON.parse(readFileSync(path, 'utf-8'));
  } catch (err) {
    if (err instanceof SyntaxError) {
      throw new SchemaError(source, '(document root)', `not valid JSON: ${err.message}`);
    }
    throw err;
  }
  const doc: ReportDocument = validateDocument(value, source);
  const seed = doc.config['seed'];
  return {
    path,
    source,
    command: doc.command,
    seed: typeof seed === 'number' ? seed : undefined,
    records: doc.records,
  };
}

/** Undo the CSV cell encoding: numbers plain, nested values JSON. */
function coerceCell(raw: string): unknown {
  if (raw === '') return undefined;
  if (raw === 'true') return true;
  if (raw === 'false') return false;
  const first = raw[0];
  if (first === '{' || first === '[') {
    try {
      return JSON.parse(raw);
    } catch {
      return raw;
    }
  }
  const num = Number(raw);
  return Number.isNaN(num) ? raw : num;
}

function loadCsv(path: string): LoadedInput {
  const source = basename(path);
  const parsed = Papa.parse<Record<string, string>>(readFileSync(path, 'utf-8'), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const err = parsed.errors[0];
    throw new SchemaError(source, `row ${err.row ?? '?'}`, err.message);
  }
  const records: ReportRecord[] = parsed.data.map((row, index) => {
    const cleaned: Record<string, unknown> = {};
    for (const [key, raw] of Object.entries(row)) {
      const value = coerceCell(raw);
      if (value !== undefined) cleaned[key] = value;
    }
    return validateRecord(cleaned, source, index + 1);
  });
  const seeds = new Set(
    records.flatMap((r) => (r.kind === 'estimate' ? [r.seed] : [])),
  );
  return {
    path,
    source,
    seed: seeds.size === 1 ? [...seeds][0] : undefined,
    records,
  };
}

/** Load and validate one input file, dispatching on the extension. */
export function loadInput(path: string): LoadedInput {
  return path.toLowerCase().endsWith('.csv') ? loadCsv(path) : loadJson(path);
}

/** Load several inputs in the order given. */
export function loadInputs(paths: string[]): LoadedInput[] {
  return paths.map(loadInput);
}
