/**
 * Zod schemas for waistlab report documents.
 *
 * Every figure input is validated here before any plotting happens; a
 * mismatch raises SchemaError naming the offending field.
 */

import { z } from 'zod';

export const REPORT_TOOL = 'waistlab';
export const SCHEMA_VERSION = 1;

const estimateSchema = z.object({
  kind: z.literal('estimate'),
  bound_ref: z.string(),
  value: z.number(),
  std_error: z.number(),
  samples: z.number().int(),
  seed: z.number().int(),
  method: z.string(),
  details: z.record(z.string(), z.unknown()).default({}),
  criterion: z.string().optional(),
});

const certificateSchema = z.object({
  kind: z.literal('certificate'),
  bound_ref: z.string(),
  bound: z.number(),
  measured: z.number(),
  direction: z.enum(['lower', 'upper']),
  tolerance: z.number(),
  verdict: z.enum(['pass', 'fail']),
  details: z.record(z.string(), z.unknown()).optional(),
  criterion: z.string().optional(),
});

export const recordSchema = z.discriminatedUnion('kind', [
  estimateSchema,
  certificateSchema,
]);

export const documentSchema = z.object({
  tool: z.literal(REPORT_TOOL),
  version: z.string(),
  schema: z.literal(SCHEMA_VERSION),
  command: z.string(),
  config: z.record(z.string(), z.unknown()),
  records: z.array(recordSchema),
  passed: z.boolean(),
  timing_seconds: z.number(),
});

export type EstimateRecord = z.infer<typeof estimateSchema>;
export type CertificateRecord = z.infer<typeof certificateSchema>;
export type ReportRecord = z.infer<typeof recordSchema>;
export type ReportDocument = z.infer<typeof documentSchema>;

/** Raised when an input does not match the report schema. */
export class SchemaError extends Error {
  readonly source: string;
  readonly field: string;

  constructor(source: string, field: string, detail: string) {
    super(`${source}: field '${field}': ${detail}`);
    this.name = 'SchemaError';
    this.source = source;
    this.field = field;
  }
}

function firstIssue(error: z.ZodError): { field: string; detail: string } {
  const issue = error.issues[0];
  const field = issue.path.length > 0 ? issue.path.join('.') : '(document root)';
  return { field, detail: issue.message };
}

/** Parse one JSON report document, throwing SchemaError on mismatch. */
export function validateDocument(value: unknown, source: string): ReportDocument {
  const parsed = documentSchema.safeParse(value);
  if (!parsed.success) {
    const { field, detail } = firstIssue(parsed.error);
    throw new SchemaError(source, field, detail);
  }
  return parsed.data;
}

/** Parse one record (a CSV row after type coercion). */
export function validateRecord(value: unknown, source: string, row: number): ReportRecord {
  const parsed = recordSchema.safeParse(value);
  if (!parsed.success) {
    const { field, detail } = firstIssue(parsed.error);
    throw new SchemaError(source, `row ${row}: ${field}`, detail);
  }
  return parsed.data;
}
