/**
 * Figure builders for waistlab reports.
 *
 * Each builder is a pure function of already-validated report records;
 * nothing is re-estimated here. Bound lines always carry the bound_ref
 * tag of the certificate they come from.
 */

import { writeFileSync } from 'fs';
import { CertificateRecord, EstimateRecord, SchemaError } from './schema.js';
import { LoadedInput, loadInputs } from './io.js';
import {
  FIGURE_HEIGHT,
  FIGURE_WIDTH,
  LegendEntry,
  MARGIN,
  Scale,
  circleEl,
  fmt,
  legend,
  lineEl,
  linearScale,
  padded,
  polylineEl,
  rectEl,
  svgDocument,
  textEl,
  xAxis,
  yAxis,
} from './svg.js';

// ============================================================================
// Figure specs
// ============================================================================

export const FIGURE_KINDS = [
  'waist-profile',
  'minkowski-fit',
  'bending-budget',
  'ledger-ratios',
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

/** What to draw: validated inputs in, one SVG file out. */
export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

const DEFAULT_TITLES: Record<FigureKind, string> = {
  'waist-profile': 'Waist profile',
  'minkowski-fit': 'Minkowski content extrapolation',
  'bending-budget': 'Bending volume budget',
  'ledger-ratios': 'Filling ledger ratios',
};

const SERIES_COLORS = ['#2563eb', '#f97316', '#059669', '#9333ea', '#0e7490'];
const BOUND_COLOR = '#dc2626';
const LEDGER_RATIO_REF = 'filling-ledger-ratio';

// ============================================================================
// Shared helpers
// ============================================================================

function estimatesOf(input: LoadedInput): EstimateRecord[] {
  return input.records.filter((r): r is EstimateRecord => r.kind === 'estimate');
}

function certificatesOf(input: LoadedInput): CertificateRecord[] {
  return input.records.filter((r): r is CertificateRecord => r.kind === 'certificate');
}

/** Series label; distinguishes inputs by seed, falling back to filename. */
function seriesName(input: LoadedInput, inputs: LoadedInput[]): string {
  if (inputs.length <= 1) return '';
  const seeds = new Set(inputs.map((i) => i.seed));
  if (seeds.size === inputs.length && input.seed !== undefined) {
    return `seed ${input.seed}`;
  }
  return input.source;
}

function seriesColor(index: number): string {
  return SERIES_COLORS[index % SERIES_COLORS.length];
}

/** Pull a numeric array out of record details or fail loudly. */
function detailNumbers(rec: EstimateRecord, field: string, source: string): number[] {
  const value = rec.details[field];
  if (!Array.isArray(value) || !value.every((v) => typeof v === 'number')) {
    throw new SchemaError(source, `details.${field}`, 'expected an array of numbers');
  }
  return value as number[];
}

function detailNumber(value: unknown): number | undefined {
  return typeof value === 'number' && Number.isFinite(value) ? value : undefined;
}

interface Frame {
  x: Scale;
  y: Scale;
  body: string[];
}

/** Scales plus axes for the standard plot area. */
function frame(
  xDomain: [number, number],
  yDomain: [number, number],
  xLabel: string,
  yLabel: string,
): Frame {
  const x = linearScale(xDomain, [MARGIN.left, FIGURE_WIDTH - MARGIN.right]);
  const y = linearScale(yDomain, [FIGURE_HEIGHT - MARGIN.bottom, MARGIN.top]);
  const body = [
    ...yAxis(y, MARGIN.left, FIGURE_WIDTH - MARGIN.right, yLabel),
    ...xAxis(x, FIGURE_HEIGHT - MARGIN.bottom, xLabel),
  ];
  return { x, y, body };
}

/** Axes only, plus a visible note: drawn when there is nothing to plot. */
function emptyFigure(spec: FigureSpec, note: string): string {
  const { body } = frame(
    [0, 1],
    [0, 1],
    spec.xLabel ?? '',
    spec.yLabel ?? '',
  );
  body.push(
    textEl(FIGURE_WIDTH / 2, FIGURE_HEIGHT / 2, `warning: ${note}`, {
      anchor: 'middle',
      size: 13,
      fill: '#b45309',
      bold: true,
    }),
  );
  return svgDocument(spec.title ?? DEFAULT_TITLES[spec.kind], body);
}

/** Horizontal bound line labeled with its bound_ref tag. */
function boundLine(f: Frame, bound: number, label: string, slot: number): void {
  const y = f.y(bound);
  f.body.push(lineEl(f.x.range[0], y, f.x.range[1], y, BOUND_COLOR, 1.5, true));
  f.body.push(
    textEl(f.x.range[1] - 4, y - 6 - slot * 14, label, {
      anchor: 'end',
      size: 11,
      fill: BOUND_COLOR,
      bold: true,
    }),
  );
}

// ============================================================================
// waist-profile: fiber volume over the base grid, bound as a floor line
// ============================================================================

interface ProfilePoint {
  x: number;
  value: number;
}

function profilePoints(input: LoadedInput): ProfilePoint[] {
  const rows = estimatesOf(input).filter((e) => e.method === 'waist-profile');
  const points = rows.map((e, index) => {
    const y = e.details['y'];
    const scalar =
      Array.isArray(y) && y.length === 1 && typeof y[0] === 'number'
        ? (y[0] as number)
        : undefined;
    return { x: scalar ?? index, value: e.value };
  });
  return points.sort((a, b) => a.x - b.x);
}

function waistProfileFigure(inputs: LoadedInput[], spec: FigureSpec): string {
  const series = inputs.map((input) => ({
    name: seriesName(input, inputs),
    points: profilePoints(input),
  }));
  if (series.every((s) => s.points.length === 0)) {
    return emptyFigure(spec, 'no waist-profile records in the input');
  }

  const bounds = new Map<string, number>();
  for (const input of inputs) {
    for (const cert of certificatesOf(input)) {
      bounds.set(`${cert.bound_ref} = ${fmt(cert.bound)}`, cert.bound);
    }
  }

  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const values = series
    .flatMap((s) => s.points.map((p) => p.value))
    .concat([...bounds.values()]);
  const f = frame(
    padded(Math.min(...xs), Math.max(...xs), 0.02),
    padded(Math.min(...values), Math.max(...values)),
    spec.xLabel ?? 'base point',
    spec.yLabel ?? 'fiber volume',
  );

  series.forEach((s, i) => {
    if (s.points.length === 0) return;
    const color = seriesColor(i);
    f.body.push(
      polylineEl(s.points.map((p): [number, number] => [f.x(p.x), f.y(p.value)]), color),
    );
    for (const p of s.points) {
      f.body.push(circleEl(f.x(p.x), f.y(p.value), 2, color));
    }
  });
  [...bounds.entries()].forEach(([label, bound], slot) =>
    boundLine(f, bound, label, slot),
  );
  if (series.length > 1) {
    const entries: LegendEntry[] = series.map((s, i) => ({
      label: s.name,
      color: seriesColor(i),
    }));
    f.body.push(...legend(MARGIN.left + 12, MARGIN.top + 14, entries));
  }
  return svgDocument(spec.title ?? DEFAULT_TITLES[spec.kind], f.body);
}

// ============================================================================
// minkowski-fit: tube volume ratios against t with the fitted model
// ============================================================================

interface FitData {
  name: string;
  ts: number[];
  ratios: number[];
  errors: number[];
  coefficients: number[];
  even: boolean;
  value: number;
}

function fitData(input: LoadedInput, inputs: LoadedInput[]): FitData | undefined {
  const est = estimatesOf(input).find((e) => e.method.startsWith('minkowski-'));
  if (est === undefined) return undefined;
  return {
    name: seriesName(input, inputs),
    ts: detailNumbers(est, 't_schedule', input.source),
    ratios: detailNumbers(est, 'ratios', input.source),
    errors: detailNumbers(est, 'point_errors', input.source),
    coefficients: detailNumbers(est, 'coefficients', input.source),
    even: est.method.includes('-even-'),
    value: est.value,
  };
}

function evaluateFit(fit: FitData, t: number): number {
  return fit.coefficients.reduce(
    (acc, c, i) => acc + c * t ** (fit.even ? 2 * i : i),
    0,
  );
}

function minkowskiFitFigure(inputs: LoadedInput[], spec: FigureSpec): string {
  const fits = inputs
    .map((input) => fitData(input, inputs))
    .filter((f): f is FitData => f !== undefined);
  if (fits.length === 0) {
    return emptyFigure(spec, 'no minkowski fit records in the input');
  }

  const bounds = new Map<string, number>();
  for (const input of inputs) {
    for (const cert of certificatesOf(input)) {
      bounds.set(`${cert.bound_ref} = ${fmt(cert.bound)}`, cert.bound);
    }
  }

  const tMax = Math.max(...fits.flatMap((f) => f.ts));
  const curveTs = Array.from({ length: 65 }, (_, i) => (tMax * 1.02 * i) / 64);
  const values = fits.flatMap((f) =>
    f.ratios
      .map((r, i) => r + f.errors[i])
      .concat(f.ratios.map((r, i) => r - f.errors[i]))
      .concat(curveTs.map((t) => evaluateFit(f, t)))
      .concat([f.value]),
  );
  const f = frame(
    [0, tMax * 1.08],
    padded(Math.min(...values, ...bounds.values()), Math.max(...values, ...bounds.values())),
    spec.xLabel ?? 'neighborhood radius t',
    spec.yLabel ?? 'volume ratio',
  );

  fits.forEach((fit, i) => {
    const color = seriesColor(i);
    f.body.push(
      polylineEl(
        curveTs.map((t): [number, number] => [f.x(t), f.y(evaluateFit(fit, t))]),
        color,
        1.2,
      ),
    );
    fit.ts.forEach((t, j) => {
      const cx = f.x(t);
      f.body.push(
        lineEl(cx, f.y(fit.ratios[j] - fit.errors[j]), cx, f.y(fit.ratios[j] + fit.errors[j]), color, 1),
      );
      f.body.push(circleEl(cx, f.y(fit.ratios[j]), 3, color));
    });
    f.body.push(circleEl(f.x(0), f.y(fit.value), 4, color));
  });
  [...bounds.entries()].forEach(([label, bound], slot) =>
    boundLine(f, bound, label, slot),
  );

  const entries: LegendEntry[] = fits.map((fit, i) => ({
    label: fit.name === '' ? 'measured ratios and fit' : fit.name,
    color: seriesColor(i),
  }));
  f.body.push(...legend(MARGIN.left + 12, MARGIN.top + 14, entries));
  return svgDocument(spec.title ?? DEFAULT_TITLES[spec.kind], f.body);
}

// ============================================================================
// bending-budget: cycle volumes against p with the certificate bound curves
// ============================================================================

const BENDING_METHODS = ['bending-total', 'bending-skeleton', 'bending-collar'];

interface BendingSeries {
  label: string;
  points: Array<[number, number]>;
}

function bendingSeries(inputs: LoadedInput[]): BendingSeries[] {
  const series: BendingSeries[] = [];
  for (const input of inputs) {
    const prefix = seriesName(input, inputs);
    for (const method of BENDING_METHODS) {
      const points = estimatesOf(input)
        .filter((e) => e.method === method)
        .flatMap((e) => {
          const p = detailNumber(e.details['p']);
          return p === undefined ? [] : ([[p, e.value]] as Array<[number, number]>);
        })
        .sort((a, b) => a[0] - b[0]);
      if (points.length > 0) {
        series.push({ label: prefix === '' ? method : `${method} ${prefix}`, points });
      }
    }
  }
  return series;
}

/** One certificate bound curve per (bound_ref, direction) pair. */
function bendingBounds(inputs: LoadedInput[]): Map<string, Array<[number, number]>> {
  const curves = new Map<string, Array<[number, number]>>();
  for (const input of inputs) {
    for (const cert of certificatesOf(input)) {
      const p = detailNumber(cert.details?.['p']);
      if (p === undefined) continue;
      const key = `${cert.bound_ref} (${cert.direction})`;
      const points = curves.get(key) ?? [];
      if (!points.some(([q, b]) => q === p && b === cert.bound)) {
        points.push([p, cert.bound]);
      }
      curves.set(key, points);
    }
  }
  for (const points of curves.values()) points.sort((a, b) => a[0] - b[0]);
  return curves;
}

function bendingBudgetFigure(inputs: LoadedInput[], spec: FigureSpec): string {
  const series = bendingSeries(inputs);
  if (series.length === 0) {
    return emptyFigure(spec, 'no bending records in the input');
  }
  const curves = bendingBounds(inputs);

  const ps = series.flatMap((s) => s.points.map(([p]) => p));
  const values = series
    .flatMap((s) => s.points.map(([, v]) => v))
    .concat([...curves.values()].flat().map(([, b]) => b));
  const f = frame(
    padded(Math.min(...ps), Math.max(...ps), 0.03),
    padded(Math.min(...values, 0), Math.max(...values)),
    spec.xLabel ?? 'cube count p',
    spec.yLabel ?? 'cycle volume',
  );

  series.forEach((s, i) => {
    const color = seriesColor(i);
    f.body.push(
      polylineEl(s.points.map(([p, v]): [number, number] => [f.x(p), f.y(v)]), color),
    );
    for (const [p, v] of s.points) f.body.push(circleEl(f.x(p), f.y(v), 2.5, color));
  });
  for (const [label, points] of curves) {
    f.body.push(
      polylineEl(
        points.map(([p, b]): [number, number] => [f.x(p), f.y(b)]),
        BOUND_COLOR,
        1.5,
        true,
      ),
    );
    const [lastP, lastB] = points[points.length - 1];
    f.body.push(
      textEl(f.x(lastP) - 4, f.y(lastB) - 6, label, {
        anchor: 'end',
        size: 11,
        fill: BOUND_COLOR,
        bold: true,
      }),
    );
  }
  const entries: LegendEntry[] = series.map((s, i) => ({
    label: s.label,
    color: seriesColor(i),
  }));
  f.body.push(...legend(MARGIN.left + 12, MARGIN.top + 14, entries));
  return svgDocument(spec.title ?? DEFAULT_TITLES[spec.kind], f.body);
}

// ============================================================================
// ledger-ratios: histogram of filling ledger ratios with the ceiling line
// ============================================================================

function ledgerRatioFigure(inputs: LoadedInput[], spec: FigureSpec): string {
  const groups = inputs.map((input) => ({
    name: seriesName(input, inputs),
    ratios: certificatesOf(input)
      .filter((c) => c.bound_ref === LEDGER_RATIO_REF)
      .map((c) => c.measured),
  }));
  if (groups.every((g) => g.ratios.length === 0)) {
    return emptyFigure(spec, 'no filling-ledger-ratio certificates in the input');
  }
  const bounds = new Map<string, number>();
  for (const input of inputs) {
    for (const cert of certificatesOf(input)) {
      if (cert.bound_ref === LEDGER_RATIO_REF) {
        bounds.set(`${cert.bound_ref} = ${fmt(cert.bound)}`, cert.bound);
      }
    }
  }

  const all = groups.flatMap((g) => g.ratios);
  const hi = Math.max(...all, ...bounds.values()) * 1.06;
  const binCount = 16;
  const width = hi / binCount;
  const counts = groups.map((g) => {
    const bins = new Array<number>(binCount).fill(0);
    for (const r of g.ratios) {
      bins[Math.min(Math.floor(r / width), binCount - 1)] += 1;
    }
    return bins;
  });

  const f = frame(
    [0, hi],
    [0, Math.max(...counts.flat()) * 1.12],
    spec.xLabel ?? 'ledger ratio',
    spec.yLabel ?? 'cycles',
  );

  const y0 = f.y(0);
  counts.forEach((bins, g) => {
    const color = seriesColor(g);
    const share = (f.x(width) - f.x(0) - 2) / counts.length;
    bins.forEach((count, b) => {
      if (count === 0) return;
      const left = f.x(b * width) + 1 + g * share;
      f.body.push(rectEl(left, f.y(count), share, y0 - f.y(count), color, 0.85));
    });
  });
  [...bounds.entries()].forEach(([label, bound], slot) => {
    const x = f.x(bound);
    f.body.push(lineEl(x, f.y.range[1], x, f.y.range[0], BOUND_COLOR, 1.5, true));
    f.body.push(
      textEl(x - 6, MARGIN.top + 12 + slot * 14, label, {
        anchor: 'end',
        size: 11,
        fill: BOUND_COLOR,
        bold: true,
      }),
    );
  });
  if (groups.length > 1) {
    const entries: LegendEntry[] = groups.map((g, i) => ({
      label: g.name,
      color: seriesColor(i),
    }));
    f.body.push(...legend(MARGIN.left + 12, MARGIN.top + 14, entries));
  }
  return svgDocument(spec.title ?? DEFAULT_TITLES[spec.kind], f.body);
}

// ============================================================================
// Rendering entry points
// ============================================================================

const BUILDERS: Record<FigureKind, (inputs: LoadedInput[], spec: FigureSpec) => string> = {
  'waist-profile': waistProfileFigure,
  'minkowski-fit': minkowskiFitFigure,
  'bending-budget': bendingBudgetFigure,
  'ledger-ratios': ledgerRatioFigure,
};

/** Build the SVG text for already-loaded inputs; pure. */
export function buildFigure(spec: FigureSpec, inputs: LoadedInput[]): string {
  if (inputs.every((input) => input.records.length === 0)) {
    return emptyFigure(spec, 'the input reports contain no records');
  }
  return BUILDERS[spec.kind](inputs, spec);
}

/** Load, validate, build, and write; returns the output path. */
export function render(spec: FigureSpec): string {
  const inputs = loadInputs(spec.inputs);
  writeFileSync(spec.output, buildFigure(spec, inputs), 'utf-8');
  return spec.output;
}
