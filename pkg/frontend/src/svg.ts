/**
 * Minimal deterministic SVG emission: linear scales, axes, series
 * primitives. Attribute order is fixed by construction so a figure is
 * a pure function of its inputs, byte for byte.
 */

import { ticks } from 'd3-array';

export const FIGURE_WIDTH = 840;
export const FIGURE_HEIGHT = 520;
export const MARGIN = { top: 48, right: 36, bottom: 58, left: 72 };

export const FONT = 'Helvetica, Arial, sans-serif';

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

/** Affine map from domain to pixel range. */
export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const scale = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

/** Pad [lo, hi] by a fraction on both ends; handles degenerate spans. */
export function padded(lo: number, hi: number, frac = 0.06): [number, number] {
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return [0, 1];
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * frac + 1e-9;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

/** Pixel coordinate: one decimal is plenty and keeps files stable. */
export function px(v: number): string {
  const s = v.toFixed(1);
  return s === '-0.0' ? '0.0' : s;
}

/** Human-facing number label. */
export function fmt(v: number): string {
  if (v === 0) return '0';
  const mag = Math.abs(v);
  if (mag >= 1e5 || mag < 1e-3) return v.toExponential(2);
  return String(parseFloat(v.toPrecision(6)));
}

export function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export interface TextOptions {
  size?: number;
  anchor?: 'start' | 'middle' | 'end';
  fill?: string;
  rotate?: number;
  bold?: boolean;
}

export function textEl(x: number, y: number, content: string, opts: TextOptions = {}): string {
  const size = opts.size ?? 12;
  const anchor = opts.anchor ?? 'start';
  const fill = opts.fill ?? '#1f2937';
  const weight = opts.bold ? ' font-weight="bold"' : '';
  const transform =
    opts.rotate !== undefined ? ` transform="rotate(${opts.rotate} ${px(x)} ${px(y)})"` : '';
  return (
    `<text x="${px(x)}" y="${px(y)}" font-family="${FONT}" font-size="${size}"` +
    ` text-anchor="${anchor}" fill="${fill}"${weight}${transform}>${esc(content)}</text>`
  );
}

export function lineEl(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  stroke: string,
  width = 1,
  dashed = false,
): string {
  const dash = dashed ? ' stroke-dasharray="6 4"' : '';
  return (
    `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}"` +
    ` stroke="${stroke}" stroke-width="${width}"${dash}/>`
  );
}

export function circleEl(cx: number, cy: number, r: number, fill: string): string {
  return `<circle cx="${px(cx)}" cy="${px(cy)}" r="${r}" fill="${fill}"/>`;
}

export function rectEl(
  x: number,
  y: number,
  w: number,
  h: number,
  fill: string,
  opacity = 1,
): string {
  const op = opacity === 1 ? '' : ` fill-opacity="${opacity}"`;
  return `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}" fill="${fill}"${op}/>`;
}

export function polylineEl(
  points: Array<[number, number]>,
  stroke: string,
  width = 1.5,
  dashed = false,
): string {
  const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(' ');
  const dash = dashed ? ' stroke-dasharray="6 4"' : '';
  return `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${dash}/>`;
}

/** Bottom axis with ticks, tick labels, and an axis label. */
export function xAxis(scale: Scale, y: number, label: string, tickCount = 6): string[] {
  const [x0, x1] = scale.range;
  const parts = [lineEl(x0, y, x1, y, '#374151')];
  for (const t of ticks(scale.domain[0], scale.domain[1], tickCount)) {
    const x = scale(t);
    parts.push(lineEl(x, y, x, y + 5, '#374151'));
    parts.push(textEl(x, y + 18, fmt(t), { anchor: 'middle', size: 11 }));
  }
  parts.push(
    textEl((x0 + x1) / 2, y + 38, label, { anchor: 'middle', size: 12, bold: true }),
  );
  return parts;
}

/** Left axis with ticks, tick labels, gridlines, and an axis label. */
export function yAxis(
  scale: Scale,
  x: number,
  gridTo: number,
  label: string,
  tickCount = 6,
): string[] {
  const [y0, y1] = scale.range;
  const parts = [lineEl(x, y0, x, y1, '#374151')];
  for (const t of ticks(scale.domain[0], scale.domain[1], tickCount)) {
    const y = scale(t);
    parts.push(lineEl(x, y, gridTo, y, '#e5e7eb'));
    parts.push(lineEl(x - 5, y, x, y, '#374151'));
    parts.push(textEl(x - 8, y + 4, fmt(t), { anchor: 'end', size: 11 }));
  }
  const cy = (y0 + y1) / 2;
  parts.push(
    textEl(x - 52, cy, label, { anchor: 'middle', size: 12, bold: true, rotate: -90 }),
  );
  return parts;
}

export interface LegendEntry {
  label: string;
  color: string;
  dashed?: boolean;
}

/** Legend block anchored at (x, y), one row per entry. */
export function legend(x: number, y: number, entries: LegendEntry[]): string[] {
  const parts: string[] = [];
  entries.forEach((entry, i) => {
    const rowY = y + i * 18;
    parts.push(lineEl(x, rowY, x + 22, rowY, entry.color, 2, entry.dashed ?? false));
    parts.push(textEl(x + 28, rowY + 4, entry.label, { size: 11 }));
  });
  return parts;
}

/** Wrap body elements into a complete standalone SVG document. */
export function svgDocument(title: string, body: string[]): string {
  const head =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${FIGURE_WIDTH}"` +
    ` height="${FIGURE_HEIGHT}" viewBox="0 0 ${FIGURE_WIDTH} ${FIGURE_HEIGHT}">`;
  const background = rectEl(0, 0, FIGURE_WIDTH, FIGURE_HEIGHT, '#ffffff');
  const heading = textEl(MARGIN.left, 26, title, { size: 15, bold: true });
  return [head, background, heading, ...body, '</svg>', ''].join('\n');
}
