import type { ChartPoint } from './state.js';

const W = 640;
const H = 240;
const PAD = { top: 12, right: 16, bottom: 24, left: 48 };

const SVG_NS = 'http://www.w3.org/2000/svg';

function svgEl(tag: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, String(value));
  return node;
}

/**
 * Spend against the budget envelope, one column per year. The grey
 * band spans budget - under_slack .. budget + over_slack, the dashed
 * line is the nominal budget, bars are the optimized spend. Bars only
 * appear once a result is loaded.
 */
export function renderSpendChart(host: HTMLElement, series: ChartPoint[]): void {
  host.textContent = '';
  if (!series.length) return;

  const values = series.flatMap((p) => [p.lo, p.hi, p.budget, p.spend ?? 0, 0]);
  const yMin = Math.min(...values);
  const yMax = Math.max(...values);
  const span = yMax - yMin || 1;

  const plotW = W - PAD.left - PAD.right;
  const plotH = H - PAD.top - PAD.bottom;
  const colW = plotW / series.length;
  const y = (v: number) => PAD.top + ((yMax - v) / span) * plotH;

  const svg = svgEl('svg', { viewBox: `0 0 ${W} ${H}`, width: W, height: H });
  svg.setAttribute('class', 'spend-chart');

  series.forEach((point, i) => {
    const x0 = PAD.left + i * colW;
    svg.append(svgEl('rect', {
      class: 'band',
      'data-year': point.year,
      x: x0,
      y: y(point.hi),
      width: colW,
      height: Math.max(y(point.lo) - y(point.hi), 0),
    }));
  });

  const budgetPath = series
    .map((p, i) => {
      const x0 = PAD.left + i * colW;
      return `M ${x0} ${y(p.budget)} H ${x0 + colW}`;
    })
    .join(' ');
  svg.append(svgEl('path', { class: 'budget-line', d: budgetPath }));

  series.forEach((point, i) => {
    if (point.spend === null) return;
    const xBar = PAD.left + i * colW + colW * 0.25;
    const yZero = y(0);
    const yVal = y(point.spend);
    svg.append(svgEl('rect', {
      class: 'spend-bar',
      'data-year': point.year,
      'data-spend': point.spend,
      x: xBar,
      y: Math.min(yZero, yVal),
      width: colW * 0.5,
      height: Math.abs(yZero - yVal),
    }));
  });

  series.forEach((point, i) => {
    const x0 = PAD.left + i * colW;
    const label = svgEl('text', {
      class: 'year-label',
      x: x0 + colW / 2,
      y: H - 6,
      'text-anchor': 'middle',
    });
    label.textContent = String(point.year);
    svg.append(label);
  });

  host.append(svg);
}
