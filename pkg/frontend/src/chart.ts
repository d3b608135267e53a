// Slice chart: posterior mean with a ±2-sd band over the served grid and
// the acquisition profile in a panel underneath, plus dots for logged
// observations and a vertical marker at the pending suggestion. Everything
// is drawn from the served arrays; the only arithmetic here is the band
// and pixel scaling.

import type { ObservationRow, SlicePayload } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const W = 640;
const H_MEAN = 230;
const H_ACQ = 90;
const PAD = { l: 58, r: 14, t: 10, b: 26, gap: 30 };
const H_TOTAL = PAD.t + H_MEAN + PAD.gap + H_ACQ + PAD.b;

export interface Band {
  upper: number[];
  lower: number[];
}

/** Band edges mean ± 2·sqrt(variance), elementwise over the served grid. */
export function bandValues(mean: number[], variance: number[]): Band {
  return {
    upper: mean.map((m, i) => m + 2 * Math.sqrt(variance[i])),
    lower: mean.map((m, i) => m - 2 * Math.sqrt(variance[i])),
  };
}

/** Index of the grid sample closest to a raw coordinate value. */
export function nearestIndex(xs: number[], value: number): number {
  let best = 0;
  let dist = Infinity;
  for (let i = 0; i < xs.length; i++) {
    const d = Math.abs(xs[i] - value);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  return best;
}

/** Tooltip lines for sample i, served values verbatim. */
export function tooltipLines(slice: SlicePayload, i: number): string[] {
  return [
    `${slice.variable} = ${slice.x[i]}`,
    `mean = ${slice.mean[i]}`,
    `variance = ${slice.variance[i]}`,
    `acquisition = ${slice.acquisition[i]}`,
  ];
}

type Scale = (v: number) => number;

function linscale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function polyPoints(xs: number[], ys: number[], sx: Scale, sy: Scale): string {
  return xs.map((x, i) => `${sx(x)},${sy(ys[i])}`).join(" ");
}

function ticks(lo: number, hi: number, n: number): number[] {
  const out = [];
  for (let i = 0; i < n; i++) out.push(lo + ((hi - lo) * i) / (n - 1));
  return out;
}

export interface ChartOptions {
  observations: ObservationRow[];
  suggestion: number[] | null;
}

/**
 * Build the chart container. The returned element holds the svg and a
 * tooltip div that follows the pointer and shows the nearest sample.
 */
export function renderSliceChart(slice: SlicePayload, opts: ChartOptions): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "chart-wrap";

  const band = bandValues(slice.mean, slice.variance);
  const obsY = opts.observations.map((o) => o.y);
  const xLo = Math.min(...slice.x);
  const xHi = Math.max(...slice.x);
  let yLo = Math.min(...band.lower, ...obsY);
  let yHi = Math.max(...band.upper, ...obsY);
  const yPad = (yHi - yLo || 1) * 0.05;
  yLo -= yPad;
  yHi += yPad;
  let aLo = Math.min(...slice.acquisition);
  let aHi = Math.max(...slice.acquisition);
  if (aLo === aHi) {
    aLo -= 0.5;
    aHi += 0.5;
  }

  const sx = linscale(xLo, xHi, PAD.l, W - PAD.r);
  const sy = linscale(yLo, yHi, PAD.t + H_MEAN, PAD.t);
  const acqTop = PAD.t + H_MEAN + PAD.gap;
  const sa = linscale(aLo, aHi, acqTop + H_ACQ, acqTop);

  const svg = el("svg", {
    viewBox: `0 0 ${W} ${H_TOTAL}`,
    width: "100%",
    class: "slice-chart",
  });

  // Band polygon: upper edge left to right, then lower edge back.
  const fwd = slice.x.map((x, i) => `${sx(x)},${sy(band.upper[i])}`);
  const back = slice.x.map((x, i) => `${sx(x)},${sy(band.lower[i])}`).reverse();
  svg.appendChild(el("polygon", {
    class: "band",
    points: fwd.concat(back).join(" "),
  }));

  svg.appendChild(el("polyline", {
    class: "mean-line",
    fill: "none",
    points: polyPoints(slice.x, slice.mean, sx, sy),
  }));

  svg.appendChild(el("polyline", {
    class: "acq-line",
    fill: "none",
    points: polyPoints(slice.x, slice.acquisition, sx, sa),
  }));

  for (const o of opts.observations) {
    svg.appendChild(el("circle", {
      class: "obs-dot",
      cx: String(sx(o.x[slice.axis])),
      cy: String(sy(o.y)),
      r: "3.5",
    }));
  }

  if (opts.suggestion) {
    const px = sx(opts.suggestion[slice.axis]);
    svg.appendChild(el("line", {
      class: "suggestion-line",
      x1: String(px),
      x2: String(px),
      y1: String(PAD.t),
      y2: String(acqTop + H_ACQ),
    }));
  }

  // Axes: frame lines plus a handful of tick labels. Tick positions are
  // presentation only; exact values live in the tooltip.
  for (const [y0, y1] of [[PAD.t, PAD.t + H_MEAN], [acqTop, acqTop + H_ACQ]] as const) {
    svg.appendChild(el("line", {
      class: "axis", x1: String(PAD.l), x2: String(PAD.l),
      y1: String(y0), y2: String(y1),
    }));
    svg.appendChild(el("line", {
      class: "axis", x1: String(PAD.l), x2: String(W - PAD.r),
      y1: String(y1), y2: String(y1),
    }));
  }
  for (const t of ticks(xLo, xHi, 5)) {
    const label = el("text", {
      class: "tick",
      x: String(sx(t)),
      y: String(acqTop + H_ACQ + 16),
      "text-anchor": "middle",
    });
    label.textContent = shortNum(t);
    svg.appendChild(label);
  }
  for (const t of ticks(yLo, yHi, 4)) {
    const label = el("text", {
      class: "tick",
      x: String(PAD.l - 6),
      y: String(sy(t) + 3),
      "text-anchor": "end",
    });
    label.textContent = shortNum(t);
    svg.appendChild(label);
  }
  const xTitle = el("text", {
    class: "axis-title",
    x: String((PAD.l + W - PAD.r) / 2),
    y: String(H_TOTAL - 4),
    "text-anchor": "middle",
  });
  xTitle.textContent = slice.variable;
  svg.appendChild(xTitle);
  const acqTitle = el("text", {
    class: "axis-title",
    x: String(PAD.l),
    y: String(acqTop - 6),
  });
  acqTitle.textContent = "acquisition";
  svg.appendChild(acqTitle);

  const marker = el("circle", { class: "hover-dot", r: "4", display: "none" });
  svg.appendChild(marker);

  const tip = document.createElement("div");
  tip.className = "tooltip";
  tip.style.display = "none";

  svg.addEventListener("mousemove", (evt) => {
    const box = svg.getBoundingClientRect();
    if (box.width === 0) return;
    const px = ((evt.clientX - box.left) / box.width) * W;
    const value = xLo + ((px - PAD.l) / (W - PAD.r - PAD.l)) * (xHi - xLo);
    const i = nearestIndex(slice.x, value);
    marker.setAttribute("cx", String(sx(slice.x[i])));
    marker.setAttribute("cy", String(sy(slice.mean[i])));
    marker.removeAttribute("display");
    tip.replaceChildren();
    for (const line of tooltipLines(slice, i)) {
      const row = document.createElement("div");
      row.textContent = line;
      tip.appendChild(row);
    }
    tip.style.display = "block";
    tip.style.left = `${evt.clientX - box.left + 14}px`;
    tip.style.top = `${evt.clientY - box.top + 6}px`;
  });
  svg.addEventListener("mouseleave", () => {
    tip.style.display = "none";
    marker.setAttribute("display", "none");
  });

  wrap.appendChild(svg);
  wrap.appendChild(tip);
  return wrap;
}

function shortNum(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(4)));
}
