// Minimal canvas line plot for the signal-curve panel. No axes machinery
// beyond what the explorer needs: labeled curves over a shared x range.

import type { Curve } from "./signal.js";

const COLORS = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"];

export function drawCurves(
  canvas: HTMLCanvasElement,
  curves: Curve[],
  xLabel: string,
  marker?: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (curves.length === 0) {
    ctx.fillStyle = "#888";
    ctx.fillText("no curves for this sequence", 10, 20);
    return;
  }
  const pad = { left: 42, right: 8, top: 8, bottom: 24 };
  const xs = curves[0]!.xs;
  const xMin = xs[0]!;
  const xMax = xs[xs.length - 1]!;
  let yMax = 0;
  for (const c of curves) for (const y of c.ys) yMax = Math.max(yMax, y);
  if (yMax <= 0) yMax = 1;

  const px = (x: number) =>
    pad.left + ((x - xMin) / (xMax - xMin)) * (width - pad.left - pad.right);
  const py = (y: number) =>
    height - pad.bottom - (y / yMax) * (height - pad.top - pad.bottom);

  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(pad.left, pad.top, width - pad.left - pad.right,
                 height - pad.top - pad.bottom);
  ctx.fillStyle = "#555";
  ctx.fillText(xLabel, width / 2 - 15, height - 6);
  ctx.fillText(yMax.toFixed(2), 4, pad.top + 10);
  ctx.fillText("0", 4, height - pad.bottom);

  curves.forEach((curve, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length]!;
    ctx.beginPath();
    curve.xs.forEach((x, k) => {
      const method = k === 0 ? "moveTo" : "lineTo";
      ctx[method](px(x), py(curve.ys[k]!));
    });
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(curve.name, width - 110, pad.top + 12 + 12 * i);
  });

  if (marker !== undefined && marker >= xMin && marker <= xMax) {
    ctx.strokeStyle = "#999";
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(px(marker), pad.top);
    ctx.lineTo(px(marker), height - pad.bottom);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
