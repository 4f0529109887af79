// Signal-curve evaluation for the explorer's plot panel.
//
// The UI's only independent numeric computation: turning tissue rows that
// came from GET /api/tissues into plottable curves. The formulas mirror the
// service's sequence models exactly; every parameter value is service-owned.

import type { TissueRow } from "./api.js";
import type { SequenceSettings } from "./state.js";

export function gradientEchoSignal(t1Ms: number, rho: number, trMs: number, flipDeg: number): number {
  const a = (flipDeg * Math.PI) / 180;
  const e1 = Math.exp(-trMs / t1Ms);
  return (rho * Math.sin(a) * (1 - e1)) / (1 - Math.cos(a) * e1);
}

export function spinEchoSignal(t2Ms: number, rho: number, teMs: number): number {
  return rho * Math.exp(-teMs / t2Ms);
}

export function opposedPhaseFactor(fatFraction: number): number {
  return Math.abs(1 - 2 * fatFraction);
}

export function signalFor(row: TissueRow, seq: SequenceSettings): number {
  switch (seq.kind) {
    case "ct":
      return row.hu;
    case "space_t2":
      return spinEchoSignal(row.t2_ms, row.rho, seq.te_ms);
    case "vibe_opp":
    case "dixon_vibe_opp":
      return (
        gradientEchoSignal(row.t1_ms, row.rho, seq.tr_ms, seq.flip_deg) *
        opposedPhaseFactor(row.fat_fraction)
      );
    default:
      // gre_t1, vibe_in, dixon_vibe_in
      return gradientEchoSignal(row.t1_ms, row.rho, seq.tr_ms, seq.flip_deg);
  }
}

export interface Curve {
  name: string;
  xs: number[];
  ys: number[];
}

/** Which sequence parameter the explorer sweeps for the current kind. */
export function activeParameter(kind: SequenceSettings["kind"]): "tr_ms" | "te_ms" | null {
  if (kind === "ct") return null;
  return kind === "space_t2" ? "te_ms" : "tr_ms";
}

export function parameterRange(param: "tr_ms" | "te_ms"): { min: number; max: number } {
  return param === "te_ms" ? { min: 0, max: 300 } : { min: 1, max: 3000 };
}

/** One curve per tissue row: signal as a function of the active parameter. */
export function signalCurves(
  rows: TissueRow[],
  seq: SequenceSettings,
  nPoints = 80,
): Curve[] {
  const param = activeParameter(seq.kind);
  if (param === null) return [];
  const { min, max } = parameterRange(param);
  const xs = Array.from({ length: nPoints }, (_, i) => min + ((max - min) * i) / (nPoints - 1));
  return rows
    .filter((row) => row.rho > 0)
    .map((row) => ({
      name: row.name,
      xs,
      ys: xs.map((x) => signalFor(row, { ...seq, [param]: x })),
    }));
}
