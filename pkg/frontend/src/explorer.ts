// Sequence-parameter explorer: kind selector plus TR/TE/flip sliders.
// Slider moves re-simulate the prior on the service (debounced 150 ms,
// stale responses dropped) and redraw the per-tissue signal curves.

import type { ApiClient, SequenceKindName, TissueRow } from "./api.js";
import { SequencedRequests, debounce } from "./debounce.js";
import { drawCurves } from "./plot.js";
import { activeParameter, signalCurves } from "./signal.js";
import type { SequenceSettings } from "./state.js";

const KINDS: SequenceKindName[] = [
  "ct", "gre_t1", "space_t2", "vibe_in", "vibe_opp", "dixon_vibe_in", "dixon_vibe_opp",
];

export const SIMULATE_DEBOUNCE_MS = 150;

export class ParameterExplorer {
  readonly element: HTMLElement;
  private kindSelect: HTMLSelectElement;
  private tr: HTMLInputElement;
  private te: HTMLInputElement;
  private flip: HTMLInputElement;
  private readout: HTMLElement;
  private canvas: HTMLCanvasElement;
  private errorBox: HTMLElement;
  private tissueRows: TissueRow[] = [];
  private settings: SequenceSettings;
  private requests = new SequencedRequests<string>();
  private requestSimulate: () => void;

  constructor(
    private client: ApiClient,
    initial: SequenceSettings,
    private getSubject: () => string | null,
    private onPrior: (priorId: string) => void,
    private onSettings?: (s: SequenceSettings) => void,
  ) {
    this.settings = { ...initial };
    this.element = document.createElement("div");
    this.element.className = "explorer";
    const heading = document.createElement("h3");
    heading.textContent = "sequence parameters";
    this.kindSelect = document.createElement("select");
    for (const kind of KINDS) {
      const opt = document.createElement("option");
      opt.value = kind;
      opt.textContent = kind;
      this.kindSelect.append(opt);
    }
    this.kindSelect.value = this.settings.kind;
    this.tr = this.slider(1, 3000, this.settings.tr_ms);
    this.te = this.slider(0, 300, this.settings.te_ms);
    this.flip = this.slider(1, 179, this.settings.flip_deg);
    this.readout = document.createElement("div");
    this.readout.className = "readout";
    this.canvas = document.createElement("canvas");
    this.canvas.width = 460;
    this.canvas.height = 220;
    this.errorBox = document.createElement("div");
    this.errorBox.className = "errors";

    const rows = document.createElement("div");
    rows.className = "sliders";
    rows.append("kind", this.kindSelect, "TR", this.tr, "TE", this.te,
                "flip", this.flip);
    this.element.append(heading, rows, this.readout, this.canvas, this.errorBox);

    this.requestSimulate = debounce(() => void this.simulate(), SIMULATE_DEBOUNCE_MS);
    this.kindSelect.addEventListener("change", () => {
      this.update({ kind: this.kindSelect.value as SequenceKindName });
    });
    for (const [input, key] of [
      [this.tr, "tr_ms"], [this.te, "te_ms"], [this.flip, "flip_deg"],
    ] as const) {
      input.addEventListener("input", () => this.update({ [key]: Number(input.value) }));
    }
  }

  private slider(min: number, max: number, value: number): HTMLInputElement {
    const s = document.createElement("input");
    s.type = "range";
    s.min = String(min);
    s.max = String(max);
    s.value = String(value);
    return s;
  }

  setTissueRows(rows: TissueRow[]): void {
    this.tissueRows = rows;
    this.redraw();
  }

  current(): SequenceSettings {
    return { ...this.settings };
  }

  private update(patch: Partial<SequenceSettings>): void {
    this.settings = { ...this.settings, ...patch };
    this.onSettings?.(this.current());
    this.redraw();
    this.requestSimulate();
  }

  /** Re-simulate now (also called when the subject changes). */
  trigger(): void {
    this.requestSimulate();
  }

  private redraw(): void {
    const s = this.settings;
    this.readout.textContent =
      `kind ${s.kind}  TR ${s.tr_ms} ms  TE ${s.te_ms} ms  flip ${s.flip_deg} deg`;
    const param = activeParameter(s.kind);
    const curves = signalCurves(this.tissueRows, s);
    const marker = param === null ? undefined : s[param];
    drawCurves(this.canvas, curves, param ?? "", marker);
  }

  private async simulate(): Promise<void> {
    const subject = this.getSubject();
    if (!subject) return;
    const s = this.settings;
    try {
      await this.requests.run(
        async () => {
          const body = {
            subject_id: subject,
            kind: s.kind,
            ...(s.kind === "ct"
              ? {}
              : { tr_ms: s.tr_ms, te_ms: s.te_ms, flip_deg: s.flip_deg }),
          };
          const { prior_id } = await this.client.simulate(body);
          return prior_id;
        },
        (priorId) => {
          this.errorBox.textContent = "";
          this.onPrior(priorId);
        },
      );
    } catch (err) {
      // keep slider state; surface the failure inline
      this.errorBox.textContent = String(err);
    }
  }
}
