// Axial slice viewer. The <img> displays the service's lossless PNG render
// directly, so on-screen pixels are exactly the service's pixels. Scrolling
// steps the slice index (clamped); window sliders trigger a re-request.

import type { ApiClient, VolumeMeta } from "./api.js";
import { clampSliceIndex } from "./state.js";

export class SliceView {
  readonly element: HTMLElement;
  private img: HTMLImageElement;
  private status: HTMLElement;
  private loSlider: HTMLInputElement;
  private hiSlider: HTMLInputElement;
  private zLabel: HTMLElement;
  private volume: VolumeMeta | null = null;
  private z = 0;
  private lo: number;
  private hi: number;

  constructor(
    private client: ApiClient,
    window_: { lo: number; hi: number },
    private onWindowChange?: (lo: number, hi: number) => void,
  ) {
    this.lo = window_.lo;
    this.hi = window_.hi;
    this.element = document.createElement("div");
    this.element.className = "slice-view";
    this.img = document.createElement("img");
    this.img.className = "slice-img";
    this.img.alt = "slice";
    this.status = document.createElement("div");
    this.status.className = "slice-status";
    this.zLabel = document.createElement("span");
    this.loSlider = this.slider(-1024, 3000, this.lo);
    this.hiSlider = this.slider(-1024, 3000, this.hi);

    const controls = document.createElement("div");
    controls.className = "slice-controls";
    controls.append("window lo", this.loSlider, "hi", this.hiSlider, this.zLabel);
    this.element.append(this.img, controls, this.status);

    this.img.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.setSlice(this.z + (ev.deltaY > 0 ? 1 : -1));
    });
    this.loSlider.addEventListener("change", () => this.readWindow());
    this.hiSlider.addEventListener("change", () => this.readWindow());
    this.img.addEventListener("error", () => {
      this.status.textContent = this.volume
        ? `volume ${this.volume.id} missing`
        : "no volume";
    });
  }

  private slider(min: number, max: number, value: number): HTMLInputElement {
    const s = document.createElement("input");
    s.type = "range";
    s.min = String(min);
    s.max = String(max);
    s.value = String(value);
    return s;
  }

  private readWindow(): void {
    const lo = Number(this.loSlider.value);
    const hi = Number(this.hiSlider.value);
    if (hi > lo) {
      this.lo = lo;
      this.hi = hi;
      this.onWindowChange?.(lo, hi);
      this.refresh();
    }
  }

  show(volume: VolumeMeta, window_?: { lo: number; hi: number }): void {
    this.volume = volume;
    if (window_) {
      this.lo = window_.lo;
      this.hi = window_.hi;
      this.loSlider.value = String(window_.lo);
      this.hiSlider.value = String(window_.hi);
    }
    this.setSlice(Math.floor(volume.dims[2] / 2));
  }

  setSlice(z: number): void {
    if (!this.volume) return;
    this.z = clampSliceIndex(z, this.volume.dims[2]);
    this.refresh();
  }

  /** The exact request the <img> issues; tests assert its query params. */
  currentUrl(): string | null {
    if (!this.volume) return null;
    return this.client.sliceUrl(this.volume.id, this.z, this.lo, this.hi);
  }

  private refresh(): void {
    const url = this.currentUrl();
    if (!url || !this.volume) return;
    this.img.src = url;
    this.zLabel.textContent = ` z ${this.z}/${this.volume.dims[2] - 1}`;
    this.status.textContent = this.volume.id;
  }
}
