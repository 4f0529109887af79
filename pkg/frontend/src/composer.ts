// Anatomy composer: assign a source subject per organ class, pick the
// contour donor, and submit the recipe. Invalid assignments never reach the
// service; the submit button is disabled with the reasons shown inline.

import type { ApiClient, TissueRow } from "./api.js";
import {
  SessionState,
  assignOrgan,
  buildRecipe,
  clearOrgan,
  recipeErrors,
} from "./state.js";

// organ classes offered for composition (phantoms place these)
const COMPOSABLE = [2, 3, 4, 5, 6];

export class Composer {
  readonly element: HTMLElement;
  private table: HTMLTableElement;
  private contourSelect: HTMLSelectElement;
  private submitButton: HTMLButtonElement;
  private errorBox: HTMLElement;

  constructor(
    private client: ApiClient,
    private getState: () => SessionState,
    private setState: (s: SessionState) => void,
    private onComposed: (subjectId: string) => void,
  ) {
    this.element = document.createElement("div");
    this.element.className = "composer";
    const heading = document.createElement("h3");
    heading.textContent = "compose anatomy";
    this.table = document.createElement("table");
    this.contourSelect = document.createElement("select");
    this.submitButton = document.createElement("button");
    this.submitButton.textContent = "compose";
    this.errorBox = document.createElement("div");
    this.errorBox.className = "errors";
    const contourRow = document.createElement("div");
    contourRow.append("body contour from ", this.contourSelect);
    this.element.append(heading, this.table, contourRow, this.submitButton, this.errorBox);

    this.contourSelect.addEventListener("change", () => {
      this.setState({ ...this.getState(), contourSource: this.contourSelect.value });
      this.render();
    });
    this.submitButton.addEventListener("click", () => void this.submit());
  }

  render(tissueRows?: TissueRow[]): void {
    const state = this.getState();
    const names = new Map((tissueRows ?? []).map((r) => [r.class_id, r.name]));
    this.table.innerHTML = "";
    for (const classId of COMPOSABLE) {
      const row = this.table.insertRow();
      row.insertCell().textContent = names.get(classId) ?? `class ${classId}`;
      const select = document.createElement("select");
      const none = document.createElement("option");
      none.value = "";
      none.textContent = "(none)";
      select.append(none);
      for (const sid of state.subjects) {
        const opt = document.createElement("option");
        opt.value = sid;
        opt.textContent = sid;
        select.append(opt);
      }
      select.value = state.organAssignments.get(classId) ?? "";
      select.addEventListener("change", () => {
        const next = select.value
          ? assignOrgan(this.getState(), classId, select.value)
          : clearOrgan(this.getState(), classId);
        this.setState(next);
        this.render(tissueRows);
      });
      row.insertCell().append(select);
    }

    this.contourSelect.innerHTML = "";
    for (const sid of state.subjects) {
      const opt = document.createElement("option");
      opt.value = sid;
      opt.textContent = sid;
      this.contourSelect.append(opt);
    }
    if (state.contourSource) this.contourSelect.value = state.contourSource;

    const errors = recipeErrors(state);
    this.submitButton.disabled = errors.length > 0;
    this.errorBox.textContent = errors.join("; ");
  }

  private async submit(): Promise<void> {
    const recipe = buildRecipe(this.getState());
    this.submitButton.disabled = true;
    try {
      const { subject_id } = await this.client.compose(recipe);
      this.onComposed(subject_id);
    } catch (err) {
      this.errorBox.textContent = String(err);
    } finally {
      this.submitButton.disabled = false;
    }
  }
}
