// Application wiring: subject list, composer, parameter explorer, slice
// viewer, sampling with job polling, and the metric panel. State lives in a
// single SessionState object; every displayed number is a service response.

import { ApiClient, pollJobUntilDone, type SubjectListing, type VolumeMeta } from "./api.js";
import { Composer } from "./composer.js";
import { ParameterExplorer } from "./explorer.js";
import { SliceView } from "./slice-view.js";
import {
  SessionState,
  applySubjectListing,
  initialState,
} from "./state.js";

const client = new ApiClient("");
let state: SessionState = initialState();
let listing: SubjectListing = { subjects: [], priors: [], generated: [], checkpoints: [] };

function findVolume(id: string): VolumeMeta | undefined {
  return [...listing.subjects, ...listing.priors, ...listing.generated].find(
    (v) => v.id === id,
  );
}

async function refreshListing(): Promise<void> {
  listing = await client.getSubjects();
  state = applySubjectListing(state, listing);
  renderSubjectList();
  composer.render(tissueRows);
}

function renderSubjectList(): void {
  const box = document.getElementById("subjects")!;
  box.innerHTML = "";
  for (const meta of listing.subjects) {
    const button = document.createElement("button");
    button.textContent = meta.id;
    button.className = meta.id === state.selectedSubject ? "subject active" : "subject";
    button.addEventListener("click", () => {
      state = { ...state, selectedSubject: meta.id };
      renderSubjectList();
      sliceView.show(meta, labelWindowFor(meta));
      explorer.trigger();
    });
    box.append(button);
  }
}

function labelWindowFor(meta: VolumeMeta): { lo: number; hi: number } {
  if (meta.kind === "label") return { lo: 0, hi: 8 };
  if (meta.kind === "ct_hu") return { lo: -1024, hi: 1600 };
  return { lo: 0, hi: 255 };
}

const sliceView = new SliceView(client, { lo: -1024, hi: 1600 }, (lo, hi) => {
  state = { ...state, window: { lo, hi } };
});

let tissueRows: Awaited<ReturnType<typeof client.getTissues>>["rows"] = [];

const composer = new Composer(
  client,
  () => state,
  (s) => {
    state = s;
  },
  (subjectId) => {
    void (async () => {
      await refreshListing();
      state = { ...state, selectedSubject: subjectId };
      renderSubjectList();
      const meta = findVolume(subjectId);
      if (meta) sliceView.show(meta, labelWindowFor(meta));
    })();
  },
);

const explorer = new ParameterExplorer(
  client,
  initialState().sequence,
  () => state.selectedSubject,
  (priorId) => {
    void (async () => {
      state = { ...state, activePriorId: priorId };
      await refreshListing();
      const meta = findVolume(priorId);
      if (meta) sliceView.show(meta, labelWindowFor(meta));
      updateSampleButton();
    })();
  },
  (seq) => {
    state = { ...state, sequence: seq };
  },
);

function updateSampleButton(): void {
  const button = document.getElementById("sample-btn") as HTMLButtonElement;
  button.disabled = state.activePriorId === null || listing.checkpoints.length === 0;
  const label = document.getElementById("sample-status")!;
  if (listing.checkpoints.length === 0) {
    label.textContent = "no checkpoints in data root";
  }
}

async function sampleAndEvaluate(): Promise<void> {
  const priorId = state.activePriorId;
  const checkpoint = listing.checkpoints[0];
  if (!priorId || !checkpoint) return;
  const status = document.getElementById("sample-status")!;
  status.textContent = "sampling...";
  const { job_id } = await client.sample(priorId, checkpoint, 7);
  state = { ...state, pendingJobs: [...state.pendingJobs, job_id] };
  try {
    const job = await pollJobUntilDone(client, job_id);
    const genId = job.output_ids[0]!;
    status.textContent = `done: ${genId}`;
    await refreshListing();
    const meta = findVolume(genId);
    if (meta) sliceView.show(meta, labelWindowFor(meta));
    const report = await client.evaluate(genId, priorId);
    const rows = Object.entries(report.aggregate)
      .map(([name, { mean, std }]) => `${name}: ${mean.toFixed(4)} ± ${std.toFixed(4)}`)
      .join("\n");
    document.getElementById("metrics")!.textContent = rows;
  } catch (err) {
    status.textContent = String(err);
  } finally {
    state = { ...state, pendingJobs: state.pendingJobs.filter((j) => j !== job_id) };
  }
}

async function start(): Promise<void> {
  const tissues = await client.getTissues();
  tissueRows = tissues.rows;
  explorer.setTissueRows(tissueRows);
  await refreshListing();
  document.getElementById("composer-slot")!.append(composer.element);
  document.getElementById("explorer-slot")!.append(explorer.element);
  document.getElementById("viewer-slot")!.append(sliceView.element);
  composer.render(tissueRows);
  const first = listing.subjects[0];
  if (first) sliceView.show(first, labelWindowFor(first));
  document
    .getElementById("sample-btn")!
    .addEventListener("click", () => void sampleAndEvaluate());
  updateSampleButton();
}

document.addEventListener("DOMContentLoaded", () => void start());
