// Session state: a plain serializable object plus pure update helpers.
// The view layer re-renders from this; nothing here touches the network.

import type { Recipe, SequenceKindName, SubjectListing } from "./api.js";

export interface SequenceSettings {
  kind: SequenceKindName;
  tr_ms: number;
  te_ms: number;
  flip_deg: number;
}

export interface SessionState {
  subjects: string[]; // ids listed by GET /api/subjects
  selectedSubject: string | null;
  // organ class id -> source subject id (one source per organ by construction)
  organAssignments: Map<number, string>;
  contourSource: string | null;
  sequence: SequenceSettings;
  sliceIndex: number;
  window: { lo: number; hi: number };
  activePriorId: string | null;
  pendingJobs: string[];
}

export const DEFAULT_SEQUENCE: SequenceSettings = {
  kind: "gre_t1",
  tr_ms: 25,
  te_ms: 0,
  flip_deg: 30,
};

export function initialState(): SessionState {
  return {
    subjects: [],
    selectedSubject: null,
    organAssignments: new Map(),
    contourSource: null,
    sequence: { ...DEFAULT_SEQUENCE },
    sliceIndex: 0,
    window: { lo: -1024, hi: 1600 },
    activePriorId: null,
    pendingJobs: [],
  };
}

export function applySubjectListing(state: SessionState, listing: SubjectListing): SessionState {
  const subjects = listing.subjects.map((s) => s.id);
  const known = new Set(subjects);
  // drop assignments whose source disappeared: the invariant is that every
  // assignment references a listed subject
  const organAssignments = new Map(
    [...state.organAssignments].filter(([, sid]) => known.has(sid)),
  );
  return {
    ...state,
    subjects,
    organAssignments,
    selectedSubject:
      state.selectedSubject && known.has(state.selectedSubject)
        ? state.selectedSubject
        : (subjects[0] ?? null),
    contourSource:
      state.contourSource && known.has(state.contourSource)
        ? state.contourSource
        : (subjects[0] ?? null),
  };
}

export function assignOrgan(
  state: SessionState,
  organClassId: number,
  subjectId: string,
): SessionState {
  if (!state.subjects.includes(subjectId)) {
    throw new Error(`unknown subject ${subjectId}`);
  }
  const organAssignments = new Map(state.organAssignments);
  organAssignments.set(organClassId, subjectId);
  return { ...state, organAssignments };
}

export function clearOrgan(state: SessionState, organClassId: number): SessionState {
  const organAssignments = new Map(state.organAssignments);
  organAssignments.delete(organClassId);
  return { ...state, organAssignments };
}

/** Client-side recipe validation; mirrors the service's recipe invariants. */
export function recipeErrors(state: SessionState): string[] {
  const errors: string[] = [];
  if (state.organAssignments.size === 0) {
    errors.push("assign at least one organ");
  }
  if (!state.contourSource) {
    errors.push("choose a body-contour donor");
  } else if (!state.subjects.includes(state.contourSource)) {
    errors.push(`contour donor ${state.contourSource} is not a listed subject`);
  }
  for (const [classId, sid] of state.organAssignments) {
    if (!state.subjects.includes(sid)) {
      errors.push(`organ ${classId} references unknown subject ${sid}`);
    }
  }
  return errors;
}

/** Build the POST /api/compose body; only valid states may reach this. */
export function buildRecipe(state: SessionState): Recipe {
  const errors = recipeErrors(state);
  if (errors.length > 0) {
    throw new Error(`invalid recipe: ${errors.join("; ")}`);
  }
  return {
    entries: [...state.organAssignments].map(([organClassId, sourceSubjectId]) => ({
      organ_class_id: organClassId,
      source_subject_id: sourceSubjectId,
    })),
    contour_source: state.contourSource as string,
    conflict_policy: "priority_order",
  };
}

export function clampSliceIndex(z: number, nSlices: number): number {
  if (!Number.isFinite(z) || nSlices < 1) return 0;
  return Math.min(Math.max(Math.round(z), 0), nSlices - 1);
}
