// Typed client for the voxsynth HTTP API. Every number shown in the UI
// originates from one of these responses.

export interface TissueRow {
  class_id: number;
  name: string;
  hu: number;
  t1_ms: number;
  t2_ms: number;
  rho: number;
  fat_fraction: number;
}

export interface TissueTable {
  version: string;
  rows: TissueRow[];
}

export interface VolumeMeta {
  id: string;
  dims: [number, number, number]; // nx, ny, nz
  spacing: [number, number, number];
  kind: string;
}

export interface SubjectListing {
  subjects: VolumeMeta[];
  priors: VolumeMeta[];
  generated: VolumeMeta[];
  checkpoints: string[];
}

export interface RecipeEntry {
  organ_class_id: number;
  source_subject_id: string;
}

export interface Recipe {
  entries: RecipeEntry[];
  contour_source: string;
  conflict_policy: string;
}

export type SequenceKindName =
  | "ct"
  | "gre_t1"
  | "space_t2"
  | "vibe_in"
  | "vibe_opp"
  | "dixon_vibe_in"
  | "dixon_vibe_opp";

export interface SimulateRequest {
  subject_id: string;
  kind: SequenceKindName;
  tr_ms?: number;
  te_ms?: number;
  flip_deg?: number;
}

export interface JobRecord {
  job_id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  inputs_digest: string;
  output_paths: string[];
  output_ids: string[];
  error: string;
}

export interface MetricReport {
  per_slice: { slice: number; metric: string; value: number | "inf" | "-inf" }[];
  aggregate: Record<string, { mean: number; std: number }>;
  metadata: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, init);
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    throw new ApiError(response.status, body?.detail ?? body);
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  getTissues(): Promise<TissueTable> {
    return request(this.base, "/api/tissues");
  }

  getSubjects(): Promise<SubjectListing> {
    return request(this.base, "/api/subjects");
  }

  sliceUrl(volId: string, z: number, lo: number, hi: number): string {
    const q = new URLSearchParams({
      vol: volId,
      z: String(z),
      lo: String(lo),
      hi: String(hi),
    });
    return `${this.base}/api/slice?${q.toString()}`;
  }

  async fetchSlicePng(volId: string, z: number, lo: number, hi: number): Promise<ArrayBuffer> {
    const response = await fetch(this.sliceUrl(volId, z, lo, hi));
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response.arrayBuffer();
  }

  compose(recipe: Recipe): Promise<{ subject_id: string }> {
    return request(this.base, "/api/compose", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ recipe }),
    });
  }

  simulate(req: SimulateRequest): Promise<{ prior_id: string }> {
    return request(this.base, "/api/simulate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  sample(priorId: string, checkpointId: string, seed: number): Promise<{ job_id: string }> {
    return request(this.base, "/api/sample", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ prior_id: priorId, checkpoint_id: checkpointId, seed }),
    });
  }

  getJob(jobId: string): Promise<JobRecord> {
    return request(this.base, `/api/jobs/${jobId}`);
  }

  evaluate(predId: string, refId: string): Promise<MetricReport> {
    return request(this.base, "/api/eval", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ pred_id: predId, ref_id: refId }),
    });
  }
}

export async function pollJobUntilDone(
  client: ApiClient,
  jobId: string,
  intervalMs = 250,
  timeoutMs = 120_000,
): Promise<JobRecord> {
  const startedAt = Date.now();
  for (;;) {
    const job = await client.getJob(jobId);
    if (job.status === "done") return job;
    if (job.status === "failed") {
      throw new Error(`job ${jobId} failed: ${job.error}`);
    }
    if (Date.now() - startedAt > timeoutMs) {
      throw new Error(`job ${jobId} timed out after ${timeoutMs} ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
