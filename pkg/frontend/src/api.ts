import type {
  AnalystTag,
  DetectionReport,
  EntityDetail,
  EntityRecord,
  Verdict,
} from "./types";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

export interface SnapshotQuery {
  minDegree?: number | null;
  fincrimeOnly?: boolean;
  offset?: number;
  limit?: number;
}

const VERDICTS: readonly Verdict[] = ["suspicious", "clean", "unknown"];

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the workbench HTTP API. */
export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, "network", `service unreachable: ${String(err)}`);
    }
    if (!resp.ok) {
      let code = "error";
      let message = `${resp.status}`;
      try {
        const body = (await resp.json()) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  listRuns(): Promise<string[]> {
    return this.request("/api/runs");
  }

  listSnapshots(run: string): Promise<number[]> {
    return this.request(`/api/runs/${encodeURIComponent(run)}/snapshots`);
  }

  getSnapshot(
    run: string,
    iteration: number,
    query: SnapshotQuery = {},
  ): Promise<EntityRecord[]> {
    const params = new URLSearchParams();
    if (query.minDegree != null) params.set("min_degree", String(query.minDegree));
    if (query.fincrimeOnly) params.set("fincrime_only", "true");
    if (query.offset) params.set("offset", String(query.offset));
    if (query.limit != null) params.set("limit", String(query.limit));
    const suffix = params.size ? `?${params.toString()}` : "";
    return this.request(
      `/api/runs/${encodeURIComponent(run)}/snapshots/${iteration}${suffix}`,
    );
  }

  getEntity(run: string, id: string, iteration?: number): Promise<EntityDetail> {
    const suffix = iteration != null ? `?iter=${iteration}` : "";
    return this.request(
      `/api/runs/${encodeURIComponent(run)}/entities/${encodeURIComponent(id)}${suffix}`,
    );
  }

  /** Client-side verdict validation happens before any network call. */
  postTag(
    run: string,
    entityId: string,
    verdict: string,
    note = "",
  ): Promise<{ ok: boolean; tag: AnalystTag }> {
    if (!VERDICTS.includes(verdict as Verdict)) {
      return Promise.reject(
        new ApiError(0, "validation", `verdict must be one of ${VERDICTS.join(", ")}`),
      );
    }
    return this.request(`/api/runs/${encodeURIComponent(run)}/tags`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ entity_id: entityId, verdict, note }),
    });
  }

  getDetections(run: string): Promise<DetectionReport[]> {
    return this.request(`/api/runs/${encodeURIComponent(run)}/detections`);
  }
}
