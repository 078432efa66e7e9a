export type Verdict = "suspicious" | "clean" | "unknown";

export interface EntityRecord {
  id: string;
  vec: number[];
  degree: number;
  fincrime: boolean;
  latest_tag: Verdict | null;
}

export interface EntityLink {
  id: string;
  vec: number[];
}

export interface AnalystTag {
  entity_id: string;
  verdict: Verdict;
  note: string;
  timestamp: string;
}

export interface EntityDetail {
  id: string;
  iteration: number;
  vec: number[];
  degree: number;
  fincrime: boolean;
  links: EntityLink[];
  link_count: number;
  tags: AnalystTag[];
  latest_tag: Verdict | null;
}

export interface DetectionReport {
  detector: string;
  params: Record<string, unknown>;
  flagged: string[];
  metrics: { precision: number | null; recall: number | null };
  status: string;
}
