import { degreeColor, GREY_POINT, verdictColor, type Rgb } from "./colors";
import { matchesFilters, type ColorMode, type Filters } from "./state";
import type { EntityRecord, Verdict } from "./types";

/**
 * Pure bookkeeping for the rendered point cloud.
 *
 * Entity ids keep their slot across iteration switches, so stepping through
 * snapshots moves points without re-identifying them; renderable buffers are
 * produced per (filters, colorMode) combination together with the
 * render-index -> id mapping used for picking.
 */
export class CloudLayout {
  private ids: string[] = [];
  private slot = new Map<string, number>();
  private records: EntityRecord[] = [];
  private overrides = new Map<string, Verdict>();

  /** Adopt a snapshot; first call fixes the slot order, later calls update. */
  applySnapshot(records: EntityRecord[]): void {
    for (const record of records) {
      if (!this.slot.has(record.id)) {
        this.slot.set(record.id, this.ids.length);
        this.ids.push(record.id);
        this.records.push(record);
      } else {
        this.records[this.slot.get(record.id)!] = record;
      }
    }
  }

  /** Analyst verdicts restyle points immediately, before any refetch. */
  setVerdict(id: string, verdict: Verdict): void {
    this.overrides.set(id, verdict);
  }

  get size(): number {
    return this.ids.length;
  }

  knownIds(): ReadonlySet<string> {
    return new Set(this.ids);
  }

  record(id: string): EntityRecord | undefined {
    const at = this.slot.get(id);
    return at == null ? undefined : this.records[at];
  }

  slotOf(id: string): number | undefined {
    return this.slot.get(id);
  }

  buffers(filters: Filters, colorMode: ColorMode): {
    positions: Float32Array;
    colors: Float32Array;
    renderIds: string[];
  } {
    const visible: EntityRecord[] = [];
    for (const record of this.records) {
      if (matchesFilters(record, filters)) visible.push(record);
    }
    const positions = new Float32Array(visible.length * 3);
    const colors = new Float32Array(visible.length * 3);
    const renderIds: string[] = [];
    visible.forEach((record, i) => {
      positions[i * 3] = record.vec[0] ?? 0;
      positions[i * 3 + 1] = record.vec[1] ?? 0;
      positions[i * 3 + 2] = record.vec[2] ?? 0;
      const tag = this.overrides.get(record.id) ?? record.latest_tag;
      let color: Rgb;
      if (tag) {
        color = verdictColor(tag);
      } else if (colorMode === "degree") {
        color = degreeColor(record.degree);
      } else {
        color = GREY_POINT;
      }
      colors[i * 3] = color[0];
      colors[i * 3 + 1] = color[1];
      colors[i * 3 + 2] = color[2];
      renderIds.push(record.id);
    });
    return { positions, colors, renderIds };
  }
}
