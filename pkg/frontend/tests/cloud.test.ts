import { describe, expect, it } from "vitest";

import { CloudLayout } from "../src/cloud";
import { initialState } from "../src/state";
import type { EntityRecord } from "../src/types";

const rec = (id: string, vec: number[], over: Partial<EntityRecord> = {}): EntityRecord => ({
  id,
  vec,
  degree: 2,
  fincrime: false,
  latest_tag: null,
  ...over,
});

describe("CloudLayout", () => {
  it("keeps ids on stable slots when positions move between iterations", () => {
    const cloud = new CloudLayout();
    cloud.applySnapshot([rec("a", [0.1, 0, 0]), rec("b", [0, 0.1, 0])]);
    const slotA = cloud.slotOf("a");
    cloud.applySnapshot([rec("b", [0, 0.5, 0]), rec("a", [0.4, 0, 0])]);
    expect(cloud.slotOf("a")).toBe(slotA);
    expect(cloud.record("a")?.vec).toEqual([0.4, 0, 0]);
    expect(cloud.record("b")?.vec).toEqual([0, 0.5, 0]);
    expect(cloud.size).toBe(2);
  });

  it("renders one point per entity with positions in slot order", () => {
    const cloud = new CloudLayout();
    cloud.applySnapshot([rec("a", [0.1, 0.2, 0.3]), rec("b", [-0.1, 0, 0.4])]);
    const { positions, renderIds } = cloud.buffers(initialState.filters, "degree");
    expect(renderIds).toEqual(["a", "b"]);
    expect(Array.from(positions)).toEqual(
      [0.1, 0.2, 0.3, -0.1, 0, 0.4].map(Math.fround),
    );
  });

  it("filters conjunctively and reports render ids for picking", () => {
    const cloud = new CloudLayout();
    cloud.applySnapshot([
      rec("low", [0, 0, 0], { degree: 2 }),
      rec("high", [0, 0, 0], { degree: 9 }),
      rec("crime", [0, 0, 0], { degree: 9, fincrime: true }),
    ]);
    const { renderIds } = cloud.buffers(
      { minDegree: 5, fincrimeOnly: true },
      "degree",
    );
    expect(renderIds).toEqual(["crime"]);
  });

  it("degree coloring differs between low and high degree points", () => {
    const cloud = new CloudLayout();
    cloud.applySnapshot([
      rec("low", [0, 0, 0], { degree: 2 }),
      rec("high", [0, 0, 0], { degree: 12 }),
    ]);
    const { colors } = cloud.buffers(initialState.filters, "degree");
    const low = Array.from(colors.slice(0, 3));
    const high = Array.from(colors.slice(3, 6));
    expect(low).not.toEqual(high);
    // low degree leans yellow (more red), high leans blue
    expect(low[0]!).toBeGreaterThan(high[0]!);
    expect(high[2]!).toBeGreaterThan(low[2]!);
  });

  it("grey mode styles untagged points uniformly", () => {
    const cloud = new CloudLayout();
    cloud.applySnapshot([
      rec("a", [0, 0, 0], { degree: 2 }),
      rec("b", [0, 0, 0], { degree: 12 }),
    ]);
    const { colors } = cloud.buffers(initialState.filters, "grey");
    expect(Array.from(colors.slice(0, 3))).toEqual(Array.from(colors.slice(3, 6)));
  });

  it("verdict overrides restyle a point until the next snapshot says otherwise", () => {
    const cloud = new CloudLayout();
    cloud.applySnapshot([rec("a", [0, 0, 0]), rec("b", [0, 0, 0])]);
    const before = cloud.buffers(initialState.filters, "degree").colors;
    cloud.setVerdict("a", "suspicious");
    const after = cloud.buffers(initialState.filters, "degree").colors;
    expect(Array.from(after.slice(0, 3))).not.toEqual(Array.from(before.slice(0, 3)));
    expect(Array.from(after.slice(3, 6))).toEqual(Array.from(before.slice(3, 6)));
  });
});
