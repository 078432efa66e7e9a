import { describe, expect, it } from "vitest";

import { buildLinkSegments, segmentCount } from "../src/links";
import type { EntityDetail } from "../src/types";

const detailWith = (linkCount: number): EntityDetail => ({
  id: "suspect",
  iteration: 80,
  vec: [0.5, 0.1, -0.2],
  degree: linkCount,
  fincrime: true,
  links: Array.from({ length: linkCount }, (_, i) => ({
    id: `party${i}`,
    vec: [i / 100, -i / 100, 0.3],
  })),
  link_count: linkCount,
  tags: [],
  latest_tag: null,
});

describe("buildLinkSegments", () => {
  it("draws exactly degree-many segments for a suspect with 14 links", () => {
    const segments = buildLinkSegments(detailWith(14));
    expect(segmentCount(segments)).toBe(14);
    expect(segments.length).toBe(14 * 6);
  });

  it("every segment starts at the selected entity and ends at the party", () => {
    const detail = detailWith(3);
    const segments = buildLinkSegments(detail);
    for (let i = 0; i < 3; i++) {
      expect(Array.from(segments.slice(i * 6, i * 6 + 3))).toEqual(
        detail.vec.map(Math.fround),
      );
      const end = Array.from(segments.slice(i * 6 + 3, i * 6 + 6));
      expect(end).toEqual(detail.links[i]!.vec.map(Math.fround));
    }
  });

  it("an isolated entity yields zero segments", () => {
    expect(segmentCount(buildLinkSegments(detailWith(0)))).toBe(0);
  });
});
