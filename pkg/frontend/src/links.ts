import type { EntityDetail } from "./types";

/**
 * Straight line segments from a selected entity to each related party
 * (Euclidean chords, not geodesics: a deliberate display simplification;
 * geodesics in the ball would bow toward the origin).
 *
 * Returns one segment (two xyz endpoints) per link, so the array holds
 * detail.links.length * 6 floats.
 */
export function buildLinkSegments(detail: EntityDetail): Float32Array {
  const origin = detail.vec;
  const out = new Float32Array(detail.links.length * 6);
  detail.links.forEach((link, i) => {
    out[i * 6] = origin[0] ?? 0;
    out[i * 6 + 1] = origin[1] ?? 0;
    out[i * 6 + 2] = origin[2] ?? 0;
    out[i * 6 + 3] = link.vec[0] ?? 0;
    out[i * 6 + 4] = link.vec[1] ?? 0;
    out[i * 6 + 5] = link.vec[2] ?? 0;
  });
  return out;
}

export function segmentCount(segments: Float32Array): number {
  return segments.length / 6;
}
