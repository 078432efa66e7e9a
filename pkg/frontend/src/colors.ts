import type { Verdict } from "./types";

export type Rgb = [number, number, number];

// low connectivity (2) is yellow/green, high (10+) dark blue
const DEGREE_STOPS: Array<[number, Rgb]> = [
  [0.0, [200 / 255, 224 / 255, 32 / 255]],
  [0.35, [60 / 255, 180 / 255, 110 / 255]],
  [0.7, [42 / 255, 110 / 255, 140 / 255]],
  [1.0, [36 / 255, 30 / 255, 90 / 255]],
];

export function degreeColor(degree: number): Rgb {
  const t = Math.min(1, Math.max(0, (degree - 2) / 8));
  for (let i = 1; i < DEGREE_STOPS.length; i++) {
    const [t1, c1] = DEGREE_STOPS[i]!;
    if (t <= t1) {
      const [t0, c0] = DEGREE_STOPS[i - 1]!;
      const f = t1 === t0 ? 0 : (t - t0) / (t1 - t0);
      return [
        c0[0] + (c1[0] - c0[0]) * f,
        c0[1] + (c1[1] - c0[1]) * f,
        c0[2] + (c1[2] - c0[2]) * f,
      ];
    }
  }
  return DEGREE_STOPS[DEGREE_STOPS.length - 1]![1];
}

export const GREY_POINT: Rgb = [0.62, 0.62, 0.65];
export const SUSPECT_LINK = "#d633aa";
export const HIGHLIGHT_LINK = "#cc2222";

const VERDICT_COLORS: Record<Verdict, Rgb> = {
  suspicious: [214 / 255, 51 / 255, 170 / 255],
  clean: [58 / 255, 176 / 255, 94 / 255],
  unknown: [150 / 255, 150 / 255, 170 / 255],
};

export function verdictColor(verdict: Verdict): Rgb {
  return VERDICT_COLORS[verdict];
}

export function toCss([r, g, b]: Rgb): string {
  const h = (x: number) =>
    Math.round(x * 255)
      .toString(16)
      .padStart(2, "0");
  return `#${h(r)}${h(g)}${h(b)}`;
}
