// Pure SVG geometry for the trace chart and the what-if fans.
// Everything here returns data or path strings; DOM assembly lives in
// main.ts so these stay trivially testable.

export interface Scale {
  (v: number): number;
}

export function linearScale(
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  const d = domainHi - domainLo || 1;
  return (v: number) => rangeLo + ((v - domainLo) / d) * (rangeHi - rangeLo);
}

export function linePath(xs: number[], ys: number[], sx: Scale, sy: Scale): string {
  if (xs.length === 0) return "";
  const pts = xs.map((x, i) => `${sx(x).toFixed(2)},${sy(ys[i]).toFixed(2)}`);
  return `M${pts.join("L")}`;
}

/** Closed ribbon between a lower and an upper series. */
export function ribbonPath(
  xs: number[],
  lo: number[],
  hi: number[],
  sx: Scale,
  sy: Scale,
): string {
  if (xs.length === 0) return "";
  const top = xs.map((x, i) => `${sx(x).toFixed(2)},${sy(hi[i]).toFixed(2)}`);
  const bottom = [...xs.keys()]
    .reverse()
    .map((i) => `${sx(xs[i]).toFixed(2)},${sy(lo[i]).toFixed(2)}`);
  return `M${top.join("L")}L${bottom.join("L")}Z`;
}

/** Day indices where a new decision block starts. */
export function blockBoundaries(firstDay: number, nDays: number, delta: number): number[] {
  const out: number[] = [];
  for (let d = firstDay; d < firstDay + nDays; d += delta) out.push(d);
  return out;
}

export const ACTION_COLORS: Record<number, string> = {
  1: "#4caf50",
  2: "#ffb300",
  3: "#f4511e",
  4: "#b71c1c",
};

export const ACTION_LABELS: Record<number, string> = {
  1: "no measures",
  2: "mild closures",
  3: "semi-lockdown",
  4: "full lockdown",
};
