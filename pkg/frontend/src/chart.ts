/**
 * Pure geometry for the token chart: maps token series onto SVG polyline
 * coordinates.  No DOM access, so the math is unit-testable.
 */

export interface ChartPoint {
  x: number;
  y: number;
  turn: number;
  value: number;
}

export interface ChartGeometry {
  perTurn: ChartPoint[];
  cumulative: ChartPoint[];
  maxY: number;
  firstTurn: number;
  lastTurn: number;
}

export interface ChartBox {
  width: number;
  height: number;
  padX: number;
  padY: number;
}

export const DEFAULT_BOX: ChartBox = { width: 420, height: 160, padX: 34, padY: 12 };

/**
 * Lay out the last `window` turns of both series inside the box.  The y axis
 * is scaled to the cumulative maximum (which dominates the per-turn series)
 * and flipped so larger values sit higher.
 */
export function chartGeometry(
  perTurn: number[],
  cumulative: number[],
  window: number,
  box: ChartBox = DEFAULT_BOX,
): ChartGeometry {
  const n = Math.min(perTurn.length, cumulative.length);
  const start = Math.max(0, n - Math.max(1, window));
  const turns: number[] = [];
  for (let t = start; t < n; t++) turns.push(t);

  const values = turns.flatMap((t) => [perTurn[t] ?? 0, cumulative[t] ?? 0]);
  const maxY = Math.max(1, ...values);

  const innerW = box.width - 2 * box.padX;
  const innerH = box.height - 2 * box.padY;
  const span = Math.max(1, turns.length - 1);

  const place = (index: number, value: number, turn: number): ChartPoint => ({
    x: box.padX + (turns.length === 1 ? innerW / 2 : (index / span) * innerW),
    y: box.padY + innerH - (value / maxY) * innerH,
    turn,
    value,
  });

  return {
    perTurn: turns.map((t, i) => place(i, perTurn[t] ?? 0, t)),
    cumulative: turns.map((t, i) => place(i, cumulative[t] ?? 0, t)),
    maxY,
    firstTurn: turns[0] ?? 0,
    lastTurn: turns[turns.length - 1] ?? 0,
  };
}

/** Format points as an SVG polyline `points` attribute. */
export function polylinePoints(points: ChartPoint[]): string {
  return points.map((p) => `${round2(p.x)},${round2(p.y)}`).join(" ");
}

/** Evenly spaced y-axis tick values from 0 to maxY inclusive. */
export function axisTicks(maxY: number, count: number): number[] {
  if (count < 2) return [0, maxY];
  const ticks: number[] = [];
  for (let i = 0; i < count; i++) ticks.push(Math.round((maxY * i) / (count - 1)));
  return ticks;
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}
