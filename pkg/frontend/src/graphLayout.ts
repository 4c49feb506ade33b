/**
 * Layered layout for thought graphs.  Nodes are placed on rows by their
 * depth from the roots (longest path), rows are ordered left-to-right by
 * node id, and each node carries the color for its kind.  Pure geometry —
 * rendering happens elsewhere.
 */

import { GraphInfo } from "./types.js";

export const KIND_COLORS: Record<string, string> = {
  Initial: "#4c8edb",
  Intermediate: "#8a8f98",
  Output: "#3da05f",
  CompositionMarker: "#c78a2d",
  SplitMarker: "#b05ccc",
};

export const FALLBACK_COLOR = "#d0d0d0";

export interface LaidOutNode {
  id: number;
  x: number;
  y: number;
  kind: string;
  color: string;
  label: string;
  producer: string;
  turn: number;
  content: string;
}

export interface LaidOutEdge {
  from: number;
  to: number;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface GraphLayout {
  nodes: LaidOutNode[];
  edges: LaidOutEdge[];
  width: number;
  height: number;
  rows: number;
}

const MAX_LABEL = 36;

export function layoutGraph(graph: GraphInfo, width = 420, rowHeight = 56): GraphLayout {
  const depth = new Map<number, number>();
  for (const node of graph.nodes) depth.set(node.id, 0);

  // Longest-path depth.  Node ids are creation-ordered, so a pass over edges
  // sorted by target id settles every node; the loop bound guards against a
  // malformed cyclic payload.
  const edges = [...graph.edges].sort((a, b) => a.to - b.to || a.from - b.from);
  for (let pass = 0; pass < graph.nodes.length + 1; pass++) {
    let changed = false;
    for (const e of edges) {
      const dFrom = depth.get(e.from);
      const dTo = depth.get(e.to);
      if (dFrom === undefined || dTo === undefined) continue;
      if (dFrom + 1 > dTo) {
        depth.set(e.to, dFrom + 1);
        changed = true;
      }
    }
    if (!changed) break;
  }

  const rows = new Map<number, number[]>();
  for (const node of graph.nodes) {
    const d = depth.get(node.id) ?? 0;
    const row = rows.get(d) ?? [];
    row.push(node.id);
    rows.set(d, row);
  }
  for (const row of rows.values()) row.sort((a, b) => a - b);

  const rowCount = rows.size;
  const positions = new Map<number, { x: number; y: number }>();
  for (const [d, ids] of rows.entries()) {
    ids.forEach((id, i) => {
      positions.set(id, {
        x: ((i + 1) / (ids.length + 1)) * width,
        y: d * rowHeight + rowHeight / 2,
      });
    });
  }

  const nodes: LaidOutNode[] = graph.nodes.map((node) => {
    const pos = positions.get(node.id) ?? { x: width / 2, y: rowHeight / 2 };
    const label =
      node.content.length > MAX_LABEL ? `${node.content.slice(0, MAX_LABEL - 1)}…` : node.content;
    return {
      id: node.id,
      x: pos.x,
      y: pos.y,
      kind: node.kind,
      color: KIND_COLORS[node.kind] ?? FALLBACK_COLOR,
      label,
      producer: node.producer,
      turn: node.turn,
      content: node.content,
    };
  });

  const laidEdges: LaidOutEdge[] = graph.edges.flatMap((e) => {
    const from = positions.get(e.from);
    const to = positions.get(e.to);
    if (from === undefined || to === undefined) return [];
    return [{ from: e.from, to: e.to, x1: from.x, y1: from.y, x2: to.x, y2: to.y }];
  });

  return {
    nodes,
    edges: laidEdges,
    width,
    height: Math.max(rowHeight, rowCount * rowHeight),
    rows: rowCount,
  };
}
