/** View models and SVG rendering, kept as pure string-producing functions. */

import { Dim, GridDocument, HierarchyNode } from "./document.js";
import {
  MatrixKind,
  clusterLabel,
  intervalLabel,
  matrixOfKind,
} from "./matrices.js";
import { ExplorerState } from "./state.js";

export interface HeatmapView {
  rows: string[]; // interval labels
  cols: string[]; // event cluster labels
  values: number[][];
  colors: string[][];
  kind: MatrixKind;
}

/** Sequential scale for counts, diverging around zero for the MI kinds. */
export function cellColor(value: number, maxAbs: number, kind: MatrixKind): string {
  if (maxAbs <= 0) {
    return "rgb(255,255,255)";
  }
  const t = Math.max(-1, Math.min(1, value / maxAbs));
  if (kind === "freq") {
    const level = Math.round(255 - 205 * Math.max(0, t));
    return `rgb(${level},${level},255)`;
  }
  if (t >= 0) {
    const level = Math.round(255 - 205 * t);
    return `rgb(255,${level},${level})`; // positive: toward red
  }
  const level = Math.round(255 - 205 * -t);
  return `rgb(${level},${level},255)`; // negative: toward blue
}

export function heatmapView(state: ExplorerState): HeatmapView {
  const matrix = matrixOfKind(state.cut, state.selectedCluster, state.matrixKind);
  const maxAbs = Math.max(
    1e-300,
    ...matrix.map((row) => Math.max(...row.map((v) => Math.abs(v)))),
  );
  return {
    rows: state.cut.intervals.map((ivl) =>
      intervalLabel(ivl.tLow, ivl.tHigh, ivl.first),
    ),
    cols: state.cut.eventValues.map(clusterLabel),
    values: matrix,
    colors: matrix.map((row) =>
      row.map((v) => cellColor(v, maxAbs, state.matrixKind)),
    ),
    kind: state.matrixKind,
  };
}

export function heatmapSvg(view: HeatmapView, cellSize = 36): string {
  const left = 120;
  const top = 60;
  const width = left + view.cols.length * cellSize + 10;
  const height = top + view.rows.length * cellSize + 10;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">`,
  ];
  view.cols.forEach((label, e) => {
    const x = left + e * cellSize + cellSize / 2;
    parts.push(
      `<text x="${x}" y="${top - 8}" text-anchor="start" font-size="10" ` +
        `transform="rotate(-35 ${x} ${top - 8})">${escapeXml(label)}</text>`,
    );
  });
  view.rows.forEach((label, j) => {
    const y = top + j * cellSize + cellSize / 2 + 4;
    parts.push(
      `<text x="${left - 6}" y="${y}" text-anchor="end" font-size="10">` +
        `${escapeXml(label)}</text>`,
    );
  });
  view.values.forEach((row, j) => {
    row.forEach((value, e) => {
      const x = left + e * cellSize;
      const y = top + j * cellSize;
      parts.push(
        `<rect x="${x}" y="${y}" width="${cellSize - 1}" height="${cellSize - 1}" ` +
          `fill="${view.colors[j][e]}"><title>${formatCell(value, view.kind)}</title></rect>`,
      );
    });
  });
  parts.push("</svg>");
  return parts.join("");
}

export interface DendrogramView {
  dim: Dim;
  /** node id -> x (level position) and y (leaf order) in [0, 1] */
  positions: Map<number, { x: number; y: number; leaf: boolean }>;
  edges: [number, number][]; // parent, child
  cutLevel: number;
}

export function dendrogramView(state: ExplorerState, dim: Dim): DendrogramView {
  const nodes = state.doc.hierarchy[dim];
  const positions = new Map<number, { x: number; y: number; leaf: boolean }>();
  const leaves = nodes.filter((n) => n.children.length === 0);
  leaves.forEach((leaf, idx) => {
    positions.set(leaf.id, {
      x: 0,
      y: leaves.length > 1 ? idx / (leaves.length - 1) : 0.5,
      leaf: true,
    });
  });
  const edges: [number, number][] = [];
  for (const node of nodes) {
    if (node.children.length === 0) {
      continue;
    }
    const ys = node.children.map((c) => positions.get(c)!.y);
    positions.set(node.id, {
      x: node.level,
      y: ys.reduce((a, b) => a + b, 0) / ys.length,
      leaf: false,
    });
    for (const child of node.children) {
      edges.push([node.id, child]);
    }
  }
  return { dim, positions, edges, cutLevel: state.levels[dim] };
}

export function dendrogramSvg(view: DendrogramView, width = 360, height = 200): string {
  const pad = 12;
  const sx = (x: number) => pad + x * (width - 2 * pad);
  const sy = (y: number) => pad + y * (height - 2 * pad);
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">`,
  ];
  for (const [parent, child] of view.edges) {
    const p = view.positions.get(parent)!;
    const c = view.positions.get(child)!;
    parts.push(
      `<path d="M ${sx(c.x)} ${sy(c.y)} H ${sx(p.x)} V ${sy(p.y)}" ` +
        `fill="none" stroke="#555" stroke-width="1"/>`,
    );
  }
  for (const [, pos] of view.positions) {
    parts.push(
      `<circle cx="${sx(pos.x)}" cy="${sy(pos.y)}" r="${pos.leaf ? 3 : 2}" ` +
        `fill="${pos.leaf ? "#1f77b4" : "#555"}"/>`,
    );
  }
  const cutX = sx(view.cutLevel);
  parts.push(
    `<line x1="${cutX}" y1="${pad}" x2="${cutX}" y2="${height - pad}" ` +
      `stroke="#d62728" stroke-dasharray="4 3"/>`,
  );
  parts.push("</svg>");
  return parts.join("");
}

export interface TypicalityView {
  cluster: number;
  entries: [string, number][];
}

/** Top-listed values of the selected cluster (exporter already sorted them).
 * After merging, the panel pools the fitted clusters under the cut. */
export function typicalityView(state: ExplorerState, topK = 15): TypicalityView {
  const block = state.doc.typicality.S ?? {};
  const leafIds = leavesUnder(state, "S", state.selectedCluster);
  const pooled: [string, number][] = [];
  for (const leaf of leafIds) {
    for (const [label, tau] of block[String(leaf)] ?? []) {
      pooled.push([label, tau]);
    }
  }
  pooled.sort((p, q) => q[1] - p[1] || (p[0] < q[0] ? -1 : 1));
  return { cluster: state.selectedCluster, entries: pooled.slice(0, topK) };
}

function leavesUnder(state: ExplorerState, dim: Dim, position: number): number[] {
  const nodeId = state.cut.activeNodes[dim][position];
  const byId = new Map(state.doc.hierarchy[dim].map((n) => [n.id, n]));
  const out: number[] = [];
  const stack = [nodeId];
  while (stack.length) {
    const node = byId.get(stack.pop()!)!;
    if (node.children.length === 0) {
      out.push(node.id);
    } else {
      stack.push(...node.children);
    }
  }
  return out.sort((a, b) => a - b);
}

function formatCell(value: number, kind: MatrixKind): string {
  return kind === "freq" ? String(value) : value.toExponential(3);
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
