/** Explorer state and its pure transitions. */

import { Dim, GridDocument, parseDocument } from "./document.js";
import { MatrixKind } from "./matrices.js";
import { Cut, replayCut } from "./replay.js";

export interface ExplorerState {
  doc: GridDocument;
  /** hierarchical level (1 - IR) cursor per dimension */
  levels: Record<Dim, number>;
  selectedCluster: number;
  matrixKind: MatrixKind;
  cut: Cut;
}

export function loadDocument(text: string): ExplorerState {
  const doc = parseDocument(text);
  const cut = cutAt(doc, { S: 0, T: 0, E: 0 });
  return {
    doc,
    levels: { S: 0, T: 0, E: 0 },
    selectedCluster: 0,
    matrixKind: "freq",
    cut,
  };
}

/** Cut at per-dimension cursors; a uniform cursor uses the global-stop
 * semantics of the CLI's --level so exports compare byte for byte. */
function cutAt(doc: GridDocument, levels: Record<Dim, number>): Cut {
  if (levels.S === levels.T && levels.T === levels.E) {
    return replayCut(doc, { level: levels.S });
  }
  return replayCut(doc, { levels });
}

export function setGranularity(state: ExplorerState, dim: Dim | "all", level: number): ExplorerState {
  if (level < 0 || level > 1) {
    throw new Error("level must be in [0, 1]");
  }
  const levels = { ...state.levels };
  if (dim === "all") {
    levels.S = levels.T = levels.E = level;
  } else {
    levels[dim] = level;
  }
  const cut = cutAt(state.doc, levels);
  const selectedCluster = Math.min(state.selectedCluster, cut.seqValues.length - 1);
  return { ...state, levels, cut, selectedCluster };
}

export function selectCluster(state: ExplorerState, cluster: number): ExplorerState {
  if (cluster < 0 || cluster >= state.cut.seqValues.length) {
    throw new Error(`no sequence cluster ${cluster} at this cut`);
  }
  return { ...state, selectedCluster: cluster };
}

export function setMatrixKind(state: ExplorerState, kind: MatrixKind): ExplorerState {
  return { ...state, matrixKind: kind };
}
