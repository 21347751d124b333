/** Client-side merge replay: derive any coarser cut from the document alone.
 *
 * The bookkeeping mirrors the exporter exactly: leaves are the fitted parts
 * in order, a merge folds part b into part a (a keeps the lower position)
 * and concatenates their value lists, so labels and cell sums match the CLI
 * byte for byte.
 */

import { Dim, GridDocument } from "./document.js";

export interface IntervalBounds {
  tLow: number;
  tHigh: number;
  first: boolean;
}

export interface Cut {
  seqValues: string[][];
  eventValues: string[][];
  intervals: IntervalBounds[];
  /** dense counts, indexed [seq][time][event] */
  cells: number[][][];
  /** node id of each active part, per dimension (dendrogram cut line) */
  activeNodes: Record<Dim, number[]>;
}

function denseCells(doc: GridDocument): number[][][] {
  const kS = doc.model.seq_clusters.length;
  const kT = doc.model.time_intervals.length;
  const kE = doc.model.event_clusters.length;
  const cells: number[][][] = [];
  for (let i = 0; i < kS; i++) {
    cells.push([]);
    for (let j = 0; j < kT; j++) {
      cells[i].push(new Array<number>(kE).fill(0));
    }
  }
  for (const [i, j, e, c] of doc.cells) {
    cells[i][j][e] = c;
  }
  return cells;
}

export interface CutTarget {
  /** one hierarchical level across all dimensions; stops the whole replay at
   * the first deeper record, matching the CLI's --level semantics */
  level?: number;
  /** per-dimension lower bounds on part counts */
  clusterCounts?: Partial<Record<Dim, number>>;
  /** independent per-dimension cursors; each dimension stops at the first of
   * its own records beyond its cursor */
  levels?: Record<Dim, number>;
}

/** Replay recorded merges until the target binds; dataset-free. */
export function replayCut(doc: GridDocument, target: CutTarget): Cut {
  const { level, clusterCounts, levels } = target;
  const given = [level, clusterCounts, levels].filter((x) => x !== undefined).length;
  if (given !== 1) {
    throw new Error("give exactly one of level, clusterCounts or levels");
  }
  if (level !== undefined && (level < 0 || level > 1)) {
    throw new Error("level must be in [0, 1]");
  }

  const seqValues = doc.model.seq_clusters.map((c) => [...c.values]);
  const eventValues = doc.model.event_clusters.map((c) => [...c.values]);
  const intervals: IntervalBounds[] = doc.model.time_intervals.map((ivl, idx) => ({
    tLow: ivl.t_low,
    tHigh: ivl.t_high,
    first: idx === 0,
  }));
  let cells = denseCells(doc);
  const active: Record<Dim, number[]> = {
    S: seqValues.map((_, i) => i),
    T: intervals.map((_, i) => i),
    E: eventValues.map((_, i) => i),
  };
  if (clusterCounts) {
    for (const [dim, want] of Object.entries(clusterCounts) as [Dim, number][]) {
      if (want < 1 || active[dim].length < want) {
        throw new Error(`target ${dim}=${want} unachievable at this granularity`);
      }
    }
  }

  const stopped: Record<Dim, boolean> = { S: false, T: false, E: false };
  for (const rec of doc.merge_sequence) {
    if (level !== undefined && rec.level > level) {
      break;
    }
    if (clusterCounts) {
      const want = clusterCounts[rec.dim];
      if (want !== undefined && active[rec.dim].length - 1 < want) {
        break;
      }
    }
    if (levels) {
      if (rec.level > levels[rec.dim]) {
        stopped[rec.dim] = true;
      }
      if (stopped[rec.dim]) {
        continue;
      }
    }
    const parts = active[rec.dim];
    let a = parts.indexOf(rec.a);
    let b = parts.indexOf(rec.b);
    if (a > b) {
      [a, b] = [b, a];
    }
    if (rec.dim === "S") {
      seqValues[a] = seqValues[a].concat(seqValues[b]);
      seqValues.splice(b, 1);
      for (let j = 0; j < cells[a].length; j++) {
        for (let e = 0; e < cells[a][j].length; e++) {
          cells[a][j][e] += cells[b][j][e];
        }
      }
      cells.splice(b, 1);
    } else if (rec.dim === "E") {
      eventValues[a] = eventValues[a].concat(eventValues[b]);
      eventValues.splice(b, 1);
      for (const plane of cells) {
        for (const row of plane) {
          row[a] += row[b];
          row.splice(b, 1);
        }
      }
    } else {
      intervals[a] = {
        tLow: intervals[a].tLow,
        tHigh: intervals[b].tHigh,
        first: intervals[a].first,
      };
      intervals.splice(b, 1);
      for (const plane of cells) {
        for (let e = 0; e < plane[a].length; e++) {
          plane[a][e] += plane[b][e];
        }
        plane.splice(b, 1);
      }
    }
    parts[a] = rec.new;
    parts.splice(b, 1);
  }

  return { seqValues, eventValues, intervals, cells, activeNodes: active };
}
