/** Per-cluster matrices at a cut, plus the CSV rendering shared with the CLI.
 *
 * Frequency CSVs are byte-identical to `catsgrid report` output; the float
 * matrices match numerically (JS and Python both print shortest round-trip
 * decimals, which can differ in exponent spelling at extreme magnitudes).
 */

import { Cut } from "./replay.js";

export type MatrixKind = "freq" | "cmi" | "contrast";

export function frequencyMatrix(cut: Cut, seqCluster: number): number[][] {
  checkCluster(cut, seqCluster);
  return cut.cells[seqCluster].map((row) => [...row]);
}

/** Contribution of each (interval, event cluster) cell to the within-cluster
 * mutual information; probabilities are relative to the cluster's points. */
export function cmiMatrix(cut: Cut, seqCluster: number): number[][] {
  const counts = frequencyMatrix(cut, seqCluster);
  const total = sum2(counts);
  const p = counts.map((row) => row.map((c) => c / total));
  const pt = p.map((row) => row.reduce((x, y) => x + y, 0));
  const pe = p[0].map((_, e) => p.reduce((acc, row) => acc + row[e], 0));
  return p.map((row, j) =>
    row.map((pje, e) => (pje > 0 ? pje * Math.log(pje / (pt[j] * pe[e])) : 0)),
  );
}

/** Contribution of the cluster's cells to MI((time, events); clusters);
 * probabilities are relative to all points. */
export function contrastMatrix(cut: Cut, seqCluster: number): number[][] {
  checkCluster(cut, seqCluster);
  const total = cut.cells.reduce((acc, plane) => acc + sum2(plane), 0);
  const slice = cut.cells[seqCluster];
  const pS = sum2(slice) / total;
  return slice.map((row, j) =>
    row.map((c, e) => {
      if (c === 0) {
        return 0;
      }
      const p3 = c / total;
      const pTE = cut.cells.reduce((acc, plane) => acc + plane[j][e], 0) / total;
      return p3 * Math.log(p3 / (pTE * pS));
    }),
  );
}

export function matrixOfKind(cut: Cut, seqCluster: number, kind: MatrixKind): number[][] {
  switch (kind) {
    case "freq":
      return frequencyMatrix(cut, seqCluster);
    case "cmi":
      return cmiMatrix(cut, seqCluster);
    case "contrast":
      return contrastMatrix(cut, seqCluster);
  }
}

export function clusterLabel(values: string[]): string {
  return "{" + values.join("|") + "}";
}

export function intervalLabel(tLow: number, tHigh: number, first: boolean): string {
  return `${first ? "[" : "]"}${formatNumber(tLow)};${formatNumber(tHigh)}]`;
}

/** Shortest round-trip decimal; JSON floats like 50.0 arrive as 50 and
 * print bare, matching the CLI's integer-valued-float rule. */
export function formatNumber(x: number): string {
  return String(x);
}

export function matrixCsv(cut: Cut, seqCluster: number, kind: MatrixKind): string {
  const matrix = matrixOfKind(cut, seqCluster, kind);
  const header = [""].concat(cut.eventValues.map(clusterLabel));
  const lines = [header.join(",")];
  cut.intervals.forEach((ivl, j) => {
    const row = [intervalLabel(ivl.tLow, ivl.tHigh, ivl.first)];
    for (let e = 0; e < cut.eventValues.length; e++) {
      row.push(formatNumber(matrix[j][e]));
    }
    lines.push(row.join(","));
  });
  return lines.join("\n") + "\n";
}

function checkCluster(cut: Cut, seqCluster: number): void {
  if (seqCluster < 0 || seqCluster >= cut.seqValues.length) {
    const valid = cut.seqValues.map((_, i) => i).join(", ");
    throw new Error(`no sequence cluster ${seqCluster} at this cut; valid ids: ${valid}`);
  }
}

function sum2(rows: number[][]): number {
  return rows.reduce((acc, row) => acc + row.reduce((x, y) => x + y, 0), 0);
}
