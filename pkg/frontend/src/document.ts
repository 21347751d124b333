/** Grid document types and validation, mirroring the CLI's JSON export. */

export const SCHEMA_VERSION = 1;

export type Dim = "S" | "T" | "E";

export interface ValueCluster {
  id: number;
  values: string[];
}

export interface TimeInterval {
  id: number;
  rank_start: number;
  rank_end: number;
  t_low: number;
  t_high: number;
}

export interface HierarchyNode {
  id: number;
  children: number[];
  delta: number;
  cost: number;
  ir: number;
  level: number;
}

export interface MergeRecord {
  dim: Dim;
  a: number;
  b: number;
  new: number;
  delta: number;
  cost: number;
  ir: number;
  level: number;
}

export interface GridDocument {
  schema_version: number;
  dataset: {
    n: number;
    a: number;
    num_points: number;
    source_digest: string;
  };
  model: {
    seq_clusters: ValueCluster[];
    event_clusters: ValueCluster[];
    time_intervals: TimeInterval[];
  };
  cells: [number, number, number, number][];
  cost: Record<string, number>;
  cost_star: number;
  cost_null: number;
  hierarchy: Record<Dim, HierarchyNode[]>;
  merge_sequence: MergeRecord[];
  typicality: Record<"S" | "E", Record<string, [string, number][]>>;
}

export class DocumentError extends Error {}

/** Parse and validate a document; throws DocumentError on any mismatch. */
export function parseDocument(text: string): GridDocument {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new DocumentError(`not a grid document: ${(err as Error).message}`);
  }
  const doc = raw as GridDocument;
  if (doc.schema_version !== SCHEMA_VERSION) {
    throw new DocumentError(
      `unsupported document schema ${doc.schema_version}; expected ${SCHEMA_VERSION}`,
    );
  }
  for (const key of ["dataset", "model", "cells", "hierarchy", "merge_sequence"]) {
    if (!(key in (doc as unknown as Record<string, unknown>))) {
      throw new DocumentError(`document is missing its '${key}' section`);
    }
  }
  if (
    !Array.isArray(doc.model.seq_clusters) ||
    !Array.isArray(doc.model.event_clusters) ||
    !Array.isArray(doc.model.time_intervals)
  ) {
    throw new DocumentError("document model section is malformed");
  }
  return doc;
}
