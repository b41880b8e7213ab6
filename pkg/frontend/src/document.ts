/**
 * Wire types for the annotation document returned by the server.
 *
 * A document is a JSON object keyed by task name. Every key except `dcr`
 * holds one entry per sentence; `dcr` holds document-level coreference
 * clusters. `tok` is always present, the rest appear only when the request
 * asked for the task.
 */

/** Labeled token span within one sentence: [label, start, end, surface form]. */
export type LabeledSpan = [string, number, number, string];

/** One predicate-argument structure: the spans of a single frame. */
export type SrlFrame = LabeledSpan[];

/** Dependency arc for one token: [head index, relation]. Roots use head -1. */
export type DepArc = [number, string];

/**
 * Constituency tree node: [label, children]. Children are nested nodes,
 * except under preterminals where the single child is the token string.
 */
export type ConstituencyNode = [string, Array<ConstituencyNode | string>];

/** Graph triple: [source variable, relation, target variable or constant]. */
export type AmrTriple = [string, string, string];

/** Coreference mention: [sentence index, start, end, surface form]. */
export type CorefMention = [number, number, number, string];

/** Parsed annotation document, one field per task. */
export interface Document {
  tok: string[][];
  lem?: string[][];
  pos?: string[][];
  ner?: LabeledSpan[][];
  srl?: SrlFrame[][];
  dep?: DepArc[][];
  sdp?: DepArc[][][];
  con?: ConstituencyNode[];
  amr?: AmrTriple[][];
  dcr?: CorefMention[][];
}

/** Response of the health endpoint. */
export interface Health {
  status: string;
  models: string[];
  workers: number;
  queue_depth: number;
  inflight: number;
  batch_window_ms: number;
}
