export { Client, HttpError, TransportError } from "./client.js";
export type { ClientOptions, ParseInput, ParseOptions } from "./client.js";
export type {
  AmrTriple,
  ConstituencyNode,
  CorefMention,
  DepArc,
  Document,
  Health,
  LabeledSpan,
  SrlFrame,
} from "./document.js";
