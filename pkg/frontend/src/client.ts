/**
 * HTTP client for the annotation server.
 *
 * Mirrors the native pipeline semantics: send raw text or tokenized
 * sentences, get back the same document JSON the server would hand any
 * other consumer. Requests are retried only when the failure is plausibly
 * transient, i.e. a transport error or a 503 backpressure response; all
 * other statuses surface immediately with the server's diagnostic.
 */

import type { Document, Health } from "./document.js";

/** Raw text for server-side tokenization, or pre-tokenized sentences. */
export type ParseInput = string | string[][];

export interface ParseOptions {
  /** Task names to run; omitted means the server's full default pipeline. */
  models?: string[];
  /** Language code; omitted means the server default. */
  language?: string;
}

export interface ClientOptions {
  /** Retries after the first attempt, for 503 and transport errors only. */
  retries?: number;
  /** Base backoff delay in ms; doubles per retry with jitter. */
  backoffMs?: number;
  /** Per-attempt timeout in ms; a timed-out attempt counts as transport failure. */
  timeoutMs?: number;
}

/** The request never produced an HTTP response: refused, reset, or timed out. */
export class TransportError extends Error {
  constructor(message: string, cause?: unknown) {
    super(message, { cause });
    this.name = "TransportError";
  }
}

/** The server answered with a non-2xx status. */
export class HttpError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "HttpError";
    this.status = status;
    this.detail = detail;
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Random delay between half and full of the nominal value. */
function jittered(ms: number): number {
  return ms * (0.5 + Math.random() / 2);
}

async function errorDetail(response: Response): Promise<string> {
  // The server sends {"error": "..."}; tolerate anything else.
  const text = await response.text();
  try {
    const data = JSON.parse(text);
    if (data && typeof data.error === "string") return data.error;
  } catch {
    // fall through to the raw body
  }
  return text || response.statusText;
}

/**
 * Client for one server endpoint. Instances hold no per-call state, so a
 * single client may serve concurrent requests.
 */
export class Client {
  private readonly baseUrl: string;
  private readonly retries: number;
  private readonly backoffMs: number;
  private readonly timeoutMs: number;

  constructor(baseUrl: string, options: ClientOptions = {}) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.retries = options.retries ?? 3;
    this.backoffMs = options.backoffMs ?? 250;
    this.timeoutMs = options.timeoutMs ?? 30_000;
  }

  /** Parse input and return the decoded document. */
  async parse(input: ParseInput, options: ParseOptions = {}): Promise<Document> {
    return JSON.parse(await this.parseRaw(input, options)) as Document;
  }

  /**
   * Parse input and return the server's response body verbatim. The body is
   * the canonical document serialization, stable byte-for-byte for a given
   * input and model, so it is safe to diff or store directly.
   */
  async parseRaw(input: ParseInput, options: ParseOptions = {}): Promise<string> {
    const payload: Record<string, unknown> =
      typeof input === "string" ? { text: input } : { tokens: input };
    if (options.models !== undefined) payload.models = options.models;
    if (options.language !== undefined) payload.language = options.language;

    const response = await this.request("/parse", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    return response.text();
  }

  /** Fetch the server's health snapshot. */
  async health(): Promise<Health> {
    const response = await this.request("/healthz", { method: "GET" });
    return (await response.json()) as Health;
  }

  private async request(path: string, init: RequestInit): Promise<Response> {
    let delay = this.backoffMs;
    for (let attempt = 0; ; attempt++) {
      let response: Response;
      try {
        response = await this.attempt(path, init);
      } catch (error) {
        if (attempt >= this.retries) throw error;
        await sleep(jittered(delay));
        delay *= 2;
        continue;
      }
      if (response.ok) return response;
      const detail = await errorDetail(response);
      if (response.status === 503 && attempt < this.retries) {
        await sleep(jittered(delay));
        delay *= 2;
        continue;
      }
      throw new HttpError(response.status, detail);
    }
  }

  private async attempt(path: string, init: RequestInit): Promise<Response> {
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), this.timeoutMs);
    try {
      return await fetch(this.baseUrl + path, { ...init, signal: controller.signal });
    } catch (error) {
      throw new TransportError(`request to ${path} failed: ${describe(error)}`, error);
    } finally {
      clearTimeout(timer);
    }
  }
}
