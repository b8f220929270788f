/** Inclusion-promise parsing (header codec) and trust-store verification. */

import { b64uDecode, canonicalJson, utf8DecodeStrict, EncodingError } from "./bytes.js";
import { ed25519Verify } from "./crypto.js";
import {
  PromiseRecord,
  PROMISE_VERSION,
  REASONS,
  ReasonCode,
  ValidationConfig,
  dedup,
} from "./types.js";
import { isValidAppUrl, normalizeAppUrl } from "./urls.js";

export class HeaderSyntaxError extends Error {}

const DIGEST_RE = /^sha256:[0-9a-f]{64}$/;

function validatePromise(obj: unknown): PromiseRecord {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new EncodingError("promise must be an object");
  }
  const record = obj as Record<string, unknown>;
  const str = (field: string): string => {
    const value = record[field];
    if (typeof value !== "string") throw new EncodingError(`${field} must be a string`);
    return value;
  };
  const int = (field: string): number => {
    const value = record[field];
    if (typeof value !== "number" || !Number.isInteger(value) || value < 0) {
      throw new EncodingError(`${field} must be a non-negative integer`);
    }
    return value;
  };
  const bytesField = (field: string, length: number): string => {
    const value = str(field);
    if (b64uDecode(value).length !== length) {
      throw new EncodingError(`${field} must be ${length} bytes`);
    }
    return value;
  };
  const promise: PromiseRecord = {
    app_url: str("app_url"),
    developer_key: bytesField("developer_key", 32),
    digest: str("digest"),
    expires_at: int("expires_at"),
    issued_at: int("issued_at"),
    leaf_hash: bytesField("leaf_hash", 32),
    log_id: bytesField("log_id", 32),
    log_signature: bytesField("log_signature", 64),
    version: record["version"] === PROMISE_VERSION ? PROMISE_VERSION : -1,
  };
  if (promise.version !== PROMISE_VERSION) throw new EncodingError("unsupported version");
  if (!DIGEST_RE.test(promise.digest)) throw new EncodingError("bad digest text");
  if (!(promise.issued_at < promise.expires_at)) {
    throw new EncodingError("promise must have issued_at < expires_at");
  }
  if (!isValidAppUrl(promise.app_url)) throw new EncodingError("bad app_url");
  return promise;
}

/**
 * Parse a header value; entries with a foreign version are skipped, and
 * HeaderSyntaxError is raised only when no entry decodes at all.
 */
export function headerToPromises(value: string): PromiseRecord[] {
  const tokens = value
    .split(",")
    .map((t) => t.trim())
    .filter((t) => t.length > 0);
  const promises: PromiseRecord[] = [];
  let decodedAny = false;
  for (const token of tokens) {
    let obj: unknown;
    try {
      obj = JSON.parse(utf8DecodeStrict(b64uDecode(token)));
    } catch {
      continue;
    }
    if (typeof obj !== "object" || obj === null) continue;
    if ((obj as Record<string, unknown>)["version"] !== PROMISE_VERSION) {
      decodedAny = true; // recognizably a promise, just a foreign version
      continue;
    }
    try {
      promises.push(validatePromise(obj));
    } catch {
      continue;
    }
    decodedAny = true;
  }
  if (!decodedAny) throw new HeaderSyntaxError("no inclusion promise decodes");
  return promises;
}

function promiseSigningBytes(promise: PromiseRecord): Uint8Array {
  return canonicalJson({
    app_url: promise.app_url,
    developer_key: promise.developer_key,
    digest: promise.digest,
    expires_at: promise.expires_at,
    issued_at: promise.issued_at,
    leaf_hash: promise.leaf_hash,
    log_id: promise.log_id,
    version: promise.version,
  });
}

export interface PromiseCheck {
  accepted: PromiseRecord[];
  reasons: ReasonCode[];
}

/**
 * Accepted promises plus a reason per rejected one; the set is sufficient
 * when accepted promises span at least required_promises distinct logs.
 */
export async function verifyPromises(
  promises: PromiseRecord[],
  digestText: string,
  appUrl: string,
  config: ValidationConfig,
  now: number,
): Promise<PromiseCheck> {
  const trusted = new Map(config.trust_store.map((log) => [log.log_id, log]));
  const accepted: PromiseRecord[] = [];
  const reasons: ReasonCode[] = [];
  const normalizedUrl = normalizeAppUrl(appUrl);
  for (const promise of promises) {
    const log = trusted.get(promise.log_id);
    if (log === undefined) {
      reasons.push(REASONS.PROMISE_UNTRUSTED_LOG);
      continue;
    }
    const verified = await ed25519Verify(
      b64uDecode(log.public),
      promiseSigningBytes(promise),
      b64uDecode(promise.log_signature),
    );
    if (!verified) {
      reasons.push(REASONS.PROMISE_BAD_SIG);
      continue;
    }
    if (promise.digest !== digestText) {
      reasons.push(REASONS.PROMISE_DIGEST_MISMATCH);
      continue;
    }
    if (normalizeAppUrl(promise.app_url) !== normalizedUrl) {
      reasons.push(REASONS.PROMISE_URL_MISMATCH);
      continue;
    }
    const tolerance = config.clock_tolerance;
    if (!(promise.issued_at - tolerance <= now && now <= promise.expires_at + tolerance)) {
      reasons.push(REASONS.PROMISE_EXPIRED);
      continue;
    }
    accepted.push(promise);
  }
  const distinct = new Set(accepted.map((p) => p.log_id));
  if (distinct.size < config.required_promises) {
    reasons.push(REASONS.PROMISE_INSUFFICIENT);
  }
  return { accepted, reasons: dedup(reasons) };
}
