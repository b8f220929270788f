/** Shared domain types and the verdict reason-code vocabulary. */

export const PROMISE_HEADER = "X-WAIT-Inclusion-Promise";
export const CSP_HEADER = "Content-Security-Policy";
export const DEVELOPER_KEY_META = "wait-developer-key";
export const PROMISE_VERSION = 1;

export const ALLOW = "ALLOW";
export const BLOCK = "BLOCK";

// Reason codes, grouped by pipeline stage. These must match the reference
// verifier's vocabulary exactly; the golden-fixture suite pins the parity.
export const REASONS = {
  NOT_SECURE_CONTEXT: "NOT_SECURE_CONTEXT",
  DOWNGRADE: "DOWNGRADE",
  HEADER_SYNTAX: "HEADER_SYNTAX",
  CSP_NOT_HEADER: "CSP_NOT_HEADER",
  CSP_META_MISMATCH: "CSP_META_MISMATCH",
  CSP_NO_SCRIPT_POLICY: "CSP_NO_SCRIPT_POLICY",
  CSP_UNSAFE_INLINE: "CSP_UNSAFE_INLINE",
  CSP_UNSAFE_EVAL: "CSP_UNSAFE_EVAL",
  CSP_UNSAFE_HASHES: "CSP_UNSAFE_HASHES",
  CSP_STRICT_DYNAMIC: "CSP_STRICT_DYNAMIC",
  CSP_NONCE_SOURCE: "CSP_NONCE_SOURCE",
  CSP_WILDCARD: "CSP_WILDCARD",
  CSP_FORBIDDEN_SCHEME: "CSP_FORBIDDEN_SCHEME",
  CSP_HTTP_SOURCE: "CSP_HTTP_SOURCE",
  CSP_OBJECT_SRC_NOT_NONE: "CSP_OBJECT_SRC_NOT_NONE",
  DOC_PARSE: "DOC_PARSE",
  DOC_INLINE_SCRIPT: "DOC_INLINE_SCRIPT",
  DOC_INLINE_STYLE: "DOC_INLINE_STYLE",
  DOC_EVENT_HANDLER: "DOC_EVENT_HANDLER",
  DOC_JAVASCRIPT_URL: "DOC_JAVASCRIPT_URL",
  DOC_MISSING_SRI: "DOC_MISSING_SRI",
  SRI_MISMATCH: "SRI_MISMATCH",
  SRI_UNAVAILABLE: "SRI_UNAVAILABLE",
  PROMISE_UNTRUSTED_LOG: "PROMISE_UNTRUSTED_LOG",
  PROMISE_BAD_SIG: "PROMISE_BAD_SIG",
  PROMISE_DIGEST_MISMATCH: "PROMISE_DIGEST_MISMATCH",
  PROMISE_URL_MISMATCH: "PROMISE_URL_MISMATCH",
  PROMISE_EXPIRED: "PROMISE_EXPIRED",
  PROMISE_INSUFFICIENT: "PROMISE_INSUFFICIENT",
  INTERNAL: "INTERNAL",
} as const;

export type ReasonCode = (typeof REASONS)[keyof typeof REASONS];

export interface Verdict {
  decision: typeof ALLOW | typeof BLOCK;
  reasons: ReasonCode[];
  checkedAt: number;
}

/** Wire form of an inclusion promise (all byte fields as base64url). */
export interface PromiseRecord {
  app_url: string;
  developer_key: string;
  digest: string;
  expires_at: number;
  issued_at: number;
  leaf_hash: string;
  log_id: string;
  log_signature: string;
  version: number;
}

export interface LogIdentity {
  base_url: string;
  log_id: string; // base64url of sha256(public)
  public: string; // base64url, 32 bytes
}

export interface ValidationConfig {
  trust_store: LogIdentity[];
  required_promises: number;
  clock_tolerance: number;
  pin_max_age: number;
}

export const DEFAULT_CONFIG: Omit<ValidationConfig, "trust_store"> = {
  required_promises: 1,
  clock_tolerance: 600,
  pin_max_age: 2_592_000,
};

export interface PinEntry {
  app_url: string;
  first_seen: number;
  last_success: number;
  expires: number;
  log_ids_seen: string[]; // sorted base64url ids
}

export type Fetcher = (ref: string) => Promise<Uint8Array | null> | Uint8Array | null;

export function dedup<T>(items: T[]): T[] {
  const seen = new Set<T>();
  const out: T[] = [];
  for (const item of items) {
    if (!seen.has(item)) {
      seen.add(item);
      out.push(item);
    }
  }
  return out;
}
