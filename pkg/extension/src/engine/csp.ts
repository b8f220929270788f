/** CSP tokenization and the strictness decision table. */

import { REASONS, ReasonCode, dedup } from "./types.js";

export interface CspPolicy {
  directives: Map<string, string[]>;
  warnings: string[];
}

const DIRECTIVE_NAME_RE = /^[A-Za-z0-9-]+$/;

/**
 * Split on ';', tokenize on whitespace, lowercase directive names, keep
 * source tokens verbatim. Duplicate directives keep the first occurrence;
 * malformed segments are dropped with a warning (diagnostic only).
 */
export function parseCsp(value: string | null | undefined): CspPolicy {
  const directives = new Map<string, string[]>();
  const warnings: string[] = [];
  if (!value) return { directives, warnings };
  for (const segment of value.split(";")) {
    const tokens = segment.split(/\s+/).filter((t) => t.length > 0);
    if (tokens.length === 0) continue;
    const name = tokens[0]!.toLowerCase();
    if (!DIRECTIVE_NAME_RE.test(name)) {
      warnings.push(`malformed directive name: ${tokens[0]}`);
      continue;
    }
    if (directives.has(name)) {
      warnings.push(`duplicate directive: ${name}`);
      continue;
    }
    directives.set(name, tokens.slice(1));
  }
  return { directives, warnings };
}

const FORBIDDEN_SCHEMES = ["data:", "blob:", "filesystem:"];

/** Reason codes violated by the policy; empty means strict. */
export function checkCspStrict(policy: CspPolicy): ReasonCode[] {
  const d = policy.directives;
  const reasons: ReasonCode[] = [];

  const script = d.get("script-src") ?? d.get("default-src");
  if (script === undefined) reasons.push(REASONS.CSP_NO_SCRIPT_POLICY);
  const style = d.get("style-src") ?? d.get("default-src");

  for (const sources of [script, style]) {
    if (sources === undefined) continue;
    for (const token of sources) {
      const t = token.toLowerCase();
      if (t === "'unsafe-inline'") reasons.push(REASONS.CSP_UNSAFE_INLINE);
      else if (t === "'unsafe-eval'") reasons.push(REASONS.CSP_UNSAFE_EVAL);
      else if (t === "'unsafe-hashes'") reasons.push(REASONS.CSP_UNSAFE_HASHES);
      else if (t === "'strict-dynamic'") reasons.push(REASONS.CSP_STRICT_DYNAMIC);
      else if (t.startsWith("'nonce-")) reasons.push(REASONS.CSP_NONCE_SOURCE);
      else if (t === "*") reasons.push(REASONS.CSP_WILDCARD);
      else if (FORBIDDEN_SCHEMES.some((s) => t.startsWith(s)))
        reasons.push(REASONS.CSP_FORBIDDEN_SCHEME);
      else if (t === "http:" || t.startsWith("http://")) reasons.push(REASONS.CSP_HTTP_SOURCE);
    }
  }

  const obj = d.get("object-src") ?? d.get("default-src");
  if (obj === undefined || obj.length !== 1 || obj[0]!.toLowerCase() !== "'none'") {
    reasons.push(REASONS.CSP_OBJECT_SRC_NOT_NONE);
  }
  return dedup(reasons);
}
