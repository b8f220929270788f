/**
 * The fail-closed decision pipeline, stage for stage the same contract as
 * the reference verifier: secure context -> promise header vs. pin ->
 * strict CSP (header policy, and the digest-covered meta copy must agree
 * with the header actually sent) -> document coverage -> subresource
 * integrity -> promise quorum. ALLOW refreshes the pin store.
 */

import { b64Decode, bytesEqual, EncodingError } from "./bytes.js";
import { sha256, sha384 } from "./crypto.js";
import { checkCspStrict, parseCsp } from "./csp.js";
import { checkDocumentCoverage } from "./html.js";
import { PinStore } from "./pins.js";
import { headerToPromises, HeaderSyntaxError, verifyPromises } from "./promises.js";
import {
  ALLOW,
  BLOCK,
  CSP_HEADER,
  Fetcher,
  PROMISE_HEADER,
  REASONS,
  ReasonCode,
  ValidationConfig,
  Verdict,
  dedup,
} from "./types.js";
import { assertSecureContext, normalizeAppUrl, UrlError } from "./urls.js";

const SRI_RE = /^sha384-([A-Za-z0-9+/]+={0,2})$/;

export async function verifySubresourceIntegrity(
  content: Uint8Array,
  expectedSri: string,
): Promise<boolean> {
  const match = SRI_RE.exec(expectedSri.trim());
  if (match === null) throw new EncodingError(`unsupported SRI token: ${expectedSri}`);
  const expected = b64Decode(match[1]!);
  if (expected.length !== 48) throw new EncodingError("SRI sha384 digest must be 48 bytes");
  return bytesEqual(await sha384(content), expected);
}

function allow(now: number): Verdict {
  return { decision: ALLOW, reasons: [], checkedAt: now };
}

function block(now: number, reasons: ReasonCode[]): Verdict {
  return { decision: BLOCK, reasons: dedup(reasons), checkedAt: now };
}

function headerLookup(headers: Record<string, string>, name: string): string | undefined {
  const wanted = name.toLowerCase();
  for (const [key, value] of Object.entries(headers)) {
    if (key.toLowerCase() === wanted) return value;
  }
  return undefined;
}

export async function decide(
  document: Uint8Array,
  headers: Record<string, string>,
  url: string,
  pinStore: PinStore | null,
  config: ValidationConfig,
  now: number,
  fetcher: Fetcher,
): Promise<Verdict> {
  // Stage 1: secure context.
  let appUrl: string;
  try {
    if (!assertSecureContext(url)) return block(now, [REASONS.NOT_SECURE_CONTEXT]);
    appUrl = normalizeAppUrl(url);
  } catch (error) {
    if (error instanceof UrlError) return block(now, [REASONS.NOT_SECURE_CONTEXT]);
    throw error;
  }

  // Stage 2: header presence vs. pin state.
  const headerValue = headerLookup(headers, PROMISE_HEADER);
  if (headerValue === undefined) {
    if (pinStore !== null && pinStore.get(appUrl, now) !== null) {
      return block(now, [REASONS.DOWNGRADE]);
    }
    return allow(now); // not WAIT-protected; pass through untouched
  }

  let promises;
  try {
    promises = headerToPromises(headerValue);
  } catch (error) {
    if (error instanceof HeaderSyntaxError) return block(now, [REASONS.HEADER_SYNTAX]);
    throw error;
  }

  const coverage = checkDocumentCoverage(document);

  // Stage 3: CSP strictness plus header/meta agreement.
  const cspValue = headerLookup(headers, CSP_HEADER);
  const cspReasons: ReasonCode[] = checkCspStrict(parseCsp(cspValue));
  if (!coverage.findings.includes(REASONS.DOC_PARSE) && coverage.metaCsp !== null) {
    if (cspValue === undefined) cspReasons.push(REASONS.CSP_NOT_HEADER);
    else if (cspValue !== coverage.metaCsp) cspReasons.push(REASONS.CSP_META_MISMATCH);
  }
  if (cspReasons.length > 0) return block(now, cspReasons);

  // Stage 4: document coverage.
  if (coverage.findings.length > 0) return block(now, coverage.findings);

  // Stage 5: subresource integrity.
  const sriReasons: ReasonCode[] = [];
  for (const [ref, expectedSri] of coverage.resources) {
    const content = await fetcher(ref);
    if (content === null) {
      sriReasons.push(REASONS.SRI_UNAVAILABLE);
      continue;
    }
    try {
      if (!(await verifySubresourceIntegrity(content, expectedSri))) {
        sriReasons.push(REASONS.SRI_MISMATCH);
      }
    } catch {
      sriReasons.push(REASONS.SRI_MISMATCH);
    }
  }
  if (sriReasons.length > 0) return block(now, sriReasons);

  // Stage 6: inclusion promises.
  const digestBytes = await sha256(document);
  const digestText = "sha256:" + [...digestBytes].map((b) => b.toString(16).padStart(2, "0")).join("");
  const { accepted, reasons } = await verifyPromises(promises, digestText, appUrl, config, now);
  const distinct = new Set(accepted.map((p) => p.log_id));
  if (distinct.size < config.required_promises) return block(now, reasons);

  if (pinStore !== null) {
    pinStore.upsert(appUrl, [...distinct], now, config.pin_max_age);
  }
  return allow(now);
}
