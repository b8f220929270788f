/**
 * Minimal HTML start-tag scanner and the document coverage check.
 *
 * Service workers have no DOMParser, so scanning is done with a small
 * tokenizer: start tags with attributes, comments, doctypes, and raw-text
 * script/style content are recognized; everything else is skipped. Tag and
 * attribute names are lowercased, attribute values entity-unescaped.
 */

import { REASONS, ReasonCode, DEVELOPER_KEY_META, dedup } from "./types.js";
import { utf8DecodeStrict } from "./bytes.js";

export interface StartTag {
  name: string;
  attrs: [string, string | null][];
  selfClosing: boolean;
}

const NAMED_REFS: Record<string, string> = {
  amp: "&",
  lt: "<",
  gt: ">",
  quot: '"',
  apos: "'",
};

function unescapeRefs(value: string): string {
  if (!value.includes("&")) return value;
  return value.replace(/&(#x?[0-9a-fA-F]+|[a-zA-Z]+);/g, (match, body: string) => {
    if (body.startsWith("#x") || body.startsWith("#X")) {
      return String.fromCodePoint(parseInt(body.slice(2), 16));
    }
    if (body.startsWith("#")) {
      return String.fromCodePoint(parseInt(body.slice(1), 10));
    }
    return NAMED_REFS[body.toLowerCase()] ?? match;
  });
}

const NAME_START = /[a-zA-Z]/;

export function scanStartTags(text: string): StartTag[] {
  const tags: StartTag[] = [];
  let pos = 0;
  while (pos < text.length) {
    const open = text.indexOf("<", pos);
    if (open < 0) break;
    const next = text[open + 1];
    if (next === "!") {
      if (text.startsWith("<!--", open)) {
        const close = text.indexOf("-->", open + 4);
        pos = close < 0 ? text.length : close + 3;
      } else {
        const close = text.indexOf(">", open);
        pos = close < 0 ? text.length : close + 1;
      }
      continue;
    }
    if (next === "/" || next === "?") {
      const close = text.indexOf(">", open);
      pos = close < 0 ? text.length : close + 1;
      continue;
    }
    if (next === undefined || !NAME_START.test(next)) {
      pos = open + 1;
      continue;
    }
    const parsed = parseStartTag(text, open);
    if (parsed === null) {
      pos = open + 1;
      continue;
    }
    tags.push(parsed.tag);
    pos = parsed.end;
    // raw-text elements: content is opaque until the matching end tag
    if (!parsed.tag.selfClosing && (parsed.tag.name === "script" || parsed.tag.name === "style")) {
      const closer = new RegExp(`</${parsed.tag.name}`, "i");
      const match = closer.exec(text.slice(pos));
      if (match === null) break;
      const endClose = text.indexOf(">", pos + match.index);
      pos = endClose < 0 ? text.length : endClose + 1;
    }
  }
  return tags;
}

function parseStartTag(text: string, open: number): { tag: StartTag; end: number } | null {
  let i = open + 1;
  const nameMatch = /^[a-zA-Z][^\s/>\x00]*/.exec(text.slice(i));
  if (nameMatch === null) return null;
  const name = nameMatch[0].toLowerCase();
  i += nameMatch[0].length;
  const attrs: [string, string | null][] = [];
  let selfClosing = false;
  while (i < text.length) {
    while (i < text.length && /\s/.test(text[i]!)) i++;
    if (i >= text.length) return null;
    if (text[i] === ">") {
      i++;
      break;
    }
    if (text[i] === "/") {
      if (text[i + 1] === ">") {
        selfClosing = true;
        i += 2;
        break;
      }
      i++;
      continue;
    }
    const attrMatch = /^[^\s=/>]+/.exec(text.slice(i));
    if (attrMatch === null) return null;
    const attrName = attrMatch[0].toLowerCase();
    i += attrMatch[0].length;
    while (i < text.length && /\s/.test(text[i]!)) i++;
    let value: string | null = null;
    if (text[i] === "=") {
      i++;
      while (i < text.length && /\s/.test(text[i]!)) i++;
      const quote = text[i];
      if (quote === '"' || quote === "'") {
        const close = text.indexOf(quote, i + 1);
        if (close < 0) return null;
        value = unescapeRefs(text.slice(i + 1, close));
        i = close + 1;
      } else {
        const valueMatch = /^[^\s>]*/.exec(text.slice(i));
        value = unescapeRefs(valueMatch ? valueMatch[0] : "");
        i += valueMatch ? valueMatch[0].length : 0;
      }
    }
    attrs.push([attrName, value]);
  }
  return { tag: { name, attrs, selfClosing }, end: i };
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

const URL_ATTRS = new Set(["href", "src", "action", "formaction", "data"]);

export interface CoverageResult {
  findings: ReasonCode[];
  resources: [string, string][]; // (reference, expected SRI)
  metaCsp: string | null;
  developerKeyMeta: string | null;
}

function firstAttr(tag: StartTag, name: string): string | null {
  for (const [key, value] of tag.attrs) {
    if (key === name) return value;
  }
  return null;
}

/** Findings plus the (reference, SRI) list; zero findings = full coverage. */
export function checkDocumentCoverage(document: Uint8Array): CoverageResult {
  let text: string;
  const empty: CoverageResult = {
    findings: [REASONS.DOC_PARSE],
    resources: [],
    metaCsp: null,
    developerKeyMeta: null,
  };
  try {
    text = utf8DecodeStrict(document);
  } catch {
    return empty;
  }
  let tags: StartTag[];
  try {
    tags = scanStartTags(text);
  } catch {
    return empty;
  }

  const findings: ReasonCode[] = [];
  const resources: [string, string][] = [];
  const seenRefs = new Set<string>();
  let metaCsp: string | null = null;
  let developerKeyMeta: string | null = null;

  const requireSri = (ref: string, tag: StartTag) => {
    const integrity = firstAttr(tag, "integrity");
    if (!integrity) {
      findings.push(REASONS.DOC_MISSING_SRI);
      return;
    }
    if (!seenRefs.has(ref)) {
      seenRefs.add(ref);
      resources.push([ref, integrity]);
    }
  };

  for (const tag of tags) {
    for (const [key, value] of tag.attrs) {
      if (key.startsWith("on")) findings.push(REASONS.DOC_EVENT_HANDLER);
      if (URL_ATTRS.has(key) && value && value.trim().toLowerCase().startsWith("javascript:")) {
        findings.push(REASONS.DOC_JAVASCRIPT_URL);
      }
    }
    if (tag.name === "script") {
      const src = firstAttr(tag, "src");
      if (src === null) findings.push(REASONS.DOC_INLINE_SCRIPT);
      else requireSri(src, tag);
    } else if (tag.name === "style") {
      findings.push(REASONS.DOC_INLINE_STYLE);
    } else if (tag.name === "link") {
      const rel = (firstAttr(tag, "rel") ?? "").toLowerCase().split(/\s+/);
      if (rel.includes("stylesheet")) {
        const href = firstAttr(tag, "href");
        if (href !== null) requireSri(href, tag);
      }
    } else if (tag.name === "meta") {
      // last occurrence wins, matching the reference scanner
      const httpEquiv = (firstAttr(tag, "http-equiv") ?? "").toLowerCase();
      if (httpEquiv === "content-security-policy") {
        metaCsp = firstAttr(tag, "content") ?? "";
      }
      if ((firstAttr(tag, "name") ?? "") === DEVELOPER_KEY_META) {
        developerKeyMeta = firstAttr(tag, "content") ?? "";
      }
    }
  }
  return { findings: dedup(findings), resources, metaCsp, developerKeyMeta };
}
