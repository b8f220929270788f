/**
 * Byte-level helpers: unpadded base64url, standard base64, UTF-8, and the
 * canonical JSON form every signed record uses (lexicographically sorted
 * keys, compact separators, UTF-8 bytes). The canonical encoder must stay
 * byte-compatible with the log and CLI implementations, since signatures
 * are verified over re-encoded records.
 */

const B64U_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
const B64U_RE = /^[A-Za-z0-9_-]*$/;

export class EncodingError extends Error {}

export function b64uEncode(data: Uint8Array): string {
  let out = "";
  for (let i = 0; i < data.length; i += 3) {
    const a = data[i]!;
    const b = i + 1 < data.length ? data[i + 1]! : 0;
    const c = i + 2 < data.length ? data[i + 2]! : 0;
    out += B64U_ALPHABET[a >> 2]!;
    out += B64U_ALPHABET[((a & 0x03) << 4) | (b >> 4)]!;
    if (i + 1 < data.length) out += B64U_ALPHABET[((b & 0x0f) << 2) | (c >> 6)]!;
    if (i + 2 < data.length) out += B64U_ALPHABET[c & 0x3f]!;
  }
  return out;
}

export function b64uDecode(text: string): Uint8Array {
  if (!B64U_RE.test(text)) throw new EncodingError("invalid base64url characters");
  if (text.length % 4 === 1) throw new EncodingError("invalid base64url length");
  const values = new Array<number>(text.length);
  for (let i = 0; i < text.length; i++) {
    const v = B64U_ALPHABET.indexOf(text[i]!);
    if (v < 0) throw new EncodingError("invalid base64url character");
    values[i] = v;
  }
  const out = new Uint8Array(Math.floor((text.length * 3) / 4));
  let o = 0;
  for (let i = 0; i + 1 < values.length; i += 4) {
    const [a, b, c, d] = [values[i]!, values[i + 1]!, values[i + 2] ?? 0, values[i + 3] ?? 0];
    out[o++] = (a << 2) | (b >> 4);
    if (i + 2 < values.length) out[o++] = ((b & 0x0f) << 4) | (c >> 2);
    if (i + 3 < values.length) out[o++] = ((c & 0x03) << 6) | d;
  }
  if (b64uEncode(out) !== text) throw new EncodingError("non-canonical base64url encoding");
  return out;
}

export function b64Decode(text: string): Uint8Array {
  // standard base64 with optional padding, as used by SRI tokens
  if (!/^[A-Za-z0-9+/]*={0,2}$/.test(text)) throw new EncodingError("invalid base64");
  const stripped = text.replace(/=+$/, "");
  const translated = stripped.replace(/\+/g, "-").replace(/\//g, "_");
  return b64uDecode(translated);
}

export function utf8Encode(text: string): Uint8Array {
  return new TextEncoder().encode(text);
}

export function utf8DecodeStrict(data: Uint8Array): string {
  return new TextDecoder("utf-8", { fatal: true }).decode(data);
}

export function bytesEqual(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  let diff = 0;
  for (let i = 0; i < a.length; i++) diff |= a[i]! ^ b[i]!;
  return diff === 0;
}

type JsonValue = string | number | boolean | null | JsonValue[] | { [key: string]: JsonValue };

/** Canonical JSON bytes: sorted keys, no insignificant whitespace. */
export function canonicalJson(value: JsonValue): Uint8Array {
  return utf8Encode(canonicalJsonText(value));
}

function canonicalJsonText(value: JsonValue): string {
  if (value === null || typeof value === "boolean") return JSON.stringify(value);
  if (typeof value === "number") {
    if (!Number.isInteger(value)) throw new EncodingError("only integers are encodable");
    return String(value);
  }
  if (typeof value === "string") return JSON.stringify(value);
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJsonText).join(",") + "]";
  }
  const keys = Object.keys(value).sort();
  const parts = keys.map((k) => JSON.stringify(k) + ":" + canonicalJsonText(value[k]!));
  return "{" + parts.join(",") + "}";
}
