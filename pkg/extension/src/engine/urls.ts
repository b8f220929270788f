/** URL identity rules: normalization, loopback detection, secure context. */

export class UrlError extends Error {}

export function isLoopbackHost(host: string): boolean {
  const bare = host.replace(/^\[|\]$/g, "").toLowerCase();
  if (bare === "localhost" || bare.endsWith(".localhost")) return true;
  if (bare === "::1") return true;
  const v4 = bare.match(/^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})$/);
  return v4 !== null && Number(v4[1]) === 127;
}

/**
 * Reduce a URL to the identity promises bind to: lowercased scheme+host,
 * default ports dropped, path defaulted to "/", query/fragment stripped.
 */
export function normalizeAppUrl(url: string): string {
  let parsed: URL;
  try {
    parsed = new URL(url);
  } catch {
    throw new UrlError(`unparseable URL: ${url}`);
  }
  if (parsed.protocol !== "http:" && parsed.protocol !== "https:") {
    // other schemes keep their own shape; never WAIT-protected anyway
    return url;
  }
  const port = parsed.port ? `:${parsed.port}` : "";
  const path = parsed.pathname || "/";
  return `${parsed.protocol}//${parsed.hostname.toLowerCase()}${port}${path}`;
}

/** Leaf/promise URL invariant: https anywhere, or http on loopback. */
export function isValidAppUrl(url: string): boolean {
  let parsed: URL;
  try {
    parsed = new URL(url);
  } catch {
    return false;
  }
  if (parsed.search || parsed.hash) return false;
  if (parsed.protocol === "https:") return true;
  return parsed.protocol === "http:" && isLoopbackHost(parsed.hostname);
}

export function assertSecureContext(url: string): boolean {
  let parsed: URL;
  try {
    parsed = new URL(url);
  } catch {
    throw new UrlError(`unparseable URL: ${url}`);
  }
  if (parsed.protocol === "https:") return true;
  if (parsed.protocol === "http:") return isLoopbackHost(parsed.hostname);
  return false;
}
