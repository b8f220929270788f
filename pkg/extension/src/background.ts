/**
 * Background script: intercepts top-level document loads, buffers the
 * main document via the stream filter, runs the decision pipeline, and
 * swaps in the interstitial on BLOCK.
 *
 * Only main_frame requests are intercepted; subresources and fetch/XHR
 * responses always pass through untouched. Blocking interception of
 * response bodies requires `webRequest.filterResponseData`, which is
 * available in Firefox; see the README for the residual gaps on engines
 * without it (validation falls back to observe-and-reload-blocked).
 */

import { ExtensionController } from "./controller.js";
import { Fetcher, ValidationConfig } from "./engine/types.js";
import { StorageBackend } from "./engine/pins.js";

declare const browser: any;

/** Trusted logs shipped with the extension; editable on the options page. */
const PACKAGED_CONFIG: ValidationConfig = {
  trust_store: [],
  required_promises: 1,
  clock_tolerance: 600,
  pin_max_age: 2_592_000,
};

class ExtensionStorage implements StorageBackend {
  async get(key: string): Promise<string | null> {
    const result = await browser.storage.local.get(key);
    return typeof result[key] === "string" ? result[key] : null;
  }

  async set(key: string, value: string): Promise<void> {
    try {
      await browser.storage.local.set({ [key]: value });
    } catch (error) {
      // storage quota problems must be visible, never silent pin loss
      browser.action?.setBadgeText?.({ text: "!" });
      throw error;
    }
  }
}

const controller = new ExtensionController(new ExtensionStorage(), PACKAGED_CONFIG);

function concat(chunks: Uint8Array[]): Uint8Array {
  const total = chunks.reduce((n, c) => n + c.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const chunk of chunks) {
    out.set(chunk, offset);
    offset += chunk.length;
  }
  return out;
}

function makeFetcher(baseUrl: string): Fetcher {
  return async (ref: string) => {
    try {
      const response = await fetch(new URL(ref, baseUrl).toString(), {
        credentials: "omit",
        cache: "no-cache",
      });
      if (!response.ok) return null;
      return new Uint8Array(await response.arrayBuffer());
    } catch {
      return null;
    }
  };
}

function interstitialUrl(blockedUrl: string, reasons: string[]): string {
  const params = new URLSearchParams({ url: blockedUrl, reasons: reasons.join(",") });
  return browser.runtime.getURL(`interstitial.html?${params.toString()}`);
}

function onHeadersReceived(details: any): object | undefined {
  if (details.type !== "main_frame") return undefined;

  const headers: Record<string, string> = {};
  for (const header of details.responseHeaders ?? []) {
    headers[header.name] = header.value ?? "";
  }

  const filter = browser.webRequest.filterResponseData(details.requestId);
  const chunks: Uint8Array[] = [];

  filter.ondata = (event: any) => {
    chunks.push(new Uint8Array(event.data));
  };
  filter.onstop = async () => {
    const document = concat(chunks);
    const outcome = await controller.handleMainDocument({
      url: details.url,
      document,
      headers,
      fetchResource: makeFetcher(details.url),
    });
    if (outcome.action === "pass") {
      // byte-identical pass-through
      filter.write(document);
      filter.close();
      return;
    }
    filter.close();
    browser.tabs.update(details.tabId, {
      url: interstitialUrl(details.url, outcome.reasons),
    });
  };
  filter.onerror = () => {
    filter.close();
  };
  return undefined;
}

export function register(): void {
  browser.webRequest.onHeadersReceived.addListener(
    onHeadersReceived,
    { urls: ["http://*/*", "https://*/*"], types: ["main_frame"] },
    ["blocking", "responseHeaders"],
  );
}

if (typeof browser !== "undefined" && browser?.webRequest) {
  register();
}
