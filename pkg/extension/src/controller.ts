/**
 * Per-navigation decision controller: everything the background script
 * does, minus the browser APIs, so the full flow is testable in any
 * runtime. The background script owns interception and rendering; this
 * class owns buffering, deciding, pin persistence, and fail-closed
 * error handling.
 */

import { decide } from "./engine/decide.js";
import { PinStore, StorageBackend } from "./engine/pins.js";
import {
  ALLOW,
  Fetcher,
  REASONS,
  ValidationConfig,
  Verdict,
} from "./engine/types.js";

export interface NavigationInput {
  url: string;
  document: Uint8Array;
  headers: Record<string, string>;
  fetchResource: Fetcher;
}

export type NavigationOutcome =
  | { action: "pass" }
  | { action: "interstitial"; reasons: string[] };

const CONFIG_KEY = "wait-config";

export class ExtensionController {
  private pinStore: PinStore | null = null;

  constructor(
    private storage: StorageBackend,
    private defaultConfig: ValidationConfig,
    private clock: () => number = () => Math.floor(Date.now() / 1000),
  ) {}

  async config(): Promise<ValidationConfig> {
    const stored = await this.storage.get(CONFIG_KEY);
    if (stored === null) return this.defaultConfig;
    try {
      return { ...this.defaultConfig, ...(JSON.parse(stored) as Partial<ValidationConfig>) };
    } catch {
      return this.defaultConfig;
    }
  }

  async saveConfig(config: ValidationConfig): Promise<void> {
    await this.storage.set(CONFIG_KEY, JSON.stringify(config));
  }

  private async pins(): Promise<PinStore> {
    if (this.pinStore === null) {
      this.pinStore = await PinStore.load(this.storage, this.clock());
    }
    return this.pinStore;
  }

  /** Decide one top-level document load; engine errors fail closed. */
  async handleMainDocument(input: NavigationInput): Promise<NavigationOutcome> {
    let verdict: Verdict;
    try {
      const pins = await this.pins();
      verdict = await decide(
        input.document,
        input.headers,
        input.url,
        pins,
        await this.config(),
        this.clock(),
        input.fetchResource,
      );
      await pins.save(this.storage);
    } catch {
      return { action: "interstitial", reasons: [REASONS.INTERNAL] };
    }
    if (verdict.decision === ALLOW) return { action: "pass" };
    return { action: "interstitial", reasons: [...verdict.reasons] };
  }

  async exportPins(): Promise<string> {
    return (await this.pins()).toJson();
  }

  async importPins(text: string): Promise<boolean> {
    const store = PinStore.fromJson(text, this.clock());
    if (store.corruptOnLoad) return false;
    this.pinStore = store;
    await store.save(this.storage);
    return true;
  }
}
