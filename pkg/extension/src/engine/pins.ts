/**
 * HSTS-style pin store over a pluggable key-value backend.
 *
 * The serialized shape is the same canonical JSON the CLI verifier uses
 * for its pin store file, so stores can be exported/imported across the
 * two implementations unchanged.
 */

import { PinEntry } from "./types.js";

export interface StorageBackend {
  get(key: string): Promise<string | null>;
  set(key: string, value: string): Promise<void>;
}

const STORE_KEY = "wait-pin-store";

export class MemoryBackend implements StorageBackend {
  private data = new Map<string, string>();

  async get(key: string): Promise<string | null> {
    return this.data.get(key) ?? null;
  }

  async set(key: string, value: string): Promise<void> {
    this.data.set(key, value);
  }
}

export class PinStore {
  private entries = new Map<string, PinEntry>();
  corruptOnLoad = false;

  get(appUrl: string, now: number): PinEntry | null {
    const entry = this.entries.get(appUrl);
    if (entry === undefined) return null;
    if (entry.expires <= now) {
      this.entries.delete(appUrl); // lazy purge
      return null;
    }
    return entry;
  }

  upsert(appUrl: string, logIds: string[], now: number, pinMaxAge: number): PinEntry {
    const previous = this.entries.get(appUrl);
    const seen = new Set(previous?.log_ids_seen ?? []);
    for (const id of logIds) seen.add(id);
    const entry: PinEntry = {
      app_url: appUrl,
      first_seen: previous?.first_seen ?? now,
      last_success: now,
      expires: now + pinMaxAge,
      log_ids_seen: [...seen].sort(),
    };
    this.entries.set(appUrl, entry);
    return entry;
  }

  seed(entries: PinEntry[]): void {
    for (const entry of entries) this.entries.set(entry.app_url, entry);
  }

  list(): PinEntry[] {
    return [...this.entries.values()].sort((a, b) => a.app_url.localeCompare(b.app_url));
  }

  toJson(): string {
    return JSON.stringify({ entries: this.list(), version: 1 });
  }

  static fromJson(text: string, now: number): PinStore {
    const store = new PinStore();
    let parsed: unknown;
    try {
      parsed = JSON.parse(text);
    } catch {
      store.corruptOnLoad = true;
      return store;
    }
    const entries = (parsed as { entries?: unknown }).entries;
    if (!Array.isArray(entries)) {
      store.corruptOnLoad = true;
      return store;
    }
    for (const raw of entries) {
      const entry = raw as PinEntry;
      if (typeof entry.app_url === "string" && typeof entry.expires === "number") {
        if (entry.expires > now) store.entries.set(entry.app_url, entry);
      }
    }
    return store;
  }

  static async load(backend: StorageBackend, now: number): Promise<PinStore> {
    const text = await backend.get(STORE_KEY);
    if (text === null) return new PinStore();
    return PinStore.fromJson(text, now);
  }

  async save(backend: StorageBackend): Promise<void> {
    await backend.set(STORE_KEY, this.toJson());
  }
}
