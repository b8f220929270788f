/** Loading helpers for the shared golden decision fixtures. */

import { readdirSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { b64uDecode } from "../src/engine/bytes.js";
import { PinEntry, ValidationConfig } from "../src/engine/types.js";

export interface GoldenFixture {
  name: string;
  url: string;
  now: number;
  document: Uint8Array;
  headers: Record<string, string>;
  resources: Map<string, Uint8Array>;
  config: ValidationConfig;
  pins: PinEntry[];
  expected: { decision: string; reasons: string[] };
}

const FIXTURE_DIR = join(__dirname, "..", "fixtures");

export function loadFixtures(): GoldenFixture[] {
  const fixtures: GoldenFixture[] = [];
  for (const file of readdirSync(FIXTURE_DIR).sort()) {
    if (!file.endsWith(".json") || file === "index.json") continue;
    const raw = JSON.parse(readFileSync(join(FIXTURE_DIR, file), "utf-8"));
    fixtures.push({
      name: raw.name,
      url: raw.url,
      now: raw.now,
      document: b64uDecode(raw.document_b64),
      headers: raw.headers,
      resources: new Map(
        Object.entries(raw.resources as Record<string, string>).map(([ref, b64]) => [
          ref,
          b64uDecode(b64),
        ]),
      ),
      config: raw.config,
      pins: raw.pins,
      expected: raw.expected,
    });
  }
  return fixtures;
}
