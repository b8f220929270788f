/** Options page: trust store + knobs, pin store import/export. */

import { ExtensionController } from "./controller.js";
import { StorageBackend } from "./engine/pins.js";
import { ValidationConfig } from "./engine/types.js";

declare const browser: any;

class ExtensionStorage implements StorageBackend {
  async get(key: string): Promise<string | null> {
    const result = await browser.storage.local.get(key);
    return typeof result[key] === "string" ? result[key] : null;
  }

  async set(key: string, value: string): Promise<void> {
    await browser.storage.local.set({ [key]: value });
  }
}

const controller = new ExtensionController(new ExtensionStorage(), {
  trust_store: [],
  required_promises: 1,
  clock_tolerance: 600,
  pin_max_age: 2_592_000,
});

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

async function load(): Promise<void> {
  const config = await controller.config();
  byId<HTMLTextAreaElement>("trust-store").value = JSON.stringify(config.trust_store, null, 2);
  byId<HTMLInputElement>("required-promises").value = String(config.required_promises);
  byId<HTMLInputElement>("clock-tolerance").value = String(config.clock_tolerance);
  byId<HTMLInputElement>("pin-max-age").value = String(config.pin_max_age);
  byId<HTMLTextAreaElement>("pins").value = await controller.exportPins();
}

async function save(): Promise<void> {
  const status = byId<HTMLElement>("status");
  try {
    const config: ValidationConfig = {
      trust_store: JSON.parse(byId<HTMLTextAreaElement>("trust-store").value),
      required_promises: Number(byId<HTMLInputElement>("required-promises").value),
      clock_tolerance: Number(byId<HTMLInputElement>("clock-tolerance").value),
      pin_max_age: Number(byId<HTMLInputElement>("pin-max-age").value),
    };
    if (config.required_promises < 1 || config.required_promises > config.trust_store.length) {
      throw new Error("required_promises must be between 1 and the trust store size");
    }
    await controller.saveConfig(config);
    status.textContent = "saved";
  } catch (error) {
    status.textContent = `invalid configuration: ${error}`;
  }
}

async function importPins(): Promise<void> {
  const status = byId<HTMLElement>("status");
  const ok = await controller.importPins(byId<HTMLTextAreaElement>("pins").value);
  status.textContent = ok ? "pin store imported" : "pin store rejected (corrupt)";
}

document.addEventListener("DOMContentLoaded", () => {
  void load();
  byId<HTMLButtonElement>("save").addEventListener("click", () => void save());
  byId<HTMLButtonElement>("import-pins").addEventListener("click", () => void importPins());
});
