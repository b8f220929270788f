/** Unit coverage for the engine pieces the fixtures exercise indirectly. */

import { describe, expect, it } from "vitest";

import { b64uDecode, b64uEncode, canonicalJson, utf8Encode } from "../src/engine/bytes.js";
import { ed25519Verify, sha256, sha384 } from "../src/engine/crypto.js";
import { checkCspStrict, parseCsp } from "../src/engine/csp.js";
import { verifySubresourceIntegrity } from "../src/engine/decide.js";
import { checkDocumentCoverage } from "../src/engine/html.js";
import { PinStore } from "../src/engine/pins.js";
import { headerToPromises } from "../src/engine/promises.js";
import { REASONS } from "../src/engine/types.js";
import { assertSecureContext, normalizeAppUrl } from "../src/engine/urls.js";

function hex(data: Uint8Array): string {
  return [...data].map((b) => b.toString(16).padStart(2, "0")).join("");
}

describe("bytes", () => {
  it("base64url round trip and strictness", () => {
    const data = new Uint8Array([0, 1, 2, 250, 251, 252]);
    expect(b64uDecode(b64uEncode(data))).toEqual(data);
    expect(() => b64uDecode("a")).toThrow();
    expect(() => b64uDecode("++")).toThrow();
    expect(() => b64uDecode("AB==")).toThrow(); // padding never appears
  });

  it("canonical json sorts keys compactly", () => {
    const out = new TextDecoder().decode(canonicalJson({ b: 1, a: "x", c: [1, 2] }));
    expect(out).toBe('{"a":"x","b":1,"c":[1,2]}');
  });
});

describe("crypto", () => {
  it("sha256 of empty input matches the known value", async () => {
    expect(hex(await sha256(new Uint8Array(0)))).toBe(
      "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
    );
  });

  it("verifies the RFC 8032 test vector 1", async () => {
    const pk = Uint8Array.from(
      Buffer.from("d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a", "hex"),
    );
    const sig = Uint8Array.from(
      Buffer.from(
        "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155" +
          "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b",
        "hex",
      ),
    );
    expect(await ed25519Verify(pk, new Uint8Array(0), sig)).toBe(true);
    sig[3]! ^= 1;
    expect(await ed25519Verify(pk, new Uint8Array(0), sig)).toBe(false);
  });
});

describe("csp", () => {
  it("duplicate directives keep the first occurrence", () => {
    const policy = parseCsp("script-src 'self'; script-src 'unsafe-inline'");
    expect(policy.directives.get("script-src")).toEqual(["'self'"]);
    expect(policy.warnings.length).toBe(1);
  });

  it("base policy is strict", () => {
    const policy = parseCsp(
      "default-src 'self'; script-src 'self'; style-src 'self'; object-src 'none'; base-uri 'none'",
    );
    expect(checkCspStrict(policy)).toEqual([]);
  });

  it("flags each violation class", () => {
    expect(checkCspStrict(parseCsp("script-src 'self' 'unsafe-eval'; object-src 'none'"))).toEqual(
      [REASONS.CSP_UNSAFE_EVAL],
    );
    expect(checkCspStrict(parseCsp("img-src 'self'"))).toEqual([
      REASONS.CSP_NO_SCRIPT_POLICY,
      REASONS.CSP_OBJECT_SRC_NOT_NONE,
    ]);
  });
});

describe("html coverage", () => {
  it("flags inline scripts and missing integrity", () => {
    const doc = utf8Encode(
      "<html><body><script>x()</script><script src='a.js'></script></body></html>",
    );
    const result = checkDocumentCoverage(doc);
    expect(result.findings).toEqual([REASONS.DOC_INLINE_SCRIPT, REASONS.DOC_MISSING_SRI]);
  });

  it("collects resources once and reads meta tags", () => {
    const doc = utf8Encode(
      '<head><meta http-equiv="Content-Security-Policy" content="script-src \'self\'">' +
        '<link rel="stylesheet" href="s.css" integrity="sha384-xyz"></head>' +
        '<body><script src="a.js" integrity="sha384-abc"></script>' +
        '<script src="a.js" integrity="sha384-abc"></script></body>',
    );
    const result = checkDocumentCoverage(doc);
    expect(result.findings).toEqual([]);
    expect(result.resources).toEqual([
      ["s.css", "sha384-xyz"],
      ["a.js", "sha384-abc"],
    ]);
    expect(result.metaCsp).toBe("script-src 'self'");
  });

  it("treats invalid utf-8 as a parse failure", () => {
    const result = checkDocumentCoverage(new Uint8Array([0xff, 0xfe, 0x3c]));
    expect(result.findings).toEqual([REASONS.DOC_PARSE]);
  });

  it("ignores markup inside script bodies and comments", () => {
    const doc = utf8Encode(
      "<!-- <script>ghost()</script> --><script src='a.js' integrity='sha384-abc'>" +
        "var s = '<style>'" +
        "</script>",
    );
    const result = checkDocumentCoverage(doc);
    expect(result.findings).toEqual([]);
    expect(result.resources).toEqual([["a.js", "sha384-abc"]]);
  });
});

describe("sri", () => {
  it("accepts a matching token and rejects others", async () => {
    const content = utf8Encode("resource body");
    const digest = await sha384(content);
    const token = "sha384-" + Buffer.from(digest).toString("base64");
    expect(await verifySubresourceIntegrity(content, token)).toBe(true);
    expect(await verifySubresourceIntegrity(utf8Encode("other"), token)).toBe(false);
    await expect(verifySubresourceIntegrity(content, "md5-xyz")).rejects.toThrow();
  });
});

describe("urls", () => {
  it("normalizes like the reference", () => {
    expect(normalizeAppUrl("https://App.Example:443/x?q=1#f")).toBe("https://app.example/x");
    expect(normalizeAppUrl("http://127.0.0.1:8080/app")).toBe("http://127.0.0.1:8080/app");
    expect(normalizeAppUrl("https://app.example")).toBe("https://app.example/");
  });

  it("secure context rules", () => {
    expect(assertSecureContext("https://app.example/")).toBe(true);
    expect(assertSecureContext("http://app.example/")).toBe(false);
    expect(assertSecureContext("http://127.0.0.1:8080/")).toBe(true);
    expect(assertSecureContext("http://localhost/")).toBe(true);
  });
});

describe("header codec", () => {
  it("raises only when nothing decodes", () => {
    expect(() => headerToPromises("!!!")).toThrow();
  });
});

describe("pin store", () => {
  it("round trips and lazily purges", () => {
    const store = new PinStore();
    store.upsert("https://a.example/", ["id1"], 1000, 500);
    const reloaded = PinStore.fromJson(store.toJson(), 1000);
    expect(reloaded.get("https://a.example/", 1400)?.log_ids_seen).toEqual(["id1"]);
    expect(reloaded.get("https://a.example/", 1500)).toBeNull();
  });

  it("treats corrupt input as empty", () => {
    const store = PinStore.fromJson("{nonsense", 0);
    expect(store.corruptOnLoad).toBe(true);
    expect(store.list()).toEqual([]);
  });
});
