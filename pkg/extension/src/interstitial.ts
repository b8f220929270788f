/** Interstitial page: explains why a load was blocked. No override button
 * by default; protection is hard unless developer mode re-enables it. */

const REASON_TEXT: Record<string, string> = {
  DOWNGRADE: "This application was protected before, but the protection header is now missing.",
  PROMISE_DIGEST_MISMATCH: "The delivered application does not match any logged release.",
  PROMISE_EXPIRED: "The application's log promises have expired (possible stale release).",
  PROMISE_BAD_SIG: "A log promise carries an invalid signature.",
  PROMISE_UNTRUSTED_LOG: "A log promise comes from a log outside your trust store.",
  PROMISE_URL_MISMATCH: "A log promise was issued for a different application URL.",
  PROMISE_INSUFFICIENT: "Not enough valid log promises from distinct logs.",
  SRI_MISMATCH: "A script or stylesheet does not match its integrity checksum.",
  SRI_UNAVAILABLE: "A referenced script or stylesheet could not be fetched.",
  INTERNAL: "The integrity check itself failed; the load was blocked as a precaution.",
};

function render(): void {
  const params = new URLSearchParams(window.location.search);
  const blockedUrl = params.get("url") ?? "(unknown)";
  const reasons = (params.get("reasons") ?? "").split(",").filter((r) => r.length > 0);

  const urlElement = document.getElementById("blocked-url");
  if (urlElement) urlElement.textContent = blockedUrl;

  const list = document.getElementById("reasons");
  if (list) {
    for (const code of reasons) {
      const item = document.createElement("li");
      const codeElement = document.createElement("code");
      codeElement.textContent = code;
      item.append(codeElement);
      const explanation = REASON_TEXT[code];
      if (explanation) item.append(` ${explanation}`);
      list.append(item);
    }
  }

  document.getElementById("back")?.addEventListener("click", () => {
    window.history.go(-2);
  });
}

document.addEventListener("DOMContentLoaded", render);
