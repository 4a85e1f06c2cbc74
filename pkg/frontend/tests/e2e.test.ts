// End-to-end: the real UI modules driving the real annotation service
// over HTTP. The service is spawned from the Python package; the UI
// consumes nothing but its public API.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import net from "node:net";
import os from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { createApi } from "../src/api.js";
import { SessionFlow } from "../src/state.js";
import { App } from "../src/view.js";
import { EvalItem, Rate } from "../src/types.js";

let service: ChildProcess;
let baseUrl: string;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = net.createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

async function waitForService(url: string): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const response = await fetch(`${url}/rubric`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service at ${url} never became ready`);
}

function items(n: number, model: string, task = "formality"): EvalItem[] {
  return Array.from({ length: n }, (_, i) => ({
    item_id: `${model}-it${i}`,
    source: `source text ${i}`,
    rationale: `The text ${i} is informal.\n[Transferred]: kept line structure`,
    transferred: `Transferred text ${i}.`,
    task_label: task,
    model_label: model,
  }));
}

async function createSession(sessionItems: EvalItem[]): Promise<string> {
  const response = await fetch(`${baseUrl}/sessions`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ items: sessionItems, annotator_id: "e2e" }),
  });
  expect(response.ok).toBe(true);
  const body = (await response.json()) as { session_id: string };
  return body.session_id;
}

beforeAll(async () => {
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  const dataDir = mkdtempSync(path.join(os.tmpdir(), "annotation-e2e-"));
  service = spawn(
    "python3",
    ["-m", "styledistill.cli", "serve", "--port", String(port), "--host", "127.0.0.1", "--data-dir", dataDir],
    { stdio: "inherit" },
  );
  await waitForService(baseUrl);
});

afterAll(() => {
  service?.kill();
});

describe("annotation UI against the live service", () => {
  it("completes a 5-item session end to end through the DOM", async () => {
    const sessionId = await createSession(items(5, "ui-flow"));
    const api = createApi(baseUrl);
    const root = document.createElement("main");
    document.body.append(root);
    const app = new App(root, new SessionFlow(api, sessionId), api);
    await app.start();

    expect(root.querySelector('[data-testid="progress"]')?.textContent).toBe("0 / 5 rated");
    expect(root.querySelector(".rationale")?.textContent).toContain("[Transferred]:");
    expect(root.querySelector<HTMLButtonElement>('[data-rate="A"]')?.title).toContain("rationale");

    // first rating through a real button click
    root.querySelector<HTMLButtonElement>('[data-rate="A"]')!.click();
    await vi.waitFor(() => {
      expect(root.querySelector('[data-testid="progress"]')?.textContent).toBe("1 / 5 rated");
    });

    for (const rate of ["A", "B", "C", "D"] as Rate[]) {
      await app.submit(rate);
    }

    await vi.waitFor(() => {
      expect(root.querySelector('[data-testid="summary"]')).not.toBeNull();
    });

    // the rendered stacked bar matches the service's counts exactly
    const summary = await api.summary();
    const group = summary.groups.find((g) => g.model_label === "ui-flow")!;
    expect(group.counts).toEqual({ A: 2, B: 1, C: 1, D: 1 });

    const bar = [...root.querySelectorAll(".bar-row")].find((row) =>
      row.querySelector(".bar-label")?.textContent?.startsWith("ui-flow"),
    )!;
    const rendered: Record<string, number> = {};
    bar.querySelectorAll(".bar-segment").forEach((segment) => {
      rendered[segment.getAttribute("data-rate")!] = Number(segment.getAttribute("data-count"));
    });
    expect(rendered).toEqual({ A: 2, B: 1, C: 1, D: 1 });
    const segmentSum = [...bar.querySelectorAll(".bar-segment")]
      .map((segment) => Number(segment.getAttribute("data-count")))
      .reduce((a, b) => a + b, 0);
    expect(String(segmentSum)).toBe(bar.querySelector(".bar-total")?.textContent);
  });

  it("records exactly one rating on a double submit", async () => {
    const sessionId = await createSession(items(5, "ui-race"));
    const api = createApi(baseUrl);

    // same tab: the in-flight guard swallows the second click
    const flow = new SessionFlow(api, sessionId);
    await flow.load();
    await Promise.all([flow.rate("A"), flow.rate("B")]);
    let next = await api.next(sessionId);
    expect(next.rated).toBe(1);

    // two tabs racing on the same item: service accepts exactly one
    const tabA = new SessionFlow(api, sessionId);
    const tabB = new SessionFlow(api, sessionId);
    await tabA.load();
    await tabB.load();
    const [viewA, viewB] = await Promise.all([tabA.rate("C"), tabB.rate("D")]);
    next = await api.next(sessionId);
    expect(next.rated).toBe(2);
    // both tabs converged on server state rather than mutating locally
    for (const view of [viewA, viewB]) {
      expect(view.kind).toBe("rating");
      if (view.kind === "rating") expect(view.rated).toBe(2);
    }

    // CSV records terminate with \r\n; rated records end ",<rate>"
    const csv = await (await fetch(`${baseUrl}/sessions/${sessionId}/export.csv`)).text();
    const ratedRecords = csv.match(/,[ABCD]\r?\n/g) ?? [];
    expect(ratedRecords).toHaveLength(2);
  });

  it("shows the summary view directly for a completed session", async () => {
    const sessionId = await createSession(items(1, "ui-done"));
    const api = createApi(baseUrl);
    const flow = new SessionFlow(api, sessionId);
    await flow.load();
    await flow.rate("A");

    const root = document.createElement("main");
    document.body.append(root);
    const app = new App(root, new SessionFlow(api, sessionId), api);
    await app.start();
    expect(root.querySelector('[data-testid="summary"]')).not.toBeNull();
    expect(root.textContent).toContain("Session complete: 1 / 1 rated.");
  });

  it("surfaces UnknownSession from the service", async () => {
    const api = createApi(baseUrl);
    const flow = new SessionFlow(api, "does-not-exist");
    const view = await flow.load();
    expect(view).toMatchObject({ kind: "error", code: "UnknownSession" });
  });
});
