import { describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { SessionFlow } from "../src/state.js";
import { EvalItem, NetworkError, Rate, Rubric, ServiceError } from "../src/types.js";

const RUBRIC: Rubric = {
  version: "rubric-v1",
  levels: (["A", "B", "C", "D"] as const).map((label) => ({ label, criteria: `criteria ${label}` })),
};

function item(i: number): EvalItem {
  return {
    item_id: `it${i}`,
    source: `src ${i}`,
    rationale: `why ${i}`,
    transferred: `out ${i}`,
    task_label: "formality",
    model_label: "student-tb",
  };
}

/** In-memory service double with the same rejection semantics. */
function fakeApi(items: EvalItem[], opts: { rateDelayMs?: number } = {}) {
  const ratings = new Map<string, Rate>();
  let rateCalls = 0;
  const api: Api = {
    session: async () => ({
      session_id: "s1",
      annotator_id: "a1",
      rubric_version: RUBRIC.version,
      complete: ratings.size === items.length,
      rated: ratings.size,
      total: items.length,
    }),
    next: async () => {
      const pending = items.find((it) => !ratings.has(it.item_id)) ?? null;
      return { done: pending === null, item: pending, rated: ratings.size, total: items.length };
    },
    rate: async (_sid, itemId, rate) => {
      rateCalls += 1;
      if (opts.rateDelayMs) {
        await new Promise((resolve) => setTimeout(resolve, opts.rateDelayMs));
      }
      if (ratings.has(itemId)) {
        throw new ServiceError("AlreadyRated", 409, `item ${itemId} already rated`);
      }
      ratings.set(itemId, rate);
      return { ok: true, rated: ratings.size, total: items.length };
    },
    summary: async () => {
      const counts = { A: 0, B: 0, C: 0, D: 0 };
      for (const rate of ratings.values()) counts[rate] += 1;
      const total = ratings.size;
      return { counts, total, acceptable_rate: total ? (counts.A + counts.B) / total : 0, groups: [] };
    },
    rubric: async () => RUBRIC,
  };
  return { api, ratings, rateCallCount: () => rateCalls };
}

describe("SessionFlow", () => {
  it("walks items in order and ends on the done view", async () => {
    const { api } = fakeApi([item(0), item(1)]);
    const flow = new SessionFlow(api, "s1");
    let view = await flow.load();
    expect(view).toMatchObject({ kind: "rating", rated: 0, total: 2 });
    view = await flow.rate("A");
    expect(view).toMatchObject({ kind: "rating", rated: 1 });
    if (view.kind !== "rating") throw new Error("expected rating view");
    expect(view.item.item_id).toBe("it1");
    view = await flow.rate("B");
    expect(view).toMatchObject({ kind: "done", rated: 2, total: 2 });
  });

  it("fetches the rubric once for tooltips", async () => {
    const { api } = fakeApi([item(0)]);
    const flow = new SessionFlow(api, "s1");
    await flow.load();
    expect(flow.rubric?.levels).toHaveLength(4);
  });

  it("ignores a second submit while one is in flight", async () => {
    const fake = fakeApi([item(0), item(1)], { rateDelayMs: 10 });
    const flow = new SessionFlow(fake.api, "s1");
    await flow.load();
    await Promise.all([flow.rate("A"), flow.rate("B"), flow.rate("C")]);
    expect(fake.rateCallCount()).toBe(1);
    expect(fake.ratings.get("it0")).toBe("A");
    expect(fake.ratings.size).toBe(1);
  });

  it("refetches state on AlreadyRated instead of mutating locally", async () => {
    const fake = fakeApi([item(0), item(1)]);
    const flow = new SessionFlow(fake.api, "s1");
    await flow.load();
    // another tab rated it0 in the meantime
    await fake.api.rate("s1", "it0", "D");
    const view = await flow.rate("A");
    expect(fake.ratings.get("it0")).toBe("D");
    expect(view).toMatchObject({ kind: "rating" });
    if (view.kind !== "rating") throw new Error("expected rating view");
    expect(view.item.item_id).toBe("it1");
  });

  it("shows a retryable error view on network failure without local mutation", async () => {
    const items = [item(0)];
    const { api } = fakeApi(items);
    let offline = true;
    const flaky: Api = {
      ...api,
      rate: async (sid, itemId, rate) => {
        if (offline) throw new NetworkError("connection refused");
        return api.rate(sid, itemId, rate);
      },
    };
    const flow = new SessionFlow(flaky, "s1");
    await flow.load();
    let view = await flow.rate("A");
    expect(view).toMatchObject({ kind: "error", code: "network" });

    offline = false;
    view = await flow.load();
    expect(view).toMatchObject({ kind: "rating", rated: 0 });
    view = await flow.rate("A");
    expect(view).toMatchObject({ kind: "done", rated: 1 });
  });

  it("surfaces unknown-session errors verbatim", async () => {
    const { api } = fakeApi([item(0)]);
    const broken: Api = {
      ...api,
      rubric: async () => {
        throw new ServiceError("UnknownSession", 404, "no session 'nope'");
      },
    };
    const flow = new SessionFlow(broken, "nope");
    const view = await flow.load();
    expect(view).toMatchObject({ kind: "error", code: "UnknownSession" });
    if (view.kind !== "error") throw new Error("expected error view");
    expect(view.message).toContain("no session 'nope'");
  });
});
