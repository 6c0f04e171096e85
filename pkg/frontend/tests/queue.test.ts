import { describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { QueueModel, validateDecision } from "../src/queue.js";
import { renderQueue } from "../src/render.js";
import { domainItem, fakeFetch, queueItems, RecordedRequest } from "./fixtures.js";

function makeQueue(routes: Parameters<typeof fakeFetch>[0], log: RecordedRequest[] = []) {
  const toasts: Array<{ message: string; kind: string }> = [];
  const api = new Api("", fakeFetch(routes, log));
  const queue = new QueueModel(api, "reviewer-7", {
    onToast: (message, kind) => toasts.push({ message, kind }),
  });
  return { queue, toasts, log };
}

describe("queue rendering", () => {
  it("renders one card per service fixture item", async () => {
    const items = queueItems();
    const { queue } = makeQueue({
      "GET /v1/review/queue": () => ({
        status: 200,
        body: { items, page: 1, limit: 100, total: items.length },
      }),
    });
    await queue.load("structural");
    expect(queue.items).toHaveLength(6);
    const html = renderQueue(queue.items);
    expect(html.match(/review-card/g)).toHaveLength(6);
    for (const item of items) {
      expect(html).toContain(item.item_id);
    }
  });

  it("shows an empty state when nothing is pending", () => {
    expect(renderQueue([])).toContain("No pending items");
  });

  it("cards carry draft context: category name and feature words", async () => {
    const items = queueItems().slice(0, 2);
    const { queue } = makeQueue({
      "GET /v1/review/queue": () => ({
        status: 200,
        body: { items, page: 1, limit: 100, total: items.length },
      }),
      "GET /v1/taxonomies/draft1": () => ({
        status: 200,
        body: {
          taxonomy: {
            draft_id: "draft1",
            round: 0,
            categories: [
              {
                id: "health_aficionado",
                name: "Health Aficionado",
                description: "",
                demographic_note: "",
                features: { meditation: 1.0, wellness: 1.0 },
              },
              {
                id: "night_owl",
                name: "Night Owls",
                description: "",
                demographic_note: "",
                features: { gaming: 1.0 },
              },
            ],
            rationale: "",
            provenance: "llm_generated",
            parent_draft_id: null,
          },
          validation: null,
        },
      }),
    });
    await queue.load("structural");
    const html = renderQueue(queue.items, (item) => queue.contextFor(item));
    expect(html).toContain("Health Aficionado");
    expect(html).toContain("meditation");
    expect(html).toContain("wellness");
    expect(html).toContain("gaming");
  });

  it("keeps the view usable and records the error when the service is down", async () => {
    const { queue } = makeQueue({
      "GET /v1/review/queue": () => {
        throw new Error("unreachable");
      },
    });
    await expect(queue.load("structural")).resolves.toBeUndefined();
    expect(queue.lastError).toBeTruthy();
  });
});

describe("decisions", () => {
  it("approve round-trips and the item leaves the queue", async () => {
    const items = queueItems();
    const log: RecordedRequest[] = [];
    const { queue, toasts } = makeQueue(
      {
        "GET /v1/review/queue": () => ({
          status: 200,
          body: { items, page: 1, limit: 100, total: items.length },
        }),
        "POST /v1/review/items/": (request) => ({
          status: 200,
          body: {
            item: { ...items[0], status: "approved" },
            record: { draft_id: "draft1", state: "structural_review", round: 0 },
          },
        }),
      },
      log,
    );
    await queue.load("structural");
    const target = queue.items[0].item_id;
    const ok = await queue.decide(target, { decision: "approved" });
    expect(ok).toBe(true);
    expect(queue.items.map((i) => i.item_id)).not.toContain(target);
    expect(toasts).toHaveLength(0);

    const post = log.find((r) => r.method === "POST")!;
    expect(post.url).toContain(encodeURIComponent(target));
    expect(post.body).toMatchObject({ decision: "approved", reviewer_id: "reviewer-7" });
  });

  it("revise without challenge at the domain stage sends no request", async () => {
    const item = domainItem();
    const log: RecordedRequest[] = [];
    const { queue, toasts } = makeQueue(
      {
        "GET /v1/review/queue": () => ({
          status: 200,
          body: { items: [item], page: 1, limit: 100, total: 1 },
        }),
      },
      log,
    );
    await queue.load("domain_expert");
    const ok = await queue.decide(item.item_id, {
      decision: "revised",
      comment: "needs rework",
    });
    expect(ok).toBe(false);
    expect(log.filter((r) => r.method === "POST")).toHaveLength(0);
    expect(queue.items).toHaveLength(1); // item stayed in the queue
    expect(toasts[0].message).toMatch(/challenge/i);
  });

  it("revise is refused at the structural stage", () => {
    const item = queueItems()[0];
    const reason = validateDecision(item, {
      decision: "revised",
      comment: "c",
      challenge: "x",
    });
    expect(reason).toMatch(/domain expert/i);
  });

  it("reject requires a comment", () => {
    const item = queueItems()[0];
    expect(validateDecision(item, { decision: "rejected" })).toMatch(/comment/i);
    expect(validateDecision(item, { decision: "rejected", comment: "why" })).toBeNull();
  });

  it("conflict rolls the item back and raises a conflict toast", async () => {
    const items = queueItems();
    const { queue, toasts } = makeQueue({
      "GET /v1/review/queue": () => ({
        status: 200,
        body: { items, page: 1, limit: 100, total: items.length },
      }),
      "POST /v1/review/items/": () => ({
        status: 409,
        body: { detail: "item already decided (approved)" },
      }),
    });
    await queue.load("structural");
    const target = queue.items[2];
    const ok = await queue.decide(target.item_id, { decision: "approved" });
    expect(ok).toBe(false);
    // optimistic removal rolled back to the original position
    expect(queue.items[2].item_id).toBe(target.item_id);
    expect(queue.items).toHaveLength(6);
    expect(toasts[0].kind).toBe("conflict");
    expect(toasts[0].message).toContain("already decided");
  });

  it("revise with a challenge posts the challenge through", async () => {
    const item = domainItem();
    const log: RecordedRequest[] = [];
    const { queue } = makeQueue(
      {
        "GET /v1/review/queue": () => ({
          status: 200,
          body: { items: [item], page: 1, limit: 100, total: 1 },
        }),
        "POST /v1/review/items/": () => ({
          status: 200,
          body: {
            item: { ...item, status: "revised" },
            record: { draft_id: "draft1", state: "revising", round: 0 },
          },
        }),
      },
      log,
    );
    await queue.load("domain_expert");
    const ok = await queue.decide(item.item_id, {
      decision: "revised",
      comment: "misses shift workers",
      challenge: "counter-example: shift workers",
    });
    expect(ok).toBe(true);
    const post = log.find((r) => r.method === "POST")!;
    expect(post.body).toMatchObject({
      decision: "revised",
      challenge: "counter-example: shift workers",
    });
  });
});
