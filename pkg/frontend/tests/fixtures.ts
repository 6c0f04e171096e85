/**
 * Service-shaped fixtures (mirroring the /v1 wire format) plus a tiny
 * fake fetch for driving the API client in tests.
 */

import type { AgreementReport, ConfusionPayload, ReviewItem, Taxonomy } from "../src/types.js";

export function queueItems(): ReviewItem[] {
  const categories = ["health_aficionado", "night_owl", "interior_decorator", "childcare_worker", "workaholic"];
  const items: ReviewItem[] = categories.map((categoryId) => ({
    item_id: `draft1:r0:structural:${categoryId}`,
    draft_id: "draft1",
    stage: "structural",
    criterion: "feature words accurately describe the persona",
    round: 0,
    category_id: categoryId,
    status: "pending",
  }));
  items.push({
    item_id: "draft1:r0:structural:taxonomy",
    draft_id: "draft1",
    stage: "structural",
    criterion: "classification types are logically coherent and hierarchically well organized",
    round: 0,
    category_id: null,
    status: "pending",
  });
  return items;
}

export function domainItem(): ReviewItem {
  return {
    item_id: "draft1:r0:domain_expert:night_owl",
    draft_id: "draft1",
    stage: "domain_expert",
    criterion: "holds up against counter-examples and real-world scenario testing",
    round: 0,
    category_id: "night_owl",
    status: "pending",
  };
}

export function fixtureReport(): AgreementReport {
  return {
    labels: ["health_aficionado", "night_owl", "interior_decorator", "childcare_worker", "workaholic"],
    per_class: {
      health_aficionado: { precision: 0.81, recall: 0.82, f1: 0.81, accuracy: 0.92 },
      night_owl: { precision: 0.79, recall: 0.85, f1: 0.82, accuracy: 0.93 },
      interior_decorator: { precision: 0.83, recall: 0.79, f1: 0.81, accuracy: 0.93 },
      childcare_worker: { precision: 0.82, recall: 0.8, f1: 0.81, accuracy: 0.92 },
      workaholic: { precision: 0.79, recall: 0.79, f1: 0.79, accuracy: 0.92 },
    },
    overall_accuracy: 0.8088,
    kappa: 0.7609193095754601,
    pearson_r: 0.748,
    spearman_rho: 0.75,
    n: 1250,
    note: "ordinal codes follow the fixed label order",
  };
}

export function fixtureMatrix(): ConfusionPayload & { n: number } {
  const counts = [
    [203, 12, 12, 12, 12],
    [12, 202, 12, 12, 12],
    [12, 12, 202, 12, 12],
    [12, 12, 12, 202, 12],
    [12, 12, 12, 11, 202],
  ];
  return {
    labels: ["health_aficionado", "night_owl", "interior_decorator", "childcare_worker", "workaholic"],
    counts,
    n: 1250,
  };
}

export function taxonomyRound(round: number): Taxonomy {
  const base: Taxonomy = {
    draft_id: round === 0 ? "draft1" : "draft2",
    round,
    categories: [
      {
        id: "night_owl",
        name: "Night Owls",
        description: "late-night entertainment",
        demographic_note: "18-35",
        features: { "late night": 1.0, gaming: 1.0, streaming: 1.0 },
      },
      {
        id: "workaholic",
        name: "Workaholic",
        description: "works late",
        demographic_note: "25-40",
        features: { overtime: 1.0, deadline: 1.0 },
      },
    ],
    rationale: "fixture",
    provenance: "llm_generated",
    parent_draft_id: round === 0 ? null : "draft1",
  };
  if (round > 0) {
    base.categories = [
      {
        ...base.categories[0],
        features: { "late night": 1.0, gaming: 2.0, "night shift": 1.0 },
      },
      base.categories[1],
      {
        id: "early_bird",
        name: "Early Birds",
        description: "dawn routines",
        demographic_note: "30-45",
        features: { sunrise: 1.0 },
      },
    ];
  }
  return base;
}

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export type RouteTable = Record<string, (request: RecordedRequest) => { status: number; body: unknown }>;

/** Fake fetch: routes are matched by "METHOD path" prefix. */
export function fakeFetch(routes: RouteTable, log: RecordedRequest[] = []) {
  return async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const request: RecordedRequest = {
      url: path,
      method,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    log.push(request);
    for (const [key, handler] of Object.entries(routes)) {
      const [routeMethod, routePath] = key.split(" ", 2);
      if (method === routeMethod && path.startsWith(routePath)) {
        const { status, body } = handler(request);
        return new Response(JSON.stringify(body), {
          status,
          headers: { "content-type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: `no route for ${method} ${path}` }), {
      status: 404,
      headers: { "content-type": "application/json" },
    });
  };
}
