import { describe, expect, it } from "vitest";

import { Api, ApiError } from "../src/api.js";
import { fakeFetch, fixtureReport, RecordedRequest } from "./fixtures.js";

describe("api client", () => {
  it("hits the documented /v1 paths", async () => {
    const log: RecordedRequest[] = [];
    const api = new Api(
      "",
      fakeFetch(
        {
          "GET /v1/health": () => ({ status: 200, body: { status: "ok", version: "x" } }),
          "GET /v1/review/queue": () => ({
            status: 200,
            body: { items: [], page: 2, limit: 10, total: 0 },
          }),
          "GET /v1/reports/run9": () => ({ status: 200, body: fixtureReport() }),
        },
        log,
      ),
    );
    await api.health();
    await api.reviewQueue("structural", 2, 10);
    await api.report("run9");
    expect(log.map((r) => r.url)).toEqual([
      "/v1/health",
      "/v1/review/queue?page=2&limit=10&stage=structural",
      "/v1/reports/run9",
    ]);
  });

  it("raises ApiError carrying the service detail", async () => {
    const api = new Api(
      "",
      fakeFetch({
        "GET /v1/reports/": () => ({ status: 404, body: { detail: "run nope has no report" } }),
      }),
    );
    await expect(api.report("nope")).rejects.toThrowError(ApiError);
    await expect(api.report("nope")).rejects.toMatchObject({
      status: 404,
      detail: "run nope has no report",
    });
  });

  it("marks 409 responses as conflicts", async () => {
    const api = new Api(
      "",
      fakeFetch({
        "POST /v1/review/items/": () => ({ status: 409, body: { detail: "already decided" } }),
      }),
    );
    try {
      await api.postDecision("x", { decision: "approved", reviewer_id: "r" });
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).isConflict).toBe(true);
    }
  });
});
