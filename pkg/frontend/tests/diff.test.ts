import { describe, expect, it } from "vitest";

import { diffTaxonomies } from "../src/diff.js";
import { renderDiff } from "../src/render.js";
import { taxonomyRound } from "./fixtures.js";

describe("taxonomy diff", () => {
  it("classifies added, removed and reweighted features", () => {
    const diff = diffTaxonomies(taxonomyRound(0), taxonomyRound(1));
    const owls = diff.categories.find((c) => c.name === "Night Owls")!;
    expect(owls.kind).toBe("changed");
    expect(owls.features).toEqual([
      { token: "gaming", kind: "reweighted", before: 1.0, after: 2.0 },
      { token: "night shift", kind: "added", after: 1.0 },
      { token: "streaming", kind: "removed", before: 1.0 },
    ]);
  });

  it("flags whole categories appearing or vanishing", () => {
    const forward = diffTaxonomies(taxonomyRound(0), taxonomyRound(1));
    expect(forward.categories.find((c) => c.name === "Early Birds")?.kind).toBe("added");
    const backward = diffTaxonomies(taxonomyRound(1), taxonomyRound(0));
    expect(backward.categories.find((c) => c.name === "Early Birds")?.kind).toBe("removed");
  });

  it("reports unchanged categories as unchanged", () => {
    const diff = diffTaxonomies(taxonomyRound(0), taxonomyRound(1));
    expect(diff.categories.find((c) => c.name === "Workaholic")?.kind).toBe("unchanged");
  });

  it("identical drafts produce no changes", () => {
    const diff = diffTaxonomies(taxonomyRound(0), taxonomyRound(0));
    expect(diff.categories.every((c) => c.kind === "unchanged")).toBe(true);
  });

  it("renders change markers for each kind", () => {
    const html = renderDiff(diffTaxonomies(taxonomyRound(0), taxonomyRound(1)));
    expect(html).toContain('class="added"');
    expect(html).toContain('class="removed"');
    expect(html).toContain('class="reweighted"');
    expect(html).toContain("draft1");
    expect(html).toContain("draft2");
  });
});
