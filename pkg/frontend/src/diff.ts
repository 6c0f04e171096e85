/**
 * Client-side taxonomy diff between two immutable draft rounds: which
 * categories appeared or vanished, and per shared category which feature
 * words were added, removed, or reweighted.
 */

import type { Taxonomy, TaxonomyCategory } from "./types.js";

export type ChangeKind = "added" | "removed" | "reweighted";

export interface FeatureChange {
  token: string;
  kind: ChangeKind;
  before?: number;
  after?: number;
}

export interface CategoryDiff {
  name: string;
  kind: "added" | "removed" | "changed" | "unchanged";
  features: FeatureChange[];
}

export interface TaxonomyDiff {
  fromDraft: string;
  toDraft: string;
  categories: CategoryDiff[];
}

function featureChanges(before: TaxonomyCategory, after: TaxonomyCategory): FeatureChange[] {
  const changes: FeatureChange[] = [];
  for (const [token, weight] of Object.entries(after.features)) {
    if (!(token in before.features)) {
      changes.push({ token, kind: "added", after: weight });
    } else if (before.features[token] !== weight) {
      changes.push({ token, kind: "reweighted", before: before.features[token], after: weight });
    }
  }
  for (const [token, weight] of Object.entries(before.features)) {
    if (!(token in after.features)) {
      changes.push({ token, kind: "removed", before: weight });
    }
  }
  return changes.sort((a, b) => a.token.localeCompare(b.token));
}

export function diffTaxonomies(from: Taxonomy, to: Taxonomy): TaxonomyDiff {
  const byName = (cats: TaxonomyCategory[]) => new Map(cats.map((c) => [c.name, c]));
  const before = byName(from.categories);
  const after = byName(to.categories);
  const names = [...new Set([...before.keys(), ...after.keys()])].sort();

  const categories: CategoryDiff[] = names.map((name) => {
    const a = before.get(name);
    const b = after.get(name);
    if (a && !b) return { name, kind: "removed", features: [] };
    if (!a && b) {
      const features = Object.entries(b.features)
        .map(([token, weight]) => ({ token, kind: "added" as const, after: weight }))
        .sort((x, y) => x.token.localeCompare(y.token));
      return { name, kind: "added", features };
    }
    const features = featureChanges(a!, b!);
    return { name, kind: features.length ? "changed" : "unchanged", features };
  });

  return { fromDraft: from.draft_id, toDraft: to.draft_id, categories };
}
