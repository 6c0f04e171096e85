/**
 * Review queue model: pending items for one stage, with optimistic
 * decision handling. An item leaves the list the moment the reviewer
 * decides; if the service rejects the decision the item is restored at
 * its original position and the conflict is surfaced as a toast.
 */

import { Api, ApiError } from "./api.js";
import type { DecisionKind, FeatureMap, ReviewItem, Stage, Taxonomy } from "./types.js";

/** Draft context shown on review cards: the category's feature words. */
export interface DraftContext {
  categoryFeatures: Map<string, FeatureMap>;
  categoryNames: Map<string, string>;
}

export function contextFromTaxonomy(taxonomy: Taxonomy): DraftContext {
  return {
    categoryFeatures: new Map(taxonomy.categories.map((c) => [c.id, c.features])),
    categoryNames: new Map(taxonomy.categories.map((c) => [c.id, c.name])),
  };
}

export interface DecisionInput {
  decision: DecisionKind;
  comment?: string;
  challenge?: string;
}

/**
 * Client-side validation mirror of the service rules; returns a
 * human-readable reason when the decision must not be submitted.
 */
export function validateDecision(item: ReviewItem, input: DecisionInput): string | null {
  if (input.decision === "rejected" && !(input.comment ?? "").trim()) {
    return "Rejecting requires a comment.";
  }
  if (input.decision === "revised") {
    if (item.stage !== "domain_expert") {
      return "Revise is only available to domain experts.";
    }
    if (!(input.comment ?? "").trim()) {
      return "Revising requires a comment.";
    }
    if (!(input.challenge ?? "").trim()) {
      return "Revising requires a challenge (counter-example or scenario).";
    }
  }
  if ((input.challenge ?? "").trim() && item.stage !== "domain_expert") {
    return "Challenges are only permitted at the domain-expert stage.";
  }
  return null;
}

export interface QueueEvents {
  onChange?: () => void;
  onToast?: (message: string, kind: "conflict" | "error" | "info") => void;
}

export class QueueModel {
  items: ReviewItem[] = [];
  stage: Stage = "structural";
  lastError: string | null = null;
  contexts: Map<string, DraftContext> = new Map();

  constructor(
    private readonly api: Api,
    public reviewerId: string,
    private readonly events: QueueEvents = {},
  ) {}

  async load(stage: Stage): Promise<void> {
    this.stage = stage;
    try {
      const page = await this.api.reviewQueue(stage);
      this.items = page.items;
      this.lastError = null;
      await this.loadContexts();
    } catch (error) {
      // non-blocking: keep whatever is on screen and expose a retry banner
      this.lastError = error instanceof Error ? error.message : String(error);
    }
    this.events.onChange?.();
  }

  /** Fetch each referenced draft once so cards can show its feature words. */
  private async loadContexts(): Promise<void> {
    const draftIds = [...new Set(this.items.map((i) => i.draft_id))];
    for (const draftId of draftIds) {
      if (this.contexts.has(draftId)) continue;
      try {
        const envelope = await this.api.taxonomy(draftId);
        this.contexts.set(draftId, contextFromTaxonomy(envelope.taxonomy));
      } catch {
        // cards render without context; the queue itself stays usable
      }
    }
  }

  contextFor(item: ReviewItem): DraftContext | undefined {
    return this.contexts.get(item.draft_id);
  }

  /**
   * Optimistically removes the item and posts the decision. Returns true
   * when the service accepted it. Validation failures never reach the
   * network; conflicts and transport errors roll the item back.
   */
  async decide(itemId: string, input: DecisionInput): Promise<boolean> {
    const index = this.items.findIndex((i) => i.item_id === itemId);
    if (index < 0) return false;
    const item = this.items[index];

    const reason = validateDecision(item, input);
    if (reason) {
      this.events.onToast?.(reason, "error");
      return false;
    }

    this.items = this.items.filter((i) => i.item_id !== itemId);
    this.events.onChange?.();
    try {
      await this.api.postDecision(itemId, {
        decision: input.decision,
        reviewer_id: this.reviewerId,
        comment: input.comment ?? "",
        challenge: input.challenge,
      });
      return true;
    } catch (error) {
      const restored = [...this.items];
      restored.splice(Math.min(index, restored.length), 0, item);
      this.items = restored;
      this.events.onChange?.();
      if (error instanceof ApiError && error.isConflict) {
        this.events.onToast?.(`Decision conflict: ${error.detail}`, "conflict");
      } else {
        const message = error instanceof Error ? error.message : String(error);
        this.events.onToast?.(message, "error");
      }
      return false;
    }
  }
}
