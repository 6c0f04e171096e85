/**
 * Confusion-matrix heatmap view model. Cells carry the raw counts from
 * the service plus a display intensity; the only arithmetic here is the
 * conservation total used to cross-check against the report's n.
 */

import type { ConfusionPayload } from "./types.js";

export interface HeatmapCell {
  row: number;
  col: number;
  rowLabel: string;
  colLabel: string;
  value: number;
  /** 0..1 share of the largest cell, for background shading only. */
  intensity: number;
  diagonal: boolean;
}

export interface HeatmapModel {
  labels: string[];
  cells: HeatmapCell[];
  total: number;
  maxValue: number;
}

export function buildHeatmap(matrix: ConfusionPayload): HeatmapModel {
  const { labels, counts } = matrix;
  if (counts.length !== labels.length || counts.some((row) => row.length !== labels.length)) {
    throw new Error("confusion matrix shape does not match its labels");
  }
  let total = 0;
  let maxValue = 0;
  for (const row of counts) {
    for (const value of row) {
      if (value < 0) throw new Error("confusion counts must be non-negative");
      total += value;
      if (value > maxValue) maxValue = value;
    }
  }
  const cells: HeatmapCell[] = [];
  counts.forEach((row, i) => {
    row.forEach((value, j) => {
      cells.push({
        row: i,
        col: j,
        rowLabel: labels[i],
        colLabel: labels[j],
        value,
        intensity: maxValue > 0 ? value / maxValue : 0,
        diagonal: i === j,
      });
    });
  });
  return { labels, cells, total, maxValue };
}
