import { GroupSummary, Rate, RateCounts, RATES } from "./types.js";

export interface Segment {
  rate: Rate;
  count: number;
  /** Fraction of the shared axis, in [0, 1]. */
  width: number;
}

export interface Bar {
  label: string;
  segments: Segment[];
  total: number;
}

/**
 * Stacked-bar geometry for one group: segment widths are proportional
 * to counts on a shared axis, so widths sum to total / axisMax.
 */
export function computeSegments(counts: RateCounts, axisMax: number): Segment[] {
  if (axisMax <= 0) {
    throw new Error("axisMax must be positive");
  }
  return RATES.map((rate) => ({
    rate,
    count: counts[rate],
    width: counts[rate] / axisMax,
  })).filter((segment) => segment.count > 0);
}

/** One bar per (model, task) group, all sharing one axis maximum. */
export function buildSummaryBars(groups: GroupSummary[]): Bar[] {
  const axisMax = Math.max(...groups.map((g) => g.total), 1);
  return groups.map((group) => ({
    label: `${group.model_label} / ${group.task_label}`,
    segments: computeSegments(group.counts, axisMax),
    total: group.total,
  }));
}
