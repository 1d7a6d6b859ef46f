/** Pure view-state helpers: everything here is a function of API data. */

import type { RecordSummary } from "./api.js";

export const VERDICTS = ["suspected_hazard", "no_hazard", "data_exception"] as const;

export const REASONS = [
  "needs_property_manager_check",
  "sensor_malfunction",
  "decoration",
  "dormitory_hotel",
  "shopping_entertainment",
  "office_building",
  "catering_in_apartment",
  "overcrowded_residence",
] as const;

/** Reasons that, with a non-hazard verdict, create an exclusion entry. */
export const EXCLUSION_REASONS: ReadonlySet<string> = new Set([
  "sensor_malfunction",
  "decoration",
  "dormitory_hotel",
  "shopping_entertainment",
  "office_building",
]);

export type Verdict = (typeof VERDICTS)[number];
export type Reason = (typeof REASONS)[number];

export interface FormState {
  verdict: Verdict | "";
  reason: Reason | "";
  note: string;
  scope: "floor" | "estate";
}

export const emptyForm = (): FormState => ({
  verdict: "",
  reason: "",
  note: "",
  scope: "floor",
});

export function willCreateExclusion(verdict: string, reason: string): boolean {
  return (
    (verdict === "no_hazard" || verdict === "data_exception") &&
    EXCLUSION_REASONS.has(reason)
  );
}

export function validateForm(form: FormState): string | null {
  if (!form.verdict) return "verdict";
  if (!form.reason) return "reason";
  return null;
}

/** Defensive re-sort: the service already orders by score, but the queue
 * must stay stable if records are merged from several pages. */
export function sortQueue(records: RecordSummary[]): RecordSummary[] {
  return [...records].sort(
    (a, b) => b.r2_score - a.r2_score || a.record_id.localeCompare(b.record_id),
  );
}

export function openCount(records: RecordSummary[]): number {
  return records.filter((r) => r.status === "open").length;
}

/** j/k-style navigation over the queue; clamps at both ends. */
export function step(records: RecordSummary[], currentId: string | null, delta: number): string | null {
  if (records.length === 0) return null;
  const idx = currentId === null ? -1 : records.findIndex((r) => r.record_id === currentId);
  const next = Math.min(records.length - 1, Math.max(0, idx + delta));
  return records[next].record_id;
}

export function markReviewed(records: RecordSummary[], recordId: string): RecordSummary[] {
  return records.map((r) =>
    r.record_id === recordId ? { ...r, status: "reviewed" as const } : r,
  );
}
