/** Delta-table row model: values are lifted verbatim from the service JSON.
 *
 * No arithmetic happens on explanation content; every cell is the string form
 * of a number that came straight out of the parsed response, so the table
 * bit-matches what the service said.  Zero-delta rows are flagged muted to
 * emphasize sparsity.
 */

import type { CounterfactualJson, ExplanationJson } from "./types.js";

export interface DeltaRow {
  name: string;
  kind: "input" | "output";
  factual: string;
  counterfactual: string;
  delta: string;
  muted: boolean;
}

export function deltaTableRows(
  explanation: ExplanationJson,
  cf: CounterfactualJson,
  featureNames: string[],
  outputNames: string[],
): DeltaRow[] {
  const rows: DeltaRow[] = [];
  cf.x_prime.forEach((value, j) => {
    rows.push({
      name: featureNames[j] ?? `x${j}`,
      kind: "input",
      factual: String(explanation.query.x[j]),
      counterfactual: String(value),
      delta: String(cf.delta_x[j]),
      muted: cf.delta_x[j] === 0,
    });
  });
  (cf.y_prime ?? []).forEach((value, k) => {
    const delta = cf.delta_y ? cf.delta_y[k] : null;
    rows.push({
      name: outputNames[k] ?? `y${k}`,
      kind: "output",
      factual: String(explanation.query.y[k]),
      counterfactual: String(value),
      delta: delta === null ? "" : String(delta),
      muted: delta === 0,
    });
  });
  return rows;
}
