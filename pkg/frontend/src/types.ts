/** Wire types mirroring the explanation service's JSON exactly. */

export interface CounterfactualJson {
  x_prime: number[];
  y_lmt: number[];
  y_prime: number[] | null;
  delta_x: number[];
  delta_y: number[] | null;
  objective: number;
  leaf_id: number;
  sparsity_in: number;
  sparsity_out: number;
  valid: boolean;
  feasible: boolean;
  residuals: Record<string, number>;
  warnings: string[];
}

export interface ExplanationJson {
  query: { x: number[]; y: number[]; target?: number[] };
  counterfactuals: CounterfactualJson[];
  search: {
    leaves_examined: number;
    wall_time_ms: number;
    diagnostic?: string;
    best_invalid?: CounterfactualJson;
  };
  mode?: string;
}

export interface PendulumStateJson {
  theta: number;
  theta_dot: number;
}

export interface SessionView {
  session_id?: string;
  state: PendulumStateJson;
  observation: number[]; // [cos theta, sin theta, theta_dot]
  action?: number;
}

export interface TreeSummary {
  input_dim: number;
  output_dim: number;
  leaf_count: number;
  depth: number;
  input_bounds: number[][];
  output_bounds: number[][];
  feature_names: string[];
  output_names: string[];
}

export interface ModelInfo {
  environment: string;
  default_mode: string;
  modes: Record<string, TreeSummary>;
}

export interface ExplainRequest {
  x: number[];
  target?: number[];
  num_explanations?: number;
  max_leaves?: number;
  weights?: Record<string, number>;
  mode?: string;
}
