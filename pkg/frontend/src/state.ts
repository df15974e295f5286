/** View state and the controller that talks to the service.
 *
 * One invariant drives the design: the counterfactuals on screen always come
 * from the most recent explanation of the state currently on screen.  The
 * simulation is paused before any query, and advancing the simulation clears
 * stale counterfactuals.  At most one explain request is in flight; a newer
 * query aborts the older one.
 */

import type { ServiceClient } from "./api.js";
import type {
  CounterfactualJson,
  ExplainRequest,
  ExplanationJson,
  ModelInfo,
  PendulumStateJson,
  SessionView,
} from "./types.js";

export type Mode = "engineered" | "raw";
export type Playback = "running" | "paused";

export interface ViewState {
  sessionId: string | null;
  pendulum: PendulumStateJson | null;
  observation: number[] | null;
  factualAction: number | null;
  counterfactuals: CounterfactualJson[];
  explanation: ExplanationJson | null;
  targetTorque: number;
  mode: Mode;
  playback: Playback;
  banner: string | null;
}

export function initialViewState(): ViewState {
  return {
    sessionId: null,
    pendulum: null,
    observation: null,
    factualAction: null,
    counterfactuals: [],
    explanation: null,
    targetTorque: -2.0,
    mode: "engineered",
    playback: "paused",
    banner: null,
  };
}

/** Advance to a new simulation view; on-screen counterfactuals become stale. */
export function applySessionView(view: ViewState, session: SessionView): ViewState {
  return {
    ...view,
    sessionId: session.session_id ?? view.sessionId,
    pendulum: session.state,
    observation: session.observation,
    factualAction: session.action ?? null,
    counterfactuals: [],
    explanation: null,
    banner: null,
  };
}

/** Install an explanation, but only if it explains the state still on screen. */
export function applyExplanation(
  view: ViewState,
  explanation: ExplanationJson,
  explainedX: number[],
): ViewState {
  const current = queryVector(view);
  if (current === null || !sameVector(current, explainedX)) {
    return view; // a step happened since the request went out; drop it
  }
  const banner = explanation.search.diagnostic ?? null;
  return { ...view, explanation, counterfactuals: explanation.counterfactuals, banner };
}

/** Service or network failure: keep what is displayed, surface the message. */
export function applyQueryError(view: ViewState, message: string): ViewState {
  return { ...view, banner: message };
}

/** The query vector for the active tree mode, from the current observation. */
export function queryVector(view: ViewState): number[] | null {
  if (view.mode === "raw") return view.observation;
  if (view.pendulum === null) return null;
  return [view.pendulum.theta, view.pendulum.theta_dot];
}

function sameVector(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

export class ExplorerController {
  view: ViewState = initialViewState();
  modelInfo: ModelInfo | null = null;
  private inflight: AbortController | null = null;
  private ticking = false;

  constructor(
    private readonly client: ServiceClient,
    private readonly onChange: (view: ViewState) => void = () => {},
  ) {}

  private update(view: ViewState): void {
    this.view = view;
    this.onChange(view);
  }

  async connect(): Promise<void> {
    this.modelInfo = await this.client.model();
    if (!(this.view.mode in this.modelInfo.modes)) {
      this.update({ ...this.view, mode: this.modelInfo.default_mode as Mode });
    }
  }

  async openSession(theta?: number, thetaDot?: number): Promise<void> {
    const session = await this.client.openSession(theta, thetaDot);
    this.update(applySessionView(this.view, session));
  }

  /** One 20 Hz playback tick: let the controller drive the pendulum.
   * Overlapping ticks are skipped when the service responds slower than the
   * polling interval. */
  async tick(): Promise<void> {
    if (this.ticking || this.view.playback !== "running" || this.view.sessionId === null) {
      return;
    }
    this.ticking = true;
    try {
      const session = await this.client.step(this.view.sessionId, null, true);
      if (this.view.playback === "running") {
        this.update(applySessionView(this.view, session));
      }
    } finally {
      this.ticking = false;
    }
  }

  async setState(theta: number, thetaDot: number): Promise<void> {
    if (this.view.sessionId === null) return;
    const session = await this.client.setState(this.view.sessionId, theta, thetaDot);
    this.update({ ...applySessionView(this.view, session), playback: "paused" });
  }

  pause(): void {
    this.update({ ...this.view, playback: "paused" });
  }

  resume(): void {
    this.update({ ...this.view, playback: "running", banner: null });
  }

  setMode(mode: Mode): void {
    if (mode === this.view.mode) return;
    // answers from the other tree no longer apply to the new mode
    this.update({ ...this.view, mode, counterfactuals: [], explanation: null });
  }

  setTargetTorque(value: number): void {
    this.update({ ...this.view, targetTorque: value });
  }

  /** Exploratory question: what nearby state changes the action? */
  queryExploratory(numExplanations = 1): Promise<void> {
    return this.runExplain({}, numExplanations);
  }

  /** Targeted question: why not torque Y?  Pauses playback first. */
  queryTargeted(target?: number, numExplanations = 1): Promise<void> {
    const y = target ?? this.view.targetTorque;
    return this.runExplain({ target: [y] }, numExplanations);
  }

  private async runExplain(
    extra: Partial<ExplainRequest>,
    numExplanations: number,
  ): Promise<void> {
    this.pause(); // the displayed factual state is the one being explained
    const x = queryVector(this.view);
    if (x === null) {
      this.update(applyQueryError(this.view, "no session state to explain"));
      return;
    }
    this.inflight?.abort(); // cancel-and-replace: one request in flight
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const explanation = await this.client.explain(
        { x, mode: this.view.mode, num_explanations: numExplanations, ...extra },
        controller.signal,
      );
      if (this.inflight === controller) {
        this.update(applyExplanation(this.view, explanation, x));
      }
    } catch (error) {
      if (controller.signal.aborted) return; // superseded by a newer query
      const message = error instanceof Error ? error.message : String(error);
      this.update(applyQueryError(this.view, `explain failed: ${message}`));
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
