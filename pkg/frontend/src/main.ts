/** DOM wiring for the explorer: session playback, queries, table, canvas. */

import { ServiceClient } from "./api.js";
import { deltaTableRows } from "./deltaTable.js";
import { renderScene } from "./render.js";
import { ExplorerController, queryVector, type ViewState } from "./state.js";

const TICK_MS = 50; // 20 Hz, matching the simulator's dt = 0.05 s

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderBanner(view: ViewState): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = view.banner ?? "";
  banner.style.display = view.banner ? "block" : "none";
}

function renderStatus(view: ViewState): void {
  const status = el<HTMLDivElement>("status");
  if (!view.pendulum) {
    status.textContent = "no session";
    return;
  }
  const torque = view.factualAction === null ? "n/a" : view.factualAction.toFixed(3);
  status.textContent =
    `theta ${view.pendulum.theta.toFixed(3)} rad, ` +
    `theta_dot ${view.pendulum.theta_dot.toFixed(3)} rad/s, ` +
    `torque ${torque} N*m, ${view.playback}, ${view.mode} tree`;
}

function renderTable(view: ViewState, controller: ExplorerController): void {
  const host = el<HTMLDivElement>("delta-table");
  host.innerHTML = "";
  const explanation = view.explanation;
  if (!explanation || view.counterfactuals.length === 0) return;
  const summary = controller.modelInfo?.modes[view.mode];
  const featureNames = summary?.feature_names ?? [];
  const outputNames = summary?.output_names ?? [];
  view.counterfactuals.forEach((cf, index) => {
    const caption = document.createElement("div");
    caption.className = "cf-caption";
    caption.textContent =
      `counterfactual #${index + 1} - leaf ${cf.leaf_id}, ` +
      `${cf.valid ? "valid" : "not valid"}, ${cf.feasible ? "feasible" : "INFEASIBLE"}` +
      (cf.warnings.length ? ` [${cf.warnings.join(", ")}]` : "");
    host.appendChild(caption);

    const table = document.createElement("table");
    table.innerHTML =
      "<thead><tr><th>feature</th><th>factual</th><th>counterfactual</th><th>delta</th></tr></thead>";
    const body = document.createElement("tbody");
    for (const row of deltaTableRows(explanation, cf, featureNames, outputNames)) {
      const tr = document.createElement("tr");
      if (row.muted) tr.className = "muted";
      for (const cell of [row.name, row.factual, row.counterfactual, row.delta]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
    table.appendChild(body);
    host.appendChild(table);
  });
}

function renderCanvas(view: ViewState): void {
  const canvas = el<HTMLCanvasElement>("scene");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  renderScene(
    ctx,
    { width: canvas.width, height: canvas.height, maxTorque: 2.0 },
    view.observation,
    view.factualAction,
    view.counterfactuals,
    view.mode,
  );
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8000";
  const client = new ServiceClient(base);
  const controller = new ExplorerController(client, (view) => {
    renderBanner(view);
    renderStatus(view);
    renderTable(view, controller);
    renderCanvas(view);
    el<HTMLButtonElement>("toggle-play").textContent =
      view.playback === "running" ? "pause" : "run";
  });

  el<HTMLButtonElement>("toggle-play").addEventListener("click", () => {
    if (controller.view.playback === "running") controller.pause();
    else controller.resume();
  });

  el<HTMLButtonElement>("restart").addEventListener("click", () => {
    void controller.openSession();
  });

  el<HTMLButtonElement>("apply-state").addEventListener("click", () => {
    const theta = parseFloat(el<HTMLInputElement>("set-theta").value);
    const thetaDot = parseFloat(el<HTMLInputElement>("set-theta-dot").value);
    if (Number.isFinite(theta) && Number.isFinite(thetaDot)) {
      void controller.setState(theta, thetaDot);
    }
  });

  el<HTMLButtonElement>("ask-what-if").addEventListener("click", () => {
    void controller.queryExploratory(numExplanations());
  });

  const slider = el<HTMLInputElement>("target-torque");
  const sliderLabel = el<HTMLSpanElement>("target-torque-value");
  slider.addEventListener("input", () => {
    controller.setTargetTorque(parseFloat(slider.value));
    sliderLabel.textContent = slider.value;
  });
  el<HTMLButtonElement>("ask-why-not").addEventListener("click", () => {
    void controller.queryTargeted(undefined, numExplanations());
  });

  for (const mode of ["engineered", "raw"] as const) {
    el<HTMLInputElement>(`mode-${mode}`).addEventListener("change", (event) => {
      if ((event.target as HTMLInputElement).checked) controller.setMode(mode);
    });
  }

  function numExplanations(): number {
    const n = parseInt(el<HTMLInputElement>("num-explanations").value, 10);
    return Number.isFinite(n) && n >= 1 ? n : 1;
  }

  window.setInterval(() => {
    void controller.tick();
  }, TICK_MS);

  void (async () => {
    try {
      await controller.connect();
      const modes = controller.modelInfo ? Object.keys(controller.modelInfo.modes) : [];
      el<HTMLInputElement>("mode-raw").disabled = !modes.includes("raw");
      await controller.openSession();
    } catch (error) {
      renderBanner({
        ...controller.view,
        banner: `cannot reach service at ${base}: ${String(error)}`,
      });
    }
  })();

  // expose for debugging in the console
  (window as unknown as Record<string, unknown>).explorer = { controller, queryVector };
}

if (typeof document !== "undefined" && document.getElementById("scene")) {
  boot();
}
