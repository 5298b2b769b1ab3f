// Inspect-mode panels: the per-aircraft plan inspector (condition-action-
// completion chains with live statuses) and the scrubbable conflict
// resolution history backed by logged decision traces.

import { fmtCondition, fmtConflict, fmtTime } from "./format.js";
import type { FlightPlanDoc, ResolutionDoc } from "./types.js";

export function renderPlanInspector(
  container: HTMLElement,
  plan: FlightPlanDoc | null,
): void {
  container.replaceChildren();
  if (!plan) {
    container.textContent = "select an aircraft to inspect its plan";
    return;
  }
  const title = document.createElement("h3");
  title.textContent =
    `${plan.callsign}  route ${plan.route_id}  PFL ${plan.pfl}  ` +
    `exit ${plan.exit_fix} @ FL${plan.exit_fl}`;
  container.appendChild(title);
  for (const [axis, chain] of Object.entries(plan.chains)) {
    if (chain.length === 0) continue;
    const header = document.createElement("h4");
    header.textContent = axis;
    container.appendChild(header);
    for (const pa of chain) {
      const status = plan.statuses?.[pa.id] ?? "Pending";
      const row = document.createElement("div");
      row.className = `planned-action status-${status.toLowerCase()}`;
      row.textContent =
        `[${status}] when ${fmtCondition(pa.trigger)} -> ` +
        `${pa.action.phrase} until ${fmtCondition(pa.completion)}` +
        (pa.provenance !== "nominal" ? `  (${pa.provenance})` : "");
      row.title = pa.id;
      container.appendChild(row);
    }
  }
}

export function renderResolutionHistory(
  container: HTMLElement,
  resolutions: ResolutionDoc[],
  cursorT: number,
): void {
  container.replaceChildren();
  if (resolutions.length === 0) {
    container.textContent = "no conflict resolutions recorded";
    return;
  }
  for (const res of resolutions) {
    const active = res.t_sim <= cursorT;
    const block = document.createElement("div");
    block.className = "resolution" + (active ? " past" : " future");
    const head = document.createElement("div");
    head.className = "res-head";
    head.textContent =
      `${fmtTime(res.t_sim)}  ${res.outcome}  ` +
      `depth ${res.max_depth}, ${res.expansions} expansion(s) -> ` +
      `plan revision ${res.plan_revision}`;
    block.appendChild(head);
    for (const node of res.trace.nodes) {
      const line = document.createElement("div");
      line.className = "trace-node";
      line.style.marginLeft = `${node.depth * 14}px`;
      const conflictText = node.conflict
        ? ` ${node.conflict.pair.join("/")} ` +
          `(${node.conflict.class.join(", ")}) ` +
          `t=${fmtTime(node.conflict.t_first_s)} [${node.conflict.source}]`
        : "";
      line.textContent =
        `d${node.depth} tsr=${node.tsr_size}${conflictText} -> ${node.outcome}`;
      block.appendChild(line);
      for (const attempt of node.attempts) {
        const a = document.createElement("div");
        a.className = `trace-attempt ${attempt.outcome}`;
        a.style.marginLeft = `${node.depth * 14 + 14}px`;
        a.textContent = `${attempt.label}: ${attempt.outcome}`;
        block.appendChild(a);
      }
    }
    container.appendChild(block);
  }
}

export function renderConflictList(
  container: HTMLElement,
  conflicts: Parameters<typeof fmtConflict>[0][],
  strategyLabels: string[],
  onSelectPair: (pair: [string, string]) => void,
): void {
  container.replaceChildren();
  if (conflicts.length === 0) {
    const empty = document.createElement("div");
    empty.className = "empty";
    empty.textContent = "no conflicts at the cursor";
    container.appendChild(empty);
    return;
  }
  for (const c of conflicts) {
    const row = document.createElement("div");
    row.className = "conflict";
    row.textContent = fmtConflict(c);
    row.onclick = () => onSelectPair(c.pair);
    container.appendChild(row);
  }
  if (strategyLabels.length > 0) {
    const strategies = document.createElement("div");
    strategies.className = "strategies";
    strategies.textContent = `resolved by: ${strategyLabels.join(" ; ")}`;
    container.appendChild(strategies);
  }
}
