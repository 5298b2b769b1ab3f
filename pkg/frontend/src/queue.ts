// Clearance approval queue: render pending items with approve / modify /
// reject controls, send the gateway calls, and reconcile optimistically.

import { GatewayClient, GatewayError } from "./api.js";
import { ClearanceQueue } from "./state.js";
import { fmtTime } from "./format.js";

export function renderQueue(
  container: HTMLElement,
  queue: ClearanceQueue,
  client: GatewayClient,
  online: boolean,
  onResult: (message: string) => void,
): void {
  container.replaceChildren();
  const items = queue.list();
  if (items.length === 0) {
    const empty = document.createElement("div");
    empty.className = "empty";
    empty.textContent = "no clearances awaiting review";
    container.appendChild(empty);
    return;
  }
  for (const item of items) {
    const row = document.createElement("div");
    row.className = "clearance" + (item.inFlight ? " inflight" : "");
    const text = document.createElement("span");
    text.textContent =
      `${fmtTime(item.proposed_t)}  ${item.callsign}: ${item.action.phrase}` +
      (item.status === "Approved" ? "  (approved)" : "");
    row.appendChild(text);

    const actions = document.createElement("span");
    actions.className = "actions";
    const mk = (
      label: string,
      op: "approve" | "reject" | "modify",
      run: () => Promise<unknown>,
    ) => {
      const button = document.createElement("button");
      button.textContent = label;
      button.disabled = !online || item.inFlight !== undefined;
      button.onclick = async () => {
        queue.markInFlight(item.clearance_id, op);
        try {
          await run();
          onResult(`${op} ${item.clearance_id} sent`);
        } catch (err) {
          queue.rollback(item.clearance_id);
          const detail =
            err instanceof GatewayError ? err.detail : String(err);
          onResult(`${op} ${item.clearance_id} refused: ${detail}`);
        }
      };
      actions.appendChild(button);
    };
    mk("approve", "approve", () => client.approve(item.clearance_id));
    mk("modify", "modify", () => {
      const input = prompt(
        "replacement action JSON",
        JSON.stringify(item.action),
      );
      if (input === null) {
        queue.rollback(item.clearance_id);
        return Promise.resolve();
      }
      return client.modify(item.clearance_id, JSON.parse(input));
    });
    mk("reject", "reject", () => client.reject(item.clearance_id));
    row.appendChild(actions);
    container.appendChild(row);
  }
}
