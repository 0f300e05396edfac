// Browser bootstrap: one live session, stepped by default so plan
// negotiation never races the clock.

import { SessionClient } from "./client";
import { ConstraintPick, respondToPlan, submitHumanAction } from "./gestures";
import { SessionView, apply, initialView } from "./model";
import { render } from "./render";
import { ServerMessage, WireAction } from "./protocol";

let view: SessionView = initialView();
let client: SessionClient;

function root(): HTMLElement {
  return document.getElementById("app")!;
}

function palette(): string {
  const buttons = view.legalActions.map((a, i) =>
    `<button class="act" data-idx="${i}">${actionLabel(a)}</button>`).join("");
  return `<div class="palette">${buttons}</div>`;
}

function actionLabel(a: WireAction): string {
  const bits = [a.kind];
  if (a.direction) bits.push(a.direction);
  if (a.obj) bits.push(a.obj);
  if (a.agent) bits.push(a.agent);
  if (a.target) bits.push(a.target);
  if (a.prop) bits.push(`${a.prop}=${a.value}`);
  if (a.cell) bits.push(`${a.cell[0]},${a.cell[1]}`);
  return bits.join(" ");
}

function redraw(): void {
  root().innerHTML = render(view) + palette();
  for (const btn of Array.from(document.querySelectorAll("button.act"))) {
    btn.addEventListener("click", () => {
      const idx = Number((btn as HTMLElement).dataset.idx);
      const action = view.legalActions[idx];
      const msg = submitHumanAction(view, action);
      if (msg) client.send(msg);
    });
  }
  const accept = document.getElementById("accept");
  if (accept) {
    accept.addEventListener("click", () => {
      client.send(respondToPlan(view, true));
    });
  }
  const reject = document.getElementById("reject");
  if (reject) {
    reject.addEventListener("click", () => {
      const raw = window.prompt(
        "constraints as JSON [[agent, pattern, forbid], ...]", "[]");
      if (raw === null) return;
      const picks: ConstraintPick[] = (JSON.parse(raw) as
        [string, string, boolean][]).map(([agent, pattern, forbid]) =>
          ({ agent, pattern, forbid }));
      try {
        client.send(respondToPlan(view, false, picks));
      } catch (err) {
        window.alert(String(err)); // contradictory picks blocked client-side
      }
    });
  }
}

function handle(msg: ServerMessage): void {
  view = apply(view, msg);
  redraw();
}

export function start(url: string): void {
  client = new SessionClient(url, handle, (reason) => {
    view = { ...view, banner: `connection closed: ${reason}`, connected: false };
    redraw();
  });
  client.connect();
}

declare global {
  interface Window { coactStart: (url: string) => void }
}
if (typeof window !== "undefined") {
  window.coactStart = start;
}
