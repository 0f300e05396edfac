// The view model is a pure fold over the server message stream: replaying
// the same stream always rebuilds the same model, which keeps the client
// honest (no local simulation, no hidden state).

import {
  BeliefDigest,
  CommActMsg,
  GridSpec,
  PROTOCOL_VERSION,
  PlanSummaries,
  Report,
  ServerMessage,
  WireAction,
  WireDivergence,
  WireEntity,
} from "./protocol";

export interface PlanView {
  planId: string;
  summaries: PlanSummaries;
  status: "proposed" | "responded" | "executing" | "terminal";
}

export interface CommLogEntry {
  tick: number;
  kind: string;
  from: string;
  to: string;
  detail: string;
}

export interface SessionView {
  connected: boolean;
  banner: string | null;
  tick: number;
  phase: string | null;
  grid: GridSpec | null;
  entities: Record<string, WireEntity>;
  robotFacts: string[];
  beliefs: Record<string, BeliefDigest>;
  divergences: WireDivergence[];
  selectedAgent: string | null;
  legalActions: WireAction[];
  plan: PlanView | null;
  commLog: CommLogEntry[];
  posterior: Record<string, number> | null;
  metrics: Report | null;
  terminal: { status: string; abortReason: string | null } | null;
  lastEvents: { actor: string; summary: string; failed: boolean }[];
}

export function initialView(): SessionView {
  return {
    connected: false,
    banner: null,
    tick: 0,
    phase: null,
    grid: null,
    entities: {},
    robotFacts: [],
    beliefs: {},
    divergences: [],
    selectedAgent: null,
    legalActions: [],
    plan: null,
    commLog: [],
    posterior: null,
    metrics: null,
    terminal: null,
    lastEvents: [],
  };
}

function actionSummary(action: WireAction): string {
  const bits = [action.kind];
  if (action.direction) bits.push(action.direction);
  if (action.obj) bits.push(action.obj);
  if (action.agent) bits.push("->" + action.agent);
  if (action.target) bits.push(action.target);
  if (action.prop) bits.push(`${action.prop}=${String(action.value)}`);
  if (action.cell) bits.push(`@${action.cell[0]},${action.cell[1]}`);
  return bits.join(" ");
}

function commDetail(act: CommActMsg): string {
  const p = act.payload;
  if (p.fact) return String(p.fact);
  if (p.task) return String(p.task);
  if (p.stepId) return String(p.stepId);
  if (p.planId) return String(p.planId);
  if (p.signal) return `${p.signal} ${p.target}`;
  return "";
}

function entityMap(entities: WireEntity[]): Record<string, WireEntity> {
  const out: Record<string, WireEntity> = {};
  for (const e of entities) out[e.id] = e;
  return out;
}

function applyFactDelta(facts: string[], added: string[], removed: string[]): string[] {
  const set = new Set(facts);
  for (const f of removed) set.delete(f);
  for (const f of added) set.add(f);
  return Array.from(set).sort();
}

/** Fold one server message into the view. Returns a new view object. */
export function apply(view: SessionView, msg: ServerMessage): SessionView {
  const next: SessionView = { ...view };
  switch (msg.type) {
    case "snapshot": {
      if (msg.version !== PROTOCOL_VERSION) {
        next.banner = `protocol version mismatch: server ${msg.version}, ` +
          `client ${PROTOCOL_VERSION} (read-only)`;
      }
      next.connected = true;
      next.tick = msg.tick;
      next.grid = msg.grid;
      next.entities = entityMap(msg.entities);
      next.robotFacts = [...msg.facts].sort();
      next.legalActions = msg.legalActions;
      const humans = msg.entities.filter((e) => e.kind === "human");
      next.selectedAgent = view.selectedAgent ??
        (humans.length ? humans[0].id : null);
      break;
    }
    case "stateDelta": {
      next.tick = msg.tick;
      next.phase = msg.phase;
      next.entities = entityMap(msg.entities);
      next.robotFacts = applyFactDelta(view.robotFacts, msg.factsAdded,
        msg.factsRemoved);
      next.legalActions = msg.legalActions;
      next.lastEvents = msg.events.map((e) => ({
        actor: e.actor,
        summary: actionSummary(e.action) +
          (e.outcome === "failed" ? ` FAILED(${e.reason})` : ""),
        failed: e.outcome === "failed",
      }));
      if (next.plan && next.plan.status === "responded" &&
          msg.phase === "executing") {
        next.plan = { ...next.plan, status: "executing" };
      }
      break;
    }
    case "beliefDiff": {
      next.beliefs = msg.beliefs;
      next.divergences = msg.divergences;
      break;
    }
    case "commAct": {
      next.commLog = [...view.commLog, {
        tick: msg.tick,
        kind: msg.act.kind,
        from: msg.act.from,
        to: msg.act.to,
        detail: commDetail(msg.act),
      }];
      break;
    }
    case "planProposal": {
      next.plan = {
        planId: msg.planId,
        summaries: msg.summaries,
        status: "proposed",
      };
      break;
    }
    case "posterior": {
      next.posterior = msg.probs;
      break;
    }
    case "metrics": {
      next.metrics = msg.report;
      break;
    }
    case "terminal": {
      next.terminal = { status: msg.status, abortReason: msg.abortReason };
      next.metrics = msg.report;
      if (next.plan) next.plan = { ...next.plan, status: "terminal" };
      break;
    }
  }
  return next;
}

export function replayStream(messages: ServerMessage[]): SessionView {
  let view = initialView();
  for (const msg of messages) view = apply(view, msg);
  return view;
}

/** Keys (subject+predicate) on which the selected agent's beliefs diverge. */
export function divergentKeys(view: SessionView): Set<string> {
  const keys = new Set<string>();
  for (const d of view.divergences) {
    if (view.selectedAgent !== null && d.agent !== view.selectedAgent) continue;
    const fact = d.actual ?? d.believed;
    if (!fact) continue;
    const parts = fact.split(" ");
    if (parts.length >= 2) keys.add(`${parts[0]} ${parts[1]}`);
  }
  return keys;
}

export function markPlanResponded(view: SessionView, planId: string): SessionView {
  if (!view.plan || view.plan.planId !== planId) return view;
  return { ...view, plan: { ...view.plan, status: "responded" } };
}
