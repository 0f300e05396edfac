// Wire types for the session protocol. The client never simulates:
// everything it shows comes from these messages.

export const PROTOCOL_VERSION = "coact-ws-1";

export interface WireAction {
  kind: string;
  direction?: string;
  obj?: string;
  agent?: string;
  cell?: [number, number];
  target?: string;
  prop?: string;
  value?: unknown;
}

export interface WireEvent {
  tick: number;
  actor: string;
  action: WireAction;
  outcome: "succeeded" | "failed";
  reason?: string;
}

export interface WireEntity {
  id: string;
  kind: string; // robot | human | object
  type?: string;
  pos: [number, number] | null;
  heading?: string;
  holding?: string | null;
  heldBy?: string | null;
  props?: Record<string, unknown>;
}

export interface GridSpec {
  rows: string[];
  legend?: Record<string, string>;
  workspaces?: Record<string, [number, number][]>;
}

export interface BeliefDigest {
  agent: string;
  facts: string[];
  goalAware: boolean;
  planAware: string | null;
  steps: Record<string, string>;
}

export interface WireDivergence {
  agent: string;
  believed: string | null;
  actual: string | null;
  relevant: boolean;
}

export interface CommActMsg {
  kind: string;
  from: string;
  to: string;
  tick: number;
  payload: Record<string, any>;
}

export interface PlanStepSummary {
  stepId: string;
  op: string;
  args: string[];
  agent: string;
  label: string;
}

export interface PlanSummaries {
  tasks: { task: string; agents: string[] }[];
  steps: PlanStepSummary[];
}

export interface Report {
  goalAchieved: boolean;
  ticksElapsed: number;
  commActCount: Record<string, number>;
  replanCount: number;
  divergencesDetected: number;
  divergencesResolved: number;
  humanIdleTicks: number;
  abortReason: string | null;
}

export type ServerMessage =
  | { type: "snapshot"; version: string; tick: number; grid: GridSpec;
      entities: WireEntity[]; facts: string[]; legalActions: WireAction[] }
  | { type: "stateDelta"; tick: number; events: WireEvent[];
      factsAdded: string[]; factsRemoved: string[]; phase: string | null;
      entities: WireEntity[]; legalActions: WireAction[] }
  | { type: "beliefDiff"; tick: number;
      beliefs: Record<string, BeliefDigest>; divergences: WireDivergence[] }
  | { type: "commAct"; tick: number; act: CommActMsg }
  | { type: "planProposal"; tick: number; planId: string;
      summaries: PlanSummaries }
  | { type: "posterior"; tick: number; probs: Record<string, number> }
  | { type: "metrics"; tick: number; report: Report }
  | { type: "terminal"; status: string; abortReason: string | null;
      report: Report; trace: string[] };

export type ClientMessage =
  | { type: "start" }
  | { type: "setMode"; mode: "stepped" | "freeRun" }
  | { type: "humanAction"; action: WireAction }
  | { type: "planResponse"; planId: string; accept: boolean;
      mustDo?: [string, string][]; mustNotDo?: [string, string][] }
  | { type: "answer"; text: string };
