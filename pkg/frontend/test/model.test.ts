import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { apply, divergentKeys, initialView, replayStream } from "../src/model";
import { ServerMessage } from "../src/protocol";

const here = dirname(fileURLToPath(import.meta.url));
const stream: ServerMessage[] = JSON.parse(
  readFileSync(join(here, "fixtures", "kitchen_stream.json"), "utf-8"));

describe("view model replay", () => {
  it("is deterministic: replaying the same stream twice gives equal views", () => {
    const a = replayStream(stream);
    const b = replayStream(stream);
    expect(a).toEqual(b);
  });

  it("matches the frozen snapshot of the recorded kitchen stream", () => {
    const view = replayStream(stream);
    expect(view).toMatchSnapshot();
  });

  it("never simulates: folding a prefix then the rest equals folding all", () => {
    const k = Math.floor(stream.length / 2);
    let view = initialView();
    for (const msg of stream.slice(0, k)) view = apply(view, msg);
    for (const msg of stream.slice(k)) view = apply(view, msg);
    expect(view).toEqual(replayStream(stream));
  });

  it("builds the grid and entities from the snapshot message", () => {
    const view = replayStream(stream);
    expect(view.grid).not.toBeNull();
    expect(Object.keys(view.entities).sort())
      .toEqual(["BOB", "BOTTLE", "MUG", "ROBOT"]);
    expect(view.selectedAgent).toBe("BOB");
  });

  it("applies fact deltas cumulatively", () => {
    const view = replayStream(stream);
    // facts are kept sorted and deduplicated
    const sorted = [...view.robotFacts].sort();
    expect(view.robotFacts).toEqual(sorted);
    expect(new Set(view.robotFacts).size).toBe(view.robotFacts.length);
  });

  it("tracks plan proposals and acceptance through phases", () => {
    const view = replayStream(stream);
    expect(view.plan).not.toBeNull();
    expect(view.plan!.planId).toBe("plan-1");
    expect(["proposed", "responded", "executing", "terminal"])
      .toContain(view.plan!.status);
  });

  it("collects the comm log in arrival order", () => {
    const view = replayStream(stream);
    const ticks = view.commLog.map((e) => e.tick);
    expect([...ticks].sort((x, y) => x - y)).toEqual(ticks);
    expect(view.commLog.some((e) => e.kind === "propose_plan")).toBe(true);
  });

  it("flags a protocol version mismatch without crashing", () => {
    const bad = JSON.parse(JSON.stringify(stream[0]));
    bad.version = "coact-ws-999";
    const view = apply(initialView(), bad);
    expect(view.banner).toContain("mismatch");
    expect(view.connected).toBe(true);
  });

  it("derives divergent keys for the selected agent", () => {
    let view = replayStream(stream);
    view = apply(view, {
      type: "beliefDiff", tick: view.tick,
      beliefs: view.beliefs,
      divergences: [{ agent: "BOB", believed: "MUG isIn LIVINGROOM",
                      actual: "MUG isIn KITCHEN", relevant: true }],
    });
    expect(divergentKeys(view).has("MUG isIn")).toBe(true);
  });
});
