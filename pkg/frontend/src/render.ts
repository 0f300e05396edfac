// Model -> HTML strings. Deterministic output for a given view, so the
// snapshot tests cover rendering too. The belief panes print fact strings
// verbatim from the wire, divergent keys highlighted.

import { SessionView, divergentKeys } from "./model";
import { WireEntity } from "./protocol";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

const HEADING_ARROWS: Record<string, string> = {
  N: "↑", NE: "↗", E: "→", SE: "↘",
  S: "↓", SW: "↙", W: "←", NW: "↖",
};

function spriteFor(entity: WireEntity): string {
  const glyph = entity.kind === "robot" ? "R"
    : entity.kind === "human" ? entity.id[0] : entity.id[0].toLowerCase();
  const arrow = entity.heading ? HEADING_ARROWS[entity.heading] ?? "" : "";
  return glyph + arrow;
}

export function renderGrid(view: SessionView): string {
  if (!view.grid) return "<pre class='grid'>(no grid)</pre>";
  const byCell: Record<string, WireEntity[]> = {};
  for (const id of Object.keys(view.entities).sort()) {
    const e = view.entities[id];
    if (!e.pos) continue;
    const key = `${e.pos[0]},${e.pos[1]}`;
    (byCell[key] = byCell[key] ?? []).push(e);
  }
  const lines: string[] = [];
  view.grid.rows.forEach((row, y) => {
    const cells: string[] = [];
    for (let x = 0; x < row.length; x++) {
      const here = byCell[`${x},${y}`];
      if (here && here.length) {
        cells.push(`<b title="${esc(here.map((e) => e.id).join("+"))}">` +
          esc(spriteFor(here[0])).padEnd(2) + "</b>");
      } else {
        cells.push(esc(row[x] === "#" ? "##" : row[x] + " "));
      }
    }
    lines.push(cells.join(""));
  });
  return `<pre class="grid">${lines.join("\n")}</pre>`;
}

export function renderBeliefPanes(view: SessionView): string {
  const agent = view.selectedAgent;
  const hot = divergentKeys(view);
  const mark = (fact: string): string => {
    const parts = fact.split(" ");
    const key = parts.length >= 2 ? `${parts[0]} ${parts[1]}` : fact;
    const cls = hot.has(key) ? "fact divergent" : "fact";
    return `<li class="${cls}">${esc(fact)}</li>`;
  };
  const robot = view.robotFacts.map(mark).join("");
  const digest = agent ? view.beliefs[agent] : undefined;
  const believed = digest ? digest.facts.map(mark).join("") : "";
  const awareness = digest
    ? `<p class="awareness">goalAware=${digest.goalAware} ` +
      `planAware=${esc(String(digest.planAware))}</p>`
    : "";
  return `<div class="panes">` +
    `<div class="pane"><h3>robot facts</h3><ul>${robot}</ul></div>` +
    `<div class="pane"><h3>${esc(agent ?? "?")} believes</h3>` +
    `<ul>${believed}</ul>${awareness}</div></div>`;
}

export function renderPlanPanel(view: SessionView): string {
  if (!view.plan) return `<div class="plan">no plan yet</div>`;
  const steps = view.plan.summaries.steps.map((s) =>
    `<tr><td>${esc(s.stepId)}</td><td>${esc(s.label)}</td>` +
    `<td>${esc(s.agent)}</td></tr>`).join("");
  const controls = view.plan.status === "proposed"
    ? `<div class="controls"><button id="accept">accept</button>` +
      `<button id="reject">reject with constraints</button></div>`
    : "";
  return `<div class="plan" data-status="${view.plan.status}">` +
    `<h3>plan ${esc(view.plan.planId)} (${view.plan.status})</h3>` +
    `<table>${steps}</table>${controls}</div>`;
}

export function renderCommLog(view: SessionView): string {
  const rows = view.commLog.slice(-30).map((e) =>
    `<li>[${e.tick}] ${esc(e.from)}&rarr;${esc(e.to)} ` +
    `<b>${esc(e.kind)}</b> ${esc(e.detail)}</li>`).join("");
  return `<ul class="commlog">${rows}</ul>`;
}

export function renderPosterior(view: SessionView): string {
  if (!view.posterior) return "";
  const bars = Object.keys(view.posterior).sort().map((g) => {
    const p = view.posterior![g];
    const width = Math.round(p * 200);
    return `<div class="bar"><span class="label">${esc(g)}</span>` +
      `<span class="fill" style="width:${width}px"></span>` +
      `<span class="value">${p.toFixed(3)}</span></div>`;
  }).join("");
  return `<div class="posterior">${bars}</div>`;
}

export function renderMetrics(view: SessionView): string {
  if (!view.metrics) return "";
  const m = view.metrics;
  const comm = Object.keys(m.commActCount).sort()
    .map((k) => `${k}:${m.commActCount[k]}`).join(" ");
  return `<div class="metrics">tick=${view.tick} phase=${esc(String(view.phase))} ` +
    `replans=${m.replanCount} divergences=${m.divergencesDetected}/` +
    `${m.divergencesResolved} idle=${m.humanIdleTicks} comm=[${esc(comm)}]</div>`;
}

export function renderBanner(view: SessionView): string {
  if (view.terminal) {
    const why = view.terminal.abortReason
      ? ` (${esc(view.terminal.abortReason)})` : "";
    return `<div class="banner terminal">${esc(view.terminal.status)}${why}</div>`;
  }
  if (view.banner) return `<div class="banner error">${esc(view.banner)}</div>`;
  return "";
}

export function renderEvents(view: SessionView): string {
  const rows = view.lastEvents.map((e) =>
    `<li class="${e.failed ? "failed" : ""}">${esc(e.actor)}: ` +
    `${esc(e.summary)}</li>`).join("");
  return `<ul class="events">${rows}</ul>`;
}

export function render(view: SessionView): string {
  return [
    renderBanner(view),
    renderMetrics(view),
    renderGrid(view),
    renderEvents(view),
    renderBeliefPanes(view),
    renderPlanPanel(view),
    renderPosterior(view),
    renderCommLog(view),
  ].join("\n");
}
