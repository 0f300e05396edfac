"""Session gateway: one simulation per WebSocket client, JSON messages.

Stepped mode (default): the simulation advances exactly one tick per
`humanAction` message from the client, who plays the Interactive human.
Free-run mode advances on a timer, treating missing input as Wait.
Protocol violations close the session with a coded reason.
"""

from __future__ import annotations

import asyncio
import json
from typing import Optional

from .comm import CommAct
from .runner import RunReport, canonical, report_from_records, trace_lines
from .scenario import Scenario, load_scenario
from .session import RUNNING, Session
from .world import Action, legal_actions

PROTOCOL_VERSION = "coact-ws-1"

CLOSE_BAD_MESSAGE = 4400
CLOSE_BAD_STATE = 4409

FREE_RUN_INTERVAL = 0.05


class ProtocolError(Exception):
    def __init__(self, code: int, reason: str):
        super().__init__(reason)
        self.code = code
        self.reason = reason


class SessionServer:
    """Wraps one Session for one client connection."""

    def __init__(self, scenario_raw: dict):
        self.scenario_raw = scenario_raw
        self.session: Optional[Session] = None
        self.scenario: Optional[Scenario] = None
        self.mode = "stepped"
        self.started = False
        self.interactive_id: Optional[str] = None
        self._last_proposal_ids: set = set()

    # -- message handling ------------------------------------------------------

    def handle(self, text: str) -> list:
        """Process one client message; returns outgoing messages."""
        try:
            msg = json.loads(text)
        except json.JSONDecodeError:
            raise ProtocolError(CLOSE_BAD_MESSAGE, "not-json")
        mtype = msg.get("type")
        if mtype == "start":
            return self._start()
        if not self.started:
            raise ProtocolError(CLOSE_BAD_STATE, "not-started")
        if mtype == "setMode":
            mode = msg.get("mode")
            if mode not in ("stepped", "freeRun"):
                raise ProtocolError(CLOSE_BAD_MESSAGE, "bad-mode")
            self.mode = mode
            return []
        if mtype == "humanAction":
            return self._human_action(msg)
        if mtype == "planResponse":
            return self._plan_response(msg)
        if mtype == "answer":
            return []  # reserved: free-text answers are out of protocol scope
        raise ProtocolError(CLOSE_BAD_MESSAGE, f"unknown-type:{mtype}")

    def _start(self) -> list:
        if self.started:
            raise ProtocolError(CLOSE_BAD_STATE, "already-started")
        self.scenario = load_scenario(json.dumps(self.scenario_raw), name="served")
        self.session = Session(self.scenario)
        self.started = True
        humans = [a for a, k in self.scenario.agent_kinds().items() if k == "human"]
        for aid in humans:
            if self.scenario.humans[aid].kind == "Interactive":
                self.interactive_id = aid
                break
        out = [self._snapshot_msg()]
        out.extend(self._emit_record(self.session.records[-1]))
        out.extend(self._maybe_terminal())
        return out

    def _human_action(self, msg: dict) -> list:
        if self.session.status != RUNNING:
            raise ProtocolError(CLOSE_BAD_STATE, "terminal")
        try:
            action = Action.from_wire(msg.get("action", {}))
        except Exception:
            raise ProtocolError(CLOSE_BAD_MESSAGE, "bad-action")
        injected = {}
        if self.interactive_id is not None:
            injected[self.interactive_id] = action
        record = self.session.tick(injected_actions=injected)
        out = self._emit_record(record)
        out.extend(self._maybe_terminal())
        return out

    def _plan_response(self, msg: dict) -> list:
        if self.interactive_id is None:
            return []
        plan_id = msg.get("planId")
        robot = self.session.robot_id
        if msg.get("accept"):
            act = CommAct.accept_plan(self.interactive_id, robot, plan_id)
        else:
            constraints = {"mustDo": msg.get("mustDo", []),
                           "mustNotDo": msg.get("mustNotDo", [])}
            act = CommAct.reject_plan(self.interactive_id, robot, plan_id, constraints)
        driver = self.session.drivers[self.interactive_id]
        driver.inject_comm(act)
        return []

    def free_run_tick(self) -> list:
        if self.session is None or self.session.status != RUNNING:
            return []
        record = self.session.tick()
        out = self._emit_record(record)
        out.extend(self._maybe_terminal())
        return out

    # -- outgoing messages -------------------------------------------------------

    def _snapshot_msg(self) -> dict:
        world = self.session.world
        entities = []
        for aid in sorted(world.agents):
            a = world.agents[aid]
            entities.append({"id": aid, "kind": a.kind, "pos": list(a.cell),
                             "heading": a.heading, "holding": a.holding})
        for oid in sorted(world.objects):
            o = world.objects[oid]
            entities.append({"id": oid, "kind": "object", "type": o.type_label,
                             "pos": None if o.cell is None else list(o.cell),
                             "heldBy": o.held_by, "props": dict(sorted(o.props.items()))})
        grid = self.scenario_raw.get("grid", {})
        return {"type": "snapshot", "version": PROTOCOL_VERSION,
                "tick": world.tick, "grid": grid, "entities": entities,
                "facts": self.session.facts.strings(),
                "legalActions": self._legal_actions_wire()}

    def _legal_actions_wire(self) -> list:
        if self.interactive_id is None or self.session.status != RUNNING:
            return []
        acts = legal_actions(self.session.world, self.interactive_id)
        return sorted((a.to_wire() for a in acts), key=canonical)

    def _emit_record(self, record) -> list:
        wire = record.to_wire()
        out = [{
            "type": "stateDelta",
            "tick": wire["tick"],
            "events": wire["events"],
            "factsAdded": wire["factsAdded"],
            "factsRemoved": wire["factsRemoved"],
            "phase": wire["phase"],
            "entities": self._snapshot_msg()["entities"],
            "legalActions": self._legal_actions_wire(),
        }]
        out.append({"type": "beliefDiff", "tick": wire["tick"],
                    "beliefs": wire["beliefs"],
                    "divergences": wire["divergences"]})
        for act in wire["commActs"]:
            out.append({"type": "commAct", "tick": wire["tick"], "act": act})
            if act.get("kind") == "propose_plan" and \
                    act.get("to") == self.interactive_id:
                payload = act.get("payload", {})
                pid = payload.get("planId")
                if pid not in self._last_proposal_ids:
                    self._last_proposal_ids.add(pid)
                    out.append({"type": "planProposal", "tick": wire["tick"],
                                "planId": pid,
                                "summaries": payload.get("summaries", {})})
        if wire["posterior"] is not None:
            out.append({"type": "posterior", "tick": wire["tick"],
                        "probs": wire["posterior"]})
        out.append({"type": "metrics", "tick": wire["tick"],
                    "report": self._report().to_wire()})
        return out

    def _report(self) -> RunReport:
        humans = [a for a, k in self.scenario.agent_kinds().items() if k == "human"]
        records = [json.loads(canonical(r.to_wire())) for r in self.session.records]
        return report_from_records(records, self.session.status,
                                   self.session.abort_reason, humans)

    def _maybe_terminal(self) -> list:
        if self.session.status == RUNNING:
            return []
        return [{"type": "terminal", "status": self.session.status,
                 "abortReason": self.session.abort_reason,
                 "report": self._report().to_wire(),
                 "trace": trace_lines(self.session, self.scenario_raw,
                                      self.scenario.seed, self.session.status,
                                      self.session.abort_reason)}]


async def _client_loop(websocket, scenario_raw: dict) -> None:
    server = SessionServer(scenario_raw)

    async def pump_free_run():
        while True:
            await asyncio.sleep(FREE_RUN_INTERVAL)
            if server.mode == "freeRun" and server.started:
                for msg in server.free_run_tick():
                    await websocket.send(json.dumps(msg))

    pump = asyncio.ensure_future(pump_free_run())
    try:
        async for text in websocket:
            try:
                for msg in server.handle(text):
                    await websocket.send(json.dumps(msg))
            except ProtocolError as exc:
                await websocket.close(code=exc.code, reason=exc.reason)
                return
    finally:
        pump.cancel()


async def serve(scenario_raw: dict, host: str = "127.0.0.1", port: int = 8765):
    """Run the gateway until cancelled. One session per connection."""
    import websockets

    async def handler(websocket):
        await _client_loop(websocket, scenario_raw)

    async with websockets.serve(handler, host, port):
        await asyncio.Future()
