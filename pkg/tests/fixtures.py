"""Shared scenario documents and small domains used across the suite."""

from __future__ import annotations

import copy
import json


def minimal_doc() -> dict:
    return {
        "grid": {"rows": ["###", "#R#", "###"], "legend": {"R": "ROOM"}},
        "entities": [{"id": "R1", "kind": "robot", "pos": [1, 1]}],
        "goals": [],
        "domain": {},
        "humans": {},
        "seed": 0,
    }


def small_room_doc() -> dict:
    """5x5 single room, two agents, two objects; kernel-level tests."""
    return {
        "grid": {"rows": ["#####", "#...#", "#...#", "#...#", "#####"]},
        "entities": [
            {"id": "ROBOT", "kind": "robot", "pos": [1, 3], "heading": "N"},
            {"id": "BOB", "kind": "human", "pos": [3, 3], "heading": "N"},
            {"id": "MUG", "type": "mug", "pos": [1, 1], "props": {"isFull": False}},
            {"id": "BALL", "type": "ball", "pos": [3, 1]},
        ],
        "props": {"isFull": [True, False]},
        "goals": [],
        "domain": {},
        "humans": {"BOB": {"kind": "Scripted", "script": []}},
        "seed": 0,
    }


KITCHEN_ROWS = [
    "##########",
    "#KKKK#LLL#",
    "#KKKKKLLL#",
    "#KKKK#LLL#",
    "##########",
]


def kitchen_grid() -> dict:
    return {
        "rows": KITCHEN_ROWS,
        "legend": {"K": "KITCHEN", "L": "LIVINGROOM"},
        "workspaces": {
            "COUNTER": [[1, 1], [2, 1]],
            "TABLE1": [[7, 3], [8, 3]],
        },
    }


def kitchen_htn() -> dict:
    return {
        "tasks": {
            "serve_drinks": {
                "params": [],
                "achieved": [["MUG", "isOn", "TABLE1"], ["BOTTLE", "isOn", "TABLE1"]],
            },
            "fetch": {
                "params": ["item"],
                "achieved": [["?item", "isOn", "TABLE1"]],
            },
        },
        "methods": [
            {"task": "serve_drinks", "name": "both",
             "subtasks": [{"name": "fetch", "args": ["MUG"]},
                          {"name": "fetch", "args": ["BOTTLE"]}]},
            {"task": "fetch", "name": "bring_it",
             "subtasks": [{"name": "bring", "args": ["?item"], "agent": "?any"}]},
            # replanning mid-carry: whoever holds the item finishes the job
            {"task": "fetch", "name": "finish_it",
             "subtasks": [{"name": "finish_bring", "args": ["?item"],
                           "agent": "?any"}]},
        ],
        "operators": {
            "bring": {
                "params": ["item"],
                "agents": ["robot", "human"],
                "pre": [["?item", "isIn", "KITCHEN"]],
                "add": [["?item", "isOn", "TABLE1"], ["?item", "isIn", "LIVINGROOM"]],
                "del": [["?item", "isIn", "KITCHEN"]],
                "cost": {"robot": 1.0, "human": 1.0},
                "realize": {"kind": "transport", "obj": "?item", "to": "TABLE1"},
                "durationBound": 40,
            },
            "finish_bring": {
                "params": ["item"],
                "agents": ["robot", "human"],
                "pre": [["?agent", "isHolding", "?item"]],
                "add": [["?item", "isOn", "TABLE1"], ["?item", "isIn", "LIVINGROOM"]],
                "del": [["?agent", "isHolding", "?item"]],
                "cost": {"robot": 0.5, "human": 0.5},
                "realize": {"kind": "transport", "obj": "?item", "to": "TABLE1"},
                "durationBound": 40,
            },
        },
    }


def kitchen_doc(human_kind: str = "Cooperative", seed: int = 42) -> dict:
    """Two rooms, robot + BOB, MUG and BOTTLE on the kitchen counter; BOB
    starts falsely believing the MUG is in the living room."""
    return {
        "name": "kitchen",
        "grid": kitchen_grid(),
        "entities": [
            {"id": "ROBOT", "kind": "robot", "pos": [3, 2], "heading": "E"},
            {"id": "BOB", "kind": "human", "pos": [7, 1], "heading": "W"},
            {"id": "MUG", "type": "mug", "pos": [1, 1], "props": {"isFull": False}},
            {"id": "BOTTLE", "type": "bottle", "pos": [2, 1]},
        ],
        "props": {"isFull": [True, False]},
        "goals": [{"id": "serve", "task": "serve_drinks", "tickBudget": 120}],
        "domain": {"htn": kitchen_htn(), "policy": {"mode": "EFFICIENT"}},
        "humans": {
            "BOB": {
                "kind": human_kind,
                "seed": seed,
                "initialBeliefs": [["MUG", "isIn", "LIVINGROOM"]],
            },
        },
        "seed": seed,
    }


def trivial_doc() -> dict:
    """Goal condition already true at load time."""
    doc = kitchen_doc()
    doc["name"] = "trivial"
    for ent in doc["entities"]:
        if ent["id"] == "MUG":
            ent["pos"] = [7, 3]
        if ent["id"] == "BOTTLE":
            ent["pos"] = [8, 3]
    doc["humans"]["BOB"].pop("initialBeliefs", None)
    doc["goals"] = [{"id": "serve", "task": "serve_drinks", "tickBudget": 20}]
    return doc


def handover_doc(partner_kind: str = "Cooperative", seed: int = 1) -> dict:
    """Robot fetches the MUG and hands it to BOB; long room so a reluctant
    partner has space to walk away."""
    return {
        "name": "handover",
        "grid": {
            "rows": ["################",
                     "#RRRRRRRRRRRRRR#",
                     "#RRRRRRRRRRRRRR#",
                     "#RRRRRRRRRRRRRR#",
                     "################"],
            "legend": {"R": "DEN"},
            "workspaces": {"SHELF": [[1, 1]]},
        },
        "entities": [
            {"id": "ROBOT", "kind": "robot", "pos": [2, 2], "heading": "E"},
            {"id": "BOB", "kind": "human", "pos": [5, 2], "heading": "W"},
            {"id": "MUG", "type": "mug", "pos": [1, 1]},
        ],
        "goals": [{"id": "hand", "task": "hand_mug", "tickBudget": 60}],
        "domain": {
            "htn": {
                "tasks": {
                    "hand_mug": {"params": [],
                                 "achieved": [["BOB", "isHolding", "MUG"]]},
                },
                "methods": [
                    {"task": "hand_mug", "name": "fetch_and_give",
                     "subtasks": [
                         {"name": "grab", "args": ["MUG"], "agent": "robot"},
                         {"name": "give_object", "args": ["MUG", "BOB"],
                          "agent": "robot"},
                     ],
                     "ordering": [[0, 1]]},
                ],
                "operators": {
                    "grab": {
                        "params": ["item"],
                        "agents": ["robot"],
                        "pre": [["?item", "isOn", "SHELF"]],
                        "add": [["ROBOT", "isHolding", "?item"]],
                        "del": [["?item", "isOn", "SHELF"]],
                        "cost": {"robot": 1.0},
                        "realize": {"kind": "pick", "obj": "?item"},
                    },
                    "give_object": {
                        "params": ["item", "recipient"],
                        "agents": ["robot"],
                        "pre": [["ROBOT", "isHolding", "?item"]],
                        "add": [["?recipient", "isHolding", "?item"]],
                        "del": [["ROBOT", "isHolding", "?item"]],
                        "cost": {"robot": 1.0},
                        "realize": {"kind": "handover", "obj": "?item",
                                    "to": "?recipient"},
                    },
                },
            },
        },
        "humans": {"BOB": {"kind": partner_kind, "seed": seed}},
        "seed": seed,
    }


def walkaway_script() -> list:
    """BOB glances once, then keeps walking away from the robot."""
    return (
        [{"kind": "look_at", "target": "ROBOT"}]
        + [{"kind": "move", "direction": "E"}] * 8
        + [{"kind": "wait"}] * 40
    )


def table_setting_domain() -> dict:
    """Planner fixture: each of two items fetched by either agent."""
    return {
        "tasks": {
            "set_table": {"params": []},
            "fetch": {"params": ["item"]},
        },
        "methods": [
            {"task": "set_table", "name": "both",
             "subtasks": [{"name": "fetch", "args": ["FORK"]},
                          {"name": "fetch", "args": ["PLATE"]}]},
            {"task": "fetch", "name": "carry",
             "subtasks": [{"name": "carry_to_table", "args": ["?item"],
                           "agent": "?any"}]},
        ],
        "operators": {
            "carry_to_table": {
                "params": ["item"],
                "agents": ["robot", "human"],
                "pre": [["?item", "isIn", "STORAGE"]],
                "add": [["?item", "isOn", "TABLE"]],
                "del": [["?item", "isIn", "STORAGE"]],
                "cost": {"robot": 1.0, "human": 1.0},
            },
        },
    }


def table_setting_facts() -> list:
    return [["FORK", "isIn", "STORAGE"], ["PLATE", "isIn", "STORAGE"]]


# mu > 2*lambda makes the unknown-task term outweigh effort balance, so
# EFFICIENT strictly prefers keeping unfamiliar work off the human and
# TEACH strictly prefers handing it over.
TABLE_LAMBDA = 0.5
TABLE_MU = 1.5


def with_human(doc: dict, kind: str, **kwargs) -> dict:
    out = copy.deepcopy(doc)
    for hdata in out["humans"].values():
        hdata["kind"] = kind
        hdata.update(kwargs)
    return out
