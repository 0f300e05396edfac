#!/usr/bin/env python3
"""Intention recognition under a false belief, tick by tick.

BOB believes the mug is still in the west room and walks that way. Scored
against his believed state the walk is rational and the fetch-mug
posterior climbs past the adoption threshold; scored against the true
world state (mug moved east) the same actions look aimless. The robot
adopts the goal, fetches the mug from where it really is, and hands it
over.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from coact import runner

SCENARIO = pathlib.Path(__file__).resolve().parents[1] / "scenarios" / "false_belief.json"


def main():
    report, lines, session = runner.run(str(SCENARIO))
    for rec in session.records:
        moved = [f"{e['actor']}:{e['action']['kind']}"
                 f"{'(' + e['action'].get('direction', '') + ')' if e['action'].get('direction') else ''}"
                 for e in rec.events if e["action"]["kind"] != "wait"]
        posterior = ""
        if rec.posterior:
            posterior = "  P(fetch_mug)=%.4f" % rec.posterior["fetch_mug"]
        goal = f"  goal={rec.goal}" if rec.goal else ""
        engagement = ""
        if rec.engagement:
            engagement = f"  handover={rec.engagement['session']['phase']}"
        print(f"tick {rec.tick:2d}  {' '.join(moved):40s}{posterior}{goal}{engagement}")
    print(f"\nachieved={report.goal_achieved} in {report.ticks_elapsed} ticks; "
          f"BOB holds {session.world.agents['BOB'].holding}")


if __name__ == "__main__":
    main()
