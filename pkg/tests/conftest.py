import json
import math
from pathlib import Path

import pytest

from signsim.config import CameraConfig, SimulationConfig
from signsim.environment import (
    Environment, Floor, NamedPoint, SemanticModel, Sign, SignEntry, Task, TaskLeg,
)

SCENARIO_PATH = Path(__file__).resolve().parents[1] / "scenarios" / "station.json"


def rect_outline(width, height, x0=0.0, y0=0.0):
    return ((x0, y0), (x0 + width, y0), (x0 + width, y0 + height), (x0, y0 + height))


def make_sign(sign_id, x, y, facing_deg, floor="hall", width=1.0, height=0.5, z=1.6,
              color=(0.9, 0.1, 0.1), object_class="signage", entries=()):
    rad = math.radians(facing_deg)
    return Sign(
        id=sign_id, floor=floor, center=(x, y, z), normal=(math.cos(rad), math.sin(rad)),
        width=width, height=height, face_color=color, object_class=object_class,
        entries=tuple(entries),
    )


def make_env(signs=(), obstacles=(), width=40.0, height=40.0, goal_points=(), base_points=None):
    base_points = base_points if base_points is not None else (
        NamedPoint(id="bp_0", floor="hall", point=(1.0, 1.0)),
    )
    return Environment(
        floors=(Floor(id="hall", outline=rect_outline(width, height), obstacles=tuple(obstacles)),),
        signs=tuple(signs),
        base_points=tuple(base_points),
        goal_points=tuple(goal_points),
        semantic_model=SemanticModel(),
    )


@pytest.fixture
def camera():
    return CameraConfig()


@pytest.fixture
def station_document():
    return SCENARIO_PATH.read_text(encoding="utf-8")


def minimal_scenario_dict():
    """One floor, one sign, one leg; returned fresh so tests can mutate it."""
    return {
        "floors": [{"id": "hall", "outline": [[0, 0], [20, 0], [20, 10], [0, 10]], "obstacles": []}],
        "portals": [],
        "signs": [{
            "id": 1, "floor": "hall", "center": [10.0, 9.5, 2.0], "facing_deg": 270.0,
            "width": 1.2, "height": 0.5, "color": [0.1, 0.2, 0.8], "class": "signage",
            "entries": [{"label": "Exit", "action": "at_target"}],
        }],
        "base_points": [{"id": "bp_start", "floor": "hall", "point": [2.0, 5.0]}],
        "goal_points": [{"id": "gp_mid", "floor": "hall", "point": [10.0, 5.0]}],
        "semantic_model": {"relevance": {"signage": 1.0, "schedule": 0.8, "infrastructure": 0.6},
                           "background": 0.05},
        "task": {"legs": [{"start": "bp_start", "target_label": "Exit", "target": [18.0, 5.0],
                           "floor": "hall", "arrival_radius": 1.5}]},
        "config": {"master_seed": 1, "replications": 1, "agents_per_replication": 2},
    }


def minimal_scenario_text():
    return json.dumps(minimal_scenario_dict())
