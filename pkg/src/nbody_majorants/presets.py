"""Bundled initial states and the JSON system file format.

A system file looks like::

    {"unit_system": {"length": "AU", "time": "day", "mass": "solar",
                     "G": 0.0002959122082855911},
     "bodies": [{"name": "Sun", "gm": ..., "q": [x, y, z], "v": [vx, vy, vz]}, ...]}

``gm`` is the gravitational parameter ``G m`` in ``length^3 / time^2``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InvalidParametersError
from .nbody import G_AU_DAY_MSUN, SystemState, reduce_to_barycenter

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

SYSTEM_SCHEMA = {
    "type": "object",
    "required": ["unit_system", "bodies"],
    "properties": {
        "unit_system": {
            "type": "object",
            "required": ["length", "time", "G"],
            "properties": {
                "length": {"type": "string"},
                "time": {"type": "string"},
                "mass": {"type": "string"},
                "G": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "bodies": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "required": ["gm", "q", "v"],
                "properties": {
                    "name": {"type": "string"},
                    "gm": {"type": "number", "minimum": 0},
                    "q": _VEC3,
                    "v": _VEC3,
                },
            },
        },
        "test_particles": {"type": "boolean"},
    },
}

CANONICAL_UNITS = {"length": "canonical", "time": "canonical", "mass": "canonical", "G": 1.0}
SOLAR_UNITS = {"length": "AU", "time": "day", "mass": "solar", "G": G_AU_DAY_MSUN}


def state_from_dict(d: dict) -> SystemState:
    try:
        jsonschema.validate(d, SYSTEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvalidParametersError(f"invalid system description: {exc.message}") from exc
    bodies = d["bodies"]
    return SystemState(
        gm=[b["gm"] for b in bodies],
        q=[b["q"] for b in bodies],
        v=[b["v"] for b in bodies],
        G=float(d["unit_system"]["G"]),
        names=tuple(b.get("name", f"body{i}") for i, b in enumerate(bodies)),
        test_particles=bool(d.get("test_particles", False)),
    )


def state_to_dict(state: SystemState, units: dict | None = None) -> dict:
    units = dict(units or {"length": "unspecified", "time": "unspecified"})
    units["G"] = state.G
    return {
        "unit_system": units,
        "bodies": [
            {"name": nm, "gm": float(g), "q": [float(x) for x in q], "v": [float(x) for x in v]}
            for nm, g, q, v in zip(state.names, state.gm, state.q, state.v)
        ],
    }


def load_system(path: str | Path) -> SystemState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))


def save_system(state: SystemState, path: str | Path, units: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state, units), fh, indent=2)


def two_body(e: float = 0.0, gm=(1.0, 0.1), a: float = 1.0, at: str = "apocenter") -> SystemState:
    """Barycentric two-body ellipse in canonical units, starting at apocentre or pericentre."""
    if not 0.0 <= e < 1.0:
        raise InvalidParametersError("eccentricity must lie in [0, 1)")
    mu = gm[0] + gm[1]
    if at == "apocenter":
        r = a * (1.0 + e)
    elif at == "pericenter":
        r = a * (1.0 - e)
    else:
        raise InvalidParametersError("at must be 'apocenter' or 'pericenter'")
    speed = math.sqrt(mu * (2.0 / r - 1.0 / a))
    st = SystemState(
        gm=list(gm),
        q=[[0.0, 0.0, 0.0], [r, 0.0, 0.0]],
        v=[[0.0, 0.0, 0.0], [0.0, speed, 0.0]],
        G=1.0,
        names=("primary", "secondary"),
    )
    return reduce_to_barycenter(st)


def figure_eight() -> SystemState:
    """Equal-mass periodic three-body choreography (period about 6.3259)."""
    x1 = [0.97000436, -0.24308753, 0.0]
    v3 = [-0.93240737, -0.86473146, 0.0]
    return SystemState(
        gm=[1.0, 1.0, 1.0],
        q=[x1, [-x1[0], -x1[1], 0.0], [0.0, 0.0, 0.0]],
        v=[[-v3[0] / 2, -v3[1] / 2, 0.0], [-v3[0] / 2, -v3[1] / 2, 0.0], v3],
        G=1.0,
        names=("a", "b", "c"),
    )


FIGURE_EIGHT_PERIOD = 6.32591398

# Approximate gravitational parameters (AU^3/day^2) and mean orbital radii (AU);
# enough for a synthetic solar-system-like test case, not an ephemeris.
_SYNTHETIC = [
    ("Sun", 2.9591220828559115e-04, 0.0),
    ("Mercury", 4.9125474514508119e-11, 0.387),
    ("Venus", 7.2434524861627027e-10, 0.723),
    ("Earth", 8.8876924467071e-10, 1.000),
    ("Moon", 1.0931894624024351e-11, 1.00257),
    ("Mars", 9.5495351057792581e-11, 1.524),
    ("Jupiter", 2.8253458420837780e-07, 5.203),
    ("Saturn", 8.4597151856806587e-08, 9.537),
    ("Uranus", 1.2920249167819693e-08, 19.19),
    ("Neptune", 1.5243589007842762e-08, 30.07),
    ("Pluto", 2.1750964648933581e-12, 39.48),
    ("Ceres", 1.4004765625463623e-13, 2.767),
    ("Pallas", 3.1044481989387130e-14, 2.772),
    ("Vesta", 3.8548000225257904e-14, 2.362),
    ("Juno", 3.9e-15, 2.669),
]


def synthetic_solar_system(seed: int = 0) -> SystemState:
    """Fifteen bodies on near-circular, slightly inclined orbits in AU and days.

    A stand-in for a user-supplied ephemeris file; masses and radii are
    rounded solar-system values and phases are random.  The Moon is placed
    on a circular orbit around the Earth.
    """
    rng = np.random.default_rng(seed)
    names, gm, q, v = [], [], [], []
    gm_sun = _SYNTHETIC[0][1]
    earth = None
    for name, g, r in _SYNTHETIC:
        names.append(name)
        gm.append(g)
        if r == 0.0:
            q.append(np.zeros(3))
            v.append(np.zeros(3))
            continue
        if name == "Moon":
            eq, ev = earth
            dr = 0.00257
            ph = rng.uniform(0, 2 * math.pi)
            u = np.array([math.cos(ph), math.sin(ph), 0.0])
            w = np.array([-math.sin(ph), math.cos(ph), 0.0])
            sp = math.sqrt((_SYNTHETIC[3][1] + g) / dr)
            q.append(eq + dr * u)
            v.append(ev + sp * w)
            continue
        ph = rng.uniform(0, 2 * math.pi)
        inc = rng.uniform(0, 0.05)
        u = np.array([math.cos(ph), math.sin(ph) * math.cos(inc), math.sin(ph) * math.sin(inc)])
        w = np.array([-math.sin(ph), math.cos(ph) * math.cos(inc), math.cos(ph) * math.sin(inc)])
        sp = math.sqrt((gm_sun + g) / r)
        q.append(r * u)
        v.append(sp * w)
        if name == "Earth":
            earth = (q[-1], v[-1])
    st = SystemState(gm=gm, q=q, v=v, G=G_AU_DAY_MSUN, names=tuple(names))
    return reduce_to_barycenter(st)


PRESETS = {
    "circular": lambda: two_body(0.0),
    "ellipse099": lambda: two_body(0.99),
    "figure8": figure_eight,
    "synthetic15": synthetic_solar_system,
}

PRESET_UNITS = {"circular": CANONICAL_UNITS, "ellipse099": CANONICAL_UNITS, "figure8": CANONICAL_UNITS,
                "synthetic15": SOLAR_UNITS}


def get_preset(name: str) -> SystemState:
    try:
        return PRESETS[name]()
    except KeyError:
        raise InvalidParametersError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
