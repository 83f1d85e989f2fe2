"""Discrete memoryless MAC with two binary covert inputs and one finite input.

The channel is a pair of conditional probability matrices: ``gamma_y`` to the
legitimate receiver and ``gamma_z`` to the warden.  Rows are indexed by the
input triple (x1, x2, x3) in lexicographic order with x3 fastest, i.e. row
``x1*(2*x3_size) + x2*x3_size + x3``.  Input symbol 0 is the off-symbol for
the two covert users.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

ROW_SUM_TOL_INTERNAL = 1e-12   # invariant after load
ROW_SUM_TOL_INPUT = 1e-9       # accepted slack in user-supplied files

SIDE_Y = "Y"
SIDE_Z = "Z"


class ChannelFormatError(ValueError):
    """Raised when a channel file fails to parse or validate."""


@dataclass(frozen=True)
class Dmc:
    """Validated, immutable channel pair.

    ``ac_violations`` lists the x3 symbols where the warden rows of the
    covert-on inputs put mass outside the support of the all-off row; the
    chi-square distance is infinite there, everything else still works.
    """

    x3_size: int
    y_size: int
    z_size: int
    gamma_y: np.ndarray
    gamma_z: np.ndarray
    ac_violations: tuple[int, ...] = field(default=())

    def __post_init__(self):
        gy = np.ascontiguousarray(np.asarray(self.gamma_y, dtype=float))
        gz = np.ascontiguousarray(np.asarray(self.gamma_z, dtype=float))
        gy.setflags(write=False)
        gz.setflags(write=False)
        object.__setattr__(self, "gamma_y", gy)
        object.__setattr__(self, "gamma_z", gz)

    @property
    def n_rows(self) -> int:
        return 4 * self.x3_size

    def row_index(self, x1: int, x2: int, x3: int) -> int:
        if x1 not in (0, 1) or x2 not in (0, 1):
            raise IndexError(f"covert inputs must be bits, got ({x1}, {x2})")
        if not 0 <= x3 < self.x3_size:
            raise IndexError(f"x3={x3} out of range [0, {self.x3_size})")
        return x1 * (2 * self.x3_size) + x2 * self.x3_size + x3

    def row(self, side: str, x1: int, x2: int, x3: int) -> np.ndarray:
        """Conditional output distribution for one input triple."""
        idx = self.row_index(x1, x2, x3)
        if side == SIDE_Y:
            return self.gamma_y[idx]
        if side == SIDE_Z:
            return self.gamma_z[idx]
        raise ValueError(f"side must be {SIDE_Y!r} or {SIDE_Z!r}, got {side!r}")

    def to_dict(self) -> dict:
        return {
            "x3_size": self.x3_size,
            "y_size": self.y_size,
            "z_size": self.z_size,
            "gamma_y": [[float(v) for v in r] for r in self.gamma_y],
            "gamma_z": [[float(v) for v in r] for r in self.gamma_z],
        }

    def canonical_json(self) -> str:
        # repr-based float serialization keeps load -> save -> load bit-exact
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def _validate_matrix(name: str, mat, n_rows: int, n_cols: int) -> np.ndarray:
    arr = np.asarray(mat, dtype=float)
    if arr.shape != (n_rows, n_cols):
        raise ChannelFormatError(
            f"{name}: expected shape ({n_rows}, {n_cols}), got {arr.shape}")
    if np.any(arr < 0):
        raise ChannelFormatError(f"{name}: negative entries")
    sums = arr.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL_INPUT)[0]
    if bad.size:
        raise ChannelFormatError(
            f"{name}: row {bad[0]} sums to {sums[bad[0]]!r}, not 1 within "
            f"{ROW_SUM_TOL_INPUT}")
    # renormalize only rows outside the internal tolerance; rows that are
    # already clean stay bit-identical so load -> save -> load is the identity
    arr = arr.copy()
    fix = np.abs(sums - 1.0) > ROW_SUM_TOL_INTERNAL
    arr[fix] = arr[fix] / sums[fix, None]
    return arr


def _find_ac_violations(gz: np.ndarray, x3_size: int) -> tuple[int, ...]:
    bad = []
    for x3 in range(x3_size):
        off = gz[x3]                                     # (0,0,x3)
        on1 = gz[1 * (2 * x3_size) + 0 * x3_size + x3]   # (1,0,x3)
        on2 = gz[0 * (2 * x3_size) + 1 * x3_size + x3]   # (0,1,x3)
        null = off == 0.0
        if np.any(null & ((on1 > 0) | (on2 > 0))):
            bad.append(x3)
    return tuple(bad)


def from_dict(doc: dict) -> Dmc:
    try:
        x3_size = int(doc["x3_size"])
        y_size = int(doc["y_size"])
        z_size = int(doc["z_size"])
    except (KeyError, TypeError, ValueError) as e:
        raise ChannelFormatError(f"bad or missing size field: {e}") from e
    if x3_size < 1 or y_size < 1 or z_size < 1:
        raise ChannelFormatError("sizes must be positive")
    n_rows = 4 * x3_size
    gy = _validate_matrix("gamma_y", doc.get("gamma_y"), n_rows, y_size)
    gz = _validate_matrix("gamma_z", doc.get("gamma_z"), n_rows, z_size)
    return Dmc(x3_size=x3_size, y_size=y_size, z_size=z_size,
               gamma_y=gy, gamma_z=gz,
               ac_violations=_find_ac_violations(gz, x3_size))


def load_channel(path) -> Dmc:
    """Load and validate a channel file (JSON with the documented fields)."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise ChannelFormatError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ChannelFormatError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ChannelFormatError(f"{path}: top level must be an object")
    return from_dict(doc)


def save_channel(d: Dmc, path) -> None:
    with open(path, "w") as f:
        f.write(json.dumps(d.to_dict(), indent=1))
        f.write("\n")


def paper_channel() -> Dmc:
    """The six-output example channel shipped with the package."""
    text = resources.files("covertmac.data").joinpath("paper_channel.json").read_text()
    return from_dict(json.loads(text))
