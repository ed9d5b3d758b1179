"""Ternary occupancy voxel grid and the plain-text scene file format.

States: 0 = Unknown, 1 = Free, 2 = Occupied. A ground-truth scene contains
no Unknown voxels; a robot map starts all Unknown.

Scene file layout (text):
    voxscene 1
    dims nx ny nz
    res v
    origin ox oy oz
    <nz blocks, blank-line separated, one per z slice;
     each block has ny lines of nx chars from {O,F,U}; row = y, column = x>
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNKNOWN = np.uint8(0)
FREE = np.uint8(1)
OCCUPIED = np.uint8(2)

_CHAR_OF = {0: "U", 1: "F", 2: "O"}
_STATE_OF = {"U": 0, "F": 1, "O": 2}


class SceneParseError(ValueError):
    """Malformed scene file; carries the 1-based offending line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class VoxelGrid:
    """Axis-aligned voxel grid. states has shape (nx, ny, nz), dtype uint8.

    origin is the world position of the corner of voxel (0,0,0); the center
    of voxel (i,j,k) is origin + (i+0.5, j+0.5, k+0.5) * res.
    """

    states: np.ndarray
    res: float
    origin: np.ndarray

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.uint8)
        if self.states.ndim != 3:
            raise ValueError("states must be 3D")
        self.res = float(self.res)
        if self.res <= 0.0:
            raise ValueError("resolution must be positive")
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)

    @classmethod
    def full(cls, dims, res: float, origin=(0.0, 0.0, 0.0), state=UNKNOWN) -> "VoxelGrid":
        nx, ny, nz = dims
        return cls(np.full((nx, ny, nz), state, dtype=np.uint8), res, np.asarray(origin, float))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.states.shape  # type: ignore[return-value]

    def index_of(self, point) -> tuple[int, int, int]:
        """Voxel index containing a world point (floor convention)."""
        rel = (np.asarray(point, dtype=np.float64) - self.origin) / self.res
        return tuple(int(np.floor(c)) for c in rel)  # type: ignore[return-value]

    def center_of(self, index) -> np.ndarray:
        return self.origin + (np.asarray(index, dtype=np.float64) + 0.5) * self.res

    def in_bounds(self, index) -> bool:
        i, j, k = index
        nx, ny, nz = self.states.shape
        return 0 <= i < nx and 0 <= j < ny and 0 <= k < nz

    def state_at(self, point) -> int:
        idx = self.index_of(point)
        if not self.in_bounds(idx):
            return int(UNKNOWN)
        return int(self.states[idx])

    def known_count(self) -> int:
        return int(np.count_nonzero(self.states != UNKNOWN))

    def copy(self) -> "VoxelGrid":
        return VoxelGrid(self.states.copy(), self.res, self.origin.copy())

    def is_scene(self) -> bool:
        """True when the grid has no Unknown voxels (a ground-truth scene)."""
        return not bool(np.any(self.states == UNKNOWN))


def save_scene(path, grid: VoxelGrid) -> None:
    nx, ny, nz = grid.dims
    lut = np.array([ord("U"), ord("F"), ord("O")], dtype=np.uint8)
    lines = [
        "voxscene 1",
        f"dims {nx} {ny} {nz}",
        f"res {grid.res!r}",
        f"origin {float(grid.origin[0])!r} {float(grid.origin[1])!r} {float(grid.origin[2])!r}",
    ]
    for k in range(nz):
        lines.append("")
        sl = lut[grid.states[:, :, k]]  # (nx, ny)
        for j in range(ny):
            lines.append(sl[:, j].tobytes().decode("ascii"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_scene(path) -> VoxelGrid:
    with open(path) as fh:
        raw = fh.read().split("\n")

    def fail(msg, ln):
        raise SceneParseError(msg, ln)

    if not raw or raw[0].strip() != "voxscene 1":
        fail("expected header 'voxscene 1'", 1)
    parts = raw[1].split() if len(raw) > 1 else []
    if len(parts) != 4 or parts[0] != "dims":
        fail("expected 'dims nx ny nz'", 2)
    try:
        nx, ny, nz = (int(p) for p in parts[1:])
    except ValueError:
        fail("dims must be integers", 2)
    if nx <= 0 or ny <= 0 or nz <= 0:
        fail("dims must be positive", 2)
    parts = raw[2].split() if len(raw) > 2 else []
    if len(parts) != 2 or parts[0] != "res":
        fail("expected 'res v'", 3)
    try:
        res = float(parts[1])
    except ValueError:
        fail("res must be a number", 3)
    if res <= 0.0:
        fail("res must be positive", 3)
    parts = raw[3].split() if len(raw) > 3 else []
    if len(parts) != 4 or parts[0] != "origin":
        fail("expected 'origin ox oy oz'", 4)
    try:
        origin = np.array([float(p) for p in parts[1:]])
    except ValueError:
        fail("origin must be numbers", 4)

    states = np.empty((nx, ny, nz), dtype=np.uint8)
    ln = 4  # 0-based index of the next line to read
    for k in range(nz):
        if ln >= len(raw) or raw[ln].strip() != "":
            fail(f"expected blank line before z slice {k}", ln + 1)
        ln += 1
        for j in range(ny):
            if ln >= len(raw):
                fail(f"missing row y={j} of z slice {k}", ln + 1)
            row = raw[ln]
            if len(row) != nx:
                fail(f"row has {len(row)} cells, expected {nx}", ln + 1)
            try:
                states[:, j, k] = [_STATE_OF[c] for c in row]
            except KeyError:
                fail("cell characters must be one of O, F, U", ln + 1)
            ln += 1
    for extra in range(ln, len(raw)):
        if raw[extra].strip() != "":
            fail("trailing content after final z slice", extra + 1)
    return VoxelGrid(states, res, origin)


def free_is_connected(grid: VoxelGrid) -> bool:
    """True when all Free voxels form one 6-connected component."""
    from scipy import ndimage

    free = grid.states == FREE
    if not free.any():
        return False
    structure = ndimage.generate_binary_structure(3, 1)
    _, count = ndimage.label(free, structure=structure)
    return count == 1
