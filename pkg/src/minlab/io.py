"""JSON bundles for fields and immersions, OBJ and PLY mesh export.

Floats are written with Python's shortest round-trip repr, so a field saved
and reloaded compares equal bit for bit.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .base import BaseManifold
from .errors import BundleFormatError
from .immersion import Immersion, gauss_equation_residual
from .wdata import GridDomain

BUNDLE_FORMAT = "minlab-immersion"
BUNDLE_VERSION = 1
CHANNELS = ("K", "N3", "omega", "gaussResidual")


# ---------------------------------------------------------------------------
# fields


def field_to_dict(grid: GridDomain, values: np.ndarray) -> dict:
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(values):
        flat = np.stack([values.real, values.imag], -1).reshape(-1, 2)
        return {"grid": grid.as_dict(), "kind": "complex", "values": flat.tolist()}
    return {"grid": grid.as_dict(), "kind": "real", "values": values.astype(float).ravel().tolist()}


def field_from_dict(d: dict):
    """Inverse of :func:`field_to_dict`; returns ``(grid, values)``."""
    try:
        grid = GridDomain.from_dict(d["grid"])
        kind = d["kind"]
        raw = np.asarray(d["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"malformed field: {exc}") from exc
    n = grid.n_u * grid.n_v
    if kind == "complex":
        if raw.shape != (n, 2):
            raise BundleFormatError(f"complex field needs {n} [re, im] pairs")
        return grid, (raw[:, 0] + 1j * raw[:, 1]).reshape(grid.shape)
    if kind == "real":
        if raw.shape != (n,):
            raise BundleFormatError(f"real field needs {n} values")
        return grid, raw.reshape(grid.shape)
    raise BundleFormatError(f"unknown field kind {kind!r}")


# ---------------------------------------------------------------------------
# immersion bundles


@dataclass
class ImmersionBundle:
    """What gets written to disk: the sampled immersion plus provenance."""

    imm: Immersion
    entry: Optional[str] = None
    params: Dict[str, float] = field(default_factory=dict)
    theta: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        imm = self.imm
        g = imm.grid
        ic, jc = g.center
        return {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "manifold": imm.manifold.value,
            "etaSign": int(imm.wf.eta_sign),
            "anchor": {"iV": ic, "jU": jc, "f": float(imm.f[ic, jc])},
            "convention": imm.wf.convention,
            "entry": self.entry,
            "params": dict(self.params),
            "theta": float(self.theta),
            "extra": self.extra,
            "fields": {
                "h": field_to_dict(g, imm.h),
                "hw": field_to_dict(g, imm.hfield.hw),
                "hwb": field_to_dict(g, imm.hfield.hwb),
                "f": field_to_dict(g, imm.f),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImmersionBundle":
        if d.get("format") != BUNDLE_FORMAT:
            raise BundleFormatError("not an immersion bundle")
        try:
            M = BaseManifold.parse(d["manifold"])
            fields = d["fields"]
            grid, h = field_from_dict(fields["h"])
            _, hw = field_from_dict(fields["hw"])
            _, hwb = field_from_dict(fields["hwb"])
            _, f = field_from_dict(fields["f"])
        except (KeyError, ValueError) as exc:
            raise BundleFormatError(f"malformed bundle: {exc}") from exc
        imm = Immersion.build(M, grid, h, f, hw, hwb, convention=d.get("convention", "omega2"),
                              check_zeros=False)
        if imm.wf.eta_sign != d.get("etaSign", imm.wf.eta_sign):
            raise BundleFormatError("stored eta sign disagrees with the reloaded height")
        return cls(imm, d.get("entry"), dict(d.get("params") or {}), float(d.get("theta", 0.0)),
                   dict(d.get("extra") or {}))


def save_bundle(bundle: ImmersionBundle, path: str) -> None:
    """Write atomically: a temporary file in the same directory, then rename."""
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(bundle.to_dict(), fh)
    os.replace(tmp, path)


def load_bundle(path: str) -> ImmersionBundle:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BundleFormatError(f"{path}: {exc}") from exc
    return ImmersionBundle.from_dict(d)


# ---------------------------------------------------------------------------
# meshes


@dataclass
class MeshBundle:
    vertices: np.ndarray  # (n, 3): x, y, t in chart coordinates
    faces: np.ndarray  # (m, 4) quads, zero-based
    channels: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = self.vertices.shape[0]
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= n):
            raise ValueError("face index out of range")
        for name, ch in self.channels.items():
            if ch.shape != (n,):
                raise ValueError(f"channel {name} has {ch.shape} entries, expected {n}")


def mesh_from_immersion(imm: Immersion, channels=CHANNELS) -> MeshBundle:
    """Quad mesh of the sample grid; vertex k = i_v * nU + j_u.

    Curvature channels are NaN on the outer ring, where the Laplacian is undefined.
    """
    nv, nu = imm.grid.shape
    if nv < 2 or nu < 2:
        raise ValueError("a mesh needs at least two samples in each direction")
    verts = np.stack([imm.h.real.ravel(), imm.h.imag.ravel(), imm.f.ravel()], 1)
    idx = np.arange(nv * nu).reshape(nv, nu)
    faces = np.stack([idx[:-1, :-1], idx[:-1, 1:], idx[1:, 1:], idx[1:, :-1]], -1).reshape(-1, 4)
    out = {}
    if "K" in channels or "gaussResidual" in channels:
        cb = gauss_equation_residual(imm)
        out["K"] = cb.K
        out["gaussResidual"] = cb.gauss_residual
    out["N3"] = imm.N3
    out["omega"] = imm.wf.omega2
    return MeshBundle(verts, faces, {name: np.asarray(out[name], float).ravel() for name in channels})


def write_obj(mesh: MeshBundle, path: str) -> None:
    """``v x y t`` lines, then one-based ``f a b c d`` quads.  Channels go in comments."""
    with open(path, "w") as fh:
        fh.write("# minlab mesh in chart coordinates (x, y, t)\n")
        fh.write(f"# channels (one '# c' line per vertex, same order): {' '.join(mesh.channels)}\n")
        for x, y, t in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {t!r}\n")
        if mesh.channels:
            cols = np.stack(list(mesh.channels.values()), 1)
            for row in cols.tolist():
                fh.write("# c " + " ".join(repr(c) for c in row) + "\n")
        for q in (mesh.faces + 1).tolist():
            fh.write(f"f {q[0]} {q[1]} {q[2]} {q[3]}\n")


def write_ply(mesh: MeshBundle, path: str) -> None:
    """Binary little-endian PLY.

    Vertex record: float32 x, y, t followed by one float32 per channel.
    Face record: uint8 count (always 4) followed by four int32 indices.
    """
    names = ["x", "y", "t"] + list(mesh.channels)
    vdt = np.dtype([(n, "<f4") for n in names])
    vert = np.empty(mesh.vertices.shape[0], dtype=vdt)
    for k, n in enumerate("xyt"):
        vert[n] = mesh.vertices[:, k]
    for n, ch in mesh.channels.items():
        vert[n] = ch
    fdt = np.dtype([("n", "u1"), ("idx", "<i4", (4,))])
    face = np.empty(mesh.faces.shape[0], dtype=fdt)
    face["n"] = 4
    face["idx"] = mesh.faces
    header = ["ply", "format binary_little_endian 1.0", "comment minlab chart coordinates",
              f"element vertex {vert.size}"]
    header += [f"property float {n}" for n in names]
    header += [f"element face {face.size}", "property list uchar int vertex_indices", "end_header"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(vert.tobytes())
        fh.write(face.tobytes())


def read_ply(path: str) -> MeshBundle:
    """Reader for the files produced by :func:`write_ply` (used by the tests)."""
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.index(b"end_header\n") + len(b"end_header\n")
    lines = data[:end].decode("ascii").splitlines()
    names, nv, nf = [], 0, 0
    for ln in lines:
        parts = ln.split()
        if parts[:2] == ["element", "vertex"]:
            nv = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            nf = int(parts[2])
        elif parts[:2] == ["property", "float"]:
            names.append(parts[2])
    vdt = np.dtype([(n, "<f4") for n in names])
    vert = np.frombuffer(data, vdt, nv, end)
    face = np.frombuffer(data, np.dtype([("n", "u1"), ("idx", "<i4", (4,))]), nf, end + nv * vdt.itemsize)
    xyz = np.stack([vert[n].astype(float) for n in "xyt"], 1)
    return MeshBundle(xyz, face["idx"].astype(np.int64), {n: vert[n].astype(float) for n in names[3:]})
