"""JSON round-trips for quivers and the short quiver specs understood by the CLI."""

from __future__ import annotations

import json
from pathlib import Path as FsPath

from .errors import ValidationError
from .quiver import LatticeSpec, Quiver, add_self_loops, make_shifted_torus, make_torus


def quiver_to_json(q: Quiver) -> dict:
    out: dict = {"vertices": q.vertex_count, "edges": [list(e) for e in q.edges]}
    if q.distance is not None:
        out["distance"] = {str(e): r for e, r in enumerate(q.distance)}
    if q.parent is not None:
        out["parent"] = list(q.parent)
    meta = dict(q.meta)
    if q.lattice is not None:
        lat = q.lattice
        meta["lattice"] = {"d": lat.d, "m": lat.m, "self_loops": lat.self_loops, "a": lat.a, "tau": lat.tau}
    if meta:
        out["meta"] = meta
    return out


def quiver_from_json(data: dict) -> Quiver:
    if "lattice" in data:
        return make_torus(_lattice_spec(data["lattice"]))
    try:
        n = int(data["vertices"])
        edges = [tuple(e) for e in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed quiver JSON: {exc}") from None
    dist = None
    if "distance" in data:
        dist = [1.0] * len(edges)
        for k, r in data["distance"].items():
            dist[int(k)] = float(r)
    meta = dict(data.get("meta", {}))
    lat = meta.pop("lattice", None)
    return Quiver(n, tuple(edges), dist, data.get("parent"), _lattice_spec(lat) if lat else None, meta)


def _lattice_spec(d: dict) -> LatticeSpec:
    return LatticeSpec(
        int(d["d"]), int(d["m"]), bool(d.get("self_loops", False)), float(d.get("a", 1.0)), float(d.get("tau", 1.0))
    )


def _kv(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, text.split(",")):
        if "=" not in part:
            raise ValidationError(f"expected key=value in quiver spec, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _truthy(x: str) -> bool:
    return x.lower() in ("1", "true", "yes", "on")


def parse_quiver_spec(spec: str) -> Quiver:
    """Build a quiver from a file path or one of the short forms

    ``torus:d=2,m=3[,self_loops=1,a=0.5,tau=1]``, ``cycle:n=3``, ``complete:n=4[,self_loops=1]``,
    ``jordan[:loops=2]``, ``shifted:m=4``.
    """
    path = FsPath(spec)
    if path.suffix == ".json" or path.is_file():
        try:
            return quiver_from_json(json.loads(path.read_text()))
        except OSError as exc:
            raise ValidationError(f"cannot read quiver file {spec}: {exc}") from None
    kind, _, rest = spec.partition(":")
    kv = _kv(rest)
    try:
        if kind in ("torus", "lattice"):
            return make_torus(
                LatticeSpec(
                    int(kv["d"]),
                    int(kv["m"]),
                    _truthy(kv.get("self_loops", "0")),
                    float(kv.get("a", 1.0)),
                    float(kv.get("tau", 1.0)),
                )
            )
        if kind == "cycle":
            n = int(kv["n"])
            return Quiver(n, tuple((v, (v + 1) % n) for v in range(n)))
        if kind == "complete":
            n = int(kv["n"])
            q = Quiver(n, tuple((s, t) for s in range(n) for t in range(n) if s != t))
            return add_self_loops(q) if _truthy(kv.get("self_loops", "0")) else q
        if kind == "jordan":
            return Quiver(1, ((0, 0),) * int(kv.get("loops", 1)))
        if kind == "shifted":
            return make_shifted_torus(int(kv["m"]))
    except KeyError as exc:
        raise ValidationError(f"quiver spec {spec!r} is missing {exc}") from None
    raise ValidationError(f"unknown quiver spec {spec!r}")
