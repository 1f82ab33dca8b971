"""specquiver command line.

Every subcommand prints JSON (or CSV) on stdout. Validation problems exit
with code 1 and a JSON error on stderr; resource limits exit with code 2.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .dirac import (
    ActionPolynomial,
    dirac,
    relative_error,
    spectral_action,
    trace_power_insertion,
    trace_power_paths,
    trace_powers,
    wilson_loop,
)
from .errors import ResourceLimitError, ValidationError
from .io import parse_quiver_spec, quiver_from_json, quiver_to_json
from .lattice import (
    closed_walk_counts,
    coordination,
    d6_decomposition,
    lattice_trace_closed_form,
    loop_count_lattice,
    spectral_action_closed_form,
    weisz_wohlert_table,
)
from .mc import McConfig, estimate_partition, wilson_expectation
from .nct import (
    BratteliNetwork,
    _bratteli_cached,
    admissible_labelings,
    check_dimension_bound,
    enumerate_networks,
    full_matrix,
)
from .quiver import LatticeSpec, Path, Quiver, augment, make_torus, plaquettes
from .repcat import (
    Representation,
    gauge_transform,
    random_gauge_element,
    random_representation,
    rep_distance,
    to_module,
    to_representation,
)

# ---------------------------------------------------------------------------
# parsing helpers

_TERM = re.compile(r"^([+-]?\d*\.?\d*(?:[eE][+-]?\d+)?)\*?(x(?:\^(\d+))?)?$")


def parse_polynomial(text: str, scale: float = 1.0) -> ActionPolynomial:
    """Parse ``f0 + f1*x + ... + fK*x^K`` (decimal coefficients, terms in any order)."""
    s = text.replace(" ", "").replace("**", "^")
    if not s:
        raise ValidationError("empty polynomial")
    terms = [t for t in re.split(r"(?<![eE])(?=[+-])", s) if t]
    coeffs: dict[int, float] = {}
    for t in terms:
        m = _TERM.match(t)
        if not m or (not m.group(1).strip("+-") and not m.group(2)):
            raise ValidationError(f"cannot parse polynomial term {t!r}")
        c = m.group(1)
        coef = float(c + "1") if c in ("", "+", "-") else float(c)
        deg = 0 if not m.group(2) else int(m.group(3) or 1)
        coeffs[deg] = coeffs.get(deg, 0.0) + coef
    k = max(coeffs)
    return ActionPolynomial(tuple(coeffs.get(i, 0.0) for i in range(k + 1)), scale)


def _sha256(text: str | bytes) -> str:
    return hashlib.sha256(text if isinstance(text, bytes) else text.encode()).hexdigest()


class Context:
    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}

    def record(self, name: str, data: str | bytes):
        self.inputs[name] = _sha256(data)

    def metadata(self) -> dict:
        return {
            "version": __version__,
            "command": self.args.command,
            "seed": getattr(self.args, "seed", None),
            "inputs": self.inputs,
        }


def _read_json_arg(ctx: Context, name: str, value: str):
    raw = sys.stdin.read() if value == "-" else FsPath(value).read_text()
    ctx.record(name, raw)
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{name} is not valid JSON: {exc}") from None


def _load_quiver(ctx: Context) -> Quiver:
    a = ctx.args
    if getattr(a, "lattice", None):
        kv = dict(part.split("=", 1) for part in a.lattice.split(",") if "=" in part)
        flags = {part for part in a.lattice.split(",") if "=" not in part}
        spec = LatticeSpec(
            int(kv["d"]),
            int(kv["m"]),
            "self_loops" in flags or kv.get("self_loops", "0") in ("1", "true"),
            float(a.a if a.a is not None else kv.get("a", 1.0)),
            float(a.tau if a.tau is not None else kv.get("tau", 1.0)),
        )
        ctx.record("lattice", a.lattice)
        return make_torus(spec)
    if getattr(a, "quiver", None):
        if a.quiver == "-" or a.quiver.endswith(".json"):
            data = _read_json_arg(ctx, "quiver", a.quiver)
            return quiver_from_json(data.get("quiver", data))
        ctx.record("quiver", a.quiver)
        return parse_quiver_spec(a.quiver)
    raise ValidationError("give --quiver or --lattice")


def _first_network(q: Quiver, N: int, anchor) -> BratteliNetwork:
    for labels in admissible_labelings(q, N, anchor):
        diagrams = tuple(_bratteli_cached(labels[s], labels[t])[0] for s, t in q.edges)
        return BratteliNetwork(labels, diagrams)
    raise ValidationError(f"no Bratteli network for N={N}")


def _anchor(args, N):
    return None if getattr(args, "no_anchor", False) else {0: full_matrix(N)}


def _load_rep(ctx: Context) -> Representation:
    a = ctx.args
    if getattr(a, "repr", None):
        data = _read_json_arg(ctx, "repr", a.repr)
        return Representation.from_json(data.get("representation", data))
    q = _load_quiver(ctx)
    if a.N is None:
        raise ValidationError("give -N or --repr")
    if a.network is None:
        net = _first_network(q, a.N, _anchor(a, a.N))
    else:
        nets = enumerate_networks(q, a.N, anchor=_anchor(a, a.N))
        if not 0 <= a.network < len(nets):
            raise ValidationError(f"network index {a.network} out of range (0..{len(nets) - 1})")
        net = nets[a.network]
    rep = random_representation(q, net, a.seed)
    if a.unit:
        rep = Representation(q, net, tuple(np.eye(m.shape[0], m.shape[1], dtype=complex) for m in rep.L), rep.meta)
    return rep


def _lambda(args, q: Quiver) -> float:
    if args.lam is not None:
        return args.lam
    if q.lattice is not None and q.lattice.a != 1.0:
        return 1.0 / q.lattice.a
    return 1.0


def _emit(ctx: Context, payload: dict, csv_rows=None, header=None):
    fmt = ctx.args.out
    if fmt == "csv" and csv_rows is not None:
        print(",".join(header))
        for row in csv_rows:
            print(",".join(str(x) for x in row))
        return
    payload = dict(payload)
    payload["metadata"] = ctx.metadata()
    print(json.dumps(payload, indent=None if fmt == "compact" else 2, default=str))


def _figures_dir(args) -> FsPath | None:
    return FsPath(args.figures) if getattr(args, "figures", None) else None


# ---------------------------------------------------------------------------
# subcommands


def cmd_lattice(ctx: Context) -> int:
    q = _load_quiver(ctx)
    _emit(ctx, {"quiver": quiver_to_json(q)})
    return 0


def cmd_networks(ctx: Context) -> int:
    a = ctx.args
    q = _load_quiver(ctx)
    nets = enumerate_networks(q, a.N, anchor=_anchor(a, a.N), budget=a.budget)
    payload = {"quiver": quiver_to_json(q), "N": a.N, "anchored": not a.no_anchor, "count": len(nets)}
    if not a.count_only:
        payload["networks"] = [n.to_json() for n in nets]
    if a.bound:
        payload["bound"] = check_dimension_bound(q, a.N, nets)
    _emit(ctx, payload)
    return 0


def cmd_repr(ctx: Context) -> int:
    a = ctx.args
    if a.input:
        data = _read_json_arg(ctx, "networks", a.input)
        q = quiver_from_json(data["quiver"])
        nets = data["networks"]
        idx = a.network or 0
        if not 0 <= idx < len(nets):
            raise ValidationError(f"network index {idx} out of range")
        rep = random_representation(q, BratteliNetwork.from_json(nets[idx]), a.seed)
    else:
        rep = _load_rep(ctx)
    _emit(ctx, {"representation": rep.to_json()})
    return 0


def _route_value(rep: Representation, f: ActionPolynomial, route: str, limit: int) -> float:
    if route == "matrix":
        return spectral_action(rep, f)
    if route == "paths":
        return sum(c * trace_power_paths(rep, k, limit=limit) / f.scale**k for k, c in enumerate(f.coefficients) if c)
    if route == "insertion":
        return sum(c * trace_power_insertion(rep, k, limit=limit) / f.scale**k for k, c in enumerate(f.coefficients) if c)
    if route == "closed-form":
        return spectral_action_closed_form(rep, f).total
    raise ValidationError(f"unknown route {route!r}")


def cmd_action(ctx: Context) -> int:
    a = ctx.args
    rep = _load_rep(ctx)
    f = parse_polynomial(a.f, _lambda(a, rep.quiver))
    value = _route_value(rep, f, a.route, a.limit_loop_length)
    reference = spectral_action(rep, f)
    payload = {
        "route": a.route,
        "f": list(f.coefficients),
        "lambda": f.scale,
        "value": value,
        "matrix_value": reference,
        "rel_err": relative_error(value, reference),
    }
    if a.traces:
        D = dirac(rep)
        tr = trace_powers(D, f.degree)
        rows = []
        for k in range(f.degree + 1):
            row = {"k": k, "trace_matrix": float(tr[k].real)}
            if a.route in ("paths", "insertion"):
                fn = trace_power_paths if a.route == "paths" else trace_power_insertion
                row["trace_paths"] = fn(rep, k, limit=a.limit_loop_length)
                row["rel_err"] = relative_error(row["trace_paths"], row["trace_matrix"])
            elif a.route == "closed-form" and k <= 4:
                row["closed_form"] = lattice_trace_closed_form(rep, k).to_json()
            rows.append(row)
        payload["traces"] = rows
    if a.closed_form_report:
        payload["closed_form_report"] = spectral_action_closed_form(rep, f).to_json()
    fig = _figures_dir(a)
    if fig is not None:
        from .report import spectrum_figure

        payload["figures"] = [str(p) for p in spectrum_figure(fig, dirac(rep).spectrum())]
    _emit(ctx, payload, [(a.route, value, reference, payload["rel_err"])], ["route", "value", "matrix_value", "rel_err"])
    return 0


def cmd_d6(ctx: Context) -> int:
    a = ctx.args
    rep = _load_rep(ctx)
    dec = d6_decomposition(rep, exhaustive=not a.fast)
    D = dirac(rep)
    dense = float(trace_powers(D, 6)[6].real)
    table = weisz_wohlert_table(dec.d)
    payload = dec.to_json()
    payload["dense_trace"] = dense
    payload["rel_err"] = relative_error(dec.reconstruct(), dense)
    payload["reference_theta"] = table
    payload["reference_reconstruction"] = dec.reconstruct(table)
    payload["reference_rel_err"] = relative_error(payload["reference_reconstruction"], dense)
    fig = _figures_dir(a)
    if fig is not None:
        from .report import d6_figure

        payload["figures"] = [str(p) for p in d6_figure(fig, dec.thetas, dec.class_sums, table)]
    rows = [(c, str(t), dec.class_sums[c], table[c]) for c, t in dec.thetas.items()]
    _emit(ctx, payload, rows, ["class", "theta", "class_sum", "reference_theta"])
    return 0


def cmd_count(ctx: Context) -> int:
    a = ctx.args
    if a.hz:
        values, label = [coordination(a.d, k) for k in range(a.k + 1)], "coordination"
    elif a.loops:
        values, label = [loop_count_lattice(a.d, k) for k in range(a.k + 1)], "closed_walks_lattice"
    elif a.walks:
        if a.walks == "bound":
            q = _load_quiver(ctx)
            values = [closed_walk_counts("bound", l, quiver=q) for l in range(1, a.k + 1)]
            _emit(ctx, {"kind": "bound", "l": list(range(1, a.k + 1)), "values": values})
            return 0
        values = [closed_walk_counts(a.walks, l, n=a.n, lam=a.lam_loops, nu=a.nu) for l in range(1, a.k + 1)]
        label = f"walks_{a.walks}"
    else:
        raise ValidationError("choose one of --hz, --loops, --walks")
    start = 1 if a.walks else 0
    fig = _figures_dir(a)
    figs = []
    if fig is not None:
        from .report import sequence_figure

        figs = [str(p) for p in sequence_figure(fig, label, values, label, log=True)]
    if a.out == "text":
        print(",".join(str(v) for v in values))
        return 0
    _emit(
        ctx,
        {"sequence": label, "start": start, "values": values, "figures": figs},
        [(start + i, v) for i, v in enumerate(values)],
        ["parameter", "value"],
    )
    return 0


def cmd_mc(ctx: Context) -> int:
    a = ctx.args
    q = _load_quiver(ctx)
    f = parse_polynomial(a.f, _lambda(a, q))
    anchor = {0: full_matrix(a.N)} if a.anchor else None
    cfg = McConfig(a.samples, a.seed, f, None, anchor, a.threads, a.weighted)
    if a.wilson:
        edges = tuple(int(x) for x in a.wilson.split(","))
        est = wilson_expectation(q, a.N, Path(edges, a.base), cfg)
        kind = "wilson"
    else:
        est = estimate_partition(q, a.N, cfg)
        kind = "partition"
    payload = {"kind": kind, **est.to_json()}
    fig = _figures_dir(a)
    if fig is not None:
        from .report import mc_figure

        payload["figures"] = [str(p) for p in mc_figure(fig, est.per_network, f"mc_{kind}")]
    rows = [(i, m, s) for i, (m, s) in sorted(est.per_network.items())]
    _emit(ctx, payload, rows, ["network", "mean", "std_error"])
    return 0


def _plaquette_values(rep: Representation) -> list[complex]:
    spec = rep.quiver.lattice
    if spec is None or spec.d < 2 or spec.m < 3:
        return []
    qa = augment(rep.quiver.without_self_loops()[0]) if spec.self_loops else augment(rep.quiver)
    base = rep
    if spec.self_loops:
        q0, keep = rep.quiver.without_self_loops()
        base = rep.restrict(q0, keep)
    return [wilson_loop(base, p) for v in range(spec.volume) for p in plaquettes(qa, v)]


def cmd_gauge(ctx: Context) -> int:
    a = ctx.args
    rep = _load_rep(ctx)
    f = parse_polynomial(a.f, _lambda(a, rep.quiver))
    rng_seed = a.seed + 1 if a.gauge_seed is None else a.gauge_seed
    el = random_gauge_element(rep.network, rng_seed)
    rep2 = gauge_transform(rep, el)
    s1, s2 = spectral_action(rep, f), spectral_action(rep2, f)
    w1, w2 = _plaquette_values(rep), _plaquette_values(rep2)
    payload = {
        "action_before": s1,
        "action_after": s2,
        "action_rel_err": relative_error(s2, s1),
        "plaquettes": len(w1),
        "max_wilson_diff": max((abs(x - y) for x, y in zip(w1, w2)), default=0.0),
        "rep_distance": rep_distance(rep, rep2),
    }
    _emit(ctx, payload)
    return 0


def cmd_verify(ctx: Context) -> int:
    a = ctx.args
    rep = _load_rep(ctx)
    D = dirac(rep)
    checks: dict[str, dict] = {}
    checks["unitarity"] = {"value": rep.max_unitarity_residual(), "tol": 1e-10}
    checks["hermiticity"] = {"value": D.hermiticity_residual(), "tol": 1e-10}
    tr = trace_powers(D, a.kmax)
    checks["reality"] = {"value": float(max(abs(t.imag) for t in tr)), "tol": 1e-8}
    for k in range(a.kmax + 1):
        p = trace_power_paths(rep, k, limit=a.limit_loop_length)
        checks[f"paths_k{k}"] = {"value": abs(p - tr[k].real) / (1 + abs(tr[k].real)), "tol": 1e-8}
    spec = rep.quiver.lattice
    if spec is not None and spec.d >= 2 and spec.m >= 5:
        for k in range(min(a.kmax, 4) + 1):
            cf = lattice_trace_closed_form(rep, k).total
            checks[f"closed_form_k{k}"] = {"value": relative_error(cf, tr[k].real), "tol": 1e-8}
    if spec is not None and spec.self_loops:
        for k in range(min(a.kmax, 4) + 1):
            ins = trace_power_insertion(rep, k, limit=a.limit_loop_length)
            checks[f"insertion_k{k}"] = {"value": relative_error(ins, tr[k].real), "tol": 1e-8}
    f = ActionPolynomial(tuple(1.0 / (i + 1) for i in range(a.kmax + 1)))
    rep2 = gauge_transform(rep, random_gauge_element(rep.network, a.seed + 1))
    checks["gauge_action"] = {"value": relative_error(spectral_action(rep2, f), spectral_action(rep, f)), "tol": 1e-9}
    back = to_representation(to_module(rep), rep.quiver)
    checks["module_roundtrip"] = {"value": rep_distance(back, rep), "tol": 1e-10}
    for c in checks.values():
        c["ok"] = bool(c["value"] <= c["tol"])
    ok = all(c["ok"] for c in checks.values())
    _emit(ctx, {"ok": ok, "checks": checks}, [(k, c["value"], c["tol"], c["ok"]) for k, c in checks.items()], ["check", "value", "tol", "ok"])
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parser


def _common(p: argparse.ArgumentParser, rep: bool = False):
    p.add_argument("--quiver", help="quiver file (.json, or - for stdin) or short spec such as torus:d=2,m=3")
    p.add_argument("--lattice", help="lattice parameters, e.g. d=2,m=5[,self_loops]")
    p.add_argument("--a", type=float, default=None, help="lattice spacing for --lattice")
    p.add_argument("--tau", type=float, default=None, help="self-loop scale for --lattice")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", choices=["json", "csv", "compact"], default="json")
    p.add_argument("--limit-loop-length", type=int, default=12)
    p.add_argument("--figures", metavar="DIR", help="also write CSV tables and PNG figures here")
    if rep:
        p.add_argument("-N", type=int, default=None, help="Hilbert dimension per vertex")
        p.add_argument("--repr", help="representation JSON file (or - for stdin)")
        p.add_argument("--network", type=int, default=None, help="index into the network enumeration")
        p.add_argument("--no-anchor", action="store_true", help="do not pin M_N at vertex 0")
        p.add_argument("--unit", action="store_true", help="replace every edge matrix by the identity")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="specquiver", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="write a lattice quiver as JSON")
    _common(p)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("networks", help="enumerate Bratteli networks")
    _common(p)
    p.add_argument("-N", type=int, required=True)
    p.add_argument("--no-anchor", action="store_true", help="do not pin M_N at vertex 0")
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--bound", action="store_true", help="compare dimensions with the representation-space bound")
    p.add_argument("--budget", type=int, default=200_000)
    p.set_defaults(func=cmd_networks)

    p = sub.add_parser("repr", help="sample a Haar representation")
    _common(p, rep=True)
    p.add_argument("--input", help="output of the networks command (file or -)")
    p.set_defaults(func=cmd_repr)

    p = sub.add_parser("action", help="spectral action by one route, checked against the dense trace")
    _common(p, rep=True)
    p.add_argument("--f", default="x^2", help="polynomial such as '1 + 0.5*x^2 + x^4'")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--route", choices=["matrix", "paths", "closed-form", "insertion"], default="matrix")
    p.add_argument("--traces", action="store_true", help="also list Tr(D^k) for k up to deg f")
    p.add_argument("--closed-form-report", action="store_true")
    p.set_defaults(func=cmd_action)

    p = sub.add_parser("d6", help="length-6 loop decomposition of Tr(D^6)")
    _common(p, rep=True)
    p.add_argument("--fast", action="store_true", help="skip the exhaustive per-walk sums")
    p.set_defaults(func=cmd_d6)

    p = sub.add_parser("count", help="coordination, lattice loop and walk counts")
    _common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--hz", action="store_true", help="coordination sequence h_d(0..k)")
    g.add_argument("--loops", action="store_true", help="closed walks c_d(0..k) on Z^d")
    g.add_argument("--walks", choices=["complete", "complete_self_looped", "uniform", "bound"])
    p.add_argument("-d", type=int, default=2)
    p.add_argument("-k", type=int, default=7)
    p.add_argument("-n", type=int, default=3)
    p.add_argument("--lam-loops", type=int, default=0, help="self-loops per vertex for --walks uniform")
    p.add_argument("--nu", type=int, default=1, help="edges per vertex pair for --walks uniform")
    p.set_defaults(func=cmd_count, out="text")
    for action in p._actions:
        if action.dest == "out":
            action.choices = ["text", "json", "csv", "compact"]
            action.default = "text"

    p = sub.add_parser("mc", help="Monte Carlo partition function or Wilson loop")
    _common(p)
    p.add_argument("-N", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--f", default="0")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--wilson", help="comma-separated edge ids of a loop in the augmented quiver")
    p.add_argument("--base", type=int, default=0)
    p.add_argument("--weighted", action="store_true", help="weight Wilson samples by exp(-action)")
    p.add_argument("--anchor", action="store_true", help="only networks with M_N at vertex 0")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("verify", help="run the invariant checks on one instance")
    _common(p, rep=True)
    p.add_argument("--kmax", type=int, default=4)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gauge", help="apply a random gauge element and re-evaluate")
    _common(p, rep=True)
    p.add_argument("--f", default="x^2 + x^4")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--gauge-seed", type=int, default=None)
    p.set_defaults(func=cmd_gauge)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    ctx = Context(args)
    try:
        return args.func(ctx)
    except ValidationError as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 1
    except ResourceLimitError as exc:
        print(json.dumps({"error": "resource_limit", "message": str(exc)}), file=sys.stderr)
        return 2
    except (KeyError, ValueError, OSError) as exc:
        print(json.dumps({"error": "validation", "message": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
