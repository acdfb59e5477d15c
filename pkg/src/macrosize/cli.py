"""Command-line driver: measure, distill, robustness, verify."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import jsonschema
import numpy as np

from . import oracle
from .distill import (cluster_distill_ideal, generalized_ghz_distill, identity_protocol,
                      kitaev_distill_ideal, MeasurementModel, perturbed_kitaev_zb2)
from .families import (DecoratedLattice, LatticeError, SurfaceLattice, cluster_state, dicke,
                       generalized_ghz, ghz, lattice_from_dict, load_lattice, surface_code_ground)
from .ising import (IsingModel, exact_m2, map_cluster_params, mc_m2, transfer_matrix_m2_1d,
                    EXACT_CAP)
from .measures import (geometric_entanglement_site, is_permutation_symmetric,
                       nd_upper_bound_symmetric, nf_effective_size)
from .statevec import Basis

SCHEMA_VERSION = "1"
FAMILIES = ("ghz", "generalized_ghz", "dicke", "cluster", "kitaev")

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _results_schema() -> dict:
    return json.loads(resources.files("macrosize").joinpath("schemas/results.schema.json").read_text())


# -- grid parsing ----------------------------------------------------------------

def parse_int_grid(text: str, flag: str) -> list[int]:
    """``"2..10"``, ``"4,8,16"`` or a mix such as ``"2..4,8"``."""
    out = []
    for pos, item in enumerate(text.split(","), 1):
        item = item.strip()
        try:
            if ".." in item:
                lo, hi = (int(x) for x in item.split(".."))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(item))
        except ValueError:
            raise ValidationError(f"{flag}: cannot parse item {pos} ({item!r})") from None
    if not out:
        raise ValidationError(f"{flag}: empty grid")
    return out


def parse_float_grid(text: str, flag: str, complex_ok: bool = False) -> list:
    out = []
    for pos, item in enumerate(text.split(","), 1):
        item = item.strip()
        try:
            v = complex(item.replace("i", "j")) if complex_ok else float(item)
        except ValueError:
            raise ValidationError(f"{flag}: cannot parse item {pos} ({item!r})") from None
        if complex_ok and v.imag == 0:
            v = v.real
        out.append(v)
    if not out:
        raise ValidationError(f"{flag}: empty grid")
    return out


def _num(v):
    if v is None:
        return None
    if isinstance(v, complex):
        return str(v).strip("()")
    return v


# -- per-point workers (top level so they pickle) -------------------------------------

def _lattice(point: dict):
    if point.get("lattice") is not None:
        return lattice_from_dict(point["lattice"])
    n, dim = point["n"], point["dim"]
    if point["family"] == "kitaev":
        return SurfaceLattice(n, n)
    return DecoratedLattice((n,) * dim)


def _lattice_label(lat) -> str:
    if isinstance(lat, SurfaceLattice):
        return f"surface:{lat.rows}x{lat.cols}"
    return "decorated:" + "x".join(str(e) for e in lat.extents)


def _state(point: dict):
    fam, n = point["family"], point["n"]
    if fam == "ghz":
        return ghz(n)
    if fam == "generalized_ghz":
        return generalized_ghz(n, point["eps"])
    if fam == "dicke":
        return dicke(n, point["k"])
    lat = _lattice(point)
    return cluster_state(lat) if fam == "cluster" else surface_code_ground(lat)


def measure_point(point: dict) -> dict:
    psi = _state(point)
    rep = nf_effective_size(psi, seed=point["seed"])
    bound = nd_upper_bound_symmetric(psi) if is_permutation_symmetric(psi) else None
    return {"nf": rep.value, "nf_certificate": rep.certified_upper_bound,
            "geometric_entanglement": geometric_entanglement_site(psi, 0), "nd_bound": bound}


def distill_point(point: dict) -> dict:
    fam = point["family"]
    bound = None
    if fam == "ghz":
        res = identity_protocol(ghz(point["n"]))
        bound = float(point["n"])
    elif fam == "generalized_ghz":
        res = generalized_ghz_distill(point["n"], point["eps"])
        bound = nd_upper_bound_symmetric(generalized_ghz(point["n"], point["eps"]))
    elif fam == "cluster":
        lat = _lattice(point)
        res = cluster_distill_ideal(lat)
        point["lattice_label"] = _lattice_label(lat)
    elif fam == "kitaev":
        lat = _lattice(point)
        res = kitaev_distill_ideal(lat)
        point["lattice_label"] = _lattice_label(lat)
    else:
        raise ValueError(f"no distillation protocol implemented for family {fam!r}")
    rec = res.to_record()
    return {"expected_size": rec["expected_size"], "nd_bound": bound,
            "min_fidelity": rec["min_fidelity"], "num_outcomes": len(rec["outcomes"]),
            "outcomes": rec["outcomes"], "lattice": point.get("lattice_label")}


def robustness_point(point: dict) -> dict:
    fam, eps, engine = point["family"], point["eps"], point["engine"]
    lat = _lattice(point)
    label = _lattice_label(lat)
    if fam == "cluster":
        beta = math.inf if eps == 0 else map_cluster_params(eps)
        ext = lat.extents
        n = math.prod(ext)
        if engine == "auto":
            engine = "transfer" if len(ext) == 1 else "exact" if n <= EXACT_CAP else "mc"
        out = {"engine": engine, "lattice": label, "std_error": 0.0, "sweeps": None, "seed": None}
        if engine == "transfer":
            if len(ext) != 1:
                raise ValueError("transfer-matrix engine needs a one-dimensional lattice")
            m2 = transfer_matrix_m2_1d(n, beta)
        elif engine == "exact":
            m2 = exact_m2(IsingModel(ext, beta))
        elif engine == "mc":
            seed = int(np.random.SeedSequence([point["seed"], point["index"]]).generate_state(1)[0])
            est = mc_m2(IsingModel(ext, beta), point["sweeps"], point["burn_in"], seed)
            m2 = est.mean
            out.update(std_error=est.std_error / n**2, sweeps=est.sweeps, seed=seed)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        out["ratio"] = m2 / n**2
        return out
    if fam == "kitaev":
        if engine not in ("auto", "exact"):
            raise ValueError("kitaev robustness supports only exact loop enumeration")
        delta = point["delta"]
        if isinstance(delta, complex):
            raise ValueError("kitaev robustness needs a real delta")
        zb2 = perturbed_kitaev_zb2(lat, MeasurementModel(eps, delta, Basis.Z_BASIS))
        return {"engine": "loop_sum", "lattice": label, "ratio": zb2 / len(lat.loop) ** 2,
                "std_error": 0.0, "sweeps": None, "seed": None}
    raise ValueError(f"robustness sweeps are defined for cluster and kitaev, not {fam!r}")


_WORKERS = {"measure": measure_point, "distill": distill_point, "robustness": robustness_point}


def _run_point(args: tuple[str, dict]) -> dict:
    command, point = args
    row = {k: _num(point.get(k)) for k in ("family", "n", "eps", "delta", "k")}
    try:
        row.update(_WORKERS[command](dict(point)))
        row["status"] = "ok"
    except (ValueError, ArithmeticError, MemoryError) as exc:
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


# -- grid construction -------------------------------------------------------------

def build_grid(args) -> list[dict]:
    fam = args.family
    lattice = None
    if args.lattice:
        try:
            lat = load_lattice(args.lattice)
        except (OSError, LatticeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"--lattice {args.lattice}: {exc}") from None
        if fam not in ("cluster", "kitaev"):
            raise ValidationError("--lattice applies only to cluster and kitaev families")
        if isinstance(lat, SurfaceLattice) != (fam == "kitaev"):
            raise ValidationError(f"--lattice kind does not match family {fam!r}")
        lattice = lat.to_json()
    ns = [None] if lattice is not None else parse_int_grid(args.n, "--n") if args.n else None
    if ns is None:
        raise ValidationError("--n is required unless --lattice is given")
    eps_grid = parse_float_grid(args.eps, "--eps") if args.eps else [None]
    delta_grid = parse_float_grid(args.delta, "--delta", complex_ok=True) if getattr(args, "delta", None) else [0.0]
    if fam in ("generalized_ghz",) or args.command == "robustness":
        if eps_grid == [None]:
            raise ValidationError(f"--eps is required for {args.command} {fam}")
    for e in eps_grid:
        if e is not None and not (0 <= e <= math.pi):
            raise ValidationError(f"--eps value {e} outside [0, pi]")
    points = []
    for n in ns:
        if n is not None and n < 1:
            raise ValidationError(f"--n value {n} must be positive")
        ks = [None]
        if fam == "dicke":
            ks = list(range(n + 1)) if args.k in (None, "all") else parse_int_grid(args.k, "--k")
        for k in ks:
            for eps in eps_grid:
                for delta in delta_grid:
                    points.append({"family": fam, "n": n, "k": k, "eps": eps, "delta": delta,
                                   "dim": args.dim, "lattice": lattice, "seed": args.seed,
                                   "engine": getattr(args, "engine", "auto"),
                                   "sweeps": getattr(args, "sweeps", None),
                                   "burn_in": getattr(args, "burn_in", None)})
    if not points:
        raise ValidationError("empty parameter grid")
    for i, p in enumerate(points):
        p["index"] = i
    return points


def run_grid(command: str, points: list[dict], jobs: int) -> list[dict]:
    """Evaluate every grid point; rows come back in grid order for any ``jobs``."""
    tasks = [(command, p) for p in points]
    if jobs <= 1:
        return [_run_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, tasks))


# -- output ----------------------------------------------------------------------------

def render(command: str, parameters: dict, rows: list[dict], fmt: str) -> str:
    schema = _results_schema()
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command,
               "parameters": parameters, "rows": rows}
        jsonschema.validate(doc, schema)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    cols = schema["csv_columns"][command]
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION} command={command} parameters={json.dumps(parameters, sort_keys=True)}\n")
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: ("" if row.get(c) is None else row.get(c)) for c in cols}
                   | {"schema_version": SCHEMA_VERSION})
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parameters(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_sweep(args) -> int:
    points = build_grid(args)
    rows = run_grid(args.command, points, args.jobs)
    _emit(render(args.command, _parameters(args), rows, args.format), args.out)
    return EXIT_COMPUTE if any(r["status"] != "ok" for r in rows) else EXIT_OK


def cmd_verify(args) -> int:
    reports = oracle.run_all(inject_fault=args.inject_fault, jobs=args.jobs)
    width = max(len(r.name) for r in reports)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  diff={r.abs_diff:.3e}  tol={r.tolerance:.0e}")
    ok = all(r.passed for r in reports)
    print(f"{sum(r.passed for r in reports)}/{len(reports)} checks passed")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(oracle.report_bundle(reports))
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="macrosize", description="Effective sizes, GHZ distillation and robustness sweeps.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--family", required=True, choices=FAMILIES)
        sp.add_argument("--n", help="grid of sizes, e.g. 2..10 or 4,8,16 (lattice side for cluster/kitaev)")
        sp.add_argument("--eps", help="comma-separated eps grid")
        sp.add_argument("--dim", type=int, default=2, choices=(1, 2, 3),
                        help="cluster lattice dimension when --n gives the side length")
        sp.add_argument("--lattice", help="lattice JSON file (overrides --n for cluster/kitaev)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.set_defaults(func=cmd_sweep)

    m = sub.add_parser("measure", help="N*_F, geometric entanglement and the symmetric bound")
    common(m)
    m.add_argument("--k", help="Dicke excitation grid (default: all)")
    d = sub.add_parser("distill", help="run a distillation protocol")
    common(d)
    d.add_argument("--k", help=argparse.SUPPRESS)
    r = sub.add_parser("robustness", help="<M^2>/N^2 or <Z_B^2>/N_B^2 under perturbed measurements")
    common(r)
    r.add_argument("--k", help=argparse.SUPPRESS)
    r.add_argument("--delta", help="comma-separated delta grid (complex allowed, e.g. 0.2j)")
    r.add_argument("--engine", choices=("auto", "exact", "transfer", "mc"), default="auto")
    r.add_argument("--sweeps", type=int, default=4000)
    r.add_argument("--burn-in", type=int, default=400)
    v = sub.add_parser("verify", help="run the oracle cross-check suite")
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--out", help="write the JSON report bundle here")
    v.add_argument("--inject-fault", action="store_true", help="perturb one side of every check")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise ValidationError("--jobs must be >= 1")
        if args.command == "robustness" and not args.sweeps > args.burn_in >= 0:
            raise ValidationError("need --sweeps > --burn-in >= 0")
        return args.func(args)
    except ValidationError as exc:
        print(f"macrosize: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
