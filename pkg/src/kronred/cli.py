"""Command-line front end.

Exit codes: 0 ok, 2 input error, 3 singular reduction, 4 integration
failure, 5 I/O error.

Run settings can come from a JSON manifest (``--manifest``) and be
overridden by flags.  Manifest keys::

    network, plan, out, seed, solver {rtol, atol, t_end, max_steps}, initial {name: value},
    equilibrate, pulse {name: value}, observed [names], remove [complexes],
    candidates [complexes], max_size

Relative paths in a manifest are resolved against the manifest's directory.
Species missing from ``initial`` start at 1.0.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsl import load_network, parse_complex_label
from .errors import (
    EmptyKeptSet,
    IntegrationError,
    KronredError,
    NonFiniteRHS,
    NotAtEquilibrium,
    ParseError,
    SingularL22,
)
from .network import conservation_basis, enumerate_complexes, exact_rank
from .reduction import describe_reduced_reactions, plan_from_dict, plan_reduction, plan_to_dict
from .scan import scan_candidates
from .sim import (
    ComparisonSpec,
    SolverConfig,
    apply_overrides,
    comparison_grid,
    compare,
    find_steady_state,
    pulse_experiment,
    resample,
    simulate_full,
    simulate_reduced,
)

EXIT_OK, EXIT_INPUT, EXIT_SINGULAR, EXIT_INTEGRATION, EXIT_IO = 0, 2, 3, 4, 5


class InputError(KronredError):
    pass


@dataclass
class RunManifest:
    network: Path | None = None
    plan: Path | None = None
    out: Path = Path("kronred-out")
    seed: int = 0
    rtol: float = 1e-6
    atol: float = 1e-9
    t_end: float = 10.0
    max_steps: int = 200_000
    initial: dict = field(default_factory=dict)
    equilibrate: bool = False
    pulse: dict = field(default_factory=dict)
    observed: list = field(default_factory=list)
    remove: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    max_size: int = 4

    @property
    def solver(self) -> SolverConfig:
        return SolverConfig(rtol=self.rtol, atol=self.atol, t_end=self.t_end, max_steps=self.max_steps)


def _split(values) -> list[str]:
    out = []
    for v in values or []:
        out.extend(s.strip() for s in v.split(",") if s.strip())
    return out


def _assignments(values) -> dict:
    out = {}
    for item in _split(values):
        name, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"expected NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = float(val)
        except ValueError as exc:
            raise InputError(f"bad number in {item!r}") from exc
    return out


def build_manifest(args) -> RunManifest:
    man = RunManifest()
    if args.manifest:
        path = Path(args.manifest)
        data = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def resolve(p):
            return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

        man.network = resolve(data.get("network"))
        man.plan = resolve(data.get("plan"))
        if "out" in data:
            man.out = resolve(data["out"])
        man.seed = int(data.get("seed", 0))
        solver = data.get("solver", {})
        man.rtol = float(solver.get("rtol", man.rtol))
        man.atol = float(solver.get("atol", man.atol))
        man.t_end = float(solver.get("t_end", man.t_end))
        man.max_steps = int(solver.get("max_steps", man.max_steps))
        man.initial = {k: float(v) for k, v in data.get("initial", {}).items()}
        man.equilibrate = bool(data.get("equilibrate", False))
        man.pulse = {k: float(v) for k, v in data.get("pulse", {}).items()}
        man.observed = list(data.get("observed", []))
        man.remove = list(data.get("remove", []))
        man.candidates = list(data.get("candidates", []))
        man.max_size = int(data.get("max_size", man.max_size))
    if args.network:
        man.network = Path(args.network)
    if getattr(args, "plan", None):
        man.plan = Path(args.plan)
    if args.out:
        man.out = Path(args.out)
    for attr in ("rtol", "atol", "t_end", "max_steps", "seed"):
        if getattr(args, attr, None) is not None:
            setattr(man, attr, getattr(args, attr))
    if getattr(args, "initial", None):
        man.initial.update(_assignments(args.initial))
    if getattr(args, "pulse", None):
        man.pulse.update(_assignments(args.pulse))
    if getattr(args, "observed", None):
        man.observed = _split(args.observed)
    if getattr(args, "remove", None):
        man.remove = _split(args.remove)
    if getattr(args, "candidates", None):
        man.candidates = _split(args.candidates)
    if getattr(args, "equilibrate", False):
        man.equilibrate = True
    if man.network is None:
        raise InputError("no network given (--network or manifest)")
    return man


def _load(man: RunManifest, strict: bool = False):
    try:
        net = load_network(man.network, strict=strict)
    except FileNotFoundError:
        raise
    return net, enumerate_complexes(net)


def _initial_state(net, man: RunManifest) -> np.ndarray:
    x = np.ones(net.m)
    for name, value in man.initial.items():
        if name not in net.species_names:
            raise InputError(f"unknown species {name!r} in initial state")
        x[net.species_index(name)] = value
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        bad = [n for n, v in zip(net.species_names, x) if not v >= 0]
        raise InputError(f"negative or non-finite initial concentration for {bad}")
    for name, value in man.pulse.items():
        if name not in net.species_names:
            raise InputError(f"unknown species {name!r} in pulse")
        if not value >= 0:
            raise InputError(f"negative pulse value for {name}")
    return x


def _complexes(net, labels) -> list[int]:
    out = []
    for label in labels:
        try:
            out.append(parse_complex_label(net, label))
        except KeyError:
            raise InputError(f"unknown complex {label!r}") from None
    return out


def _observed(net, man: RunManifest) -> tuple[int, ...]:
    names = man.observed or net.species_names
    for n in names:
        if n not in net.species_names:
            raise InputError(f"unknown observed species {n!r}")
    return tuple(net.species_index(n) for n in names)


def _reduction(net, view, man: RunManifest, x_ref):
    if man.plan is not None:
        data = json.loads(Path(man.plan).read_text(encoding="utf-8"))
        try:
            return plan_from_dict(net, view, data)
        except KeyError as exc:
            raise InputError(f"plan references unknown name {exc}") from None
    if man.remove:
        return plan_reduction(net, view, _complexes(net, man.remove), x_ref)
    return None


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _start_state(net, view, man):
    x = _initial_state(net, man)
    if man.equilibrate:
        x = find_steady_state(net, view, x, SolverConfig(rtol=man.rtol, atol=man.atol, t_end=max(man.t_end, 100.0)))
    return x


def cmd_info(args) -> int:
    net = load_network(args.network, strict=args.strict)
    view = enumerate_complexes(net)
    print(f"m={net.m} c={net.c} r={view.r} linkage_classes={view.ell}")
    print(f"reactions={len(net.reactions)} rank_B={view.rank_B} rank_S={exact_rank(view.S)}")
    basis = conservation_basis(view)
    print(f"conservation_basis_dim={len(basis)}")
    for w in basis:
        print("  " + " ".join(str(int(v)) for v in w))
    print("complexes:")
    for i in range(net.c):
        print(f"  [{i}] {net.complex_label(i)}")
    print("linkage classes:")
    for block in view.linkage_partition:
        print("  {" + ", ".join(net.complex_label(i) for i in block) + "}")
    return EXIT_OK


def cmd_reduce(args) -> int:
    man = build_manifest(args)
    net, view = _load(man)
    if not man.remove and man.plan is None:
        raise InputError("nothing to remove (--remove or --plan)")
    x_ref = _initial_state(net, man)
    reduced = _reduction(net, view, man, x_ref)
    names = net.species_names
    print("kept: " + "; ".join(net.complex_label(i) for i in reduced.kept))
    print("removed: " + "; ".join(net.complex_label(i) for i in reduced.removed))
    print("constant species: " + ", ".join(names[i] for i in sorted(reduced.constant_species)))
    print(f"condition_estimate={reduced.reference_condition:.6g} feasible=yes")
    print("reduced reactions:")
    for line in describe_reduced_reactions(reduced):
        print("  " + line)
    man.out.mkdir(parents=True, exist_ok=True)
    target = Path(args.plan_out) if args.plan_out else man.out / "plan.json"
    _write_json(target, plan_to_dict(reduced))
    print(f"plan written to {target}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    man = build_manifest(args)
    net, view = _load(man)
    x = _start_state(net, view, man)
    x = apply_overrides(net, x, man.pulse)
    reduced = _reduction(net, view, man, x)
    if reduced is None:
        traj = simulate_full(net, view, x, man.solver)
    else:
        traj = simulate_reduced(reduced, x, man.solver)
    man.out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(man.out / "trajectory.csv", net.species_names)
    _write_json(
        man.out / "run.json",
        {"model": "full" if reduced is None else "reduced", "status": traj.status, "stats": traj.stats, "seed": man.seed},
    )
    print(f"status={traj.status} points={len(traj.times)} accepted={traj.stats['accepted']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    man = build_manifest(args)
    net, view = _load(man)
    pre = _start_state(net, view, man)
    reduced = _reduction(net, view, man, pre)
    if reduced is None:
        reduced = plan_reduction(net, view, [], pre)
    spec = ComparisonSpec(_observed(net, man), atol=man.atol)
    try:
        spec.validate(net.m, reduced)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if man.pulse:
        res = pulse_experiment(net, view, reduced, pre, man.pulse, man.solver, spec)
        full, red, metrics = res.full, res.reduced, res.metrics
    else:
        full = simulate_full(net, view, pre, man.solver)
        red = simulate_reduced(reduced, pre, man.solver)
        metrics = compare(full, red, spec)
    man.out.mkdir(parents=True, exist_ok=True)
    payload = metrics.to_dict()
    payload["seed"] = man.seed
    payload["removed"] = [net.complex_label(i) for i in reduced.removed]
    _write_json(man.out / "metrics.json", payload)
    grid = comparison_grid(full, red, spec)
    a, b = resample(full, grid), resample(red, grid)
    for i in spec.observed:
        name = net.species_names[i]
        with open(man.out / f"compare_{name}.csv", "w", encoding="utf-8") as fh:
            fh.write("t,full,reduced\n")
            for t, u, v in zip(grid, a[:, i], b[:, i]):
                fh.write(f"{t:.17g},{u:.17g},{v:.17g}\n")
    full.to_csv(man.out / "full.csv", net.species_names)
    red.to_csv(man.out / "reduced.csv", net.species_names)
    print(f"aggregate_score={metrics.aggregate:.6g}")
    return EXIT_OK


def cmd_scan(args) -> int:
    man = build_manifest(args)
    net, view = _load(man)
    x = _start_state(net, view, man)
    x = apply_overrides(net, x, man.pulse)
    candidates = _complexes(net, man.candidates)
    spec = ComparisonSpec(_observed(net, man), atol=man.atol)
    ranking = scan_candidates(net, view, x, candidates, spec, man.solver, max_size=man.max_size, threads=args.threads)
    man.out.mkdir(parents=True, exist_ok=True)
    _write_json(
        man.out / "scan.json",
        {
            "seed": man.seed,
            "ranking": [
                {
                    "removed": [net.complex_label(i) for i in r.removed],
                    "score": r.score,
                    "feasible": r.feasible,
                    "reason": r.reason,
                }
                for r in ranking
            ],
        },
    )
    for r in ranking:
        label = "{" + "; ".join(net.complex_label(i) for i in r.removed) + "}"
        print(f"{label} score={r.score:.6g}" if r.feasible else f"{label} infeasible: {r.reason}")
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", help="JSON run manifest")
    p.add_argument("--network", help="network file (DSL or .json)")
    p.add_argument("--plan", help="reduction plan JSON")
    p.add_argument("--out", help="output directory")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--observed", action="append", help="comma-separated species names")
    p.add_argument("--initial", action="append", help="NAME=VALUE pairs, comma-separated")
    p.add_argument("--pulse", action="append", help="NAME=VALUE post-pulse values")
    p.add_argument("--remove", action="append", help="complexes to delete, e.g. 'X3+X4'")
    p.add_argument("--equilibrate", action="store_true", help="relax the initial state to steady state first")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kronred", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="structural summary of a network")
    p.add_argument("network", nargs="?")
    p.add_argument("--network", dest="network_opt")
    p.add_argument("--strict", action="store_true", help="require species declarations")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("reduce", help="plan a Kron reduction")
    _common(p)
    p.add_argument("--plan-out", help="where to write the plan (default OUT/plan.json)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("simulate", help="integrate the full or reduced model")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare full and reduced trajectories")
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scan", help="rank candidate complex deletions")
    _common(p)
    p.add_argument("--candidates", action="append", help="candidate complexes, comma-separated")
    p.add_argument("--threads", type=int, help="parallel subset evaluations (default KRONRED_THREADS or 1)")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "info":
        args.network = args.network or args.network_opt
        if not args.network:
            print("error: no network given", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except SingularL22 as exc:
        print(f"error: singular reduction: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except EmptyKeptSet as exc:
        print(f"error: EmptyKeptSet: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, NonFiniteRHS) as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (ParseError, InputError, NotAtEquilibrium, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"error: bad JSON: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: I/O: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
