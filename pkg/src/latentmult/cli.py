"""Command-line front end.

Subcommands::

    build      write a configuration matrix and its label sidecar
    basis      compute or import a move set for a matrix
    audit      enumerate a fiber and count its components under a move set
    sample     run Metropolis-within-Gibbs chains
    reproduce  re-run the checks for one worked example

Output files go to ``--out`` when given, otherwise to the directory named by
the ``LATENTMULT_OUT`` environment variable, otherwise to the current
directory. Exit status is 0 when every validation passes, 1 when a check or
validation fails and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bases, fiber, fixtures, fourtitwo, intlattice, models, reproduce, sampler
from .moveset import MoveSet

OUT_ENV = "LATENTMULT_OUT"


class CliError(Exception):
    """A user-facing failure; reported without a traceback, exit status 1."""


def out_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get(OUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _out_path(arg: str | None, default_name: str) -> Path:
    # --out may name a file (has a suffix) or a directory
    if arg and Path(arg).suffix:
        p = Path(arg)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p
    return out_dir(arg) / default_name


def parse_vector(text: str) -> np.ndarray:
    """Integers from a comma/space separated list or a 4ti2 file (first row)."""
    if os.path.isfile(text):
        M = fourtitwo.read_matrix(text)
        if M.shape[0] < 1:
            raise CliError(f"{text}: no rows")
        return M[0]
    try:
        return np.array([int(t) for t in text.replace(",", " ").split()], dtype=np.int64)
    except ValueError:
        raise CliError(f"cannot read an integer vector from {text!r}") from None


def _size_args(args) -> dict:
    if args.family == "contingency":
        if args.r is None or args.c is None:
            raise CliError("contingency needs --r and --c")
        return {"r": args.r, "c": args.c}
    if args.K is None:
        raise CliError(f"{args.family} needs --K")
    return {"K": args.K}


def _tag(family: str, size: dict) -> str:
    return family + ("".join(str(v) for v in size.values()))


# ---------------------------------------------------------------------------
# build


def cmd_build(args) -> int:
    size = _size_args(args)
    try:
        spec = models.build(args.family, **size)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    path = _out_path(args.out, _tag(args.family, size) + ".mat")
    spec.save(path)
    m, d = spec.shape
    print(f"wrote {path} ({m}x{d}) and {path.with_suffix('.json')}")
    return 0


# ---------------------------------------------------------------------------
# basis


def _load_spec(args) -> models.ModelSpec:
    if getattr(args, "example", None):
        return fixtures.load(args.example).spec
    if not args.matrix:
        raise CliError("give --matrix (or --example)")
    return models.ModelSpec.load(args.matrix)


def cmd_basis(args) -> int:
    spec = _load_spec(args)
    A = spec.A
    try:
        if args.method == "hnf":
            moves = intlattice.kernel_lattice_basis(A)
        elif args.method == "theorem1":
            moves = bases.theorem1_basis(A)
        elif args.method == "pivotal":
            if args.pivots:
                pivots = parse_vector(args.pivots)
            else:
                pivots = bases.leading_entry_pivots(A)
                if len(set(pivots)) < len(pivots):
                    pivots = bases.echelon_pivots(A)
            moves = bases.pivotal_lattice_basis(A, pivots)
        else:
            if not args.file:
                raise CliError("--method import needs --file")
            moves = bases.import_moveset(args.file, A)
    except (ValueError, OSError) as exc:
        raise CliError(str(exc)) from None
    stem = Path(args.matrix).stem if args.matrix else args.example
    path = _out_path(args.out, f"{stem}_{args.method}.mar")
    bases.export_moveset(path, moves)
    print(f"{len(moves)} moves ({moves.provenance}) written to {path}")
    if args.print:
        print(fourtitwo.format_matrix(moves.moves), end="")
    return 0


# ---------------------------------------------------------------------------
# audit


def _load_moves(path, A) -> MoveSet:
    try:
        return bases.import_moveset(path, A)
    except (ValueError, OSError) as exc:
        raise CliError(str(exc)) from None


def cmd_audit(args) -> int:
    spec = _load_spec(args)
    y = parse_vector(args.y)
    moves = _load_moves(args.moves, spec.A)
    try:
        F = fiber.enumerate_fiber(spec.A, y, zero_column_bound=args.bound, cap=args.cap)
    except (ValueError, fiber.FiberTooLarge) as exc:
        raise CliError(str(exc)) from None
    report = fiber.connectivity(F, moves)
    print(report.summary())
    payload = report.to_dict()
    payload.update(y=y.tolist(), moves=len(moves), matrixFingerprint=F.matrix_fingerprint)
    path = _out_path(args.out, "audit.json")
    path.write_text(json.dumps(payload, indent=1) + "\n")
    print(f"report written to {path}")
    if args.fiber_out:
        F.save(args.fiber_out)
    return 0


# ---------------------------------------------------------------------------
# sample

SAMPLE_DEFAULTS = {
    "example": None,
    "matrix": None,
    "moves": None,
    "basis": "markov",
    "init": None,
    "y": None,
    "mass": None,
    "n_max": None,
    "iterations": 10_000,
    "burn_in": 0,
    "thin": 1,
    "seed": 0,
    "selection": "random",
    "cap": 1,
    "x_per_iteration": None,
    "record": "N",
    "chains": 1,
    "bins": None,
    "a_p": None,
    "b_p": None,
    "a_alpha": None,
    "b_alpha": None,
    "stem": "chain",
    "out": None,
}


def _sample_settings(args) -> dict:
    """Defaults, overlaid by the manifest, overlaid by explicit flags."""
    s = dict(SAMPLE_DEFAULTS)
    if args.manifest:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        unknown = set(manifest) - set(s) - {"subcommand"}
        if unknown:
            raise CliError(f"{args.manifest}: unknown keys {sorted(unknown)}")
        s.update(manifest)
    for k in SAMPLE_DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            s[k] = v
    return s


def _default_mass(spec) -> str:
    return {"mta": "mta", "suffstats": "mt"}.get(spec.family, "uniform")


def cmd_sample(args) -> int:
    s = _sample_settings(args)
    ex = fixtures.load(s["example"]) if s["example"] else None
    if ex is not None:
        spec = ex.spec
    elif s["matrix"]:
        spec = models.ModelSpec.load(s["matrix"])
    else:
        raise CliError("sample needs an example or a matrix")
    if s["moves"]:
        moves = _load_moves(s["moves"], spec.A)
    elif ex is not None:
        if s["basis"] not in ex.moves:
            raise CliError(f"example {ex.name} has no {s['basis']} basis")
        moves = ex.moves[s["basis"]]
    else:
        raise CliError("sample needs --moves")
    if s["init"] is not None:
        init = parse_vector(str(s["init"])) if not isinstance(s["init"], list) else np.array(s["init"])
    elif ex is not None:
        init = ex.xs[0]
    else:
        raise CliError("sample needs --init")
    y = None
    if s["y"] is not None:
        y = parse_vector(str(s["y"])) if not isinstance(s["y"], list) else np.array(s["y"])
    elif ex is not None:
        y = ex.y

    mass = s["mass"] or _default_mass(spec)
    hyper = {k: float(s[k]) for k in ("a_p", "b_p", "a_alpha", "b_alpha") if s[k] is not None}
    try:
        if mass == "uniform":
            model = models.uniform_model(spec)
        else:
            n_max = s["n_max"] if s["n_max"] is not None else (2000 if mass == "mta" else 2 * int(np.sum(init)))
            build = models.mta_model if mass == "mta" else models.mt_model
            model = build(spec, n_max=int(n_max), **hyper)
        record = tuple(f for f in str(s["record"]).replace(",", " ").split())
        configs = [
            sampler.SamplerConfig(
                int(s["iterations"]),
                burn_in=int(s["burn_in"]),
                thin=int(s["thin"]),
                seed=int(s["seed"]) + i,
                move_selection=s["selection"],
                coef_cap=int(s["cap"]),
                x_per_iteration=None if s["x_per_iteration"] is None else int(s["x_per_iteration"]),
                record=record,
            )
            for i in range(int(s["chains"]))
        ]
        outs = sampler.run_chains(model, moves, configs, [init] * len(configs), y=y, parallel=len(configs) > 1)
    except (ValueError, KeyError) as exc:
        raise CliError(str(exc).strip("'\"")) from None

    d = out_dir(s["out"])
    for i, out in enumerate(outs):
        stem = d / (s["stem"] if len(outs) == 1 else f"{s['stem']}{i + 1}")
        csv_path, _ = out.write(stem)
        print(f"chain {i + 1}: {len(out)} records, acceptance {out.meta['acceptanceRate']:.3f} -> {csv_path}")
        for name in record:
            if name == "accepted" or len(out) == 0:
                continue
            summ = sampler.summarize(out, name, bins=s["bins"])
            hist = Path(f"{stem}_{name.replace(':', '_')}_hist.csv")
            _write_hist(hist, summ)
            q = ", ".join(f"{k:g}: {v:g}" for k, v in summ.quantiles.items())
            print(f"  {name}: quantiles {{{q}}} -> {hist}")
    return 0


def _write_hist(path: Path, summ: sampler.Summary) -> None:
    lines = ["value,count" if summ.integer else "left,right,count"]
    if summ.integer:
        lines += [f"{int(v)},{int(c)}" for v, c in zip(summ.edges, summ.counts)]
    else:
        lines += [
            f"{lo:.17g},{hi:.17g},{int(c)}" for lo, hi, c in zip(summ.edges[:-1], summ.edges[1:], summ.counts)
        ]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# reproduce


def cmd_reproduce(args) -> int:
    opts = {"iterations": args.iterations, "parallel": not args.serial}
    if args.seed is not None:
        opts["seeds"] = (args.seed, args.seed + 1)
    report = reproduce.reproduce(args.example, **opts)
    print(report.table())
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latentmult", description="Markov bases for latent multinomial models.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write a configuration matrix")
    p.add_argument("family", choices=models.FAMILIES)
    p.add_argument("--K", type=int, help="number of occasions")
    p.add_argument("--r", type=int, help="rows (contingency)")
    p.add_argument("--c", type=int, help="columns (contingency)")
    p.add_argument("--out", help="output file (.mat) or directory")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("basis", help="compute or import a move set")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="4ti2 matrix file (labels read from the .json sidecar)")
    src.add_argument("--example", choices=fixtures.EXAMPLES)
    p.add_argument("--method", choices=("hnf", "theorem1", "pivotal", "import"), required=True)
    p.add_argument("--pivots", help="pivot columns for --method pivotal (default: leading entries, else echelon pivots)")
    p.add_argument("--file", help="move file for --method import")
    p.add_argument("--out", help="output file (.mar) or directory")
    p.add_argument("--print", action="store_true", help="also print the moves")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("audit", help="fiber connectivity under a move set")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix")
    src.add_argument("--example", choices=fixtures.EXAMPLES)
    p.add_argument("--y", required=True, help="observed statistics: '5,3,2,0,4' or a 4ti2 file")
    p.add_argument("--moves", required=True, help="4ti2 move file")
    p.add_argument("--bound", type=int, help="cap for columns no constraint bounds")
    p.add_argument("--cap", type=int, default=fiber.DEFAULT_CAP, help="maximum fiber size")
    p.add_argument("--fiber-out", help="also write the fiber elements to this file")
    p.add_argument("--out", help="report file (.json) or directory")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sample", help="run chains", description="Flags override values from --manifest.")
    p.add_argument("--manifest", help="JSON file with any of the settings below")
    p.add_argument("--example", choices=fixtures.EXAMPLES, help="take matrix, moves, y and start from an example")
    p.add_argument("--matrix")
    p.add_argument("--moves", help="4ti2 move file")
    p.add_argument("--basis", choices=("markov", "lattice"), help="which example basis (default markov)")
    p.add_argument("--init", help="starting counts")
    p.add_argument("--y", help="observed statistics (default A @ init)")
    p.add_argument("--mass", choices=("uniform", "mta", "mt"))
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--selection", choices=("random", "cycle"))
    p.add_argument("--cap", type=int, help="coefficient cap C")
    p.add_argument("--x-per-iteration", dest="x_per_iteration", type=int)
    p.add_argument("--record", help="fields, e.g. 'N,alpha,x:1000'")
    p.add_argument("--chains", type=int, help="chains with seeds seed, seed+1, ...")
    p.add_argument("--bins", type=int, help="histogram bin width")
    for h in ("a_p", "b_p", "a_alpha", "b_alpha"):
        p.add_argument("--" + h.replace("_", "-"), dest=h, type=float)
    p.add_argument("--stem", help="output file stem")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reproduce", help="re-run the checks for a worked example")
    p.add_argument("example", choices=fixtures.EXAMPLES)
    p.add_argument("--iterations", type=int, help="chain length (0 skips the chains)")
    p.add_argument("--seed", type=int)
    p.add_argument("--serial", action="store_true", help="run chains one after another")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, fourtitwo.FormatError, OSError) as exc:
        print(f"latentmult {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
