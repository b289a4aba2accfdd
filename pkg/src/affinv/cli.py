"""Command-line front end.

Each subcommand writes one canonical JSON record (stdout or ``--out``) and,
where it makes sense, a CSV table (``--csv``) and gnuplot data
(``--plot-dir``).  Exit codes: 0 ok, 1 bad input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import records
from .arith import Prime
from .construct import Policy, construct, majority_set, sample_signs
from .coupling import bound_sweep, coupling_exact, coupling_mc
from .defect import defect_profile
from .errors import AffinvError, ValidationError
from .family import build_family, check_family_reduction, derive_params
from .indicator import IndicatorSet
from .oracle import best_symmetric_set
from .spectral import certificate

log = logging.getLogger("affinv")

PROFILE_POINTS = 256


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _add_overrides(sp):
    sp.add_argument("--override-L", dest="override_L", help="exact rational, e.g. 3/2 or 2.5")
    sp.add_argument("--override-T", dest="override_T", type=int)


def _add_policy(sp):
    sp.add_argument("--max-attempts", type=int, default=1000)
    sp.add_argument("--density-window", type=float, default=0.05)


def _add_output(sp, csv: bool = True):
    sp.add_argument("--out", type=Path, help="record path (default stdout)")
    if csv:
        sp.add_argument("--csv", type=Path)
    sp.add_argument("--plot-dir", type=Path)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="affinv", description=__doc__.splitlines()[0])
    ap.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identity)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("params", help="derive L, L_q, Q, T, N, M0")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--K", type=int, required=True)
    _add_overrides(sp)
    _add_output(sp, csv=False)

    sp = sub.add_parser("family", help="enumerate the family and scan its reduction mod p")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--check", choices=["none", "F", "H"], default="H",
                    help="H adds the shifted copies s^{-1}F for every grid shift")
    sp.add_argument("--no-vectors", action="store_true")
    _add_overrides(sp)
    _add_output(sp, csv=False)

    sp = sub.add_parser("construct", help="build a symmetric majority set")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--strategy", choices=["naive", "windowed", "both"], default="windowed")
    sp.add_argument("--set-out", type=Path, help="write the accepted set as a bitset blob")
    sp.add_argument("--encoding", choices=["raw64le", "rle"], default="raw64le")
    _add_overrides(sp)
    _add_policy(sp)
    _add_output(sp)

    sp = sub.add_parser("measure", help="defect profile of a stored set")
    sp.add_argument("--set", type=Path, required=True)
    sp.add_argument("--K", type=int, required=True)
    _add_output(sp)

    sp = sub.add_parser("certificate", help="spectral certificate of a set")
    sp.add_argument("--set", type=Path)
    sp.add_argument("--p", type=int)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--method", choices=["chirp", "direct", "numpy"], default="chirp")
    _add_overrides(sp)
    _add_policy(sp)
    _add_output(sp)

    sp = sub.add_parser("coupling", help="majority-vote disagreement probability")
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--trials", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sweep", type=int, metavar="N_MAX", help="exact sweep over odd n <= N_MAX")
    _add_output(sp)

    sp = sub.add_parser("oracle", help="exhaustive optimum for tiny p")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--size", type=int, help="fix |A| (default floor/ceil of p/2)")
    sp.add_argument("--all-sets", action="store_true", help="search all subsets, not only A = -A")
    _add_output(sp, csv=False)

    sp = sub.add_parser("sweep", help="construct and measure over several p and seeds")
    sp.add_argument("--p-list", type=_int_list, required=True)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--seeds", type=int, default=5, help="number of seeds per p")
    sp.add_argument("--seed", type=int, default=0, help="first seed")
    sp.add_argument("--strategy", choices=["naive", "windowed"], default="windowed")
    _add_overrides(sp)
    _add_policy(sp)
    _add_output(sp)
    return ap


# -- helpers -------------------------------------------------------------------


def _overrides(args) -> Optional[dict]:
    out = {}
    if getattr(args, "override_L", None) is not None:
        out["L"] = args.override_L
    if getattr(args, "override_T", None) is not None:
        out["T"] = args.override_T
    return out or None


def _override_json(args) -> dict:
    return {k: str(v) for k, v in (_overrides(args) or {}).items()}


def _policy(args) -> Policy:
    return Policy(args.max_attempts, args.density_window)


def _check_writable(*paths) -> None:
    for path in paths:
        if path is None:
            continue
        parent = Path(path).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise ValidationError(f"cannot write to {path}")


def _load_set(path: Path) -> IndicatorSet:
    try:
        return IndicatorSet.load(path)
    except OSError as exc:
        raise ValidationError(f"cannot read set {path}: {exc}") from exc


def _downsample(profile: np.ndarray) -> list[list]:
    N = profile.size
    if N == 0:
        return []
    idx = np.unique(np.geomspace(1, N, num=min(N, PROFILE_POINTS)).round().astype(np.int64))
    return [[int(R), float(profile[R - 1])] for R in idx]


# -- subcommands ---------------------------------------------------------------


def cmd_params(args):
    params = derive_params(args.p, args.K, _overrides(args))
    return {"p": args.p, "K": args.K, "overrides": _override_json(args)}, {"params": params.to_json()}, None


def cmd_family(args):
    params = derive_params(args.p, args.K, _overrides(args))
    family, shifts = build_family(params)
    outputs = {"family": family.to_json(include_vectors=not args.no_vectors)}
    if args.check != "none":
        rep_F = check_family_reduction(family)
        outputs["collisions_F"] = rep_F.to_json()
        if args.check == "H":
            outputs["collisions_H"] = check_family_reduction(family, shifts.positive_shifts).to_json()
    return {"p": args.p, "K": args.K, "overrides": _override_json(args), "check": args.check}, outputs, None


def _construct(args, p: int, seed: int):
    strategy = "windowed" if args.strategy == "both" else args.strategy
    return construct(p, args.K, seed, _policy(args), _overrides(args), strategy)


def cmd_construct(args):
    _check_writable(args.set_out)
    res = _construct(args, args.p, args.seed)
    header = json.loads(res.set.to_blob().split(b"\n", 1)[0])
    outputs = {"construction": res.to_json(), "set_header": header}
    if args.strategy == "both":
        family, _ = build_family(res.params)
        naive = majority_set(family, sample_signs(args.p, args.seed, res.attempt_key), "naive", verify=False)
        outputs["strategies_agree"] = naive == res.set
        if naive != res.set:
            raise AffinvError("naive and windowed strategies disagree")
    rep = defect_profile(res.set, args.K)
    outputs["defect"] = rep.to_json()
    if args.set_out is not None:
        res.set.save(args.set_out, args.encoding)
    params = {"p": args.p, "K": args.K, "seed": args.seed, "overrides": _override_json(args),
              "strategy": args.strategy, "max_attempts": args.max_attempts,
              "density_window": args.density_window}
    csv = (["a", "b", "count", "defect"], rep.csv_rows())
    return params, outputs, csv


def cmd_measure(args):
    A = _load_set(args.set)
    rep = defect_profile(A, args.K)
    params = {"p": A.p, "K": args.K, "set": str(args.set)}
    return params, {"defect": rep.to_json()}, (["a", "b", "count", "defect"], rep.csv_rows())


def cmd_certificate(args):
    if args.set is not None:
        A = _load_set(args.set)
        params = {"p": A.p, "K": args.K, "set": str(args.set)}
    else:
        if args.p is None or args.seed is None:
            raise ValidationError("certificate needs --set or both --p and --seed")
        args.strategy = "windowed"
        A = _construct(args, args.p, args.seed).set
        params = {"p": args.p, "K": args.K, "seed": args.seed, "overrides": _override_json(args),
                  "max_attempts": args.max_attempts, "density_window": args.density_window}
    params["method"] = args.method
    cert = certificate(A, args.K, args.method)
    body = cert.to_json()
    body["mass_profile"] = _downsample(cert.mass_profile)
    rows = [(d.q, d.tv_mu, d.tv_lambda, d.e_valuation) for d in cert.per_prime]
    return params, {"certificate": body}, (["q", "tv_mu", "tv_lambda", "e_valuation"], rows)


def cmd_coupling(args):
    if args.sweep is not None:
        table = bound_sweep(args.sweep)
        body = table.to_json()
        body["max_ratio_by_n"] = [list(r) for r in table.max_ratio_by_n()]
        return {"n_max": args.sweep}, {"sweep": body}, (["n", "d", "p_exact", "ratio"], table.rows)
    if args.n is None or args.d is None:
        raise ValidationError("coupling needs --n and --d, or --sweep")
    exact = coupling_exact(args.n, args.d)
    outputs = {"p_exact": float(exact), "p_exact_fraction": str(exact) if not isinstance(exact, float) else None}
    if args.trials > 0:
        mc = coupling_mc(args.n, args.d, args.trials, args.seed)
        outputs["mc"] = {"estimate": mc.estimate, "stderr": mc.stderr, "trials": mc.trials}
    params = {"n": args.n, "d": args.d, "trials": args.trials, "seed": args.seed}
    return params, outputs, None


def cmd_oracle(args):
    if args.p < 3 or not 1 <= args.K < args.p:
        raise ValidationError("oracle needs p >= 3 and 1 <= K < p")
    res = best_symmetric_set(args.p, args.K, args.size, symmetric=not args.all_sets)
    params = {"p": args.p, "K": args.K, "size": args.size, "symmetric_only": not args.all_sets}
    return params, {"oracle": res.to_json()}, None


def cmd_sweep(args):
    policy = _policy(args)
    rows = []
    per_p = []
    failed = False
    if not args.p_list or args.seeds < 0:
        raise ValidationError("sweep needs a non-empty --p-list and --seeds >= 0")
    for p in args.p_list:
        if not 1 <= args.K < Prime(p):
            raise ValidationError(f"need 1 <= K < p, got K={args.K}, p={p}")
    for p in args.p_list:
        entry = {"p": p, "seeds": [], "error": None, "median_max_defect": None}
        try:
            params = derive_params(p, args.K, _overrides(args))
            family, _ = build_family(params)
            for seed in range(args.seed, args.seed + args.seeds):
                res = construct(p, args.K, seed, policy, family=family, strategy=args.strategy)
                rep = defect_profile(res.set, args.K)
                entry["seeds"].append({"seed": seed, "density": res.density, "attempts": res.attempts,
                                       "max_defect": rep.max_defect, "defect_1_0": rep.counts[(1, 0)]})
                rows.extend((p, seed, a, b, c, d) for a, b, c, d in rep.csv_rows())
            entry["params"] = params.to_json()
            if entry["seeds"]:
                entry["median_max_defect"] = statistics.median(s["max_defect"] for s in entry["seeds"])
        except ValidationError:
            raise
        except AffinvError as exc:
            failed = True
            entry["error"] = f"{type(exc).__name__}: {exc}"
            log.error("p=%d failed: %s", p, entry["error"])
        per_p.append(entry)
    params = {"p_list": args.p_list, "K": args.K, "seeds": args.seeds, "first_seed": args.seed,
              "overrides": _override_json(args), "strategy": args.strategy,
              "max_attempts": args.max_attempts, "density_window": args.density_window}
    outputs = {"per_p": per_p, "failed": failed}
    return params, outputs, (["p", "seed", "a", "b", "count", "defect"], rows)


COMMANDS = {
    "params": cmd_params,
    "family": cmd_family,
    "construct": cmd_construct,
    "measure": cmd_measure,
    "certificate": cmd_certificate,
    "coupling": cmd_coupling,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
}


def run_experiment(args) -> tuple[dict, int]:
    _check_writable(args.out, getattr(args, "csv", None))
    t0 = time.perf_counter()
    params, outputs, table = COMMANDS[args.command](args)
    wall = time.perf_counter() - t0 if args.timing else None
    record = records.make_record(args.command, params, outputs, wall)
    text = records.dumps(record)
    if args.out is None:
        sys.stdout.write(text)
    else:
        records.write_text(args.out, text)
    if table is not None and getattr(args, "csv", None) is not None:
        records.write_csv(args.csv, *table)
    if args.plot_dir is not None:
        records.emit_plots(record, args.plot_dir)
    return record, 2 if outputs.get("failed") else 0


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as exc:
        print(f"affinv: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _, code = run_experiment(args)
        return code
    except ValidationError as exc:
        print(f"affinv: error: {exc}", file=sys.stderr)
        return 1
    except AffinvError as exc:
        print(f"affinv: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything else is a runtime failure, not bad input
        log.debug("unhandled error", exc_info=True)
        print(f"affinv: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
