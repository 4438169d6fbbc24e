"""Command-line harness: ``python -m qlocaltest <command> [--config PATH] [--seed U64] [--out PATH] [--jobs INT]``.

Exit codes: 0 all checks passed, 1 an invariant check failed (failing checks
are printed as JSON on stderr), 2 malformed or inconsistent spec.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from . import channels as chn
from . import checks, compiler, metrics, testers, tomography
from .config import ORACLE_MODEL, SpecError, resolve, spec_hash, stream

CSV_COLUMNS = ("d1", "d2", "r", "N", "trial", "diamond_error", "choi_error", "seed")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# -- verify -----------------------------------------------------------------------


def _verify_task(spec: dict, k: int) -> dict:
    rng = stream(spec["seed"], k)
    n, d1, d2, r = spec["n"], spec["d1"], spec["d2"], spec["r"]
    t = testers.random_tester(n, d1, r * d2, spec["outcomes"], rng)
    ch = chn.random_channel(d1, d2, r, rng)
    res = compiler.verify_theorem(t, compiler.compile_tester(t, r, d2), ch, spec["mc_samples"], rng)
    return {"instance": k, "max_abs_z": res["max_abs_z"], "max_exact_gap": res["max_exact_gap"],
            "min_eig": res["validity"]["min_eig"], "norm_error": res["validity"]["norm_error"],
            "outcomes": res["outcomes"]}


def cmd_verify(spec: dict, jobs: int = 1) -> tuple[dict, list[dict]]:
    tol = spec["tolerances"]
    rows = _map(partial(_verify_task, spec), range(spec["instances"]), jobs)
    found = []
    for row in rows:
        case = row["instance"]
        found.append(checks.check("monte_carlo_z", case, row["max_abs_z"], tol["compiler_z_max"]))
        found.append(checks.check("block_formula", case, row["max_exact_gap"], tol["compiler_exact"]))
        found.append(checks.check("psd", case, -row["min_eig"], tol["tester_psd"]))
        found.append(checks.check("normalization", case, row["norm_error"], tol["tester_normalization"]))
    return {"instances": rows, "checks": found}, found


# -- schur-selftest ---------------------------------------------------------------


def _selftest_task(spec: dict, item: tuple[str, int, list[int]]) -> list[dict]:
    kind, k, (n, d) = item
    rng = stream(spec["seed"], k)
    tol = spec["tolerances"]
    if kind == "schur":
        return checks.schur_checks(n, d, rng, spec["states"], tol["schur"], tol["power_decomposition"])
    return checks.twirl_checks(n, d, 2, spec["mc_samples"], rng, tol["twirl_z_max"], tol["twirl"])


def cmd_schur_selftest(spec: dict, jobs: int = 1) -> tuple[dict, list[dict]]:
    items = [("schur", k, c) for k, c in enumerate(spec["cases"])]
    items += [("twirl", len(items) + k, c) for k, c in enumerate(spec["twirl_cases"])]
    found = [c for group in _map(partial(_selftest_task, spec), items, jobs) for c in group]
    return {"checks": found}, found


# -- tomography sweeps ------------------------------------------------------------


def _tomo_iso_task(spec: dict, item: tuple[int, int, int]) -> dict:
    k, big_n, trial = item
    rng = stream(spec["seed"], k)
    d1, d2 = spec["d1"], spec["d2"]
    v = chn.random_isometry(d1, d2, rng).matrix
    est = tomography.isometry_tomography(tomography.IsometryOracle(v), None, rng, queries=big_n,
                                         c_copies=spec["c_copies"], c_total=spec["c_total"])
    if spec["diamond"] == "exact":
        dia = metrics.isometry_diamond_distance(v, est.matrix)
    else:
        dia = metrics.diamond_distance(chn.unitary_channel(v), est.channel(), rng=rng).value
    return {"d1": d1, "d2": d2, "r": 1, "N": big_n, "trial": trial, "diamond_error": dia,
            "choi_error": metrics.choi_distance(chn.unitary_channel(v), est.channel()),
            "seed": spec["seed"], "queries_used": est.queries_used,
            "isometry_error": float(np.max(np.abs(est.matrix.conj().T @ est.matrix - np.eye(d1))))}


def _tomo_channel_task(spec: dict, item: tuple[int, int, int]) -> dict:
    k, big_n, trial = item
    rng = stream(spec["seed"], k)
    d1, d2, r = spec["d1"], spec["d2"], spec["r"]
    ch = chn.random_channel(d1, d2, r, rng)
    res = tomography.channel_tomography(ch, r, None, rng, queries=big_n,
                                        c_copies=spec["c_copies"], c_total=spec["c_total"])
    w, w_hat = res.dilation.matrix, res.dilation_estimate.matrix
    dia = metrics.diamond_distance(res.estimate, ch, spec["restarts"], spec["iters"], rng).value
    return {"d1": d1, "d2": d2, "r": r, "N": big_n, "trial": trial, "diamond_error": dia,
            "choi_error": metrics.choi_distance(res.estimate, ch), "seed": spec["seed"],
            "queries_used": res.queries_used,
            "dilation_diamond_error": metrics.isometry_diamond_distance(w, w_hat),
            "isometry_error": float(np.max(np.abs(w_hat.conj().T @ w_hat - np.eye(d1))))}


def _summary(rows: list[dict], eps: float | None) -> dict:
    by_n = {}
    for row in rows:
        by_n.setdefault(row["N"], []).append(row["diamond_error"])
    out = {"per_N": []}
    for big_n in sorted(by_n):
        errs = np.array(by_n[big_n])
        entry = {"N": big_n, "median_diamond_error": float(np.median(errs)), "trials": len(errs)}
        if eps is not None:
            entry["success_rate"] = float(np.mean(errs <= eps))
        out["per_N"].append(entry)
    if len(by_n) >= 2:
        xs = np.log([e["N"] for e in out["per_N"]])
        ys = np.log([max(e["median_diamond_error"], 1e-300) for e in out["per_N"]])
        out["loglog_slope"] = float(np.polyfit(xs, ys, 1)[0])
    return out


def _tomo(spec: dict, jobs: int, task) -> tuple[dict, list[dict]]:
    tol = spec["tolerances"]
    items = [(i * spec["trials"] + t, big_n, t)
             for i, big_n in enumerate(spec["N_grid"]) for t in range(spec["trials"])]
    rows = _map(partial(task, spec), items, jobs)
    found = []
    for row in rows:
        case = [row["N"], row["trial"]]
        found.append(checks.check("estimate_is_isometry", case, row["isometry_error"], tol["isometry"]))
        if "dilation_diamond_error" in row:
            found.append(checks.check("contractivity", case,
                                       row["diamond_error"] - row["dilation_diamond_error"],
                                       tol["contractivity"]))
    body = {"rows": rows, "summary": _summary(rows, spec.get("eps")), "checks": found,
            "oracle_model": ORACLE_MODEL}
    return body, found


def cmd_tomo_iso(spec: dict, jobs: int = 1) -> tuple[dict, list[dict]]:
    return _tomo(spec, jobs, _tomo_iso_task)


def cmd_tomo_channel(spec: dict, jobs: int = 1) -> tuple[dict, list[dict]]:
    return _tomo(spec, jobs, _tomo_channel_task)


# -- dnorm ------------------------------------------------------------------------


def _load_channel(entry, base: Path) -> chn.QuantumChannel:
    if isinstance(entry, dict):
        return chn.channel_from_dict(entry)
    if isinstance(entry, str):
        path = Path(entry)
        path = path if path.is_absolute() else base / path
        return chn.loads_channel(path.read_text())
    raise SpecError(f"channel entries must be paths or objects, got {type(entry).__name__}")


def _dnorm_task(spec: dict, item) -> dict:
    k, i, j, a, b = item
    est = metrics.diamond_distance(a, b, spec["restarts"], spec["iters"], stream(spec["seed"], k),
                                   spec["tolerances"]["seesaw_convergence"])
    return {"pair": [i, j], "estimate": est.value, "lower_bound": est.lower_bound,
            "upper_bound": est.upper_bound,
            "choi_distance": metrics.choi_distance(a, b)}


def cmd_dnorm(spec: dict, jobs: int = 1, base: Path = Path(".")) -> tuple[dict, list[dict]]:
    try:
        chans = [_load_channel(e, base) for e in spec["channels"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise SpecError(f"could not load channels: {exc}") from exc
    items = []
    for i in range(len(chans)):
        for j in range(i + 1, len(chans)):
            a, b = chans[i], chans[j]
            if (a.d_in, a.d_out) != (b.d_in, b.d_out):
                raise SpecError(f"channels {i} and {j} have different dimensions")
            items.append((len(items), i, j, a, b))
    rows = _map(partial(_dnorm_task, spec), items, jobs)
    found = []
    for row in rows:
        found.append(checks.check("in_range", row["pair"], row["estimate"] - 2.0, 1e-9))
        found.append(checks.check("choi_below_diamond", row["pair"],
                                   row["choi_distance"] - row["estimate"], 1e-6))
        if row["upper_bound"] is not None:
            found.append(checks.check("below_upper_bound", row["pair"],
                                       row["estimate"] - row["upper_bound"], 1e-9))
    return {"pairs": rows, "checks": found}, found


COMMAND_FUNCS = {
    "verify": cmd_verify,
    "schur-selftest": cmd_schur_selftest,
    "tomo-iso": cmd_tomo_iso,
    "tomo-channel": cmd_tomo_channel,
    "dnorm": cmd_dnorm,
}


# -- entry point --------------------------------------------------------------------


def build_report(spec: dict, body: dict, failing: list[dict]) -> dict:
    return {
        "tool": "qlocaltest",
        "version": __version__,
        "command": spec["command"],
        "seed": spec["seed"],
        "spec_hash": spec_hash(spec),
        "spec": spec,
        "tolerances": spec["tolerances"],
        "status": "ok" if not failing else "fail",
        "failing_checks": failing,
        **body,
    }


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([repr(float(row[c])) if isinstance(row[c], float) else row[c]
                         for c in CSV_COLUMNS])
    return buf.getvalue()


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qlocaltest", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=list(COMMAND_FUNCS))
    p.add_argument("--config", type=Path, help="JSON experiment spec")
    p.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, help="report path; *.csv writes sweep rows plus a .report.json")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return p


def run(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        raw = None
        base = Path(".")
        if args.config is not None:
            base = args.config.parent
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise SpecError(f"cannot read spec {args.config}: {exc}") from exc
        if args.jobs < 1:
            raise SpecError("--jobs must be at least 1")
        spec = resolve(args.command, raw, seed=args.seed)
        fn = COMMAND_FUNCS[args.command]
        if args.command == "dnorm":
            body, failing = fn(spec, args.jobs, base)
        else:
            body, failing = fn(spec, args.jobs)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failing = [c for c in failing if not c["ok"]]
    report = build_report(spec, body, failing)
    text = dumps_report(report)
    if args.out is None:
        sys.stdout.write(text)
    elif args.out.suffix == ".csv" and "rows" in body:
        args.out.write_text(rows_to_csv(body["rows"]))
        args.out.with_suffix(".report.json").write_text(text)
    else:
        args.out.write_text(text)
    if failing:
        print(json.dumps(_clean(failing), sort_keys=True, indent=2), file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
