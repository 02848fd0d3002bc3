"""Command-line entry points: simulate, fit, bounds, summarize.

Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapFailed, credible_band, fit, summarize
from .config import ConfigInvalid, parse_config
from .core import DataError, ObservedDataset, PosteriorSamples, validate_dataset
from .mmd import BoundInputs, bound_constants, bound_terms, generalisation_bound
from .models import ate_eval
from .optimize import NonFiniteLoss
from .synthetic import DEFAULTS, simulate

log = logging.getLogger("robust_mem")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")


def read_table(path) -> ObservedDataset:
    """Read a headed CSV whose last column is the response."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header, body = rows[0], rows[1:]
    parsed = []
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: data row {r} has {len(row)} fields, header has {len(header)}")
        try:
            parsed.append([float(v) for v in row])
        except ValueError:
            raise DataError(f"{path}: non-numeric value in data row {r}") from None
    return validate_dataset(parsed, [h.strip() for h in header])


def git_blob_hash(path) -> str:
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---- subcommands ------------------------------------------------------------

def run_simulate(kind: str, params: dict, seed: int, out_dir) -> tuple[Path, Path]:
    ds, truth = simulate(kind, seed, **params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = [f"w_{k + 1}" for k in range(ds.d_x)] + ["y"]
    write_csv(out / "data.csv", names, ds.table())
    dump_json(truth.to_json(), out / "truth.json")
    return out / "data.csv", out / "truth.json"


def run_fit(config_path, data_path, out_dir, workers: int = 1, seed: int | None = None) -> PosteriorSamples:
    rc = parse_config(config_path, seed_override=seed)
    ds = read_table(data_path)
    req = rc.request(ds)
    ps = fit(req, workers=workers)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "samples.csv", [f"theta_{k + 1}" for k in range(ps.p)], ps.theta)
    manifest = dict(ps.manifest)
    manifest.update(config=rc.raw, seed=rc.seed, data_file=str(data_path), data_hash=git_blob_hash(data_path))
    summary = {"method": ps.method, "rows": ps.B, "parameters": summarize(ps), "manifest": manifest,
               "failures": [{"iteration": j, "reason": r} for j, r in ps.failures]}
    dump_json(summary, out / "summary.json")
    if rc.band is not None:
        b = rc.band
        grid = np.linspace(b["grid_lo"], b["grid_hi"], b["points"])
        if req.model.name == "ate":
            knots = np.asarray(req.model_spec["knots"])
            band = credible_band(ps, req.model, grid, b["level"], curve=lambda th, x: ate_eval(th, x, knots))
        elif req.model.d_x == 1:
            band = credible_band(ps, req.model, grid[:, None], b["level"])
        else:
            raise ConfigInvalid("/band", "bands need a one-covariate model or the ate model")
        write_csv(out / "band.csv", ["x", "lo", "mid", "hi"], np.column_stack([grid, band]))
    return ps


def run_bounds(n, c, Lambda, l, sigma1, sigma2, d=1) -> dict:
    bi = BoundInputs(n, c, Lambda, l, sigma1, sigma2, d)
    C1, C2 = bound_constants(bi)
    return {"inputs": dict(bi.__dict__), "C1": C1, "C2": C2, "bound": generalisation_bound(bi),
            "terms": bound_terms(bi)}


def read_samples(path) -> PosteriorSamples:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise DataError(f"{path}: no sample rows")
    try:
        theta = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError:
        raise DataError(f"{path}: non-numeric sample value") from None
    return PosteriorSamples(theta, "loaded")


# ---- argument parsing -------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robust-mem", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic dataset")
    s.add_argument("--kind", choices=sorted(DEFAULTS), default="linear")
    s.add_argument("--n", type=int)
    s.add_argument("--theta0", type=float, nargs="+")
    s.add_argument("--sigma-eps2", type=float)
    s.add_argument("--sigma-nu2", type=float)
    s.add_argument("--config", help="JSON file with any of n, theta0, sigma_eps2, sigma_nu2")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="run a configured fit on a CSV dataset")
    f.add_argument("--config", required=True)
    f.add_argument("--data", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--seed", type=int)

    b = sub.add_parser("bounds", help="evaluate the generalisation bound and its constants")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--c", type=float, nargs="+", required=True, help="one or more concentration values")
    b.add_argument("--Lambda", type=float, default=0.0)
    b.add_argument("--l", type=float, default=1.0)
    b.add_argument("--sigma1", type=float, required=True)
    b.add_argument("--sigma2", type=float, required=True)
    b.add_argument("--d", type=int, default=1)
    b.add_argument("--out")

    m = sub.add_parser("summarize", help="per-parameter summaries of a samples.csv")
    m.add_argument("--data", required=True, help="samples.csv")
    m.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "simulate":
            params = {}
            if args.config:
                try:
                    params = json.loads(Path(args.config).read_text())
                except (OSError, json.JSONDecodeError) as e:
                    raise ConfigInvalid("", str(e)) from None
            for k in ("n", "theta0", "sigma_eps2", "sigma_nu2"):
                if getattr(args, k) is not None:
                    params[k] = getattr(args, k)
            try:
                run_simulate(args.kind, params, args.seed, args.out)
            except ValueError as e:
                raise ConfigInvalid("", str(e)) from None
        elif args.cmd == "fit":
            if args.workers < 1:
                raise ConfigInvalid("", "--workers must be >= 1")
            try:
                run_fit(args.config, args.data, args.out, args.workers, args.seed)
            except OSError as e:
                raise ConfigInvalid("", str(e)) from None
        elif args.cmd == "bounds":
            try:
                res = [run_bounds(args.n, c, args.Lambda, args.l, args.sigma1, args.sigma2, args.d)
                       for c in args.c]
            except ValueError as e:
                raise ConfigInvalid("", str(e)) from None
            dump_json(res[0] if len(res) == 1 else res, args.out)
        else:
            dump_json(summarize(read_samples(args.data)), args.out)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (BootstrapFailed, NonFiniteLoss, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
