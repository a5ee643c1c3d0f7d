"""Command-line interface.

Subcommands: ``score``, ``sweep``, ``sample-dw``, ``scenario``, ``correlate``.

Exit codes: 0 success, 2 malformed input file, 3 indefinite kernel, 4 bad
arguments, 5 sampler divergence, 6 constant column in ``correlate``.
"""

import argparse
import csv
import dataclasses
import io
import json
import os
import sys

import numpy as np

from . import _accel
from .io import MatrixFileError, atomic_write_text, fmt, read_matrix, read_table
from .kernels import Kernel, KernelError
from .sampler import (DivergenceError, DoubleWell, SamplerConfig, UndefinedEstimateError,
                      count_transitions, free_energy_difference, free_energy_oracle,
                      reference_config, run_vendi_sampling)
from .scenarios import PANELS, evaluate_panel
from .scores import (as_order, collection_spectrum, embedding_spectrum, format_order,
                     hill_number, kernel_spectrum, profile_from_spectrum)
from .spectrum import DEFAULT_SUPPORT_TOL, IndefiniteKernelError, RankError, SpectrumError

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_INDEFINITE = 3
EXIT_BAD_ARGS = 4
EXIT_DIVERGED = 5
EXIT_CONSTANT = 6


class CliError(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_ARGS, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------

def parse_q_list(text):
    """Comma-separated orders; each token is a number, ``inf`` or ``lo:hi:n``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            parts = tok.split(":")
            if len(parts) != 3:
                raise CliError(EXIT_BAD_ARGS, f"bad grid {tok!r}; expected min:max:steps")
            try:
                lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            except ValueError:
                raise CliError(EXIT_BAD_ARGS, f"bad grid {tok!r}") from None
            if n < 1 or lo < 0 or hi < lo:
                raise CliError(EXIT_BAD_ARGS, f"bad grid {tok!r}")
            out.extend(np.linspace(lo, hi, n).tolist() if n > 1 else [lo])
            continue
        try:
            out.append(as_order(tok))
        except ValueError as exc:
            raise CliError(EXIT_BAD_ARGS, str(exc)) from None
    if not out:
        raise CliError(EXIT_BAD_ARGS, "no orders given")
    return out


def pearson_matrix(data):
    """Pearson correlation matrix of the columns of ``data``.

    Raises :class:`ZeroDivisionError` carrying the index of the first constant
    column.
    """
    X = np.asarray(data, dtype=float)
    Z = X - X.mean(axis=0)
    ss = np.sqrt(np.sum(Z * Z, axis=0))
    zero = np.flatnonzero(ss == 0.0)
    if zero.size:
        raise ZeroDivisionError(int(zero[0]))
    Z = Z / ss
    R = np.clip(Z.T @ Z, -1.0, 1.0)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return R


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

def _load(path):
    try:
        return read_matrix(path)
    except MatrixFileError as exc:
        raise CliError(EXIT_MALFORMED, str(exc)) from None


def _spectrum_for(args):
    """(spectrum or None, abundance vector or None, method) for score/sweep."""
    M = _load(args.input)
    tol = args.support_tol
    if args.kind == "abundance":
        if min(M.shape) != 1:
            raise CliError(EXIT_MALFORMED, f"abundance input must be a single row or column, got {M.shape}")
        return None, M.ravel(), "hill"
    if args.kind == "kernel":
        if M.shape[0] != M.shape[1]:
            raise CliError(EXIT_MALFORMED, f"kernel matrix must be square, got {M.shape}")
        if args.m is not None:
            if not 1 <= args.m <= M.shape[0]:
                raise CliError(EXIT_BAD_ARGS, f"--m must lie in 1..{M.shape[0]}")
            if args.m < M.shape[0]:
                idx = np.sort(np.random.default_rng(args.seed).choice(M.shape[0], args.m, replace=False))
                return kernel_spectrum(M[np.ix_(idx, idx)], tol), None, f"subsampled({args.m})"
        return kernel_spectrum(M, tol), None, "exact"
    # embeddings
    if args.kernel in ("linear", "cosine"):
        E = M
        if args.kernel == "cosine":
            norms = np.linalg.norm(E, axis=1)
            if np.any(norms == 0):
                raise CliError(EXIT_MALFORMED, "cosine kernel undefined for zero rows")
            E = E / norms[:, None]
        spec, method = embedding_spectrum(E, args.m, tol)
        return spec, None, method
    kernel = Kernel(args.kernel, gamma=args.gamma)
    spec, method = collection_spectrum(M, kernel, tol, args.m, args.seed)
    return spec, None, method


def _score_rows(args, qs):
    spec, p, method = _spectrum_for(args)
    if p is not None:
        try:
            return [{"q": format_order(q), "score": fmt(hill_number(p, q)),
                     "support_count": int(np.count_nonzero(p > 0)), "method": method}
                    for q in qs]
        except ValueError as exc:
            raise CliError(EXIT_MALFORMED, str(exc)) from None
    return [r.as_row() for r in profile_from_spectrum(spec, qs, method)]


def _emit(rows, args, columns=("q", "score", "support_count", "method")):
    if getattr(args, "format", "csv") == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_score(args):
    qs = parse_q_list(args.q)
    _emit(_score_rows(args, qs), args)


def cmd_sweep(args):
    qs = sorted(parse_q_list(args.q_grid))
    _emit(_score_rows(args, qs), args)


# ---------------------------------------------------------------------------
# double-well sampling
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {f.name for f in dataclasses.fields(SamplerConfig)}
_EXTRA_KEYS = {"preset", "analysis_window"}


def _kernel_from_json(obj):
    if isinstance(obj, str):
        return Kernel(obj)
    if not isinstance(obj, dict) or set(obj) - {"kind", "gamma"} or "kind" not in obj:
        raise CliError(EXIT_BAD_ARGS, "kernel must be a kind string or {kind, gamma}")
    return Kernel(obj["kind"], gamma=float(obj.get("gamma", 1.0)))


def load_run_config(path):
    """Parse and validate a run.json; returns (SamplerConfig, window or None)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_MALFORMED, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_MALFORMED, f"invalid JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise CliError(EXIT_MALFORMED, "run config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS - _EXTRA_KEYS
    if unknown:
        raise CliError(EXIT_BAD_ARGS, f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        kw = {k: v for k, v in raw.items() if k in _CONFIG_KEYS}
        if "kernel" in kw:
            kw["kernel"] = _kernel_from_json(kw["kernel"])
        if "potential" in kw:
            pot = kw["potential"]
            if not isinstance(pot, dict) or set(pot) - {"a", "b", "c"}:
                raise CliError(EXIT_BAD_ARGS, "potential must be an object with keys a, b, c")
            kw["potential"] = DoubleWell(**{k: float(v) for k, v in pot.items()})
        if "init_box" in kw:
            kw["init_box"] = tuple(float(v) for v in kw["init_box"])
        for key in ("replicas", "total_steps", "seed", "record_stride"):
            if key in kw:
                if isinstance(kw[key], bool) or not isinstance(kw[key], int):
                    raise CliError(EXIT_BAD_ARGS, f"{key} must be an integer")
        for key in ("step_size", "nu0", "anneal_rate", "support_tol"):
            if key in kw and (isinstance(kw[key], bool) or not isinstance(kw[key], (int, float))):
                raise CliError(EXIT_BAD_ARGS, f"{key} must be a number")
        preset = raw.get("preset")
        if preset is None:
            cfg = SamplerConfig(**kw)
        elif preset in ("reference", "reference-desk"):
            q = kw.pop("q", 1.0)
            cfg = reference_config(q, desk=preset == "reference-desk", **kw)
        else:
            raise CliError(EXIT_BAD_ARGS, f"unknown preset {preset!r}")
        window = raw.get("analysis_window")
        if window is not None:
            if not (isinstance(window, list) and len(window) == 2
                    and all(isinstance(v, int) for v in window)):
                raise CliError(EXIT_BAD_ARGS, "analysis_window must be [start_step, end_step]")
            window = tuple(window)
    except (TypeError, ValueError, KernelError) as exc:
        raise CliError(EXIT_BAD_ARGS, f"invalid run config: {exc}") from None
    return cfg, window


def cmd_sample_dw(args):
    cfg, window = load_run_config(args.config)
    os.makedirs(args.out_dir, exist_ok=True)
    try:
        traj = run_vendi_sampling(cfg)
    except DivergenceError as exc:
        raise CliError(EXIT_DIVERGED, str(exc)) from None

    lines = ["step,nu,replica,x,y"]
    for step, nu, frame in zip(traj.steps, traj.nu_history, traj.positions):
        for r, (x, y) in enumerate(frame):
            lines.append(f"{int(step)},{fmt(nu)},{r},{fmt(x)},{fmt(y)}")
    atomic_write_text(os.path.join(args.out_dir, "trajectory.csv"), "\n".join(lines) + "\n")

    cum = count_transitions(traj)
    lines = ["step,cumulative_transitions"]
    lines += [f"{int(s)},{int(c)}" for s, c in zip(traj.steps, cum)]
    atomic_write_text(os.path.join(args.out_dir, "transitions.csv"), "\n".join(lines) + "\n")

    oracle = free_energy_oracle(cfg.potential)
    try:
        est = free_energy_difference(traj, window)
        row = [str(est.window[0]), str(est.window[1]), str(est.n_right), str(est.n_left),
               fmt(est.F), fmt(oracle), "ok"]
    except UndefinedEstimateError as exc:
        lo, hi = window if window is not None else (min(cfg.anneal_end, cfg.total_steps), cfg.total_steps)
        row = [str(lo), str(hi), "", "", "nan", fmt(oracle), "undefined: " + str(exc).replace(",", ";")]
    text = "window_start,window_end,n_right,n_left,F_estimate,F_oracle,status\n" + ",".join(row) + "\n"
    atomic_write_text(os.path.join(args.out_dir, "free_energy.csv"), text)
    p = cfg.potential
    atomic_write_text(
        os.path.join(args.out_dir, "oracle.txt"),
        f"potential: u(x,y) = {fmt(p.a)}/4 x^4 + {fmt(p.b)}/2 x^2 + {fmt(p.c)} x + y^2/2\n"
        "regions: x in [-2.5, 0] vs [0, 2.5], y in [-4, 4]\n"
        f"F_oracle = -log(Z_right / Z_left) = {fmt(oracle)}\n")


# ---------------------------------------------------------------------------
# scenarios and correlations
# ---------------------------------------------------------------------------

def cmd_scenario(args):
    panel = args.panel.upper()
    if panel not in PANELS:
        raise CliError(EXIT_BAD_ARGS, f"unknown panel {args.panel!r}; expected one of {', '.join(PANELS)}")
    qs = parse_q_list(args.q)
    rows = evaluate_panel(panel, qs, args.seed)
    qcols = [format_order(q) for q in qs]
    out = [{"panel": r["panel"], "setting": r["setting"], "param": r["param"],
            **{c: fmt(r[c]) for c in qcols}} for r in rows]
    _emit(out, args, columns=["panel", "setting", "param", *qcols])


def cmd_correlate(args):
    try:
        names, data = read_table(args.input)
    except MatrixFileError as exc:
        raise CliError(EXIT_MALFORMED, str(exc)) from None
    if data.shape[1] < 2 or data.shape[0] < 3:
        raise CliError(EXIT_MALFORMED, "need at least 2 columns and 3 rows")
    try:
        R = pearson_matrix(data)
    except ZeroDivisionError as exc:
        raise CliError(EXIT_CONSTANT, f"column {names[exc.args[0]]!r} is constant") from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["", *names])
    for name, row in zip(names, R):
        w.writerow([name, *[fmt(v) for v in row]])
    if args.out:
        atomic_write_text(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


# ---------------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="vendi", description="Vendi scores of arbitrary order.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scoring_args(p):
        p.add_argument("--input", required=True, help="matrix file (CSV or VNDM1 binary)")
        p.add_argument("--kind", choices=("embeddings", "kernel", "abundance"), required=True)
        p.add_argument("--kernel", choices=("linear", "cosine", "rbf"), default="linear",
                       help="similarity for --kind embeddings (default: linear)")
        p.add_argument("--gamma", type=float, default=1.0, help="rbf bandwidth")
        p.add_argument("--m", type=int, default=None,
                       help="basis size (embeddings) or subsample size (kernel, rbf)")
        p.add_argument("--seed", type=int, default=0, help="subsampling seed")
        p.add_argument("--support-tol", type=float, default=DEFAULT_SUPPORT_TOL)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None)

    p = sub.add_parser("score", help="Vendi or Hill scores for a list of orders")
    scoring_args(p)
    p.add_argument("--q", default="1", help="comma-separated orders, e.g. 0.1,1,inf")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sweep", help="diversity profile over a grid of orders")
    scoring_args(p)
    p.add_argument("--q-grid", required=True, help="e.g. 0.1:2:20,inf or 0.5,1,2,inf")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample-dw", help="Vendi sampling on the 2D double well")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sample_dw)

    p = sub.add_parser("scenario", help="shape-color scenario panel table")
    p.add_argument("--panel", required=True)
    p.add_argument("--q", default="0.1,0.5,1,2,inf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("correlate", help="Pearson correlation matrix of named columns")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_correlate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _accel.set_threads_from_env()
    try:
        args.func(args)
    except CliError as exc:
        print(f"vendi: {exc}", file=sys.stderr)
        return exc.code
    except IndefiniteKernelError as exc:
        print(f"vendi: {exc}", file=sys.stderr)
        return EXIT_INDEFINITE
    except RankError as exc:
        print(f"vendi: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except (SpectrumError, KernelError, ValueError) as exc:
        print(f"vendi: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
