"""Command-line front end: channel I/O, capacity computation, bound fuzzing,
chain replay, and the depolarizing sweep with CSV/SVG emission.

Exit codes: 0 success, 1 input error, 2 solver non-convergence,
3 inconclusive verification.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import capacity, certify, channels, entropy, linalg

FILE_VALIDATION_TOL = 1e-8
RATIO_CUTOFF_BITS = 1e-9

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_INCONCLUSIVE = 3


@dataclass
class RunConfig:
    seed: int = 0
    trials: int = 100
    d_in: int = 2
    d_out: int = 2
    tol: float = 1e-7
    max_iter: int = 5000
    restarts: int = 32
    jobs: int = 1
    output_format: str = "csv"
    output_path: str | None = None

    def validate(self) -> None:
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.d_in < 1 or self.d_out < 1:
            raise ValueError("dimensions must be >= 1")
        if self.max_iter < 1 or self.restarts < 1 or self.jobs < 1:
            raise ValueError("max-iter, restarts, and jobs must be >= 1")


def fmt(x: float) -> str:
    """Locale-independent numeric formatting at 6 significant digits."""
    return f"{x:.6g}"


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(
        seed=args.seed,
        trials=getattr(args, "trials", 1),
        d_in=getattr(args, "din", 2),
        d_out=getattr(args, "dout", 2),
        tol=args.tol,
        max_iter=args.max_iter,
        restarts=args.restarts,
        jobs=getattr(args, "jobs", None) or os.cpu_count() or 1,
        output_format=getattr(args, "format", "csv"),
        output_path=getattr(args, "out", None),
    )
    cfg.validate()
    return cfg


def _load_channel(args, cfg: RunConfig) -> channels.QuantumChannel:
    named = getattr(args, "named", None)
    path = getattr(args, "channel_file", None)
    if named and path:
        raise ValueError("give either a channel file or --named, not both")
    if named:
        return _named_channel(named)
    if not path:
        raise ValueError("a channel file or --named specification is required")
    try:
        text = open(path, "r", encoding="utf-8").read()
    except OSError as exc:
        raise ValueError(f"cannot read channel file: {exc}") from exc
    try:
        chan = channels.channel_from_json(text, atol=FILE_VALIDATION_TOL)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    lam_min = chan.check_complete_positivity(tol=FILE_VALIDATION_TOL)
    if lam_min < -FILE_VALIDATION_TOL:
        raise ValueError(f"complete positivity violated: Choi min eigenvalue {lam_min:.3e}")
    return chan


def _named_channel(spec: str) -> channels.QuantumChannel:
    """Parse --named specs like depolarizing:d=2,p=0.5 or random:din=3,dout=2,seed=7."""
    name, _, rest = spec.partition(":")
    params: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not value:
                raise ValueError(f"bad parameter {item!r} in --named spec")
            params[key.strip()] = value.strip()
    if name == "identity":
        return channels.identity_channel(int(params.get("d", 2)))
    if name == "depolarizing":
        return channels.depolarizing_channel(
            int(params.get("d", 2)), float(params.get("p", 0.0))
        )
    if name == "random":
        d_in = int(params.get("din", 2))
        d_out = int(params.get("dout", d_in))
        kraus = int(params["kraus"]) if "kraus" in params else None
        return channels.random_channel(d_in, d_out, kraus, seed=int(params.get("seed", 0)))
    raise ValueError(f"unknown named channel {name!r} (use identity, depolarizing, random)")


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValueError(f"cannot write output file: {exc}") from exc


def cmd_capacity(args) -> int:
    cfg = _config_from_args(args)
    chan = _load_channel(args, cfg)
    ce = capacity.entanglement_assisted_capacity(chan, tol=cfg.tol, max_iter=cfg.max_iter)
    ch = capacity.holevo_quantity(
        chan, tol=cfg.tol, restarts=cfg.restarts, max_iter=cfg.max_iter, seed=cfg.seed
    )
    ratio = ce.value_bits / ch.value_bits if ch.value_bits > RATIO_CUTOFF_BITS else None
    record = {
        "ce_bits": ce.value_bits,
        "ch_bits": ch.value_bits,
        "ratio": ratio if ratio is not None else "undefined",
        "ce_gap_nats": ce.gap_bound,
        "ch_gap_nats": ch.gap_bound,
        "ce_iterations": ce.iterations,
        "ch_iterations": ch.iterations,
        "ce_converged": ce.converged,
        "ch_converged": ch.converged,
    }
    if cfg.output_format == "json":
        _emit(json.dumps(record, indent=2) + "\n", cfg.output_path)
    else:
        header = ",".join(record)
        row = ",".join(
            fmt(v) if isinstance(v, float) else str(v) for v in record.values()
        )
        _emit(header + "\n" + row + "\n", cfg.output_path)
    return EXIT_OK if ce.converged and ch.converged else EXIT_NOT_CONVERGED


def _ratio_trial(payload):
    seed, index, d_in, d_out, tol, restarts, max_iter = payload
    chan = channels.random_channel(d_in, d_out, seed=(seed, index))
    check = certify.verify_ratio_bound(
        chan, tol=tol, restarts=restarts, max_iter=max_iter, seed=(seed, index, 1)
    )
    return check


def cmd_verify_ratio(args) -> int:
    cfg = _config_from_args(args)
    if cfg.d_in == 1:
        _emit(
            "trial,ce_bits,ch_bits,ratio,prefactor,slack_bits,converged\n"
            + "\n".join(
                f"{i},0,0,undefined,undefined,0,True" for i in range(cfg.trials)
            )
            + "\nmin_slack_bits,0\nnote,input dimension 1: both capacities vanish;"
            " the bound holds trivially\n",
            cfg.output_path,
        )
        return EXIT_OK
    payloads = [
        (cfg.seed, i, cfg.d_in, cfg.d_out, cfg.tol, cfg.restarts, cfg.max_iter)
        for i in range(cfg.trials)
    ]
    results = _run_trials(_ratio_trial, payloads, cfg.jobs)
    tol_bits = cfg.tol / np.log(2.0)
    lines = ["trial,ce_bits,ch_bits,ratio,prefactor,slack_bits,converged"]
    inconclusive = 0
    for i, r in enumerate(results):
        ratio = r.ce_bits / r.ch_bits if r.ch_bits > RATIO_CUTOFF_BITS else None
        conv = r.ce_converged and r.ch_converged
        inconclusive += not conv
        lines.append(
            f"{i},{fmt(r.ce_bits)},{fmt(r.ch_bits)},"
            f"{fmt(ratio) if ratio is not None else 'undefined'},"
            f"{fmt(r.prefactor)},{fmt(r.slack_bits)},{conv}"
        )
    min_slack = min(r.slack_bits for r in results)
    lines.append(f"min_slack_bits,{fmt(min_slack)}")
    lines.append(f"non_converged_trials,{inconclusive}")
    _emit("\n".join(lines) + "\n", cfg.output_path)
    if inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if min_slack >= -2.0 * tol_bits else EXIT_INCONCLUSIVE


def _sandwich_trial(payload):
    seed, index, dim = payload
    rank = 1 + index % dim
    rho = linalg.random_density_matrix(dim, rank, (seed, index, 0))
    tau = linalg.random_density_matrix(dim, dim, (seed, index, 1))
    div = entropy.relative_entropy(rho, tau).value
    form = entropy.log_derivative_form(tau, rho - tau)
    k = entropy.dominance_constant(rho, tau)
    lower = entropy.lower_bound_factor(k) * form
    return div - form, lower - div  # both must be <= tolerance


def cmd_verify_sandwich(args) -> int:
    cfg = _config_from_args(args)
    payloads = [(cfg.seed, i, cfg.d_in) for i in range(cfg.trials)]
    results = _run_trials(_sandwich_trial, payloads, cfg.jobs)
    upper_violation = max(r[0] for r in results)
    lower_violation = max(r[1] for r in results)
    _emit(
        "check,max_violation_nats\n"
        f"upper_bound,{fmt(upper_violation)}\n"
        f"lower_bound,{fmt(lower_violation)}\n",
        cfg.output_path,
    )
    ok = upper_violation <= 1e-9 and lower_violation <= 1e-9
    return EXIT_OK if ok else EXIT_INCONCLUSIVE


def _parse_state(spec: str, dim_sq: int) -> np.ndarray:
    if spec == "max-entangled":
        d = int(round(np.sqrt(dim_sq)))
        v = np.zeros(dim_sq, dtype=complex)
        v[:: d + 1] = 1.0 / np.sqrt(d)
        return v
    if spec.startswith("random:"):
        return linalg.random_pure_state(dim_sq, int(spec.split(":", 1)[1]))
    raw = json.loads(spec)
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 3 or (arr.ndim == 2 and arr.shape[0] == arr.shape[1] == dim_sq):
        raise ValueError("pure state required")
    if arr.ndim == 2 and arr.shape[1] == 2:
        vec = arr[:, 0] + 1j * arr[:, 1]
    elif arr.ndim == 1:
        vec = arr.astype(complex)
    else:
        raise ValueError("state JSON must be a vector of numbers or [re, im] pairs")
    if vec.shape[0] != dim_sq:
        raise ValueError(f"state vector length {vec.shape[0]}, expected {dim_sq}")
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"state vector is not normalized (norm {nrm!r})")
    return vec / nrm


def cmd_chain(args) -> int:
    cfg = _config_from_args(args)
    chan = _load_channel(args, cfg)
    state = _parse_state(args.state, chan.d_in**2)
    report = certify.chain_report(
        chan, state, sup_restarts=cfg.restarts, sup_seed=cfg.seed
    )
    ln2 = float(np.log(2.0))
    names = [
        "mutual_info",
        "reference_divergence",
        "quadratic_bound",
        "decomposed_bound",
        "entropy_bound",
        "capacity_bound",
    ]
    lines = ["quantity,nats,bits"]
    for name, nats in zip(names, report.chain()):
        lines.append(f"{name},{fmt(nats)},{fmt(nats / ln2)}")
    lines.append(f"total_weight,{fmt(report.total_weight)},")
    lines.append(f"dominance,{fmt(report.dominance)},")
    lines.append(f"prefactor,{fmt(report.prefactor)},")
    lines.append(
        "support_margins," + " ".join(fmt(m) for m in report.support_margins) + ","
    )
    lines.append(f"monotone_ok,{report.monotone_ok},")
    _emit("\n".join(lines) + "\n", cfg.output_path)
    return EXIT_OK if report.monotone_ok else EXIT_INCONCLUSIVE


def _sweep_rows(cfg: RunConfig, points: int):
    p_max = 4.0 / 3.0
    grid = sorted(set(float(p) for p in np.linspace(0.0, p_max, points)) | {0.999})
    payloads = [(cfg.seed, p, cfg.tol, cfg.restarts, cfg.max_iter) for p in grid]
    return _run_trials(_sweep_point, payloads, cfg.jobs)


def _sweep_point(payload):
    seed, p, tol, restarts, max_iter = payload
    rows = capacity.depolarizing_capacity_sweep(
        2, [p], tol=min(tol, 1e-10), restarts=restarts, max_iter=max_iter, seed=seed
    )
    return rows[0]


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    if args.points < 2:
        raise ValueError("points must be >= 2")
    rows = _sweep_rows(cfg, args.points)
    lines = ["p,ce_bits,ch_bits,ratio"]
    for r in rows:
        ratio = fmt(r.ratio) if r.ratio is not None else "undefined"
        lines.append(f"{fmt(r.p)},{fmt(r.ce_bits)},{fmt(r.ch_bits)},{ratio}")
    _emit("\n".join(lines) + "\n", cfg.output_path)
    if args.svg:
        _emit(_sweep_svg(rows), args.svg)
    return EXIT_OK


def _sweep_svg(rows) -> str:
    """Hand-emitted SVG line plot: capacities on the left axis, ratio on the right."""
    width, height = 800, 500
    margin = 60
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    p_max = max(r.p for r in rows)
    ce_max = max(max(r.ce_bits for r in rows), 1e-9)
    ratios = [r.ratio for r in rows if r.ratio is not None]
    ratio_max = max(ratios) if ratios else 1.0

    def x_of(p):
        return margin + plot_w * p / p_max

    def y_left(v):
        return margin + plot_h * (1.0 - v / ce_max)

    def y_right(v):
        return margin + plot_h * (1.0 - v / ratio_max)

    def polyline(points, color):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{width - margin}" y1="{margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        polyline([(x_of(r.p), y_left(r.ce_bits)) for r in rows], "#1f77b4"),
        polyline([(x_of(r.p), y_left(r.ch_bits)) for r in rows], "#ff7f0e"),
        polyline(
            [(x_of(r.p), y_right(r.ratio)) for r in rows if r.ratio is not None],
            "#2ca02c",
        ),
        f'<text x="{margin}" y="{margin - 20}" font-size="14">'
        "assisted capacity (blue), unassisted lower bound (orange), ratio (green, right axis)</text>",
        f'<text x="{width / 2:.0f}" y="{height - 15}" font-size="14">mixing weight p</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def _run_trials(fn, payloads, jobs: int):
    if jobs <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=min(jobs, len(payloads))) as pool:
        return list(pool.map(fn, payloads, chunksize=max(1, len(payloads) // (4 * jobs))))


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems with the input-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="chancap",
        description="Quantum channel capacities and certified ratio bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=False, dims=False, channel=False):
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--tol", type=float, default=1e-7, help="solver tolerance in nats")
        p.add_argument("--max-iter", dest="max_iter", type=int, default=5000)
        p.add_argument("--restarts", type=int, default=32)
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        if trials:
            p.add_argument("--trials", type=int, default=100)
        if dims:
            p.add_argument("--din", type=int, default=2)
            p.add_argument("--dout", type=int, default=2)
        if channel:
            p.add_argument("channel_file", nargs="?", default=None)
            p.add_argument(
                "--named",
                default=None,
                help=(
                    "named channel, e.g. identity:d=2, random:din=2,dout=3,seed=7, or "
                    "depolarizing:d=2,p=0.5 (completely positive for 0 <= p <= d^2/(d^2-1))"
                ),
            )

    p_cap = sub.add_parser("capacity", help="compute both capacities of a channel")
    common(p_cap, channel=True)
    p_cap.set_defaults(func=cmd_capacity)

    p_ratio = sub.add_parser(
        "verify-ratio", help="fuzz the dimension-dependent capacity-ratio bound"
    )
    common(p_ratio, trials=True, dims=True)
    p_ratio.set_defaults(func=cmd_verify_ratio)

    p_sand = sub.add_parser(
        "verify-sandwich",
        help="fuzz the two-sided quadratic-form bounds on the relative entropy",
    )
    common(p_sand, trials=True, dims=True)
    p_sand.set_defaults(func=cmd_verify_sandwich)

    p_chain = sub.add_parser("chain", help="replay the upper-bound chain on one instance")
    common(p_chain, channel=True)
    p_chain.add_argument(
        "--state",
        default="max-entangled",
        help='pure input: "max-entangled", "random:SEED", or a JSON vector',
    )
    p_chain.set_defaults(func=cmd_chain)

    p_sweep = sub.add_parser(
        "sweep", help="capacities of the qubit depolarizing family over a p grid"
    )
    common(p_sweep)
    p_sweep.add_argument("--points", type=int, default=81)
    p_sweep.add_argument("--svg", default=None, help="also write an SVG plot here")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
