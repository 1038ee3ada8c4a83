"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 infeasible parameters,
3 I/O failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import exp
from pathlib import Path

import numpy as np

from . import __version__

log_ = logging.getLogger("weakwalk")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None = None
    outputs: list = field(default_factory=list)
    tool_version: str = __version__


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_text(path, text: str) -> None:
    try:
        p = Path(path)
        if p.parent and not p.parent.exists():
            raise OSError(f"directory {p.parent} does not exist")
        with open(p, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _write_text(path, buf.getvalue())


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _sidecar_path(out: str) -> str:
    p = Path(out)
    return str(p.with_suffix(".json")) if p.suffix != ".json" else str(p) + ".meta.json"


def _emit_json(obj, out: str | None) -> None:
    text = _dumps(obj)
    if out:
        _write_text(out, text)
    sys.stdout.write(text)


# -- solve-params --------------------------------------------------------------


def cmd_solve_params(args) -> int:
    from .params import InfeasibleTargetsError, ProtocolTargets, solve

    try:
        targets = ProtocolTargets(args.gamma, args.eps, args.s0_min, args.slack)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        params = solve(targets)
    except InfeasibleTargetsError as exc:
        sys.stderr.write(_dumps({"error": str(exc), "constraint": exc.constraint}))
        return EXIT_INFEASIBLE
    payload = params.as_dict()
    payload["targets"] = {"gamma": args.gamma, "eps": args.eps, "s0_min": args.s0_min, "slack": args.slack}
    _emit_json(payload, args.out)
    return EXIT_OK


# -- curves --------------------------------------------------------------------


def cmd_curve(args) -> int:
    from .survival import TRACKS, survival_curve

    if args.m < 1:
        raise UsageError("--m must be positive")
    if abs(args.eps_star) > 0.5:
        raise UsageError("--eps-star must lie in [-0.5, 0.5]")
    tracks = TRACKS if args.track == "all" else (args.track,)
    curves = [survival_curve(args.m, args.theta, args.eps_star, t) for t in tracks]
    header = ["round"] + [f"S_{t}" for t in tracks]
    rows = [[r] + [exp(c.log_survival[r - 1]) for c in curves] for r in range(1, args.m + 1)]
    _write_csv(args.out, header, rows)
    manifest = RunManifest("curve", {"m": args.m, "theta": args.theta, "eps_star": args.eps_star,
                                     "track": args.track}, outputs=[args.out])
    side = _sidecar_path(args.out)
    _write_text(side, _dumps({"manifest": asdict(manifest),
                              "underflow": {t: c.underflow for t, c in zip(tracks, curves)}}))
    return EXIT_OK


def cmd_figure1(args) -> int:
    from .survival import FIG1_EPS, FIG1_GAMMA, FIG1_M, FIG1_S0, FIG1_S1, figure1_theta, survival_curve

    anchor = figure1_theta()
    rounds = 40
    ex0 = survival_curve(rounds, anchor.theta, 0.0, "exact").log_survival
    ex1 = survival_curve(rounds, anchor.theta, FIG1_EPS, "exact").log_survival
    ap0 = survival_curve(rounds, anchor.theta, 0.0, "leading_order").log_survival
    ap1 = survival_curve(rounds, anchor.theta, FIG1_EPS, "leading_order").log_survival
    rows = [[r, exp(ex0[r - 1]), exp(ex1[r - 1]), exp(ap0[r - 1]), exp(ap1[r - 1])] for r in range(1, rounds + 1)]
    _write_csv(args.out, ["m", "S0_exact", "S1_exact", "S0_approx", "S1_approx"], rows)
    side = args.sidecar or _sidecar_path(args.out)
    manifest = RunManifest("figure1", {"gamma": FIG1_GAMMA, "eps": FIG1_EPS, "rounds": rounds},
                           outputs=[args.out, side])
    _write_text(side, _dumps({
        "manifest": asdict(manifest),
        "thresholds": {"s0_min": 0.5, "s1_max": exp(-FIG1_GAMMA)},
        "theta": {
            "value": anchor.theta,
            "method": anchor.method,
            "inverted_theta": anchor.inverted_theta,
            "anchors": {"m": FIG1_M, "S0": FIG1_S0, "S1": FIG1_S1},
            "exact_at_anchor": {"S0": anchor.s0, "S1": anchor.s1},
        },
    }))
    return EXIT_OK


def _figure2_point(args):
    m, theta, e = args
    from .survival import survival_curve

    return survival_curve(m, theta, e, "exact").survival, survival_curve(m, theta, e, "leading_order").survival


def cmd_figure2(args) -> int:
    from .survival import FIG2_M, FIG2_THETA, is_strictly_decreasing

    grid = [round(0.01 * k, 2) for k in range(51)]
    points = [(FIG2_M, FIG2_THETA, e) for e in grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            values = list(pool.map(_figure2_point, points))
    else:
        values = [_figure2_point(p) for p in points]
    _write_csv(args.out, ["eps_star", "S_exact", "S_approx"], [[e, a, b] for e, (a, b) in zip(grid, values)])
    side = _sidecar_path(args.out)
    # the worker count does not change the output, so it is left out of the manifest
    manifest = RunManifest("figure2", {"m": FIG2_M, "theta": FIG2_THETA, "eps_star_step": 0.01},
                           outputs=[args.out, side])
    _write_text(side, _dumps({
        "manifest": asdict(manifest),
        "exact_strictly_decreasing": is_strictly_decreasing([v[0] for v in values]),
    }))
    return EXIT_OK


# -- drive classification -------------------------------------------------------


def _load_kraus(path) -> list[np.ndarray]:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from exc
    try:
        ops = []
        for k in obj["kraus"]:
            re_ = np.asarray(k["real"], dtype=float)
            im_ = np.asarray(k.get("imag", np.zeros_like(re_)), dtype=float)
            ops.append(re_ + 1j * im_)
        return ops
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f'{path}: expected {{"kraus": [{{"real": [[...]], "imag": [[...]]}}, ...]}}') from exc


def cmd_classify_drive(args) -> int:
    from .channels import CompletenessError, KrausChannel, unitary_channel
    from .matcore import X, tensor
    from .walk import classify_drive, walk_channel

    if args.kraus:
        try:
            ch = KrausChannel(tuple(_load_kraus(args.kraus)), "file").check_complete()
        except (CompletenessError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    elif args.model == "walk":
        ch = walk_channel(args.theta)
    elif args.model == "flip":
        ch = unitary_channel(tensor(np.eye(2), X), "flip")
    else:
        ch = unitary_channel(np.eye(4), "identity")
    res = classify_drive(ch, args.basis_dim)
    _emit_json({"kind": res.kind, "eta": res.eta, "return_probabilities": list(res.return_probabilities)}, args.out)
    return EXIT_OK


# -- Pauli demo ------------------------------------------------------------------


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from exc


def cmd_pauli_demo(args) -> int:
    from .pauli import PauliChannelSpec, PauliTestConfig, run_estimation_demo
    from .protocol import decide, sample_overwrite

    spec_obj = _read_json(args.spec)
    hyp_obj = _read_json(args.hypothesis)
    try:
        spec = PauliChannelSpec.from_json(spec_obj)
        table = hyp_obj.get("eigenvalues") if isinstance(hyp_obj, dict) else hyp_obj
        if table is None:
            raise ValueError('hypothesis file needs an "eigenvalues" list')
        cfg = PauliTestConfig(args.eps_p, max(spec.n, 2))
        res = run_estimation_demo(spec, table, cfg, (args.inner_s0, args.inner_s1))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    payload = {
        "per_test": [{"t": r.t, "pauli": r.label, "eps_star": r.eps_star, "s2": r.s2} for r in res.tests],
        "m3_overwrite": res.m3_overwrite,
        "verdict": res.verdict.value,
        "inner": {"m": res.m, "theta": res.theta, "s0_target": args.inner_s0, "s1_target": args.inner_s1},
        "encoding_max_error": res.encoding_max_error,
    }
    if args.sample is not None:
        if args.sample < 1:
            raise UsageError("--sample must be positive")
        est = sample_overwrite(res.m3_overwrite, args.sample, args.seed)
        payload["sampled"] = {"repetitions": args.sample, "seed": args.seed, "m3_overwrite": est,
                              "verdict": decide(est).value}
    _emit_json(payload, args.out)
    return EXIT_OK


# -- verify ------------------------------------------------------------------------


def _check_purity():
    from .matcore import PROJ0
    from .walk import PLUS, WalkConfig, purity_after_step, purity_loss

    worst = 0.0
    for theta in (0.01, 0.1, 0.5, 1.0, 1.5):
        for e in (-0.5, -0.2, 0.0, 0.25, 0.5):
            cfg = WalkConfig(theta, e)
            err = max(abs((1.0 - purity_after_step(cfg, start)) - purity_loss(cfg)) for start in (PROJ0, PLUS))
            if purity_loss(cfg) > theta**2 / 2 + 1e-15:
                return False, f"loss exceeds theta^2/2 at theta={theta}"
            worst = max(worst, err)
    return worst < 1e-13, f"max |loss - formula| = {worst:.3e}"


def _check_oracles():
    from .survival import overwrite_prob_exact, overwrite_probs_recursion

    worst = 0.0
    for theta in (0.02, 0.1, 0.3):
        for e in (0.0, 0.1, 0.25):
            rec = overwrite_probs_recursion(60, theta, e)
            for i in (1, 2, 7, 30, 60):
                worst = max(worst, abs(overwrite_prob_exact(i, theta, e) - rec[i - 1]))
    return worst < 1e-10, f"max |path sum - recursion| = {worst:.3e}"


def _verify_channels():
    from .channels import build_controlled_overwrite, build_reset, build_reverse_overwrite
    from .pauli import EncodingConfig, build_encoding_channel
    from .walk import walk_channel

    return [walk_channel(0.3), build_controlled_overwrite(), build_reverse_overwrite(), build_reset(2),
            build_encoding_channel(EncodingConfig(1, 0.3), 1), build_encoding_channel(EncodingConfig(6, -0.4), 2)]


def _check_cptp():
    chans = _verify_channels()
    worst = max(ch.completeness_error() for ch in chans)
    return worst < 1e-12, f"max ||sum K^dag K - I|| = {worst:.3e}"


def _check_dilation():
    from .channels import apply, dilate
    from .matcore import random_density

    rng = np.random.default_rng(7)
    worst = 0.0
    for ch in _verify_channels():
        d = dilate(ch)
        for _ in range(3):
            rho = random_density(ch.input_dim, rng)
            worst = max(worst, float(np.max(np.abs(d.apply(rho) - apply(ch, rho)))))
    return worst < 1e-10, f"max |dilated - Kraus| = {worst:.3e}"


def _check_backends():
    from .protocol import run_single_stage

    worst = 0.0
    for theta, e in ((0.3, 0.0), (0.3, 0.25), (0.8, 0.5)):
        a = run_single_stage(4, theta, e, "fast").survival_m1
        b = run_single_stage(4, theta, e, "full_dm").survival_m1
        worst = max(worst, abs(a - b))
    return worst < 1e-9, f"max |fast - full_dm| = {worst:.3e}"


def _check_bounds():
    from .protocol import run_double_stage, s2_bounds

    for n in (2, 3, 4):
        r0 = run_double_stage(n, 0.0)
        r1 = run_double_stage(n, 0.25)
        hi0, lo1 = s2_bounds(n)
        if not (r0.survival_m2 <= hi0 and r1.survival_m2 >= lo1):
            return False, f"n={n}: S0^(2)={r0.survival_m2:.3e}, S1^(2)={r1.survival_m2:.3e}"
    return True, "S0^(2) <= 8^-n and S1^(2) >= (1-1/n)^(3n) for n = 2..4"


VERIFY_CHECKS = (
    ("purity", _check_purity),
    ("oracle_equivalence", _check_oracles),
    ("cptp", _check_cptp),
    ("dilation", _check_dilation),
    ("backend_equivalence", _check_backends),
    ("double_stage_bounds", _check_bounds),
)


def cmd_verify(args) -> int:
    first_fail = None
    lines = []
    for name, fn in VERIFY_CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a broken invariant may surface as an exception
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        lines.append(f"{name:<22}{'PASS' if ok else 'FAIL'}  {detail}")
        if not ok and first_fail is None:
            first_fail = name
    sys.stdout.write("\n".join(lines) + "\n")
    if first_fail is not None:
        sys.stdout.write(f"first failing invariant: {first_fail}\n")
        return EXIT_VERIFY
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="weakwalk", description="Weakly-driven quantum-walk hypothesis testing.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve-params", help="solve (m, theta) for survival targets")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--s0-min", type=float, default=0.5)
    s.add_argument("--slack", type=float, default=0.9)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve_params)

    s = sub.add_parser("curve", help="survival after each round as CSV")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--eps-star", type=float, default=0.0)
    s.add_argument("--track", choices=("exact", "gaussian", "leading_order", "all"), default="exact")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_curve)

    s = sub.add_parser("figure1", help="survival versus rounds at gamma=3, eps=0.25")
    s.add_argument("--out", required=True)
    s.add_argument("--sidecar")
    s.set_defaults(func=cmd_figure1)

    s = sub.add_parser("figure2", help="survival versus eps_star at m=85, theta=0.0277")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_figure2)

    s = sub.add_parser("classify-drive", help="strong / weak / neither for a step channel")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--model", choices=("walk", "flip", "identity"), default="walk")
    g.add_argument("--kraus", help='JSON file {"kraus": [{"real": ..., "imag": ...}]} on input (x) pointer')
    s.add_argument("--theta", type=float, default=0.1)
    s.add_argument("--basis-dim", type=int, default=2)
    s.add_argument("--out")
    s.set_defaults(func=cmd_classify_drive)

    s = sub.add_parser("pauli-demo", help="screen a Pauli channel against hypothesized eigenvalues")
    s.add_argument("--spec", required=True)
    s.add_argument("--hypothesis", required=True)
    s.add_argument("--eps-p", type=float, default=0.4)
    s.add_argument("--inner-s0", type=float, default=0.99)
    s.add_argument("--inner-s1", type=float, default=0.01)
    s.add_argument("--sample", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_pauli_demo)

    s = sub.add_parser("verify", help="run the cross-track invariant suite")
    s.set_defaults(func=cmd_verify)
    return p


def _configure_logging() -> None:
    level = os.environ.get("WEAKWALK_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    log_.info("running %s", args.command)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"weakwalk {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"weakwalk {args.command}: I/O error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
