"""Command-line front end.

Subcommands: run-protocol, analyze, dephase, simulate, tomography, report.
Every command is referentially transparent given its flags, seed and input
files.  Exit codes: 0 success, 2 validation failure, 3 numerical failure,
1 I/O failure.
"""

import argparse
import os
import sys

import numpy as np

from ._version import __version__
from . import fileio
from .dephasing import DephasingParams, dephase_forward, dephase_invert, phase_variance_from_degrees
from .errors import NumericalError, ValidationError
from .protocol import (
    VARIANTS,
    ProtocolConfig,
    a_posteriori_correct,
    run_protocol,
    simulate_ensemble,
)
from .separability import classicality_check, duan_product, optimize_gain, ppt_test
from .states import GaussianState, beam_splitter, min_physicality_eigenvalue, PHYSICALITY_TOL
from .tomography import (
    CANONICAL_SETTINGS,
    block_errors,
    pair_statistics_from_samples,
    reconstruct_covariance,
    shape_statistics,
)

REPORT_SCHEMA = "cv-report/1"
SEED_ENV = "ENTDIST_SEED"


def _default_seed():
    return int(os.environ.get(SEED_ENV, "0"))


def _parse_gain_grid(text):
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ValidationError(f"gain grid must look like 'lo:hi:n', got {text!r}") from exc


def _parse_vector(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"expected a comma-separated numeric vector, got {text!r}") from exc


def _sigma2_to_rad2(value, unit):
    if unit == "rad2":
        if value < 0:
            raise ValidationError("sigma2 must be non-negative")
        return float(value)
    return phase_variance_from_degrees(value, squared_std=(unit == "degstd"))


def _config_from_args(args):
    return ProtocolConfig(
        r=args.r,
        variant=args.variant,
        bob_loss=args.loss,
        detector_gain=args.detector_gain,
    )


def _cmd_run_protocol(args):
    config = _config_from_args(args)
    trace = run_protocol(config, gain_grid=_parse_gain_grid(args.gain_grid))
    flags = {
        "r": args.r, "variant": args.variant, "loss": args.loss,
        "detector_gain": args.detector_gain, "gain_grid": args.gain_grid,
    }
    manifest = fileio.build_manifest("run-protocol", flags, seed=args.seed)
    fileio.write_trace(trace, args.out + ".json", manifest=manifest)
    fileio.write_criterion_csv(trace.criterion_curve, args.out + "_curve.csv")
    print(f"g_opt = {trace.g_opt:.6f}  min product = {trace.optimum.product:.6f}")
    print(f"wrote {args.out}.json and {args.out}_curve.csv")
    return 0


def _cmd_analyze(args):
    state = fileio.read_state(args.matrix)
    if not (args.ppt or args.duan or args.physical or args.classical):
        raise ValidationError("choose at least one of --ppt, --duan, --physical, --classical")
    verdicts = {}
    if args.ppt:
        verdict = ppt_test(state, args.mode)
        verdicts["ppt"] = verdict.to_dict()
        print(f"ppt mode {args.mode}: eigenvalues {[round(v, 4) for v in verdict.eigenvalues]}"
              f" separable={verdict.separable}")
    if args.duan:
        lo, hi = args.bracket
        g_opt, best = optimize_gain(state, (lo, hi))
        verdicts["duan"] = {"g_opt": g_opt, **best.to_dict()}
        if args.g is not None:
            verdicts["duan"]["at_gain"] = duan_product(state, args.g).to_dict()
        print(f"duan: g_opt={g_opt:.4f} product={best.product:.4f} entangled={best.product < 1}")
    if args.physical:
        min_ev = min_physicality_eigenvalue(state)
        verdicts["physical"] = {"min_eigenvalue": min_ev, "physical": min_ev >= -PHYSICALITY_TOL}
        print(f"physicality: min eigenvalue {min_ev:.6g}")
    if args.classical:
        min_ev, squeezed = classicality_check(state)
        verdicts["classical"] = {"min_gamma_eigenvalue": min_ev, "squeezed": squeezed}
        print(f"classicality: min gamma eigenvalue {min_ev:.6g} squeezed={squeezed}")
    if args.out:
        manifest = fileio.build_manifest("analyze", {"matrix": args.matrix, "mode": args.mode},
                                         inputs=[args.matrix])
        fileio.write_verdicts(verdicts, args.out, manifest=manifest)
    return 0


def _cmd_dephase(args):
    state = fileio.read_state(args.matrix)
    sigma2 = _sigma2_to_rad2(args.sigma2, args.sigma2_unit)
    params = DephasingParams(sigma2=sigma2, transmittance=args.T)
    if args.invert:
        if args.d is None:
            raise ValidationError("--invert requires the measured output mean via --d")
        mean_out = _parse_vector(args.d)
        gamma_in = dephase_invert(state.gamma, mean_out, params)
        mean_in = np.linalg.inv(params.sigma_matrix) @ beam_splitter(args.T).matrix.T @ mean_out
        result = GaussianState(2, gamma_in, mean_in)
    else:
        mean = _parse_vector(args.d) if args.d is not None else state.mean
        gamma_out, mean_out = dephase_forward(state.gamma, mean, params)
        result = GaussianState(2, gamma_out, mean_out)
    min_ev = min_physicality_eigenvalue(result)
    min_gamma, squeezed = classicality_check(result)
    doc = fileio.state_to_dict(result)
    doc["physical"] = {"min_eigenvalue": min_ev, "physical": min_ev >= -PHYSICALITY_TOL}
    doc["classical"] = {"min_gamma_eigenvalue": min_gamma, "squeezed": squeezed}
    doc["manifest"] = fileio.build_manifest(
        "dephase",
        {"matrix": args.matrix, "sigma2": args.sigma2, "sigma2_unit": args.sigma2_unit,
         "T": args.T, "direction": "invert" if args.invert else "forward"},
        inputs=[args.matrix],
    )
    fileio._dump_json(doc, args.out)
    print(f"min physicality eigenvalue {min_ev:.6g}; min gamma eigenvalue {min_gamma:.6g}")
    print(f"wrote {args.out}")
    return 0


def _cmd_simulate(args):
    config = _config_from_args(args)
    samples = simulate_ensemble(
        config, args.cells, args.inner, args.seed,
        stage=args.stage, scheme=args.scheme, workers=args.workers,
    )
    if args.correct:
        samples = a_posteriori_correct(samples)
    flags = {
        "r": args.r, "variant": args.variant, "loss": args.loss,
        "detector_gain": args.detector_gain, "cells": args.cells, "inner": args.inner,
        "stage": args.stage, "scheme": args.scheme, "correct": args.correct,
    }
    manifest = fileio.build_manifest("simulate", flags, seed=args.seed)
    fileio.write_samples(samples, args.out, manifest=manifest)
    print(f"wrote {samples.n_records} records to {args.out}")
    return 0


def _cmd_tomography(args):
    samples = fileio.read_samples(args.samples)
    gamma_hat = samples.covariance()
    errors = block_errors(samples.outcomes, k=args.blocks,
                          statistic=lambda block: np.cov(block, rowvar=False, ddof=1))
    stats = [pair_statistics_from_samples(samples.outcomes, s) for s in CANONICAL_SETTINGS]
    gamma_rec = reconstruct_covariance(stats)
    shapes = {}
    for c, label in enumerate(samples.channel_labels):
        s = shape_statistics(samples.outcomes[:, c], k_blocks=args.blocks)
        shapes[label] = {
            "skewness": s.skewness, "skewness_err": s.skewness_err,
            "kurtosis": s.kurtosis, "kurtosis_err": s.kurtosis_err, "n": s.n,
        }
    report = {
        "schema": REPORT_SCHEMA,
        "n_records": samples.n_records,
        "blocks": args.blocks,
        "mode_labels": list(samples.mode_labels),
        "gamma": gamma_hat.tolist(),
        "gamma_errors": np.asarray(errors).tolist(),
        "gamma_reconstructed": gamma_rec.tolist(),
        "shape_stats": shapes,
        "manifest": fileio.build_manifest("tomography", {"samples": args.samples, "blocks": args.blocks},
                                          inputs=[args.samples]),
    }
    fileio.write_report(report, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args):
    report = fileio.read_report(args.report)
    if report.get("schema") != REPORT_SCHEMA:
        raise ValidationError(f"unknown schema {report.get('schema')!r}; expected {REPORT_SCHEMA!r}")
    lines = [f"covariance estimate from {report['n_records']} records "
             f"({report['blocks']}-block standard errors)", ""]
    lines.append(fileio.format_matrix_with_errors(report["gamma"], report["gamma_errors"]))
    lines.append("")
    lines.append("shape statistics per channel:")
    for label, s in report["shape_stats"].items():
        lines.append(f"  {label}: S = {s['skewness']:.4g} ± {s['skewness_err']:.2g}"
                     f"   K = {s['kurtosis']:.4g} ± {s['kurtosis_err']:.2g}")
    text = "\n".join(lines)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(prog="entdist",
                                     description="Gaussian entanglement-distribution toolkit")
    parser.add_argument("--version", action="version", version=f"entdist {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_protocol_flags(p):
        p.add_argument("--r", type=float, required=True, help="squeezing parameter")
        p.add_argument("--variant", choices=VARIANTS, default="displace_B_before_BS")
        p.add_argument("--loss", type=float, default=0.5, help="loss fraction on the kept output")
        p.add_argument("--detector-gain", dest="detector_gain", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("run-protocol", help="analytic protocol run with criterion curve")
    add_protocol_flags(p)
    p.add_argument("--gain-grid", default="0.05:2:200", help="criterion grid as lo:hi:n")
    p.add_argument("--out", required=True, help="output prefix for .json and _curve.csv")
    p.set_defaults(func=_cmd_run_protocol)

    p = sub.add_parser("analyze", help="separability and physicality verdicts for a state file")
    p.add_argument("matrix", help="state JSON file")
    p.add_argument("--mode", type=int, default=1, help="0-based mode to transpose for --ppt")
    p.add_argument("--ppt", action="store_true")
    p.add_argument("--duan", action="store_true")
    p.add_argument("--physical", action="store_true")
    p.add_argument("--classical", action="store_true")
    p.add_argument("--g", type=float, default=None, help="also evaluate the criterion at this gain")
    p.add_argument("--bracket", type=float, nargs=2, default=(0.05, 2.0))
    p.add_argument("--out", default=None, help="verdict JSON path")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("dephase", help="phase-jitter map of a two-mode state, forward or inverse")
    direction = p.add_mutually_exclusive_group(required=True)
    direction.add_argument("--forward", action="store_true")
    direction.add_argument("--invert", action="store_true")
    p.add_argument("matrix", help="state JSON file")
    p.add_argument("--d", default=None, help="mean vector, comma separated")
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--sigma2-unit", choices=("rad2", "sqdeg", "degstd"), default="rad2",
                   help="rad2: radians^2; sqdeg: square degrees; degstd: degrees of std, squared")
    p.add_argument("--T", type=float, default=0.5, help="beam-splitter transmittance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dephase)

    p = sub.add_parser("simulate", help="seeded Monte Carlo ensemble of quadrature records")
    add_protocol_flags(p)
    p.add_argument("--cells", type=int, default=80, help="grid cells per axis (n_outer)")
    p.add_argument("--inner", type=int, default=100, help="records per cell (n_inner)")
    p.add_argument("--stage", choices=("final", "after_bs_ac"), default="final")
    p.add_argument("--scheme", choices=("continuous", "grid"), default="continuous")
    p.add_argument("--correct", action="store_true", help="apply the a-posteriori correction")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="sample CSV path (sidecar JSON written next to it)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tomography", help="covariance, block errors and shape stats from samples")
    p.add_argument("samples", help="sample CSV path")
    p.add_argument("--blocks", type=int, default=10)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=_cmd_tomography)

    p = sub.add_parser("report", help="render a tomography report as value ± error text")
    p.add_argument("report", help="report JSON path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
