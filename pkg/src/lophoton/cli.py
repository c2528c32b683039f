"""Batch command line: wires config and data files to the library modules.

Subcommands: truth-table, bell, visibility, fit, analyze, reconstruct.
Every run is deterministic for a fixed (arguments, seed) pair and the same
library versions; the seed comes from --seed, else the LOPHOTON_SEED
environment variable, else DEFAULT_SEED.  Results are written atomically
(temp file + rename), so a failed run leaves no partial output.

Exit codes: 0 success, 2 invalid arguments or malformed input files,
3 state reconstruction failure, 4 model fit divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict

import numpy as np

from . import circuit, counting, emitter, jones, tomo

DEFAULT_SEED = 123456789
SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_RECONSTRUCTION = 3
EXIT_FIT = 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_BAD_INPUT):
        super().__init__(message)
        self.code = code


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _write_text(out_path, text):
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lophoton-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_json(out_path, payload):
    payload = dict(payload)
    payload["schema_version"] = SCHEMA_VERSION
    _write_text(out_path, json.dumps(_jsonify(payload), indent=2, sort_keys=True) + "\n")


def _emit_csv(out_path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    _write_text(out_path, "\n".join(lines) + "\n")


def _rho_payload(rho):
    return {"rho_real": np.real(rho), "rho_imag": np.imag(rho)}


def _load_dephasing_params(path):
    if path is None:
        return emitter.DephasingParams()
    try:
        with open(path) as fh:
            return emitter.DephasingParams.from_json_dict(json.load(fh))
    except FileNotFoundError as e:
        raise CliError(f"params file not found: {e}") from e
    except (json.JSONDecodeError, TypeError, ValueError) as e:
        raise CliError(f"malformed params file {path}: {e}") from e


def _parse_grid(text, log):
    try:
        start, stop, num = text.split(":")
        start, stop, num = float(start), float(stop), int(num)
    except (ValueError, AttributeError) as e:
        raise CliError(f"grid must be start:stop:num, got {text!r}") from e
    if num < 1 or stop < start:
        raise CliError(f"bad grid {text!r}")
    if log:
        if start <= 0:
            raise CliError("log grid needs a positive start")
        return np.geomspace(start, stop, num)
    return np.linspace(start, stop, num)


def _overlap(value):
    if not 0.0 <= value <= 1.0:
        raise CliError(f"overlap must lie in [0, 1], got {value}")
    return value


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_truth_table(args):
    m = _overlap(args.overlap)
    elements = circuit.build_cnot()
    table = circuit.truth_table(elements, m, args.basis)
    fid = circuit.basis_fidelity(table, args.basis)
    inputs = circuit.BASIS_ZZ if args.basis == "ZZ" else circuit.BASIS_XX
    succ = {}
    for label in inputs:
        state = circuit.coincidence_evolve(
            elements,
            circuit.TwoPhotonInput(
                jones.basis_state(label[0]), jones.basis_state(label[1]), m
            ),
        )
        succ[label] = state.success_prob
    payload = {
        "basis": args.basis,
        "overlap": m,
        "gate": circuit.elements_to_json(elements),
        "inputs": list(inputs),
        "outcomes": list(inputs),
        "table": table,
        "fidelity": fid,
        "success_prob": succ,
        "success_prob_mean": float(np.mean(list(succ.values()))),
    }
    if (args.measured_fzz is None) != (args.measured_fxx is None):
        raise CliError("--measured-fzz and --measured-fxx must be given together")
    if args.measured_fzz is not None:
        try:
            lo, hi = tomo.hofmann_bounds(args.measured_fzz, args.measured_fxx)
        except ValueError as e:
            raise CliError(str(e)) from e
        payload["hofmann_bounds_measured"] = {
            "f_zz": args.measured_fzz,
            "f_xx": args.measured_fxx,
            "lower": lo,
            "upper": hi,
        }
    _emit_json(args.out, payload)
    return EXIT_OK


def _metrics_payload(point: tomo.StateMetrics, mc: tomo.MonteCarloMetrics | None):
    payload = {"metrics": asdict(point)}
    if mc is not None:
        payload["metrics_mc"] = {
            name: asdict(getattr(mc, name))
            for name in (
                "fidelity_to_target",
                "concurrence",
                "entropy_full_bits",
                "entropy_reduced_bits",
                "purity",
            )
        }
        payload["n_resamples"] = mc.n_resamples
    return payload


def cmd_bell(args):
    m = _overlap(args.overlap)
    if args.counts_per_setting <= 0:
        raise CliError("--counts-per-setting must be positive")
    elements = circuit.build_cnot()
    prepared = circuit.coincidence_evolve(
        elements,
        circuit.TwoPhotonInput(jones.basis_state("A"), jones.basis_state("V"), m),
    )
    records = tomo.simulate_counts(prepared.rho, args.counts_per_setting, args.seed)
    result = tomo.mle_reconstruct(records)
    if not result.converged:
        raise CliError("maximum-likelihood reconstruction did not converge", EXIT_RECONSTRUCTION)
    target = tomo.psi_minus()
    point = tomo.state_metrics(result.rho, target)
    mc = None
    if args.resamples > 0:
        mc = tomo.monte_carlo_metrics(records, target, args.resamples, args.seed, args.threads)
    f_zz = circuit.basis_fidelity(circuit.truth_table(elements, m, "ZZ"), "ZZ")
    f_xx = circuit.basis_fidelity(circuit.truth_table(elements, m, "XX"), "XX")
    lo, hi = tomo.hofmann_bounds(f_zz, f_xx)
    payload = {
        "overlap": m,
        "counts_per_setting": args.counts_per_setting,
        "seed": args.seed,
        "success_prob": prepared.success_prob,
        "log_likelihood": result.log_likelihood,
        "hofmann": {"f_zz": f_zz, "f_xx": f_xx, "lower": lo, "upper": hi},
        **_rho_payload(result.rho),
        **_metrics_payload(point, mc),
    }
    _emit_json(args.out, payload)
    return EXIT_OK


def cmd_visibility(args):
    params = _load_dephasing_params(args.params)
    grid = _parse_grid(args.grid, args.log_grid)
    try:
        if args.mode == "vs_T":
            header = ("temperature_K", "visibility")
            values = [emitter.tpi_visibility(t, args.delay_ns, params) for t in grid]
        else:
            header = ("delay_ns", "visibility")
            values = [emitter.tpi_visibility(args.temperature, d, params) for d in grid]
    except emitter.QuadratureFailure as e:
        raise CliError(f"quadrature failed: {e}") from e
    except ValueError as e:
        raise CliError(f"bad evaluation point: {e}") from e
    _emit_csv(args.out, header, zip(grid, values))
    return EXIT_OK


def cmd_fit(args):
    try:
        x, y = emitter.read_xy_csv(args.data)
    except FileNotFoundError as e:
        raise CliError(f"data file not found: {e}") from e
    except (ValueError, IndexError, emitter.InsufficientData) as e:
        raise CliError(f"malformed data file {args.data}: {e}") from e

    init = {}
    if args.init is not None:
        try:
            with open(args.init) as fh:
                init = json.load(fh)
        except (FileNotFoundError, json.JSONDecodeError) as e:
            raise CliError(f"bad init file: {e}") from e

    try:
        if args.kind == "trpl":
            p0 = None
            if init:
                p0 = emitter.DecayParams(
                    t1_ps=float(init.get("t1_ps", 350.0)),
                    delta_inv_ps=float(init.get("delta_inv_ps", emitter.fss_ueV_to_inv_ps(6.4))),
                )
            fit = emitter.fit_trpl(x, y, irf_fwhm_ps=args.irf_width, init=p0)
            payload = {
                "kind": "trpl",
                "params": {
                    "t1_ps": fit.params.t1_ps,
                    "delta_inv_ps": fit.params.delta_inv_ps,
                    "delta_ueV": emitter.inv_ps_to_ueV(fit.params.delta_inv_ps),
                    "amplitude": fit.amplitude,
                },
                "irf_fwhm_ps": args.irf_width,
                "rms_residual": fit.rms_residual,
            }
        else:
            which = "vs_temperature" if args.kind == "vis_T" else "vs_delay"
            fixed = _load_dephasing_params(args.params)
            fit = emitter.fit_visibility_curve(
                x, y, which, fixed, init=init or None, temperature_K=args.temperature
            )
            payload = {
                "kind": args.kind,
                "params": fit.params.to_json_dict(),
                "rms_residual": fit.rms_residual,
            }
    except emitter.InsufficientData as e:
        raise CliError(f"insufficient data: {e}") from e
    except emitter.FitDiverged as e:
        raise CliError(f"fit diverged: {e}", EXIT_FIT) from e
    _emit_json(args.out, payload)
    return EXIT_OK


def cmd_analyze(args):
    try:
        h = counting.read_histogram_csv(args.histogram, args.meta)
    except FileNotFoundError as e:
        raise CliError(f"input not found: {e}") from e
    except (ValueError, KeyError, json.JSONDecodeError, IndexError) as e:
        raise CliError(f"malformed histogram input: {e}") from e
    try:
        if args.kind == "g2":
            value, err = counting.g2_zero(h, args.window)
        else:
            value, err = counting.hom_visibility(h, args.window)
    except (counting.WindowOverlap, counting.NoSidePeaks, counting.UnresolvedCluster, ValueError) as e:
        raise CliError(f"analysis failed: {e}") from e
    _emit_json(
        args.out,
        {"kind": args.kind, "value": value, "error": err, "window_ps": args.window},
    )
    return EXIT_OK


def cmd_reconstruct(args):
    try:
        records = tomo.records_from_csv(args.records)
    except FileNotFoundError as e:
        raise CliError(f"records file not found: {e}") from e
    except (ValueError, IndexError) as e:
        raise CliError(f"malformed records file: {e}") from e
    try:
        result = tomo.mle_reconstruct(records)
    except tomo.MissingSetting as e:
        raise CliError(f"incomplete tomography data: {e}") from e
    if not result.converged:
        raise CliError("maximum-likelihood reconstruction did not converge", EXIT_RECONSTRUCTION)
    target = tomo.psi_minus() if args.target == "psi-minus" else tomo.maximally_mixed()
    point = tomo.state_metrics(result.rho, target)
    mc = None
    if args.resamples > 0:
        try:
            mc = tomo.monte_carlo_metrics(records, target, args.resamples, args.seed, args.threads)
        except ValueError as e:
            raise CliError(str(e)) from e
    payload = {
        "target": args.target,
        "seed": args.seed,
        "log_likelihood": result.log_likelihood,
        **_rho_payload(result.rho),
        **_metrics_payload(point, mc),
    }
    _emit_json(args.out, payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _env_seed():
    raw = os.environ.get("LOPHOTON_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"LOPHOTON_SEED must be an integer, got {raw!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lophoton",
        description="Two-photon gate simulation, emitter models, and tomography, batch style.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default: LOPHOTON_SEED or builtin)")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--threads", type=int, default=1, help="parallel Monte Carlo resamples")

    p = sub.add_parser("truth-table", help="conditional gate table and basis fidelity")
    add_common(p)
    p.add_argument("--overlap", type=float, default=1.0, help="wavepacket overlap M in [0, 1]")
    p.add_argument("--basis", choices=["ZZ", "XX"], default="ZZ")
    p.add_argument("--measured-fzz", type=float, default=None, help="externally measured ZZ fidelity")
    p.add_argument("--measured-fxx", type=float, default=None, help="externally measured XX fidelity")
    p.set_defaults(func=cmd_truth_table)

    p = sub.add_parser("bell", help="prepare, measure and reconstruct the entangled pair")
    add_common(p)
    p.add_argument("--overlap", type=float, default=1.0)
    p.add_argument("--counts-per-setting", type=int, default=1_000_000)
    p.add_argument("--resamples", type=int, default=1000)
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("visibility", help="interference visibility curve to CSV")
    add_common(p)
    p.add_argument("--mode", choices=["vs_T", "vs_dt"], required=True)
    p.add_argument("--params", default=None, help="dephasing parameter JSON")
    p.add_argument("--grid", required=True, help="start:stop:num")
    p.add_argument("--log-grid", action="store_true")
    p.add_argument("--delay-ns", type=float, default=2.0, dest="delay_ns", help="pulse delay for vs_T")
    p.add_argument("--temperature", type=float, default=4.0, help="temperature for vs_dt")
    p.set_defaults(func=cmd_visibility)

    p = sub.add_parser("fit", help="least-squares model fits")
    add_common(p)
    p.add_argument("--kind", choices=["trpl", "vis_T", "vis_dt"], required=True)
    p.add_argument("--data", required=True, help="two-column CSV with header")
    p.add_argument("--init", default=None, help="JSON with starting values")
    p.add_argument("--params", default=None, help="fixed dephasing parameters JSON")
    p.add_argument("--irf-width", type=float, default=75.0, help="IRF FWHM in ps (trpl)")
    p.add_argument("--temperature", type=float, default=4.0, help="temperature for vis_dt")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("analyze", help="histogram statistics: g2 or interference visibility")
    add_common(p)
    p.add_argument("--kind", choices=["g2", "hom"], required=True)
    p.add_argument("--histogram", required=True, help="histogram CSV (tau_ps,counts)")
    p.add_argument("--meta", required=True, help="metadata sidecar JSON")
    p.add_argument("--window", type=float, default=None, help="integration half-window in ps")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reconstruct", help="tomography from a measurement record CSV")
    add_common(p)
    p.add_argument("--records", required=True)
    p.add_argument("--resamples", type=int, default=0)
    p.add_argument("--target", choices=["psi-minus", "maximally-mixed"], default="psi-minus")
    p.set_defaults(func=cmd_reconstruct)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _env_seed()
        if getattr(args, "window", "") is None:
            args.window = 2000.0 if args.kind == "g2" else 600.0
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
