"""Batch front end: state generation, simulation, reconstruction, comparison.

Every subcommand reads one JSON config (``--config``) whose fields can be
overridden by the mirroring command-line flags; outputs are deterministic
for a fixed config + seed, so runs can be diffed byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .fock import (
    ConvergenceError,
    DensityMatrix,
    SqueezeSpec,
    StateSpec,
    ValidationError,
    build_state,
    fidelity,
    trace_distance,
)
from .measurement import MeasurementTable, build_table
from .quasiprob import weight_function
from .reconstruction import KernelParams, make_grid, q_from_zero_counts, reconstruct

DEFAULTS = {
    "state": {"kind": "fock", "n": 0},
    "dim": 20,
    "grid": {"r_max": 4.5, "n_r": 48, "n_theta": 64},
    "eta": 1.0,
    "squeeze": {"magnitude": 0.0, "phase": 0.0},
    "s": "auto",
    "n_max": None,
    "shots": "exact",
    "seed": 0,
}


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    if isinstance(value, str):
        return complex(value)
    return complex(value)


def _state_spec(obj) -> StateSpec:
    kind = obj.get("kind")
    squeeze = None
    if obj.get("squeeze") is not None:
        squeeze = SqueezeSpec(
            float(obj["squeeze"].get("magnitude", 0.0)),
            float(obj["squeeze"].get("phase", 0.0)),
        )
    return StateSpec(
        kind=kind,
        n=int(obj.get("n", 0)),
        beta=_as_complex(obj.get("beta", 0.0)),
        nbar=float(obj.get("nbar", 0.0)),
        parity_phase=float(obj.get("parity_phase", 0.0)),
        squeeze=squeeze,
    )


def load_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if args.config:
        with open(args.config) as fh:
            user = json.load(fh)
        for key, value in user.items():
            if key in ("grid", "squeeze") and isinstance(value, dict):
                cfg[key].update(value)
            else:
                cfg[key] = value
    for key in ("seed", "dim", "eta"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "s", None) is not None:
        cfg["s"] = args.s if args.s == "auto" else float(args.s)
    if getattr(args, "squeeze_mag", None) is not None:
        cfg["squeeze"]["magnitude"] = args.squeeze_mag
    if getattr(args, "squeeze_phase", None) is not None:
        cfg["squeeze"]["phase"] = args.squeeze_phase
    for flag, path in (("rmax", "r_max"), ("nr", "n_r"), ("ntheta", "n_theta")):
        value = getattr(args, flag, None)
        if value is not None:
            cfg["grid"][path] = value
    if getattr(args, "nmax", None) is not None:
        cfg["n_max"] = args.nmax
    if getattr(args, "shots", None) is not None:
        cfg["shots"] = args.shots if args.shots == "exact" else int(args.shots)
    if int(cfg["dim"]) < 1:
        raise ValidationError("dim must be >= 1")
    if not 0 < float(cfg["eta"]) <= 1:
        raise ValidationError("eta must lie in (0, 1]")
    if cfg["n_max"] is not None and int(cfg["n_max"]) >= int(cfg["dim"]):
        raise ValidationError("n_max must be < dim")
    return cfg


def _config_squeeze(cfg) -> SqueezeSpec | None:
    mag = float(cfg["squeeze"].get("magnitude", 0.0))
    if mag == 0.0:
        return None
    return SqueezeSpec(mag, float(cfg["squeeze"].get("phase", 0.0)))


def _config_grid(cfg):
    g = cfg["grid"]
    return make_grid(float(g["r_max"]), int(g["n_r"]), int(g["n_theta"]))


def _resolve_s(cfg, eta, delta) -> float:
    if cfg["s"] == "auto":
        return KernelParams.auto_s(eta, delta)
    return float(cfg["s"])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _sidecar_path(csv_path) -> str:
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".meta.json"


def _load_density(path) -> DensityMatrix:
    with open(path) as fh:
        obj = json.load(fh)
    if "rho_hat" in obj:
        obj = obj["rho_hat"]
    return DensityMatrix.from_json_dict(obj)


def cmd_gen_state(args) -> int:
    cfg = load_config(args)
    rho = build_state(_state_spec(cfg["state"]), int(cfg["dim"]))
    _write_json(args.out, rho.to_json_dict())
    print(f"wrote {args.out} dim={rho.dim} leakage={rho.leakage:.6e}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args)
    if args.state_file:
        rho = _load_density(args.state_file)
    else:
        rho = build_state(_state_spec(cfg["state"]), int(cfg["dim"]))
    shots = None if cfg["shots"] == "exact" else int(cfg["shots"])
    n_max = int(cfg["n_max"]) if cfg["n_max"] is not None else rho.dim - 1
    table = build_table(
        rho,
        _config_grid(cfg),
        eta=float(cfg["eta"]),
        squeeze=_config_squeeze(cfg),
        n_max=n_max,
        shots=shots,
        seed=int(cfg["seed"]),
    )
    sidecar = _sidecar_path(args.out)
    table.write(args.out, sidecar)
    print(f"wrote {args.out} + {sidecar} nodes={len(table.alphas)} n_max={table.n_max}")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = load_config(args)
    table = MeasurementTable.read(args.table, _sidecar_path(args.table))
    delta = table.squeeze.delta if table.squeeze else 1.0
    params = KernelParams(_resolve_s(cfg, table.eta, delta), eta=table.eta, delta=delta)
    meta = table.grid_meta
    grid = make_grid(float(meta["r_max"]), int(meta["n_r"]), int(meta["n_theta"]))
    report = reconstruct(table, params, grid, int(cfg["dim"]))
    _write_json(args.out, report.to_json_dict())
    print(
        f"wrote {args.out} s={params.s:.6g} raw_trace={report.raw_trace:.6g} "
        f"min_eig={report.min_eigenvalue_before_clip:.3e}"
    )
    return 0


def cmd_compare(args) -> int:
    rho_a = _load_density(args.file_a)
    rho_b = _load_density(args.file_b)
    if rho_a.dim != rho_b.dim:
        big = max(rho_a.dim, rho_b.dim)

        def embed(rho):
            mat = np.zeros((big, big), dtype=complex)
            mat[: rho.dim, : rho.dim] = rho.mat
            return DensityMatrix(mat, leakage=max(rho.leakage, 1.0 - rho.mat.trace().real))

        rho_a, rho_b = embed(rho_a), embed(rho_b)
    print(f"fidelity {fidelity(rho_a, rho_b):.12g}")
    print(f"trace_distance {trace_distance(rho_a, rho_b):.12g}")
    return 0


def cmd_qscan(args) -> int:
    cfg = load_config(args)
    grid = _config_grid(cfg)
    if args.source.endswith(".csv"):
        table = MeasurementTable.read(args.source, _sidecar_path(args.source))
        values, s_used = q_from_zero_counts(table)
        alphas = table.alphas
    else:
        rho = _load_density(args.source)
        s_used = _resolve_s(cfg, float(cfg["eta"]), 1.0) if cfg["s"] == "auto" else float(cfg["s"])
        alphas = grid.nodes
        values = np.array([weight_function(rho, a, s_used) for a in alphas])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha_re", "alpha_im", "value"])
        for alpha, value in zip(alphas, values):
            writer.writerow([f"{alpha.real:.17g}", f"{alpha.imag:.17g}", f"{value:.17g}"])
    norm = float(np.sum(grid.weights * values)) if len(values) == len(grid.weights) else float("nan")
    print(f"wrote {args.out} s={s_used:.6g} normalization={norm:.9g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pntomo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", default=None)
        p.add_argument("--out", required=out_required)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dim", type=int, default=None)
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--s", default=None)
        p.add_argument("--squeeze-mag", dest="squeeze_mag", type=float, default=None)
        p.add_argument("--squeeze-phase", dest="squeeze_phase", type=float, default=None)
        p.add_argument("--rmax", type=float, default=None)
        p.add_argument("--nr", type=int, default=None)
        p.add_argument("--ntheta", type=int, default=None)
        p.add_argument("--nmax", type=int, default=None)
        p.add_argument("--shots", default=None)

    p = sub.add_parser("gen-state", help="write a density-matrix JSON file")
    common(p)
    p.set_defaults(func=cmd_gen_state)

    p = sub.add_parser("simulate", help="write a measurement table CSV + sidecar")
    common(p)
    p.add_argument("state_file", nargs="?", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct a density matrix from a table")
    common(p)
    p.add_argument("table")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("compare", help="fidelity / trace distance of two state files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("qscan", help="weight-function or zero-count scan to CSV")
    common(p)
    p.add_argument("source", help="density-matrix JSON or measurement-table CSV")
    p.set_defaults(func=cmd_qscan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
