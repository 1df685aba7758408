"""Command-line driver: config ingestion, experiment dispatch, seeded
reproducibility, and JSON/CSV result emission.

Subcommands: ineq, exchange, clausius, gas.  Every JSON result is wrapped
in an envelope echoing the exact configuration and master seed; payloads
are bit-reproducible for a given (config, seed) at any worker count.

Exit codes: 0 success, 1 inequality violation, 2 validation/config error,
3 degeneracy failure of a requested rotation, 4 no fixed-point
convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable

import numpy as np

from . import __version__
from .errors import (
    BadCycle,
    ConfigError,
    EntroflowError,
    InvalidSpec,
    NoConvergence,
    NotDegenerate,
    OverlappingPlanes,
)
from .exchange import (
    CaseSpec,
    ClausiusStroke,
    clausius_cycle,
    givens_unitary,
    joint_energies,
    run_exchange,
)
from .gas import CollisionSpec, ensemble_heat
from .inequalities import (
    AncillaChannel,
    average_correlation_bound,
    check_ssa,
    gibbs_evolution_identity,
)
from .qmath import haar_unitary, random_density, substream
from .states import DensityOperator, EntangledThermalSpec, HamiltonianSpec, gibbs_state

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_VALIDATION = 2
EXIT_DEGENERACY = 3
EXIT_NO_CONVERGENCE = 4

# substream tags per subcommand so different commands sharing a master
# seed never consume the same stream
_TAG_SSA, _TAG_AVG, _TAG_GIBBS = 1, 2, 3

_IDENTITY_TOL = 1e-9
_SLACK_TOL = 1e-9
_RHS_TOL = 1e-10
_CLAUSIUS_TOL = 1e-8
_STROKE_TOL = 1e-9


def worker_count() -> int:
    """Worker cap from ENTROFLOW_THREADS (0 or unset = auto); results never
    depend on it."""
    raw = os.environ.get("ENTROFLOW_THREADS", "0")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ENTROFLOW_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ConfigError(f"ENTROFLOW_THREADS must be >= 0, got {value}")
    return value if value > 0 else (os.cpu_count() or 1)


def parallel_map(fn: Callable[[Any], Any], items: Iterable[Any], workers: int) -> list:
    """Apply fn to items, preserving input order regardless of worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


def _payload_value(value):
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _payload_value(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {k: _payload_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_payload_value(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_payload_value(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def payload_json(payload: dict) -> str:
    """Canonical serialization: key-sorted, round-trip-exact doubles."""
    return json.dumps(_payload_value(payload), sort_keys=True)


def make_envelope(command: str, config: dict, seed: int | None, payload: dict, wall_time: float) -> dict:
    return {
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": _payload_value(config),
        "seed": seed,
        "wall_time_s": wall_time,
        "payload": _payload_value(payload),
    }


def _write_text(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _emit_envelope(envelope: dict, path: str | None) -> None:
    _write_text(json.dumps(envelope, sort_keys=True, indent=2), path)


def _csv_rows(header: list[str], rows: list[list[float]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt17(v) for v in row) for row in rows)
    return "\r\n".join(lines) + "\r\n"


def _load_config(path: str, expected_kind: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {SCHEMA_VERSION}, got {cfg.get('schema_version')!r}"
        )
    if cfg.get("kind") != expected_kind:
        raise ConfigError(f"config kind must be {expected_kind!r}, got {cfg.get('kind')!r}")
    return cfg


def _require_number_list(cfg: dict, key: str) -> list[float]:
    value = cfg.get(key)
    if not isinstance(value, list) or not value or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"config field {key!r} must be a nonempty array of numbers")
    return [float(v) for v in value]


def _require_positive(cfg: dict, key: str) -> float:
    value = cfg.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ConfigError(f"config field {key!r} must be a positive number")
    return float(value)


def _check_seed(seed: int) -> int:
    if not 0 <= seed < 2**64:
        raise ConfigError(f"--seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--dims must be comma-separated integers, got {text!r}") from exc
    if not dims or any(d < 2 for d in dims):
        raise ConfigError(f"--dims entries must all be >= 2, got {text!r}")
    return dims


def _parse_sweep(text: str) -> np.ndarray:
    # accepted shape: phi=a:b:n
    try:
        name, rng = text.split("=", 1)
        lo, hi, count = rng.split(":")
        lo_f, hi_f, n_i = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ConfigError(f"--sweep must look like phi=a:b:n, got {text!r}") from exc
    if name != "phi":
        raise ConfigError(f"only phi sweeps are supported, got {name!r}")
    if n_i < 2:
        raise ConfigError(f"sweep needs at least 2 points, got {n_i}")
    return np.linspace(lo_f, hi_f, n_i)


# ---------------------------------------------------------------- ineq ---

def _random_hamiltonian(d: int, rng: np.random.Generator) -> HamiltonianSpec:
    # span capped at 1.2 so beta * span stays within the range where tiny
    # Gibbs populations remain representable in a dense matrix
    levels = np.sort(rng.uniform(0.0, 1.2, d))
    return HamiltonianSpec(levels, basis=haar_unitary(d, rng))


def cmd_ineq(args: argparse.Namespace) -> int:
    dims = _parse_dims(args.dims)
    if args.trials < 1:
        raise ConfigError(f"--trials must be >= 1, got {args.trials}")
    seed = _check_seed(args.seed)
    workers = worker_count()
    started = time.perf_counter()

    if args.check == "ssa":
        if len(dims) != 3:
            raise ConfigError("ssa needs exactly 3 factors in --dims")
        d = math.prod(dims)

        def one_trial(t: int) -> float:
            rng = substream(seed, _TAG_SSA, t)
            rank = int(rng.integers(1, d + 1))
            rho = DensityOperator(random_density(d, rank, rng), dims)
            return check_ssa(rho, 0, 1, 2).slack

        slacks = parallel_map(one_trial, range(args.trials), workers)
        worst = int(np.argmin(slacks))
        ok = slacks[worst] >= -_SLACK_TOL
        payload = {
            "check": "ssa",
            "trials": args.trials,
            "worst_slack": slacks[worst],
            "worst_trial": worst,
            "tol": _SLACK_TOL,
            "all_pass": ok,
        }
    elif args.check == "eq1":
        if len(dims) < 3:
            raise ConfigError("eq1 needs at least 3 factors in --dims")
        d = math.prod(dims)

        def one_trial(t: int) -> float:
            rng = substream(seed, _TAG_AVG, t)
            rank = int(rng.integers(1, d + 1))
            rho = DensityOperator(random_density(d, rank, rng), dims)
            return average_correlation_bound(rho).slack

        slacks = parallel_map(one_trial, range(args.trials), workers)
        worst = int(np.argmin(slacks))
        ok = slacks[worst] >= -_SLACK_TOL
        payload = {
            "check": "eq1",
            "trials": args.trials,
            "worst_slack": slacks[worst],
            "worst_trial": worst,
            "tol": _SLACK_TOL,
            "all_pass": ok,
        }
    else:  # eq2
        if len(dims) > 2:
            raise ConfigError("eq2 takes --dims SYSTEM or SYSTEM,ANCILLA")
        d_sys = dims[0]
        d_anc = dims[1] if len(dims) == 2 else 2

        def one_trial(t: int) -> tuple[float, float]:
            rng = substream(seed, _TAG_GIBBS, t)
            beta = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
            h_i = _random_hamiltonian(d_sys, rng)
            h_f = _random_hamiltonian(d_sys, rng)
            unitary = haar_unitary(d_sys * d_anc, rng)
            anc_rank = int(rng.integers(1, d_anc + 1))
            ancilla = DensityOperator(random_density(d_anc, anc_rank, rng), (d_anc,))
            report = gibbs_evolution_identity(h_i, beta, AncillaChannel(unitary, ancilla), h_f)
            return report.identity_gap, report.nonneg_slack

        results = parallel_map(one_trial, range(args.trials), workers)
        gaps = [g for g, _ in results]
        slacks = [s for _, s in results]
        worst_gap = int(np.argmax(gaps))
        worst_slack = int(np.argmin(slacks))
        ok = gaps[worst_gap] <= _IDENTITY_TOL and slacks[worst_slack] >= -_RHS_TOL
        payload = {
            "check": "eq2",
            "trials": args.trials,
            "worst_identity_gap": gaps[worst_gap],
            "worst_gap_trial": worst_gap,
            "worst_slack": slacks[worst_slack],
            "worst_slack_trial": worst_slack,
            "gap_tol": _IDENTITY_TOL,
            "slack_tol": _RHS_TOL,
            "all_pass": ok,
        }

    config = {"check": args.check, "dims": list(dims), "trials": args.trials, "seed": seed}
    envelope = make_envelope("ineq", config, seed, payload, time.perf_counter() - started)
    _emit_envelope(envelope, args.output)
    return EXIT_OK if payload["all_pass"] else EXIT_VIOLATION


# ------------------------------------------------------------ exchange ---

def _exchange_setup(args: argparse.Namespace):
    cfg = _load_config(args.config, "exchange")
    epsilon = _require_number_list(cfg, "epsilon")
    gamma = _require_positive(cfg, "gamma")
    mu_a = _require_positive(cfg, "mu_a")
    mu_b = _require_positive(cfg, "mu_b")
    try:
        spec = EntangledThermalSpec(np.asarray(epsilon), gamma, mu_a, mu_b)
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from exc

    rotations_cfg = cfg.get("rotations")
    if (
        not isinstance(rotations_cfg, list)
        or not rotations_cfg
        or not all(isinstance(r, list) and len(r) == 3 for r in rotations_cfg)
    ):
        raise ConfigError("config field 'rotations' must be a list of [[i,j],[i2,j2],phi]")
    planes = []
    for rot in rotations_cfg:
        (i, j), (i2, j2), phi = rot[0], rot[1], rot[2]
        planes.append(((int(i), int(j)), (int(i2), int(j2)), float(phi)))

    if args.case == "v":
        case = CaseSpec.case_v(spec)
    else:
        beta_a = cfg.get("beta_a")
        beta_b = cfg.get("beta_b")
        case = CaseSpec.case_s(
            spec.hamiltonian_a(),
            float(beta_a) if beta_a is not None else spec.beta_a,
            spec.hamiltonian_b(),
            float(beta_b) if beta_b is not None else spec.beta_b,
        )
    return cfg, case, planes


def _exchange_unitary(case: CaseSpec, planes, phi_override: float | None) -> np.ndarray:
    h_a, h_b = case.hamiltonians()
    if phi_override is not None:
        planes = [(u, v, phi_override) for u, v, _ in planes]
    return givens_unitary((h_a.dim, h_b.dim), planes, joint_energies(h_a, h_b))


_SWEEP_HEADER = ["phi", "Q_A", "Q_B", "dS_A", "dS_B", "I_init", "I_final", "W"]


def cmd_exchange(args: argparse.Namespace) -> int:
    cfg, case, planes = _exchange_setup(args)
    started = time.perf_counter()
    config = {
        "case": args.case,
        "config_file": cfg,
        "phi": args.phi,
        "sweep": args.sweep,
    }

    if args.sweep is not None:
        rows = []
        for phi in _parse_sweep(args.sweep):
            report = run_exchange(case, _exchange_unitary(case, planes, float(phi)))
            rows.append(
                [
                    float(phi),
                    report.q_a,
                    report.q_b,
                    report.ds_a,
                    report.ds_b,
                    report.mutual_info_initial,
                    report.mutual_info_final,
                    report.work_leak,
                ]
            )
        _write_text(_csv_rows(_SWEEP_HEADER, rows), args.output)
        return EXIT_OK

    report = run_exchange(case, _exchange_unitary(case, planes, args.phi))
    envelope = make_envelope(
        "exchange", config, None, dataclasses.asdict(report), time.perf_counter() - started
    )
    _emit_envelope(envelope, args.output)
    return EXIT_OK


# ------------------------------------------------------------ clausius ---

def _clausius_setup(args: argparse.Namespace):
    cfg = _load_config(args.config, "clausius")
    system_cfg = cfg.get("system")
    if not isinstance(system_cfg, dict):
        raise ConfigError("config field 'system' must be an object with 'levels'")
    levels = _require_number_list(system_cfg, "levels")
    try:
        h0 = HamiltonianSpec(np.asarray(levels))
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from exc

    init_cfg = cfg.get("initial_state")
    if not isinstance(init_cfg, dict) or "kind" not in init_cfg:
        raise ConfigError("config field 'initial_state' must carry a 'kind'")
    if init_cfg["kind"] == "gibbs":
        rho0 = gibbs_state(h0, _require_positive(init_cfg, "beta"))
    elif init_cfg["kind"] == "diagonal":
        pops = np.asarray(_require_number_list(init_cfg, "populations"))
        if pops.size != h0.dim or np.any(pops < 0) or abs(pops.sum() - 1.0) > 1e-10:
            raise ConfigError("'populations' must be a normalized distribution over the levels")
        rho0 = DensityOperator(np.diag(pops).astype(complex), (h0.dim,))
    elif init_cfg["kind"] == "maximally_mixed":
        rho0 = DensityOperator(np.eye(h0.dim, dtype=complex) / h0.dim, (h0.dim,))
    else:
        raise ConfigError(f"unknown initial_state kind {init_cfg['kind']!r}")

    strokes_cfg = cfg.get("strokes")
    if not isinstance(strokes_cfg, list) or not strokes_cfg:
        raise ConfigError("config field 'strokes' must be a nonempty list")
    strokes = []
    for entry in strokes_cfg:
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigError("every stroke must be an object with a 'kind'")
        try:
            if entry["kind"] == "contact":
                strokes.append(
                    ClausiusStroke.contact(
                        _require_positive(entry, "temperature"),
                        float(entry.get("phi", math.pi / 2)),
                    )
                )
            elif entry["kind"] == "quench":
                strokes.append(
                    ClausiusStroke.quench(
                        HamiltonianSpec(np.asarray(_require_number_list(entry, "levels")))
                    )
                )
            else:
                raise ConfigError(f"unknown stroke kind {entry['kind']!r}")
        except InvalidSpec as exc:
            raise ConfigError(str(exc)) from exc
    return cfg, h0, rho0, strokes


def cmd_clausius(args: argparse.Namespace) -> int:
    cfg, h0, rho0, strokes = _clausius_setup(args)
    if args.max_cycles < 1:
        raise ConfigError(f"--max-cycles must be >= 1, got {args.max_cycles}")
    if not args.fp_tol > 0:
        raise ConfigError(f"--fp-tol must be positive, got {args.fp_tol}")
    started = time.perf_counter()

    report = clausius_cycle((h0, rho0), strokes, max_cycles=args.max_cycles, fp_tol=args.fp_tol)
    payload = dataclasses.asdict(report)
    payload["converged"] = True
    payload["clausius_pass"] = report.clausius_sum <= _CLAUSIUS_TOL
    payload["stroke_pass"] = all(r.slack <= _STROKE_TOL for r in report.strokes)

    config = {
        "config_file": cfg,
        "max_cycles": args.max_cycles,
        "fp_tol": args.fp_tol,
    }
    envelope = make_envelope("clausius", config, None, payload, time.perf_counter() - started)
    _emit_envelope(envelope, args.output)
    return EXIT_OK if payload["clausius_pass"] else EXIT_VIOLATION


# ----------------------------------------------------------------- gas ---

def cmd_gas(args: argparse.Namespace) -> int:
    flux = None if args.flux is None else (args.flux == "on")
    _check_seed(args.seed)
    try:
        spec = CollisionSpec(
            m_a=args.ma,
            m_b=args.mb,
            t_a=args.ta,
            t_b=args.tb,
            gamma=args.gamma,
            flux_weighting=flux,
        )
        if args.samples < 2:
            raise InvalidSpec(f"--samples must be >= 2, got {args.samples}")
        started = time.perf_counter()
        report = ensemble_heat(spec, args.mode, args.samples, args.seed, workers=worker_count())
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from exc

    payload = dataclasses.asdict(report)
    payload["reversal_ratio"] = spec.reversal_ratio
    config = {
        "ma": args.ma,
        "mb": args.mb,
        "ta": args.ta,
        "tb": args.tb,
        "gamma": args.gamma,
        "mode": args.mode,
        "samples": args.samples,
        "seed": args.seed,
        "flux": args.flux,
    }
    envelope = make_envelope("gas", config, args.seed, payload, time.perf_counter() - started)
    _emit_envelope(envelope, args.output)
    return EXIT_OK


# ---------------------------------------------------------------- main ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entroflow",
        description="Heat-flow direction experiments for correlated quantum systems.",
    )
    parser.add_argument("--version", action="version", version=f"entroflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ineq = sub.add_parser("ineq", help="random-ensemble entropy-inequality checks")
    p_ineq.add_argument(
        "--check",
        required=True,
        choices=["ssa", "eq1", "eq2"],
        help="ssa: strong subadditivity; eq1: average-correlation bound; "
        "eq2: Gibbs-evolution identity",
    )
    p_ineq.add_argument("--dims", required=True, help="comma-separated factor dimensions")
    p_ineq.add_argument("--trials", type=int, default=100)
    p_ineq.add_argument("--seed", type=int, required=True)
    p_ineq.add_argument("--output", default=None, help="output path (default stdout)")
    p_ineq.set_defaults(func=cmd_ineq)

    p_ex = sub.add_parser("exchange", help="two-system heat-exchange experiment")
    p_ex.add_argument("--case", required=True, choices=["s", "v"])
    p_ex.add_argument("--config", required=True, help="JSON experiment config")
    p_ex.add_argument("--phi", type=float, default=None, help="override all rotation angles")
    p_ex.add_argument("--sweep", default=None, help="phi=a:b:n emits CSV rows over the grid")
    p_ex.add_argument("--output", default=None)
    p_ex.set_defaults(func=cmd_exchange)

    p_cl = sub.add_parser("clausius", help="cyclic contact-with-reservoirs run")
    p_cl.add_argument("--config", required=True, help="JSON system + strokes config")
    p_cl.add_argument("--max-cycles", type=int, default=500)
    p_cl.add_argument("--fp-tol", type=float, default=1e-10)
    p_cl.add_argument("--output", default=None)
    p_cl.set_defaults(func=cmd_clausius)

    p_gas = sub.add_parser("gas", help="dilute-gas collision ensemble")
    p_gas.add_argument("--ma", type=float, required=True)
    p_gas.add_argument("--mb", type=float, required=True)
    p_gas.add_argument("--ta", type=float, required=True)
    p_gas.add_argument("--tb", type=float, required=True)
    p_gas.add_argument("--gamma", type=float, required=True)
    p_gas.add_argument("--mode", required=True, choices=["entangled", "product"])
    p_gas.add_argument("--samples", type=int, required=True)
    p_gas.add_argument("--seed", type=int, required=True)
    p_gas.add_argument("--flux", choices=["on", "off"], default=None)
    p_gas.add_argument("--output", default=None)
    p_gas.set_defaults(func=cmd_gas)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"entroflow: config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BadCycle as exc:
        print(f"entroflow: bad cycle: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotDegenerate, OverlappingPlanes) as exc:
        print(f"entroflow: degeneracy error: {exc}", file=sys.stderr)
        return EXIT_DEGENERACY
    except NoConvergence as exc:
        print(f"entroflow: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except EntroflowError as exc:
        print(f"entroflow: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
