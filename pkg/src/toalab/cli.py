"""Scenario runner.

Verbs:
  run <config.json> --out DIR      validate, compute, write CSV + report.json
  validate <config.json>           validation only
  compare <a.csv> <b.csv>          TV distance, max-abs difference, argmax shift
  list-scenarios                   bundled example configs

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 I/O
failure.  Outputs are deterministic: identical config and package version
produce bit-identical CSV files.
"""

import argparse
import importlib.resources
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .compare import compare_curves
from .detectors import AbsorptionCoefficient, DetectorModel, absorption
from .errors import NumericalError, ValidationError
from .io import read_csv, write_csv, write_json
from .oscillations import (DecoherenceKernel, OscillationScenario, envelope_from_config,
                           fit_wavenumber, localization_length, nonstandard_wavenumber,
                           oscillation_sweep, standard_wavenumber)
from .toa import (TimeGrid, classical_toa, kijowski_density, probability_current,
                  semiclassical_correction, toa_density_absorption, toa_density_kernel)
from .transitions import (SmearingKernel, TransitionSystem, no_detection_operator,
                          restricted_propagator, smeared_povm_element, transition_density)
from .wavepacket import Dispersion, MomentumGrid, gaussian_packet, wigner

SCHEMA_VERSION = 1
KINDS = ("toa", "classical-compare", "transition", "oscillation")


def _check_keys(obj: dict, required: set, optional: set, ctx: str) -> None:
    if not isinstance(obj, dict):
        raise ValidationError(f"{ctx}: expected an object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ValidationError(f"{ctx}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ValidationError(f"{ctx}: missing required keys {sorted(missing)}")


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    _check_keys(cfg, {"schema_version", "kind"}, set(cfg) - {"schema_version", "kind"}, path)
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {cfg['schema_version']}, expected {SCHEMA_VERSION}")
    if cfg["kind"] not in KINDS:
        raise ValidationError(f"unknown scenario kind {cfg['kind']!r}, expected one of {KINDS}")
    return cfg


REQUIRED_COMMON = {"schema_version", "kind"}
OPTIONAL_COMMON = {"seed", "tolerances"}


def _parse_state(cfg: dict):
    _check_keys(cfg, {"grid", "packet"}, set(), "state")
    _check_keys(cfg["grid"], {"p_min", "p_max", "n_points"}, set(), "state.grid")
    _check_keys(cfg["packet"], {"p0", "dp"}, {"x0"}, "state.packet")
    grid = MomentumGrid(cfg["grid"]["p_min"], cfg["grid"]["p_max"], cfg["grid"]["n_points"])
    pk = cfg["packet"]
    return gaussian_packet(grid, pk["p0"], pk["dp"], pk.get("x0", 0.0))


def _parse_dispersion(cfg: dict) -> Dispersion:
    _check_keys(cfg, {"kind", "mass"}, {"threshold"}, "dispersion")
    return Dispersion.from_config(cfg)


def _parse_time_grid(cfg: dict) -> TimeGrid:
    _check_keys(cfg, {"t_min", "t_max", "n_points"}, set(), "time_grid")
    return TimeGrid(cfg["t_min"], cfg["t_max"], cfg["n_points"])


def _parse_alpha(cfg, detector, dispersion):
    if cfg is None:
        return AbsorptionCoefficient.constant(1.0)
    _check_keys(cfg, {"kind"}, {"value"}, "alpha")
    if cfg["kind"] == "constant":
        return AbsorptionCoefficient.constant(cfg.get("value", 1.0))
    if cfg["kind"] == "detector":
        if detector is None:
            raise ValidationError("alpha kind 'detector' needs a detector section")
        return absorption(detector, dispersion)
    raise ValidationError(f"unknown alpha kind {cfg['kind']!r}")


def _run_toa(cfg: dict, out: Path, tol_scale: float) -> dict:
    _check_keys(cfg, REQUIRED_COMMON | {"state", "dispersion", "method", "distance", "time_grid"},
                OPTIONAL_COMMON | {"detector", "alpha"}, "toa scenario")
    state = _parse_state(cfg["state"])
    dispersion = _parse_dispersion(cfg["dispersion"])
    grid = _parse_time_grid(cfg["time_grid"])
    distance = float(cfg["distance"])
    method = cfg["method"]
    detector = None
    if "detector" in cfg:
        detector = DetectorModel.from_config(dict(cfg["detector"], distance=distance))
    if method == "kijowski":
        density = kijowski_density(state, dispersion, distance, grid)
    elif method == "absorption":
        alpha = _parse_alpha(cfg.get("alpha"), detector, dispersion)
        density = toa_density_absorption(state, alpha, dispersion, distance, grid)
    elif method == "kernel":
        if detector is None:
            raise ValidationError("toa method 'kernel' needs a detector section")
        density = toa_density_kernel(state, detector, dispersion, grid)
    elif method == "current":
        if dispersion.kind != "nonrelativistic":
            raise ValidationError("probability current is defined for nonrelativistic dispersion")
        density = probability_current(state, dispersion.mass, distance, grid)
    else:
        raise ValidationError(f"unknown toa method {method!r}")
    density.write(out / "density.csv", out / "density.json")
    report = {"method": method, "distance": distance,
              "normalization": density.normalization,
              "argmax_t": float(grid.t[int(np.argmax(density.values))]),
              "diagnostics": {k: float(v) for k, v in density.diagnostics.items()}}
    if method in ("kijowski", "absorption"):
        report["normalized_within"] = abs(density.normalization - 1.0) <= 1e-6 * tol_scale
    if detector is not None:
        flags = {}
        if detector.kind == "coherent":
            support_energy = dispersion.energy(state.grid.p[state.support_indices(1e-9)])
            flags["coherent_validity_max"] = detector.coherent_validity(support_energy)
        if detector.kind == "decoherent":
            flags["strong_coupling_ratio"] = detector.decoherent_regime()
            flags["decoherence_time"] = detector.decoherence_time()
        report["detector_flags"] = flags
    return report


def _run_classical_compare(cfg: dict, out: Path, tol_scale: float) -> dict:
    _check_keys(cfg, REQUIRED_COMMON | {"state", "dispersion", "distance", "time_grid", "phase_space"},
                OPTIONAL_COMMON | {"alpha"}, "classical-compare scenario")
    state = _parse_state(cfg["state"])
    dispersion = _parse_dispersion(cfg["dispersion"])
    grid = _parse_time_grid(cfg["time_grid"])
    distance = float(cfg["distance"])
    alpha = _parse_alpha(cfg.get("alpha"), None, dispersion)
    ps = cfg["phase_space"]
    _check_keys(ps, {"x_half_width", "n_x"}, {"support_cut"}, "phase_space")
    x_nodes = np.linspace(-ps["x_half_width"], ps["x_half_width"], ps["n_x"])
    p_idx = state.support_indices(rel_cut=ps.get("support_cut", 1e-9))
    w0 = wigner(state, x_nodes, state.grid.p[p_idx])

    quantum = toa_density_absorption(state, alpha, dispersion, distance, grid)
    classical = classical_toa(w0, alpha, dispersion, distance, grid)
    corrected = semiclassical_correction(w0, alpha, dispersion, distance, grid)
    quantum.write(out / "quantum.csv", out / "quantum.json")
    classical.write(out / "classical.csv", out / "classical.json")
    corrected.write(out / "semiclassical.csv", out / "semiclassical.json")
    report = {
        "distance": distance,
        "tv_quantum_classical": compare_curves(grid.t, quantum.values, grid.t, classical.values)["tv_distance"],
        "tv_quantum_semiclassical": compare_curves(grid.t, quantum.values, grid.t, corrected.values)["tv_distance"],
        "classical_lost_mass": classical.diagnostics["lost_mass"],
        "wigner_min": float(w0.values.min()),
    }
    report["correction_improves"] = bool(report["tv_quantum_semiclassical"] <= report["tv_quantum_classical"])
    return report


def _run_transition(cfg: dict, out: Path, tol_scale: float) -> dict:
    _check_keys(cfg, REQUIRED_COMMON | {"system", "outcome", "smearing", "time_grid"},
                OPTIONAL_COMMON | {"steps", "quadrature_points", "method", "povm_check"}, "transition scenario")
    system = TransitionSystem.from_json_dict(cfg["system"])
    _check_keys(cfg["smearing"], {"sigma"}, {"truncation"}, "smearing")
    kernel = SmearingKernel(sigma=cfg["smearing"]["sigma"],
                            truncation=cfg["smearing"].get("truncation", 6.0))
    grid = _parse_time_grid(cfg["time_grid"])
    label = cfg["outcome"]
    if label not in system.outcomes:
        raise ValidationError(f"outcome {label!r} not in the system's outcome family")
    steps = int(cfg.get("steps", 4096))
    qp = int(cfg.get("quadrature_points", 65))
    method = cfg.get("method", "exact")
    values = np.empty(grid.n_points)
    imag_max = 0.0
    for a, t in enumerate(grid.t):
        res = transition_density(system, label, float(t), kernel, steps, qp, method=method)
        values[a] = res.value
        imag_max = max(imag_max, res.imag_defect)
    write_csv(out / "density.csv", ["t", "value"], [grid.t, values])
    prop = restricted_propagator(system, float(grid.t_max), steps)
    mid_t = 0.5 * (grid.t_min + grid.t_max)
    povm = smeared_povm_element(system, label, mid_t, kernel, steps, qp, method=method)
    report = {"outcome": label, "method": method,
              "imag_max": imag_max,
              "min_value": float(values.min()),
              "restricted_propagator_convergence": prop.convergence,
              "povm_min_eigenvalue": float(np.linalg.eigvalsh(povm)[0])}
    if "povm_check" in cfg:
        pc = cfg["povm_check"]
        _check_keys(pc, {"horizon"}, {"time_points"}, "povm_check")
        nodet = no_detection_operator(system, pc["horizon"], kernel, steps, qp,
                                      pc.get("time_points", 33), method=method)
        report["no_detection_min_eigenvalue"] = float(np.linalg.eigvalsh(nodet)[0])
    return report


def _run_oscillation(cfg: dict, out: Path, tol_scale: float) -> dict:
    _check_keys(cfg, REQUIRED_COMMON | {"masses", "mixing", "momenta", "envelope", "kernel",
                                        "flavors", "sweep"},
                OPTIONAL_COMMON | {"threshold", "quadrature", "v_mean_mode"}, "oscillation scenario")
    from .io import pairs_to_complex
    scenario = OscillationScenario(
        masses=np.asarray(cfg["masses"], dtype=float),
        mixing=pairs_to_complex(cfg["mixing"], "mixing"),
        momenta=np.asarray(cfg["momenta"], dtype=float),
        envelope=envelope_from_config(cfg["envelope"]),
        kernel=DecoherenceKernel.from_config(cfg["kernel"]),
        threshold=cfg.get("threshold", 0.0),
        v_mean_mode=cfg.get("v_mean_mode", "arithmetic"))
    _check_keys(cfg["flavors"], {"source", "detect"}, set(), "flavors")
    _check_keys(cfg["sweep"], {"l_min", "l_max", "n_points"}, set(), "sweep")
    quad = cfg.get("quadrature", {})
    _check_keys(quad, set(), {"s_points", "tau_points"}, "quadrature")
    sw = cfg["sweep"]
    l_values = np.linspace(sw["l_min"], sw["l_max"], int(sw["n_points"]))
    result = oscillation_sweep(scenario, int(cfg["flavors"]["detect"]), int(cfg["flavors"]["source"]),
                               l_values, s_points=quad.get("s_points"),
                               tau_points=quad.get("tau_points"))
    write_csv(out / "probability.csv", ["L", "P"], [result.l_values, result.values])
    report = {"kernel": scenario.kernel.kind,
              "imag_max": result.imag_max,
              "clipped_mass": result.clipped_mass,
              "momentum_spread_flag": scenario.momentum_spread_flag()}
    if scenario.n_states >= 2:
        i, j = 0, 1
        report["standard_wavenumber"] = standard_wavenumber(scenario, i, j)
        report["nonstandard_wavenumber"] = nonstandard_wavenumber(scenario, i, j)
        report["localization_length"] = localization_length(scenario, i, j)
        try:
            report["fitted_wavenumber"] = abs(fit_wavenumber(result.l_values, result.values))
        except (ValidationError, NumericalError) as exc:
            report["fitted_wavenumber"] = None
            report["fit_error"] = str(exc)
    return report


_RUNNERS = {"toa": _run_toa, "classical-compare": _run_classical_compare,
            "transition": _run_transition, "oscillation": _run_oscillation}


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = _RUNNERS[cfg["kind"]](cfg, out, args.tolerance_scale)
    report.update({"kind": cfg["kind"], "schema_version": SCHEMA_VERSION,
                   "version": __version__, "backend": _accel.BACKEND,
                   "tolerance_scale": args.tolerance_scale, "threads": args.threads,
                   "seed": cfg.get("seed")})
    write_json(out / "report.json", report)
    print(f"wrote {out / 'report.json'}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    kind = cfg["kind"]
    # dry-run the parsing/validation stages only
    if kind == "toa" or kind == "classical-compare":
        _parse_state(cfg["state"])
        _parse_dispersion(cfg["dispersion"])
        _parse_time_grid(cfg["time_grid"])
        if "detector" in cfg:
            DetectorModel.from_config(dict(cfg["detector"], distance=float(cfg["distance"])))
    elif kind == "transition":
        TransitionSystem.from_json_dict(cfg["system"])
        SmearingKernel(sigma=cfg["smearing"]["sigma"],
                       truncation=cfg["smearing"].get("truncation", 6.0))
        _parse_time_grid(cfg["time_grid"])
    elif kind == "oscillation":
        from .io import pairs_to_complex
        OscillationScenario(masses=np.asarray(cfg["masses"], dtype=float),
                            mixing=pairs_to_complex(cfg["mixing"], "mixing"),
                            momenta=np.asarray(cfg["momenta"], dtype=float),
                            envelope=envelope_from_config(cfg["envelope"]),
                            kernel=DecoherenceKernel.from_config(cfg["kernel"]),
                            threshold=cfg.get("threshold", 0.0))
    print(f"{args.config}: valid {kind} scenario")
    return 0


def _cmd_compare(args) -> int:
    header_a, data_a = read_csv(args.a)
    header_b, data_b = read_csv(args.b)
    metrics = compare_curves(data_a[:, 0], data_a[:, 1], data_b[:, 0], data_b[:, 1])
    metrics.update({"a": str(args.a), "b": str(args.b),
                    "x_column": header_a[0], "value_column": header_a[1]})
    text = json.dumps(metrics, indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(text + "\n")
    print(text)
    return 0


def _cmd_list_scenarios(args) -> int:
    root = importlib.resources.files("toalab") / "scenarios"
    names = sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))
    for name in names:
        try:
            kind = json.loads((root / name).read_text()).get("kind", "?")
        except json.JSONDecodeError:
            kind = "?"
        print(f"{name}  [{kind}]")
    return 0


def bundled_scenario_path(name: str) -> str:
    """Filesystem path of a bundled example scenario."""
    return str(importlib.resources.files("toalab") / "scenarios" / name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toalab",
                                     description="arrival-time and transition-time scenario runner")
    parser.add_argument("--version", action="version", version=f"toalab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--threads", type=int, default=1,
                     help="advisory thread count, recorded in the report")
    run.add_argument("--tolerance-scale", type=float, default=1.0,
                     help="scale factor applied to report-level tolerance checks")
    run.set_defaults(fn=_cmd_run)

    val = sub.add_parser("validate", help="validate a scenario config without running it")
    val.add_argument("config")
    val.set_defaults(fn=_cmd_validate)

    cmp_ = sub.add_parser("compare", help="compare two CSV artifacts on the same grid")
    cmp_.add_argument("a")
    cmp_.add_argument("b")
    cmp_.add_argument("--out", default=None)
    cmp_.set_defaults(fn=_cmd_compare)

    ls = sub.add_parser("list-scenarios", help="list bundled example scenario configs")
    ls.set_defaults(fn=_cmd_list_scenarios)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
