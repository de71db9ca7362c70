"""Config-driven front end.

One JSON config describes one reproducible run: the base profile, the model
parameter(s) alpha, the analyses to perform, numerical resolutions, and the
output directory. Outputs are CSV/JSON files listed in a manifest with
content hashes; identical configs (and seed) produce byte-identical output.

Subcommands:
    analyze <config> [--out DIR] [--jobs N] [--seed S]
    validate <config>
    example <name>            (couette, poiseuille-like, funstable,
                               sin-y, sin-my, regularization)
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import arnold, criteria, evolve, modal
from .domain import (
    CHEBYSHEV,
    Grid1D,
    PolynomialDescriptor,
    Profile1D,
    TrigDescriptor,
    build_steady_shear,
    profile_from_csv,
    torus_state_from_streamfunction,
)
from .errors import AlphaEulerError, ConfigError

ANALYSES = (
    "rayleigh",
    "fjortoft",
    "modal-scan",
    "arnold1",
    "arnold2",
    "linear-evolve",
    "torus-evolve",
    "invariants",
)
_CHANNEL_ONLY = {"rayleigh", "fjortoft", "modal-scan", "linear-evolve"}
_TORUS_ONLY = {"torus-evolve", "invariants"}

_DEFAULT_NUMERICS = {
    "n_profile": 129,
    "n_modal": 128,
    "n_evolve": 64,
    "k_grid": {"start": 0.1, "stop": 5.0, "num": 20, "spacing": "log"},
    "dt": None,
    "horizon": 10.0,
    "tolerances": {},
}


@dataclass
class RunReport:
    out_dir: Path
    summary: dict
    artifacts: list[str]
    errors: list[dict]

    @property
    def ok(self) -> bool:
        return not self.errors


# ---------------------------------------------------------------------------
# Config parsing / validation
# ---------------------------------------------------------------------------


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = dict(raw)

    profile = cfg.get("profile")
    if not isinstance(profile, dict):
        raise ConfigError("config needs a 'profile' object")
    kind = profile.get("kind")
    if kind not in ("fromV", "fromU", "torus-phi", "regularization"):
        raise ConfigError(f"profile.kind must be fromV|fromU|torus-phi|regularization, got {kind!r}")
    if kind in ("fromV", "fromU"):
        interval = profile.get("interval")
        if (
            not isinstance(interval, (list, tuple))
            or len(interval) != 2
            or not interval[0] < interval[1]
        ):
            raise ConfigError("profile.interval must be [a, b] with a < b")
        desc = profile.get("descriptor")
        if not isinstance(desc, dict) or desc.get("type") not in ("polynomial", "trig", "tabulated"):
            raise ConfigError("profile.descriptor.type must be polynomial|trig|tabulated")
    if kind == "torus-phi":
        desc = profile.get("descriptor")
        if not isinstance(desc, dict) or desc.get("type") != "trig":
            raise ConfigError("torus-phi profiles must use a trig descriptor")

    alphas = cfg.get("alpha")
    if isinstance(alphas, (int, float)):
        alphas = [alphas]
    if not isinstance(alphas, list) or not alphas:
        raise ConfigError("'alpha' must be a number or non-empty list")
    analyses = cfg.get("analyses")
    if not isinstance(analyses, list) or not analyses:
        raise ConfigError("'analyses' must be a non-empty list")
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise ConfigError(f"unknown analyses {unknown}; choose from {list(ANALYSES)}")
    for a in alphas:
        if not isinstance(a, (int, float)) or a < 0:
            raise ConfigError(f"alpha values must be non-negative numbers, got {a!r}")
        if a == 0 and set(analyses) - {"modal-scan"}:
            raise ConfigError("alpha = 0 is allowed only for modal-scan regression runs")
    if kind == "torus-phi":
        bad = set(analyses) & _CHANNEL_ONLY
        if bad:
            raise ConfigError(f"analyses {sorted(bad)} need a channel profile")
    else:
        bad = set(analyses) & _TORUS_ONLY
        if bad:
            raise ConfigError(f"analyses {sorted(bad)} need a torus profile")

    numerics = dict(_DEFAULT_NUMERICS)
    numerics.update(cfg.get("numerics") or {})
    for key, value in (numerics.get("tolerances") or {}).items():
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"tolerance {key!r} must be positive, got {value!r}")
    cfg["numerics"] = numerics

    output = dict(cfg.get("output") or {})
    output.setdefault("directory", "alphaeuler-out")
    output.setdefault("formats", ["csv", "json"])
    cfg["output"] = output
    cfg["alpha"] = [float(a) for a in alphas]
    return cfg


# ---------------------------------------------------------------------------
# Profile and state construction
# ---------------------------------------------------------------------------


def _descriptor_from_dict(desc: dict):
    if desc["type"] == "polynomial":
        return PolynomialDescriptor(tuple(float(c) for c in desc["coeffs"]))
    if desc["type"] == "trig":
        return TrigDescriptor(
            float(desc.get("amplitude", 1.0)),
            float(desc.get("frequency", 1.0)),
            float(desc.get("phase", 0.0)),
        )
    raise ConfigError(f"descriptor type {desc['type']!r} has no analytic form")


def _build_channel_profile(profile_cfg: dict, n: int) -> Profile1D:
    desc_cfg = profile_cfg["descriptor"]
    if desc_cfg["type"] == "tabulated":
        return profile_from_csv(desc_cfg["path"])
    a, b = (float(v) for v in profile_cfg["interval"])
    grid = Grid1D(a, b, int(profile_cfg.get("n", n)), CHEBYSHEV)
    return Profile1D.from_descriptor(grid, _descriptor_from_dict(desc_cfg))


def _build_state(cfg: dict, alpha: float):
    profile_cfg = cfg["profile"]
    kind = profile_cfg["kind"]
    numerics = cfg["numerics"]
    if kind == "regularization":
        return arnold.build_regularization_example(alpha)
    if kind in ("fromV", "fromU"):
        prof = _build_channel_profile(profile_cfg, numerics["n_profile"])
        if kind == "fromV":
            return build_steady_shear(from_v=prof, alpha=alpha)
        return build_steady_shear(from_u=prof, alpha=alpha)
    # torus-phi
    desc = _descriptor_from_dict(profile_cfg["descriptor"])
    periods = profile_cfg.get("periods", [2.0 * np.pi, 2.0 * np.pi])
    Lx, Ly = float(periods[0]), float(periods[1])
    m = desc.frequency * Ly / (2.0 * np.pi)
    if abs(m - round(m)) > 1e-12:
        raise ConfigError("torus-phi frequency must resolve to an integer harmonic of the period")
    n = int(numerics["n_evolve"])
    y = np.linspace(0.0, Ly, n, endpoint=False)
    phi = np.broadcast_to(desc(y)[None, :], (n, n))
    phi_hat = np.fft.fft2(phi)
    return torus_state_from_streamfunction(phi_hat, alpha, Lx, Ly)


def _domain_spec(cfg: dict, alpha: float) -> arnold.DomainSpec:
    profile_cfg = cfg["profile"]
    kind = profile_cfg["kind"]
    if kind == "torus-phi":
        periods = profile_cfg.get("periods", [2.0 * np.pi, 2.0 * np.pi])
        return arnold.DomainSpec.torus(float(periods[0]), float(periods[1]))
    if kind == "regularization":
        return arnold.DomainSpec.channel_interval(-np.pi / 2, np.pi / 2)
    a, b = (float(v) for v in profile_cfg["interval"])
    return arnold.DomainSpec.channel_interval(a, b)


def _k_grid(numerics: dict) -> np.ndarray:
    kg = numerics["k_grid"]
    if isinstance(kg, list):
        return np.asarray([float(k) for k in kg])
    if kg.get("spacing", "log") == "log":
        return np.logspace(np.log10(kg["start"]), np.log10(kg["stop"]), int(kg["num"]))
    return np.linspace(kg["start"], kg["stop"], int(kg["num"]))


# ---------------------------------------------------------------------------
# Run orchestration
# ---------------------------------------------------------------------------


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run(cfg: dict, out_dir=None, jobs: int | None = None, seed: int = 0) -> RunReport:
    """Execute the configured analyses in dependency order.

    Emits per-analysis artifacts plus summary.json and manifest.json (every
    output file with its sha256). Inconclusive verdicts are not errors;
    failed analyses are recorded in errors.json and the report.
    """
    out = Path(out_dir or cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    analyses = cfg["analyses"]
    numerics = cfg["numerics"]
    verdicts: dict = {}
    artifacts: list[str] = []
    errors: list[dict] = []

    for alpha in cfg["alpha"]:
        tag = f"alpha{alpha:g}"
        per_alpha: dict = {}
        verdicts[tag] = per_alpha
        try:
            state = _build_state(cfg, alpha) if alpha > 0 else None
        except AlphaEulerError as exc:
            errors.append({"alpha": alpha, "analysis": "steady-state", "error": type(exc).__name__, "message": str(exc)})
            continue

        for analysis in analyses:
            try:
                new_files = _run_one(
                    analysis, cfg, state, alpha, out, tag, per_alpha, numerics, jobs, seed
                )
                artifacts.extend(new_files)
            except AlphaEulerError as exc:
                per_alpha[analysis] = "Error"
                errors.append(
                    {"alpha": alpha, "analysis": analysis, "error": type(exc).__name__, "message": str(exc)}
                )

    summary = {"alpha": cfg["alpha"], "analyses": analyses, "verdicts": verdicts}
    _write_json(out / "summary.json", summary)
    artifacts.append("summary.json")
    if errors:
        _write_json(out / "errors.json", errors)
        artifacts.append("errors.json")

    manifest = {"files": {}}
    for name in sorted(set(artifacts)):
        manifest["files"][name] = hashlib.sha256((out / name).read_bytes()).hexdigest()
    manifest["files"]["manifest.json"] = None  # cannot hash itself
    _write_json(out / "manifest.json", manifest)
    artifacts.append("manifest.json")
    return RunReport(out_dir=out, summary=summary, artifacts=sorted(set(artifacts)), errors=errors)


def _run_one(analysis, cfg, state, alpha, out, tag, per_alpha, numerics, jobs, seed) -> list[str]:
    files: list[str] = []
    if analysis == "rayleigh":
        report = criteria.rayleigh_check(state)
        per_alpha[analysis] = report.verdict
        name = f"rayleigh_{tag}.json"
        _write_json(out / name, report.to_dict())
        files.append(name)
    elif analysis == "fjortoft":
        rayleigh = criteria.rayleigh_check(state)
        if rayleigh.verdict == criteria.DEGENERATE:
            report = criteria.fjortoft_generalized_check(state)
        else:
            report = criteria.fjortoft_check(state)
        per_alpha[analysis] = report.verdict
        name = f"fjortoft_{tag}.json"
        _write_json(out / name, report.to_dict())
        files.append(name)
    elif analysis == "modal-scan":
        k_grid = _k_grid(numerics)
        n = int(numerics["n_modal"])
        if alpha == 0:
            prof = _build_channel_profile(cfg["profile"], numerics["n_profile"])
            if cfg["profile"]["kind"] == "fromV":
                raise ConfigError("alpha = 0 regression runs must specify the profile fromU")
            curve_points = []
            for k in k_grid:
                problem = modal.assemble_modal_from_profiles(prof, prof, 0.0, float(k), n)
                sols = modal.solve_modal(problem)
                if sols:
                    curve_points.append(modal.GrowthPoint(float(k), sols[0].growth_rate, sols[0].c, len(sols)))
                else:
                    curve_points.append(modal.GrowthPoint(float(k), 0.0, None, 0))
            curve = modal.GrowthCurve(points=tuple(curve_points))
        else:
            curve = modal.scan_wavenumbers(state, k_grid, n, jobs=jobs)
        per_alpha[analysis] = "SpectrallyStable" if curve.spectrally_stable else "NotSpectrallyStable"
        name = f"growth_{tag}.csv"
        curve.to_csv(out / name)
        files.append(name)
    elif analysis == "arnold1":
        report = arnold.arnold_first_verdict(state)
        per_alpha[analysis] = report.verdict
        name = f"arnold1_{tag}.json"
        _write_json(out / name, report.to_dict())
        files.append(name)
    elif analysis == "arnold2":
        spec = _domain_spec(cfg, alpha)
        report = arnold.arnold_second_verdict(state, spec)
        per_alpha[analysis] = report.verdict
        name = f"arnold2_{tag}.json"
        _write_json(out / name, report.to_dict())
        files.append(name)
        fp = arnold.reconstruct_f_prime(state)
        fp_name = f"fprime_{tag}.csv"
        _write_csv(out / fp_name, ["x", "f_prime"], [[repr(float(x)), repr(float(v))] for x, v in fp.samples])
        files.append(fp_name)
        lam = arnold.lambda_min_alpha(spec, alpha)
        lam_name = f"lambda_{tag}.csv"
        _write_csv(
            out / lam_name,
            ["alpha", "lambda_min", "mu_min", "mode_kx", "mode_n"],
            [[repr(float(alpha)), repr(float(lam.value)), repr(float(lam.mu_min)),
              str(lam.mode[0]), str(lam.mode[1])]],
        )
        files.append(lam_name)
    elif analysis == "linear-evolve":
        files.extend(_run_linear_evolve(cfg, state, alpha, out, tag, per_alpha, numerics, seed))
    elif analysis == "torus-evolve":
        dt = numerics["dt"] or evolve.cfl_timestep(state)
        horizon = float(numerics["horizon"])
        run_ = evolve.evolve_torus(state, dt, state.t + horizon, steady=state, casimir=evolve.CasimirSpec("sin"))
        per_alpha[analysis] = "Aborted" if run_.aborted else "Completed"
        name = f"ledger_{tag}.csv"
        evolve.ledger_to_csv(run_.ledgers, out / name)
        files.append(name)
    elif analysis == "invariants":
        ledger = evolve.compute_invariants(state, casimir=evolve.CasimirSpec("sin"))
        per_alpha[analysis] = "Computed"
        name = f"invariants_{tag}.csv"
        evolve.ledger_to_csv([ledger], out / name)
        files.append(name)
    return files


def _run_linear_evolve(cfg, state, alpha, out, tag, per_alpha, numerics, seed) -> list[str]:
    n = int(numerics["n_modal"])
    k_grid = _k_grid(numerics)
    curve = modal.scan_wavenumbers(state, k_grid, n)
    best = max(curve.points, key=lambda p: p.sigma)
    if best.sigma > modal.TOL_GROWTH and best.c is not None:
        k = best.k
        sols = modal.solve_modal(modal.assemble_modal(state, k, n))
        lead = sols[0]
        init = evolve.state_from_mode(state, lead)
        rate = lead.growth_rate
        horizon = 3.0 / rate  # three e-foldings
        dt_max = 0.5 / (k * max(state.V.max_abs(), 1e-30))
        nsteps = max(int(np.ceil(horizon / dt_max)), 64)
        dt = horizon / nsteps
        _, times, norms = evolve.run_linear_channel(init, state, dt, horizon)
        measured = evolve.fit_growth_rate(times, norms)
        per_alpha["linear-evolve"] = "GrowthMeasured"
        payload = {"k": k, "modal_rate": rate, "measured_rate": measured}
    else:
        k = float(k_grid[0])
        rng = np.random.default_rng(seed)
        m = n - 4 if alpha > 0 else n - 2
        q0 = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        init = evolve.linear_channel_state(state, k, q0, n)
        horizon = min(float(numerics["horizon"]), 50.0)
        dt_max = 0.5 / (k * max(state.V.max_abs(), 1e-30))
        nsteps = max(int(np.ceil(horizon / dt_max)), 64)
        dt = horizon / nsteps
        _, times, norms = evolve.run_linear_channel(init, state, dt, horizon)
        per_alpha["linear-evolve"] = "NormBounded" if np.max(norms) / norms[0] <= 10.0 else "NormGrew"
        payload = {"k": k, "sup_ratio": float(np.max(norms) / norms[0])}
    name = f"linear_evolve_{tag}.csv"
    _write_csv(out / name, ["t", "norm"], [[repr(float(t)), repr(float(h))] for t, h in zip(times, norms)])
    _write_json(out / f"linear_evolve_{tag}.json", payload)
    return [name, f"linear_evolve_{tag}.json"]


def _write_csv(path: Path, header: list[str], rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Plot-ready data
# ---------------------------------------------------------------------------


def emit_plot_data(out_dir, target=None) -> Path:
    """Re-emit growth curves, F' profiles and invariant ledgers from a run
    directory as one long-format CSV with columns series,x,y."""
    import csv

    out = Path(out_dir)
    target = Path(target) if target is not None else out / "plot_data.csv"
    rows: list[tuple[str, str, str]] = []
    for path in sorted(out.glob("*.csv")):
        if path.name == target.name:
            continue
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                continue
            data = list(reader)
        stem = path.stem
        if header[:2] == ["k", "sigma"]:
            rows += [(f"{stem}:sigma", r[0], r[1]) for r in data]
        elif header[:2] == ["x", "f_prime"]:
            rows += [(f"{stem}:f_prime", r[0], r[1]) for r in data]
        elif header[0] == "t":
            for col_idx, col in enumerate(header[1:], start=1):
                rows += [(f"{stem}:{col}", r[0], r[col_idx]) for r in data]
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series", "x", "y"])
        writer.writerows(rows)
    return target


# ---------------------------------------------------------------------------
# Built-in example configs
# ---------------------------------------------------------------------------

_SQRT3 = float(np.sqrt(3.0))

EXAMPLES: dict[str, dict] = {
    "couette": {
        "profile": {"kind": "fromU", "interval": [0.0, 1.0],
                    "descriptor": {"type": "polynomial", "coeffs": [0.0, 1.0]}},
        "alpha": [0.1],
        "analyses": ["rayleigh", "modal-scan"],
        "output": {"directory": "out-couette"},
    },
    "poiseuille-like": {
        "profile": {"kind": "fromU", "interval": [-1.0, 1.0],
                    "descriptor": {"type": "polynomial", "coeffs": [1.0, 0.0, -1.0]}},
        "alpha": [0.1],
        "analyses": ["rayleigh", "fjortoft", "modal-scan", "arnold1"],
        "output": {"directory": "out-poiseuille-like"},
    },
    "funstable": {
        "profile": {"kind": "fromV", "interval": [-1.0 / _SQRT3, 1.0 / _SQRT3],
                    "descriptor": {"type": "polynomial", "coeffs": [0.0, 1.0, 0.0, -1.0]}},
        "alpha": [0.1],
        "analyses": ["rayleigh", "fjortoft", "modal-scan"],
        "output": {"directory": "out-funstable"},
    },
    "sin-y": {
        "profile": {"kind": "torus-phi",
                    "descriptor": {"type": "trig", "amplitude": 1.0, "frequency": 1.0},
                    "periods": [6.283185307179586, 6.283185307179586]},
        "alpha": [0.5],
        "analyses": ["arnold1", "arnold2", "invariants"],
        "output": {"directory": "out-sin-y"},
    },
    "sin-my": {
        "profile": {"kind": "torus-phi",
                    "descriptor": {"type": "trig", "amplitude": 1.0, "frequency": 2.0},
                    "periods": [6.283185307179586, 6.283185307179586]},
        "alpha": [0.5],
        "analyses": ["arnold2", "torus-evolve"],
        "numerics": {"horizon": 2.0},
        "output": {"directory": "out-sin-my"},
    },
    "regularization": {
        "profile": {"kind": "regularization"},
        "alpha": [0.1, 0.5, 1.0],
        "analyses": ["arnold2"],
        "output": {"directory": "out-regularization"},
    },
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="alphaeuler",
        description="Stability analyses for 2D alpha-Euler shear flows and torus states",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="run the analyses described by a config")
    p_an.add_argument("config")
    p_an.add_argument("--out", default=None, help="output directory (overrides config)")
    p_an.add_argument("--jobs", type=int, default=None, help="parallel workers for wavenumber scans")
    p_an.add_argument("--seed", type=int, default=0, help="seed for randomized initial data")
    p_an.add_argument("--plot-data", action="store_true", help="also emit the long-format plot bundle")

    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config")

    p_ex = sub.add_parser("example", help="emit a built-in example config")
    p_ex.add_argument("name", choices=sorted(EXAMPLES))
    p_ex.add_argument("--out", default=None, help="write to a file instead of stdout")

    args = parser.parse_args(argv)

    if args.command == "example":
        text = json.dumps(EXAMPLES[args.name], indent=2, sort_keys=True) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print("config OK")
        return 0

    report = run(cfg, out_dir=args.out, jobs=args.jobs, seed=args.seed)
    if args.plot_data:
        emit_plot_data(report.out_dir)
    for tag, per_alpha in report.summary["verdicts"].items():
        for analysis, verdict in per_alpha.items():
            print(f"{tag} {analysis}: {verdict}")
    if not report.ok:
        print(f"{len(report.errors)} analysis error(s); see errors.json", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
