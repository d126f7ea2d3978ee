"""Command-line driver: spectrum, survival, dicke-scan, classical, report.

Every command reads one YAML config (--config), writes CSV artifacts plus a
JSON manifest into --out, and exits nonzero on any module error.  CSVs use
17-significant-digit scientific notation so doubles round-trip exactly.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .classical import convergence_study, poincare, poincare_seeds
from .coherent import (CoherentSpec, bloch_coefficients, components,
                       dicke_product_state, parity_project,
                       solve_q0_for_energy)
from .config import ConfigError, RunConfig, evaluate_expression, load_config
from .hamiltonians import Model, build_dicke, build_lmg, critical_values, \
    diagonalize
from .manifest import RunManifest, config_hash, write_manifest
from .multisequence import (DetectionError, detect_subsequences, fit_sequence,
                            pair_parameters, separatrix_report, sp_multi)
from .survival import (GaussianGateError, estimate_parameters,
                       fit_quadratic_spectrum, ipr, linear_time_grid,
                       log_time_grid, select_window, sp_analytic,
                       decay_envelope, sp_numerical)

__all__ = ["main", "cmd_spectrum", "cmd_survival", "cmd_dicke_scan",
           "cmd_classical", "cmd_report"]

FLOAT_FMT = "%.16e"


def _write_csv(path: Path, header: str, columns: list[np.ndarray]) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=header,
               comments="")


def _time_grid(config: RunConfig) -> np.ndarray:
    if config.grid == "log":
        t_min = float(config.tolerances.get("t_min", 1e-2))
        return log_time_grid(t_min, config.t_max, config.n_points)
    return linear_time_grid(config.t_max, config.n_points)


def _build(config: RunConfig):
    if config.model.model is Model.LMG:
        return build_lmg(config.model)
    return build_dicke(config.model)


def _initial_distribution(config: RunConfig, state: CoherentSpec, eigensystem,
                          basis):
    spec = config.model
    if spec.model is Model.LMG:
        raw = bloch_coefficients(spec.j, state.jz0_over_j, state.phi0)
        projected = parity_project(raw, basis, spec.j)
    else:
        raw = dicke_product_state(spec.j, state, spec.nmax)
        projected = parity_project(raw, basis, spec.j, spec.nmax)
    return components(eigensystem, projected)


def cmd_spectrum(config: RunConfig, out: Path, manifest: RunManifest) -> int:
    matrix, basis = _build(config)
    es = diagonalize(matrix, basis)
    _write_csv(out / "eigenvalues.csv", "index,energy",
               [np.arange(es.eigenvalues.size), es.eigenvalues])
    crit = critical_values(config.model)
    report = out / "critical_values.txt"
    with open(report, "w") as fh:
        fh.write(", ".join(f"{k}={v:.10g}" for k, v in sorted(crit.items())))
        fh.write("\n")
    manifest.record("critical_values", crit)
    manifest.record("dimension", basis.dimension)
    manifest.record("residual_norm", es.residual_norm)
    manifest.artifacts += ["eigenvalues.csv", "critical_values.txt"]
    return 0


def cmd_survival(config: RunConfig, out: Path, manifest: RunManifest) -> int:
    if not config.states:
        raise ConfigError("survival requires at least one entry in 'states'")
    matrix, basis = _build(config)
    es = diagonalize(matrix, basis)
    times = _time_grid(config)
    for idx, state in enumerate(config.states):
        tag = f"state{idx}"
        dist = _initial_distribution(config, state, es, basis)
        dist.to_csv(out / f"{tag}_components.csv")
        numerical = sp_numerical(dist, times)
        manifest.record(f"{tag}_ipr", ipr(dist))
        manifest.record(f"{tag}_mean_energy", dist.mean)
        manifest.record(f"{tag}_sigma_exact", dist.std)
        columns = [times, numerical.values]
        header = "t,sp_numerical"
        try:
            model = estimate_parameters(dist, enforce_gate=True)
        except GaussianGateError as exc:
            manifest.warn(f"{tag}: Gaussian gate failed: {exc}")
            model = None
        if model is not None:
            window, captured = select_window(dist)
            (a0, a1, a2), residual = fit_quadratic_spectrum(
                dist.energies[window])
            k = np.arange(window.size, dtype=float)
            _write_csv(out / f"{tag}_spectrum_fit.csv",
                       "k,energy,quadratic_fit",
                       [k, dist.energies[window], a0 + a1 * k + a2 * k * k])
            analytic = sp_analytic(model, times)
            envelope = decay_envelope(model, times)
            columns += [analytic.values, envelope]
            header += ",sp_analytic,envelope"
            manifest.record(f"{tag}_model", model)
            manifest.record(f"{tag}_window_capture", captured)
            manifest.record(f"{tag}_fit_residual_rms", residual)
            manifest.artifacts.append(f"{tag}_spectrum_fit.csv")
        _write_csv(out / f"{tag}_sp.csv", header, columns)
        manifest.artifacts += [f"{tag}_components.csv", f"{tag}_sp.csv"]
    return 0


def cmd_dicke_scan(config: RunConfig, out: Path, manifest: RunManifest) -> int:
    if config.model.model is not Model.DICKE:
        raise ConfigError("dicke-scan requires model.name = dicke")
    if config.target_energy is None:
        raise ConfigError("dicke-scan requires 'target_energy'")
    jz_values = list(config.jz_values) or [s.jz0_over_j for s in config.states]
    if not jz_values:
        raise ConfigError("dicke-scan requires 'jz_values' or 'states'")
    spec = config.model
    matrix, basis = _build(config)
    es = diagonalize(matrix, basis)
    times = _time_grid(config)
    table_rows: list[str] = []
    diag_rows: list[str] = []
    for idx, jz in enumerate(jz_values):
        tag = f"state{idx}"
        q0 = solve_q0_for_energy(spec, jz, 0.0, 0.0, config.target_energy,
                                 prefer_larger=config.prefer_larger_q0)
        state = CoherentSpec(jz0_over_j=jz, phi0=0.0, q0=q0, p0=0.0)
        dist = _initial_distribution(config, state, es, basis)
        dist.to_csv(out / f"{tag}_components.csv")
        numerical = sp_numerical(dist, times)
        value = ipr(dist)
        manifest.record(f"{tag}_jz0_over_j", jz)
        manifest.record(f"{tag}_q0", q0)
        manifest.record(f"{tag}_ipr", value)
        columns, header = [times, numerical.values], "t,sp_numerical"
        detection = dict(config.detection)
        report = separatrix_report(dist, numerical, detection_kwargs=detection)
        manifest.record(f"{tag}_diagnostics", report)
        diag_rows.append(
            f"{idx},{jz!r},{value!r},{int(not report.analytic_model_applies)},"
            f"{report.dominant_weight_fraction!r},{report.decay_time_proxy!r},"
            f"{report.n_sequences}")
        if report.analytic_model_applies:
            sequences = detect_subsequences(dist, **detection)
            for s_idx, seq in enumerate(sequences):
                model = fit_sequence(seq)
                table_rows.append(
                    f"{idx},{s_idx},{model.amplitude!r},{model.mean / spec.j!r},"
                    f"{model.sigma / spec.j!r},{model.omega1 / spec.j!r},"
                    f"{model.e2 / spec.j!r},{model.t_decay!r}")
                manifest.record(f"{tag}_sequence{s_idx}", model)
            pairs = []
            for a in range(len(sequences)):
                for b in range(a + 1, len(sequences)):
                    try:
                        pairs.append(pair_parameters(
                            sequences[a], sequences[b], index_i=a, index_j=b))
                    except ValueError as exc:
                        manifest.warn(f"{tag}: pair ({a},{b}) skipped: {exc}")
            for pair in pairs:
                manifest.record(f"{tag}_pair{pair.i}{pair.j}", {
                    "delta_e": pair.delta_e, "omega": pair.omega,
                    "sigma": pair.sigma, "e_cross": pair.e_cross})
            analytic, envelope = sp_multi(sequences, pairs, times)
            columns += [analytic.values, envelope]
            header += ",sp_multi,envelope"
        else:
            manifest.warn(f"{tag}: analytic model does not apply "
                          f"(gate_failed={report.gate_failed}, "
                          f"detection_failed={report.detection_failed})")
        _write_csv(out / f"{tag}_sp.csv", header, columns)
        manifest.artifacts += [f"{tag}_components.csv", f"{tag}_sp.csv"]
    with open(out / "sequence_table.csv", "w") as fh:
        fh.write("state,sequence,amplitude,mean_over_j,sigma_over_j,"
                 "omega1_over_j,e2_over_j,t_decay\n")
        fh.write("\n".join(table_rows) + ("\n" if table_rows else ""))
    with open(out / "diagnostics.csv", "w") as fh:
        fh.write("state,jz0_over_j,ipr,flagged,dominant_weight_fraction,"
                 "decay_time_proxy,n_sequences\n")
        fh.write("\n".join(diag_rows) + ("\n" if diag_rows else ""))
    manifest.artifacts += ["sequence_table.csv", "diagnostics.csv"]
    return 0


def cmd_classical(config: RunConfig, out: Path, manifest: RunManifest) -> int:
    analyses = config.analyses
    did_anything = False
    if analyses.get("poincare"):
        section_cfg = analyses["poincare"] if isinstance(
            analyses["poincare"], dict) else {}
        energy = evaluate_expression(section_cfg.get(
            "energy", config.target_energy if config.target_energy is not None
            else -1.8))
        n_phi = int(section_cfg.get("n_phi", 5))
        n_jz = int(section_cfg.get("n_jz", 9))
        crossings = int(section_cfg.get("crossings", 100))
        phi_grid = np.linspace(-np.pi, np.pi, n_phi, endpoint=False)
        jz_grid = np.linspace(-0.9, 0.9, n_jz)
        seeds, rejected = poincare_seeds(config.model, energy, phi_grid, jz_grid)
        for reject in rejected:
            manifest.warn(f"poincare seed rejected: {reject}")
        section = poincare(config.model, energy, seeds, crossings=crossings)
        _write_csv(out / "poincare.csv", "seed_id,phi,jz_over_j",
                   [section.points[:, 0], section.points[:, 1],
                    section.points[:, 2]])
        manifest.record("poincare_energy", energy)
        manifest.record("poincare_drift", section.energy_drift)
        manifest.record("poincare_seeds", len(seeds))
        manifest.artifacts.append("poincare.csv")
        did_anything = True
    if analyses.get("convergence") and config.j_ladder:
        if not config.states:
            raise ConfigError("convergence study requires one entry in 'states'")
        rows = convergence_study(config.states[0], config.model,
                                 config.j_ladder)
        keys = list(rows[0].keys())
        with open(out / "convergence.csv", "w") as fh:
            fh.write(",".join(keys) + "\n")
            for row in rows:
                fh.write(",".join(FLOAT_FMT % row[k] for k in keys) + "\n")
        manifest.record("convergence_rows", rows)
        manifest.artifacts.append("convergence.csv")
        did_anything = True
    if not did_anything:
        raise ConfigError(
            "classical requires analyses.poincare and/or analyses.convergence "
            "(with j_ladder)")
    return 0


def cmd_report(out: Path) -> int:
    import json
    manifests = sorted(out.glob("*manifest*.json"))
    if not manifests:
        print(f"no manifests found in {out}", file=sys.stderr)
        return 1
    for path in manifests:
        with open(path) as fh:
            data = json.load(fh)
        print(f"== {path.name} ==")
        print(f"command: {data.get('command')}  version: {data.get('version')}")
        print(f"config:  {data.get('config_hash', '')[:16]}  "
              f"wall-clock: {data.get('wall_clock_seconds', 0):.2f} s")
        for warning in data.get("warnings", []):
            print(f"warning: {warning}")
        for key in sorted(data.get("parameters", {})):
            print(f"  {key} = {data['parameters'][key]}")
    return 0


def _apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    """Dotted-path overrides (e.g. time_grid.t_max=50) applied to the raw map."""
    import copy
    from .config import parse_config
    data = copy.deepcopy(config.raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like KEY=VALUE")
        key, _, value = item.partition("=")
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        try:
            import yaml
            node[parts[-1]] = yaml.safe_load(value)
        except Exception:
            node[parts[-1]] = value
    return parse_config(data)


def _limit_threads(n: int | None) -> None:
    if n is None:
        n = int(os.environ.get("SPINQUENCH_THREADS", "0")) or None
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(n)
    except ImportError:
        pass


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinquench",
        description="Quench dynamics of coherent states in collective spin models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "survival", "dicke-scan", "classical"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")
    p = sub.add_parser("report")
    p.add_argument("--out", default=".")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "report":
        return cmd_report(out)

    _limit_threads(args.threads)
    try:
        config = load_config(args.config)
        if args.override:
            config = _apply_overrides(config, args.override)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    manifest = RunManifest(command=args.command, config_hash=config_hash(config))
    handlers = {
        "spectrum": cmd_spectrum,
        "survival": cmd_survival,
        "dicke-scan": cmd_dicke_scan,
        "classical": cmd_classical,
    }
    start = time.perf_counter()
    try:
        code = handlers[args.command](config, out, manifest)
    except (ConfigError, ValueError, RuntimeError, DetectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest.wall_clock_seconds = time.perf_counter() - start
    write_manifest(manifest, out / f"{args.command}_manifest.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
