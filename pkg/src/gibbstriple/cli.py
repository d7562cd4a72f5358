"""Command-line front end: config loading, task orchestration, CSV emission.

One subcommand, ``run <config.toml>``, executes a single task (thermo,
haar-check, spectrum, dixmier, renewal, connes) and writes CSV artifacts.
Every output file starts with a manifest line recording the config hash,
the effective seed and the library version, and all randomness flows from
that one seed, so reruns with identical config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, duality, haar, renewal, sft, spectral, thermo
from .errors import ConfigError, GibbsTripleError

OUT_DIR_ENV = "GIBBSTRIPLE_OUT_DIR"
TASKS = ("thermo", "haar-check", "spectrum", "dixmier", "renewal", "connes")


def format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_csv(header, rows, path: Path, manifest: str) -> None:
    """Write a rectangular table as CSV with LF endings and a manifest first line."""
    lines = [manifest, ",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ConfigError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ConfigError(f"missing '{key}' in {context}")
    return table[key]


def load_config(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = path.read_bytes()
        config = tomllib.loads(raw.decode("utf-8"))
    except (OSError, UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    config["_sha256"] = hashlib.sha256(raw).hexdigest()[:16]
    task = _require(config, "task", str(path))
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {TASKS}")
    return config


def build_inputs(config: dict):
    sub = _require(config, "subshift", "config")
    l = int(_require(sub, "alphabet_size", "[subshift]"))
    flat = _require(sub, "adjacency", "[subshift]")
    if len(flat) != l * l:
        raise ConfigError(f"adjacency must have {l * l} row-major entries, got {len(flat)}")
    try:
        spec = sft.build_subshift(l, np.array(flat).reshape(l, l))
    except GibbsTripleError as exc:
        raise ConfigError(f"invalid subshift: {exc}") from exc

    pot_table = _require(config, "potential", "config")
    r = int(_require(pot_table, "range", "[potential]"))
    try:
        if "constant" in pot_table:
            potential = thermo.make_potential(
                spec, r, {w: float(pot_table["constant"]) for w in sft.enumerate_cylinders(spec, r)}
            )
        else:
            entries = _require(pot_table, "values", "[potential]")
            potential = thermo.make_potential(
                spec, r, {tuple(e["word"]): float(e["value"]) for e in entries}
            )
        solution = thermo.solve_thermo(spec, potential)
    except GibbsTripleError as exc:
        raise ConfigError(f"invalid potential: {exc}") from exc
    return spec, potential, solution


def _word_from_config(entry) -> tuple[int, ...]:
    return tuple(int(s) for s in entry)


def run_thermo(config, solution, out_dir: Path, manifest: str, seed: int) -> int:
    params = config.get("params", {})
    depth = int(params.get("depth", 4))
    summary = [
        ("pressure", solution.pressure, "solve_thermo"),
        ("entropy", solution.entropy, "solve_thermo"),
        ("gibbs_c", solution.gibbs_c, "solve_thermo"),
        ("beta", solution.beta, "normalize_potential"),
        ("gamma", solution.gamma, "normalize_potential"),
        ("residual", solution.residual, "solve_thermo"),
    ]
    emit_csv(("quantity", "value", "source"), summary, out_dir / "thermo_summary.csv", manifest)
    rows = []
    for k in range(1, depth + 1):
        for w in sft.enumerate_cylinders(solution.spec, k):
            label = spectral.word_label(w, solution.spec.alphabet_size)
            rows.append((label, solution.mass(w, "mu"), solution.mass(w, "nu"), "cylinder_mass"))
    emit_csv(("word", "mu_mass", "nu_mass", "source"), rows, out_dir / "thermo_masses.csv", manifest)
    print(f"pressure={solution.pressure:.12g} entropy={solution.entropy:.12g} (solve_thermo)")
    return 0


def run_haar_check(config, solution, out_dir: Path, manifest: str, seed: int) -> int:
    params = config.get("params", {})
    depth = int(params.get("depth", 6))
    which = params.get("measure", "mu")
    plan = haar.HaarPlan(solution, which)
    gram = plan.gram_matrix(depth)
    deviation = float(np.abs(gram - np.eye(gram.shape[0])).max())
    emit_csv(
        ("depth", "dimension", "max_abs_deviation", "source"),
        [(depth, gram.shape[0], deviation, "gram_matrix")],
        out_dir / "haar_check.csv",
        manifest,
    )
    if deviation < 1e-10:
        print(f"Gram deviation < 1e-10 (gram_matrix: {deviation:.3e}, dimension {gram.shape[0]})")
        return 0
    print(f"Gram deviation {deviation:.3e} exceeds 1e-10 (gram_matrix)")
    return 1


def run_spectrum(config, solution, out_dir: Path, manifest: str, seed: int) -> int:
    params = config.get("params", {})
    n = int(params.get("n", 1000))
    budget = int(params.get("budget_nodes", spectral.DEFAULT_NODE_BUDGET))
    restriction = _word_from_config(params.get("restriction", ()))
    model = spectral.DiracModel(solution)
    stream = spectral.SpectralStream(model, restriction, budget)
    rows = [
        (k + 1, value, label, "singular_values")
        for k, (value, label) in enumerate(stream.take(n))
    ]
    emit_csv(("k", "sigma", "label", "source"), rows, out_dir / "spectrum.csv", manifest)
    if stream.boundary is not None:
        print(f"boundary value (noted, not merged): {stream.boundary:.12g} (boundary_value)")
    print(f"emitted {n} singular values (singular_values)")
    return 0


def run_dixmier(config, solution, out_dir: Path, manifest: str, seed: int) -> int:
    params = config.get("params", {})
    n = int(params.get("n", 100_000))
    checkpoints = [int(c) for c in params.get("checkpoints", [n // 4, n // 2, n])]
    budget = int(params.get("budget_nodes", spectral.DEFAULT_NODE_BUDGET))
    restrictions = [_word_from_config(w) for w in params.get("restrictions", [[]])]
    model = spectral.DiracModel(solution)
    rows = []
    for x in restrictions:
        table = spectral.dixmier_checkpoints(model, x, checkpoints, budget)
        ref = solution.mass(x) / solution.entropy
        label = spectral.word_label(x, solution.spec.alphabet_size) or "empty"
        for cp, value in table.rows:
            rows.append((label, cp, value, ref, "partial_dixmier"))
        print(f"x={label}: normalized sum {table.final:.6g}, reference {ref:.6g} (partial_dixmier)")
    emit_csv(
        ("restriction", "N", "normalized_sum", "reference", "source"),
        rows, out_dir / "dixmier.csv", manifest,
    )
    return 0


def run_renewal(config, solution, out_dir: Path, manifest: str, seed: int) -> int:
    params = config.get("params", {})
    restriction = _word_from_config(params.get("restriction", ()))
    t_hi = float(params.get("t_max", 1e-2))
    t_lo = float(params.get("t_min", 1e-6))
    points = int(params.get("t_points", 25))
    budget = int(params.get("budget_nodes", spectral.DEFAULT_NODE_BUDGET))
    profile = renewal.count_profile(
        solution, restriction, np.geomspace(t_hi, t_lo, points), budget=budget
    )
    emit_csv(
        ("t", "upsilon", "xi", "t_upsilon", "source"),
        [(t, u, x, tu, "count_profile") for t, u, x, tu in profile.rows()],
        out_dir / "renewal_counts.csv", manifest,
    )
    r_lo = float(params.get("r_min", 8.0))
    r_hi = float(params.get("r_max", 14.0))
    r_step = float(params.get("r_step", 0.1))
    fit = renewal.xi_slope(solution, restriction, np.arange(r_lo, r_hi + 1e-9, r_step), budget=budget)
    emit_csv(
        ("r", "xi", "fitted_slope", "reference", "source"),
        [(r, v, fit.slope, fit.reference, "xi_slope") for r, v in fit.rows],
        out_dir / "renewal_slope.csv", manifest,
    )
    surrogate = renewal.krw_surrogate(
        solution, float(params.get("krw_t", 1000.0)), int(params.get("krw_samples", 10_000)), seed
    )
    emit_csv(
        ("mean", "reference", "relative_error", "n_samples", "seed", "source"),
        [(surrogate.mean, surrogate.reference, surrogate.relative_error,
          surrogate.n_samples, surrogate.seed, "krw_surrogate")],
        out_dir / "renewal_krw.csv", manifest,
    )
    print(f"xi slope {fit.slope:.6g} vs reference {fit.reference:.6g} (xi_slope)")
    return 0


def run_connes(config, solution, out_dir: Path, manifest: str, seed: int) -> int:
    params = config.get("params", {})
    p_word = _word_from_config(_require(params, "p_word", "[params]"))
    q_word = _word_from_config(_require(params, "q_word", "[params]"))
    k_max = int(params.get("k_max", 3))
    restarts = int(params.get("restarts", 16))
    iterations = int(params.get("iterations", 300))
    model = spectral.DiracModel(solution)
    p = duality.point_state(solution.spec, p_word)
    q = duality.point_state(solution.spec, q_word)
    if k_max < max(p.level, q.level):
        raise ConfigError(f"k_max={k_max} is below the state level {max(p.level, q.level)}")
    rows = []
    warm = None
    result = None
    for k in range(max(p.level, q.level), k_max + 1):
        result = duality.connes_distance(model, p, q, k, restarts, iterations, seed, warm)
        warm = result.certificate
        p_k = duality.lift_state(model, p, k)
        q_k = duality.lift_state(model, q, k)
        mk_dyadic = duality.monge_kantorovich(solution, p_k, q_k, "dyadic")
        mk_gibbs = duality.monge_kantorovich(solution, p_k, q_k, "gibbs")
        ratio = result.distance / mk_dyadic if mk_dyadic else float("nan")
        rows.append((k, result.distance, mk_dyadic, mk_gibbs, ratio,
                     "connes_distance/monge_kantorovich"))
        print(f"k={k}: distance >= {result.distance:.8g}, MK dyadic {mk_dyadic:.8g} (connes_distance)")
    emit_csv(
        ("k", "distance_lower_bound", "mk_dyadic", "mk_gibbs", "ratio_dyadic", "source"),
        rows, out_dir / "connes.csv", manifest,
    )
    words = sft.enumerate_cylinders(solution.spec, result.certificate.level)
    emit_csv(
        ("word", "value", "source"),
        [
            (spectral.word_label(w, solution.spec.alphabet_size), v, "connes_distance")
            for w, v in zip(words, result.certificate.function)
        ],
        out_dir / "connes_certificate.csv", manifest,
    )
    return 0


RUNNERS = {
    "thermo": run_thermo,
    "haar-check": run_haar_check,
    "spectrum": run_spectrum,
    "dixmier": run_dixmier,
    "renewal": run_renewal,
    "connes": run_connes,
}


def run(config_path: Path, seed: int | None, out_dir: Path | None,
        budget_nodes: int | None, checkpoints: list[int] | None) -> int:
    config = load_config(config_path)
    effective_seed = int(config.get("seed", 0)) if seed is None else seed
    if out_dir is None:
        out_dir = Path(os.environ.get(OUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    if budget_nodes is not None:
        config.setdefault("params", {})["budget_nodes"] = budget_nodes
    if checkpoints is not None:
        config.setdefault("params", {})["checkpoints"] = checkpoints
    _, _, solution = build_inputs(config)
    manifest = (
        f"# manifest config_sha256={config['_sha256']} seed={effective_seed} "
        f"version={__version__}"
    )
    return RUNNERS[config["task"]](config, solution, out_dir, manifest, effective_seed)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gibbstriple", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment config")
    runp.add_argument("config", type=Path)
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--out-dir", type=Path, default=None)
    runp.add_argument("--budget-nodes", type=int, default=None)
    runp.add_argument("--checkpoints", type=str, default=None,
                      help="comma-separated list of N values")
    args = parser.parse_args(argv)
    checkpoints = None
    if args.checkpoints:
        try:
            checkpoints = [int(c) for c in args.checkpoints.split(",")]
        except ValueError:
            print("--checkpoints must be a comma-separated list of integers", file=sys.stderr)
            return 2
    try:
        return run(args.config, args.seed, args.out_dir, args.budget_nodes, checkpoints)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GibbsTripleError as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
