"""Command-line orchestration: equilibrium, sweep, map and validate.

Configuration precedence: command-line flags override values from an
optional JSON --config file, which override built-in defaults.  Every
command is deterministic given (config, seed); sweeps may fan out over
worker threads but always assemble rows in canonical order, so repeated
invocations produce byte-identical artifacts.

Exit codes: 0 success, 2 config/matrix error, 3 I/O error, 4 mapping
infeasible, 5 validation schema error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

from . import device, game, gcm, noise, stats
from .statevec import derive_seed, sample_counts

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_SCHEMA = 5

CSV_COLUMNS = (
    "strategy", "gamma", "run",
    "p00", "p01", "p10", "p11",
    "ea", "eb", "ea_analytic", "eb_analytic",
)

HEAVY_HEX_DISTANCE_127 = 6


@dataclass
class SweepConfig:
    gamma_steps: int = 31
    shots: int = 2048
    runs: int = 5
    seed: int = 0
    strategies: tuple[str, ...] = tuple(s.label for s in game.CANONICAL_STRATEGIES)
    noise_scale: float = 1.0
    coupling_map: str | None = None
    calibration: str | None = None
    synth: bool = False
    pairs: int | None = None
    min_separation: int = 2
    out: str | None = None
    svg: bool = False
    formula_variant: str = "corrected"
    workers: int = 1

    def __post_init__(self):
        if self.gamma_steps < 2:
            raise ValueError("gamma-steps must be >= 2")
        if self.shots < 1 or self.runs < 1:
            raise ValueError("shots and runs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.formula_variant not in ("paper", "corrected"):
            raise ValueError(f"unknown formula variant {self.formula_variant!r}")
        known = {s.label for s in game.CANONICAL_STRATEGIES}
        parsed = tuple(game.Strategy.parse(label).label for label in self.strategies)
        unknown = [label for label in parsed if label not in known]
        if unknown:
            raise ValueError(f"strategies outside the evaluated set: {unknown}")
        self.strategies = parsed

    @classmethod
    def resolve(cls, file_values: dict, cli_values: dict) -> "SweepConfig":
        merged: dict = {}
        names = {f.name for f in fields(cls)}
        for source in (file_values, cli_values):
            for key, value in source.items():
                norm = key.replace("-", "_")
                if norm not in names:
                    raise ValueError(f"unknown config key {key!r}")
                if value is not None:
                    merged[norm] = value
        if "strategies" in merged and isinstance(merged["strategies"], str):
            merged["strategies"] = tuple(
                s for s in (t.strip() for t in merged["strategies"].split(",")) if s
            )
        return cls(**merged)


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc


def parse_matrix(spec_text: str) -> game.PayoffMatrix:
    """A payoff matrix from a preset name or a JSON file of 2x2 [a, b] cells."""
    presets = {
        "bos": game.PayoffMatrix.battle_of_sexes,
        "default": game.PayoffMatrix.battle_of_sexes,
        "identity-coordination": game.PayoffMatrix.identity_coordination,
    }
    if spec_text in presets:
        return presets[spec_text]()
    with open(spec_text, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cells = []
    for i in (0, 1):
        row = []
        for j in (0, 1):
            try:
                cell = doc[i][j]
                row.append((float(cell[0]), float(cell[1])))
            except (LookupError, TypeError, ValueError) as err:
                raise ValueError(f"matrix cell ({i},{j}) is malformed: {err}") from err
        cells.append(tuple(row))
    return game.PayoffMatrix(tuple(cells))


def _resolve_device(cfg: SweepConfig):
    """Graph and calibration from files, or synthesized with --synth."""
    if cfg.coupling_map:
        graph = device.load_coupling_map(cfg.coupling_map)
    elif cfg.synth:
        graph = device.heavy_hex_graph(HEAVY_HEX_DISTANCE_127)
    else:
        raise ValueError("no coupling map: pass --coupling-map PATH or --synth")
    if cfg.calibration:
        calib = device.load_calibration(cfg.calibration)
    elif cfg.synth:
        calib = device.synth_calibration(graph, seed=cfg.seed, profile="realistic")
    else:
        raise ValueError("no calibration: pass --calibration PATH or --synth")
    if not calib.covers(graph):
        raise ValueError("calibration does not cover every edge of the coupling map")
    return graph, calib


# --- equilibrium -----------------------------------------------------------------

def cmd_equilibrium(args) -> int:
    try:
        matrix = parse_matrix(args.matrix)
        eq = game.classical_mixed_equilibrium(matrix)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    quantum_equal = 2.5
    try:
        advantage = game.advantage_percent(quantum_equal, eq.e_a)
    except ValueError:
        advantage = None
    if args.json:
        doc = {
            "p_alice": eq.p_alice,
            "q_bob": eq.q_bob,
            "e_a": eq.e_a,
            "e_b": eq.e_b,
            "coordination_prob": eq.coordination_prob,
            "quantum_equal_payoff": quantum_equal,
            "advantage_percent": advantage,
        }
        print(json.dumps(doc, indent=1))
    else:
        print(f"p_alice             = {eq.p_alice:.6g}")
        print(f"q_bob               = {eq.q_bob:.6g}")
        print(f"e_a                 = {eq.e_a:.6g}")
        print(f"e_b                 = {eq.e_b:.6g}")
        print(f"coordination prob   = {eq.coordination_prob:.6g}")
        if advantage is not None:
            print(
                f"equal quantum payoff {quantum_equal} exceeds e_a by "
                f"{advantage:.2f}%"
            )
    return EXIT_OK


# --- sweep ----------------------------------------------------------------------

def _sweep_rows(cfg: SweepConfig, calib, plan):
    """All CSV rows of a sweep, computed cell-per-cell and sorted canonically.

    Each (strategy, circuit, run) cell has its own derived seed, so the
    thread pool size cannot change any sampled value.
    """
    grid = game.default_gamma_grid(cfg.gamma_steps)
    model = noise.NoiseModel(scale=cfg.noise_scale)
    graph = calib.graph()
    flags = noise.crosstalk_flags(plan, graph)
    matrix = game.PayoffMatrix.battle_of_sexes()
    canonical = {s.label: idx for idx, s in enumerate(game.CANONICAL_STRATEGIES)}

    jobs = []
    for label in cfg.strategies:
        strategy = game.Strategy.parse(label)
        strat_idx = canonical[label]
        spec = game.GameSpec(
            gamma_grid=grid, strategy_a=strategy, strategy_b=strategy
        )
        for i, gamma in enumerate(grid):
            ops = game.build_ewl_circuit(gamma, spec.phi, strategy, strategy)
            pc = calib.pair(plan.assignments[i])
            dist = noise.noisy_distribution(ops, pc, model, flags[i])
            ana = game.analytical_payoffs(strategy, gamma, cfg.formula_variant)
            for run in range(cfg.runs):
                jobs.append((label, strat_idx, gamma, i, run, dist, ana))

    def sample(job):
        label, strat_idx, gamma, i, run, dist, ana = job
        counts = sample_counts(
            dist, cfg.shots, derive_seed(derive_seed(cfg.seed, strat_idx), i, run)
        )
        freqs = counts.frequencies()
        ea, eb, _ = stats.payoffs_from_counts(counts, matrix)
        return (
            (strat_idx, i, run),
            {
                "strategy": label,
                "gamma": repr(gamma),
                "run": str(run),
                "p00": repr(float(freqs[0])),
                "p01": repr(float(freqs[1])),
                "p10": repr(float(freqs[2])),
                "p11": repr(float(freqs[3])),
                "ea": repr(ea),
                "eb": repr(eb),
                "ea_analytic": repr(ana[0]),
                "eb_analytic": repr(ana[1]),
            },
        )

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            keyed = list(pool.map(sample, jobs))
    else:
        keyed = [sample(job) for job in jobs]
    keyed.sort(key=lambda kv: kv[0])
    return [row for _, row in keyed]


def _svg_plot(path, label, grid, ana_a, ana_b, estimates) -> None:
    """Static SVG: analytic curves plus run means with CI bars."""
    width, height = 640, 420
    ml, mr, mt, mb = 60, 20, 40, 50
    values = list(ana_a) + list(ana_b)
    for est_a, est_b in estimates:
        values += [est_a.mean - est_a.ci_half_width, est_a.mean + est_a.ci_half_width]
        values += [est_b.mean - est_b.ci_half_width, est_b.mean + est_b.ci_half_width]
    lo = min(0.0, min(values)) - 0.1
    hi = max(values) + 0.1

    def x(gamma):
        return ml + (width - ml - mr) * gamma / grid[-1]

    def y(v):
        return height - mb - (height - mt - mb) * (v - lo) / (hi - lo)

    def polyline(series, color, dash=""):
        pts = " ".join(f"{x(g):.2f},{y(v):.2f}" for g, v in zip(grid, series))
        return (
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
            f'points="{pts}"/>'
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="15">'
        f"Payoffs vs entanglement angle, strategy {label}</text>",
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>',
        f'<text x="{(width - mr + ml) / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">gamma (rad)</text>',
        f'<text x="16" y="{(height - mb + mt) / 2:.0f}" font-size="12" '
        f'transform="rotate(-90 16 {(height - mb + mt) / 2:.0f})" '
        f'text-anchor="middle">payoff</text>',
    ]
    for tick in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi):
        parts.append(
            f'<line x1="{x(tick):.2f}" y1="{height - mb}" x2="{x(tick):.2f}" '
            f'y2="{height - mb + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x(tick):.2f}" y="{height - mb + 18}" text-anchor="middle" '
            f'font-size="10">{tick:.3g}</text>'
        )
    v = lo
    while v <= hi:
        tick = round(v, 1)
        if tick >= lo:
            parts.append(
                f'<line x1="{ml - 5}" y1="{y(tick):.2f}" x2="{ml}" y2="{y(tick):.2f}" '
                f'stroke="black"/>'
            )
            parts.append(
                f'<text x="{ml - 8}" y="{y(tick) + 3:.2f}" text-anchor="end" '
                f'font-size="10">{tick:.2g}</text>'
            )
        v += 0.5
    parts.append(polyline(ana_a, "#1f77b4"))
    parts.append(polyline(ana_b, "#ff7f0e", dash=' stroke-dasharray="5,3"'))
    for g, (est_a, est_b) in zip(grid, estimates):
        for est, color, dx in ((est_a, "#1f77b4", -2), (est_b, "#ff7f0e", 2)):
            cx = x(g) + dx
            parts.append(
                f'<line x1="{cx:.2f}" y1="{y(est.mean - est.ci_half_width):.2f}" '
                f'x2="{cx:.2f}" y2="{y(est.mean + est.ci_half_width):.2f}" '
                f'stroke="{color}" stroke-width="1"/>'
            )
            parts.append(
                f'<circle cx="{cx:.2f}" cy="{y(est.mean):.2f}" r="2.5" fill="{color}"/>'
            )
    parts.append(
        f'<text x="{width - mr - 10}" y="{mt + 12}" text-anchor="end" font-size="11" '
        f'fill="#1f77b4">E_A (solid: analytic, dots: runs)</text>'
    )
    parts.append(
        f'<text x="{width - mr - 10}" y="{mt + 28}" text-anchor="end" font-size="11" '
        f'fill="#ff7f0e">E_B (dashed: analytic, dots: runs)</text>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


def cmd_sweep(args) -> int:
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = SweepConfig.resolve(file_values, _cli_values(args))
    except (OSError, ValueError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        graph, calib = _resolve_device(cfg)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        plan = gcm.select_pairs(
            graph, calib, k=cfg.gamma_steps, min_separation=cfg.min_separation
        )
    except gcm.InfeasibleMappingError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE

    out = cfg.out or "sweep.csv"
    rows = _sweep_rows(cfg, calib, plan)
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    except OSError as err:
        print(f"error: cannot write {out}: {err}", file=sys.stderr)
        return EXIT_IO

    if cfg.svg:
        grid = game.default_gamma_grid(cfg.gamma_steps)
        stem = out[:-4] if out.endswith(".csv") else out
        for label in cfg.strategies:
            strategy = game.Strategy.parse(label)
            ana = [
                game.analytical_payoffs(strategy, g, cfg.formula_variant) for g in grid
            ]
            estimates = []
            for i, g in enumerate(grid):
                eas = [
                    float(r["ea"]) for r in rows
                    if r["strategy"] == label and float(r["gamma"]) == g
                ]
                ebs = [
                    float(r["eb"]) for r in rows
                    if r["strategy"] == label and float(r["gamma"]) == g
                ]
                if cfg.runs >= 2:
                    estimates.append(
                        (stats.aggregate_runs(eas), stats.aggregate_runs(ebs))
                    )
                else:
                    estimates.append((
                        stats.PayoffEstimate(eas[0], 0.0, 0.0, 1),
                        stats.PayoffEstimate(ebs[0], 0.0, 0.0, 1),
                    ))
            safe = label.replace("(", "_").replace(")", "").replace("/", "_")
            try:
                _svg_plot(f"{stem}_{safe}.svg", label, grid,
                          [a for a, _ in ana], [b for _, b in ana], estimates)
            except OSError as err:
                print(f"error: cannot write SVG: {err}", file=sys.stderr)
                return EXIT_IO
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


# --- map -------------------------------------------------------------------------

def cmd_map(args) -> int:
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = SweepConfig.resolve(file_values, _cli_values(args))
    except (OSError, ValueError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        graph, calib = _resolve_device(cfg)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    k = cfg.pairs if cfg.pairs is not None else cfg.gamma_steps
    try:
        plan = gcm.select_pairs(graph, calib, k=k, min_separation=cfg.min_separation)
    except gcm.InfeasibleMappingError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    ok, violation = gcm.verify_separation(plan, graph)
    out = cfg.out or "mapping_plan.json"
    try:
        plan.save(out)
    except OSError as err:
        print(f"error: cannot write {out}: {err}", file=sys.stderr)
        return EXIT_IO
    print(f"selected {k} pairs on {graph.num_qubits} qubits -> {out}")
    print(f"total score: {gcm.plan_score(plan, calib):.6f}")
    print(f"separation check: {'OK' if ok else f'FAIL ({violation})'}")
    return EXIT_OK


# --- validate ----------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        with open(args.results, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            rows = list(reader)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    missing = [c for c in CSV_COLUMNS if c not in header]
    extra = [c for c in header if c not in CSV_COLUMNS]
    if missing or extra:
        print(
            f"error: bad columns: missing {missing or 'none'}, unexpected "
            f"{extra or 'none'}",
            file=sys.stderr,
        )
        return EXIT_SCHEMA

    series: dict[str, dict[float, dict[int, tuple[float, float]]]] = {}
    try:
        for row in rows:
            label = row["strategy"]
            gamma = float(row["gamma"])
            run = int(row["run"])
            cell = series.setdefault(label, {}).setdefault(gamma, {})
            if run in cell:
                raise ValueError(f"duplicate cell ({label}, {gamma}, run {run})")
            cell[run] = (float(row["ea"]), float(row["eb"]))
    except (ValueError, KeyError) as err:
        print(f"error: unreadable results row: {err}", file=sys.stderr)
        return EXIT_SCHEMA

    if not series:
        print("error: results file holds no rows", file=sys.stderr)
        return EXIT_SCHEMA
    all_runs = sorted({r for per in series.values() for cell in per.values() for r in cell})
    all_gammas = sorted({g for per in series.values() for g in per})
    missing_cells = [
        (label, g, r)
        for label, per in series.items()
        for g in all_gammas
        for r in all_runs
        if r not in per.get(g, {})
    ]
    if missing_cells:
        print(f"error: missing cells {missing_cells[:10]}", file=sys.stderr)
        return EXIT_SCHEMA
    if len(all_runs) < 2:
        print("error: validation needs at least 2 runs per cell", file=sys.stderr)
        return EXIT_SCHEMA

    ordered = {
        label: {g: [per[g][r] for r in all_runs] for g in all_gammas}
        for label, per in series.items()
    }
    try:
        report = stats.report_from_payoff_series(
            ordered, variant=args.formula_variant, rmse_method=args.rmse_method
        )
    except (stats.SchemaError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SCHEMA
    print(report.to_text())
    if args.out:
        try:
            report.save(args.out)
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


# --- wiring -----------------------------------------------------------------------

def _cli_values(args) -> dict:
    keys = (
        "gamma_steps", "shots", "runs", "seed", "strategies", "noise_scale",
        "coupling_map", "calibration", "synth", "pairs", "min_separation",
        "out", "svg", "formula_variant", "workers",
    )
    values = {}
    for key in keys:
        if hasattr(args, key):
            v = getattr(args, key)
            if v is not None and v is not False:
                values[key] = v
    return values


def _add_device_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--coupling-map", metavar="PATH", help="coupling-map JSON file")
    p.add_argument("--calibration", metavar="PATH", help="calibration JSON file")
    p.add_argument("--synth", action="store_true", default=False,
                   help="synthesize a 127-qubit heavy-hex device instead of loading files")
    p.add_argument("--min-separation", type=int, dest="min_separation", default=None,
                   help="minimum graph distance between mapped pairs (default 2)")
    p.add_argument("--seed", type=int, default=None, help="master random seed")
    p.add_argument("--config", metavar="PATH", help="JSON config file (flags override it)")
    p.add_argument("--out", default=None, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbos",
        description="Quantum Battle of the Sexes: simulation, mapping and validation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eq = sub.add_parser("equilibrium", help="classical mixed-equilibrium report")
    p_eq.add_argument("--matrix", default="bos",
                      help="payoff preset (bos, identity-coordination) or JSON file")
    p_eq.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p_eq.set_defaults(func=cmd_equilibrium)

    p_sw = sub.add_parser("sweep", help="noisy payoff sweep over the gamma grid")
    p_sw.add_argument("--gamma-steps", type=int, dest="gamma_steps", default=None)
    p_sw.add_argument("--shots", type=int, default=None)
    p_sw.add_argument("--runs", type=int, default=None)
    p_sw.add_argument("--strategies", default=None,
                      help="comma list out of I,H,RY(pi/4),RY(pi)")
    p_sw.add_argument("--noise-scale", type=float, dest="noise_scale", default=None)
    p_sw.add_argument("--svg", action="store_true", default=False,
                      help="also write one SVG plot per strategy")
    p_sw.add_argument("--formula-variant", dest="formula_variant",
                      choices=("paper", "corrected"), default=None)
    p_sw.add_argument("--workers", type=int, default=None,
                      help="thread fan-out over (strategy, gamma, run) cells")
    _add_device_flags(p_sw)
    p_sw.set_defaults(func=cmd_sweep)

    p_map = sub.add_parser("map", help="select separated low-error qubit pairs")
    p_map.add_argument("--pairs", type=int, default=None, help="number of pairs")
    _add_device_flags(p_map)
    p_map.set_defaults(func=cmd_map)

    p_val = sub.add_parser("validate", help="statistical validation of a sweep CSV")
    p_val.add_argument("results", help="CSV produced by the sweep command")
    p_val.add_argument("--formula-variant", dest="formula_variant",
                       choices=("paper", "corrected"), default="corrected")
    p_val.add_argument("--rmse-method", dest="rmse_method", default="rmse_of_means",
                       choices=("rmse_of_means", "mean_of_rmses"))
    p_val.add_argument("--out", default=None, help="also write the report as JSON")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())
