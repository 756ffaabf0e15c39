"""Batch command-line entry point.

Wires ingestion, the pairwise network, the multiplet scan and the network
statistics into a resumable pipeline with a declarative run configuration.
Data goes to files; logs go to standard error.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import datetime as dt
import hashlib
import json
import logging
import re
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, InfoflowError
from .gaussian import RidgePolicy
from .granger import GcEdge, gc_matrix, read_edges_csv, write_edges_csv
from .ingest import (
    WEEK_MINUTES,
    build_calendar,
    aggregate_minutes,
    dollar_volume,
    load_registry,
    iter_windows,
    parse_trades,
    read_panel_csv,
    returns_from_bars,
    write_panel_csv,
)
from .network import (
    AdjacencyMatrix,
    age_strength_correlation,
    average_network,
    read_strengths_csv,
    window_correlation,
    window_indicators,
    write_age_correlation_csv,
    write_indicators_csv,
    write_matrix_csv,
    write_strengths_csv,
    write_window_corr_csv,
)
from .oinfo import (
    class_fractions,
    membership_counts,
    multiplet_scan,
    read_multiplets_csv,
    write_class_fractions_csv,
    write_membership_csv,
    write_multiplets_csv,
)
from .synth import PRNG_NAME, CouplingSpec, gen_planted_highorder, gen_var

logger = logging.getLogger("infoflow")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    """Effective run configuration (file values overridden by flags)."""

    input: str | None = None
    fiat: str = "USD"
    registry: str | None = None
    start: str | None = None      # YYYY-MM-DD, a Monday
    windows: int | None = None
    alpha: float = 0.01
    p_max: int = 20
    lag: int = 1
    n_max: int = 5
    ridge: float = 1e-8
    mean_f_significant_only: bool = False
    out: str = "out"
    jobs: int = 1
    seed: int = 0
    strict: bool = False
    dense: bool = False

    def validate(self) -> None:
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 2 <= self.n_max <= 8:
            raise ConfigError(f"n_max must be in [2, 8], got {self.n_max}")
        if self.p_max < 1:
            raise ConfigError("p_max must be >= 1")
        if self.lag < 1:
            raise ConfigError("lag must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")
        if self.windows is not None and self.windows < 1:
            raise ConfigError("windows must be >= 1")
        if self.start is not None:
            ts = _parse_start(self.start)
            begin = dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc)
            if begin.weekday() != 0:
                raise ConfigError(f"start {self.start} is not a Monday")

    def ridge_policy(self) -> RidgePolicy:
        return RidgePolicy(lam=self.ridge)

    def hash(self) -> str:
        """Digest of the analysis-relevant settings (out/jobs/strict excluded)."""
        skip = {"out", "jobs", "strict"}
        payload = "\n".join(
            f"{f.name}={getattr(self, f.name)!r}"
            for f in fields(self)
            if f.name not in skip
        )
        return hashlib.sha256(payload.encode()).hexdigest()


_SECTION_FIELDS = {
    "data": ("input", "fiat", "registry", "start", "windows"),
    "analysis": ("alpha", "p_max", "lag", "n_max", "ridge", "mean_f_significant_only"),
    "run": ("out", "jobs", "seed", "strict", "dense"),
}


def load_config(path) -> RunConfig:
    """Read the sectioned key-value configuration file."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = RunConfig()
    types = {f.name: f.type for f in fields(RunConfig)}
    for section, keys in _SECTION_FIELDS.items():
        if not parser.has_section(section):
            continue
        for key in parser.options(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            raw = parser.get(section, key)
            if types[key] in ("int", "int | None"):
                value = int(raw)
            elif types[key] == "float":
                value = float(raw)
            elif types[key] == "bool":
                value = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                value = raw
            setattr(cfg, key, value)
    return cfg


def _merge_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    mapping = {
        "input": "input",
        "fiat": "fiat",
        "registry": "registry",
        "start": "start",
        "windows": "windows",
        "alpha": "alpha",
        "pmax": "p_max",
        "lag": "lag",
        "nmax": "n_max",
        "ridge": "ridge",
        "out": "out",
        "jobs": "jobs",
        "seed": "seed",
        "dense": "dense",
    }
    for flag, field_name in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, field_name, value)
    if getattr(args, "strict", False):
        cfg.strict = True
    return cfg


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    cfg = _merge_flags(cfg, args)
    cfg.validate()
    return cfg


def _parse_start(text: str) -> int:
    day = dt.datetime.strptime(text, "%Y-%m-%d").replace(tzinfo=dt.timezone.utc)
    return int(day.timestamp())


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="ascii")


# ---------------------------------------------------------------------------
# ingest stage

def _discover_trade_files(input_dir: Path, fiat: str) -> list[tuple[str, Path]]:
    found = []
    for path in sorted(input_dir.glob(f"*{fiat}.csv")):
        ticker = path.name[: -len(fiat) - 4]
        if ticker:
            found.append((ticker, path))
    if not found:
        raise ConfigError(f"no trade files matching *{fiat}.csv under {input_dir}")
    return found


def stage_ingest(cfg: RunConfig, out_dir: Path) -> dict:
    """Parse trade files, emit per-window panels, volumes and the calendar."""
    if not cfg.input:
        raise ConfigError("ingest requires an input directory")
    input_dir = Path(cfg.input)
    if not input_dir.is_dir():
        raise ConfigError(f"input directory {input_dir} not found")
    files = _discover_trade_files(input_dir, cfg.fiat)

    assets: dict[str, list] = {}
    diagnostics: list[str] = []
    for ticker, path in files:
        result = parse_trades(path.read_text(encoding="ascii"))
        if result.rejected:
            diagnostics.append(f"{ticker}: {len(result.rejected)} lines rejected")
        if not result.records:
            diagnostics.append(f"{ticker}: no valid trades; skipped")
            continue
        assets[ticker] = result.records
    if not assets:
        raise ConfigError("no usable trade data found")

    first_ts = min(trades[0].timestamp for trades in assets.values())
    last_minute = max(trades[-1].timestamp // 60 for trades in assets.values())
    if cfg.start is not None:
        start_ts = _parse_start(cfg.start)
    else:
        first_day = dt.datetime.fromtimestamp(first_ts, tz=dt.timezone.utc)
        monday = first_day.date() + dt.timedelta(days=(7 - first_day.weekday()) % 7)
        if first_day.weekday() == 0 and first_day.time() != dt.time(0, 0):
            monday = first_day.date() + dt.timedelta(days=7)
        start_ts = int(
            dt.datetime.combine(monday, dt.time(0, 0), tzinfo=dt.timezone.utc).timestamp()
        )
    cal = build_calendar(start_ts, last_minute * 60, cfg.windows)

    span = (cal.start_minute - 1, cal.end_minute)
    series = {}
    window_volumes = {w: 0.0 for w in range(cal.window_count)}
    for ticker, trades in assets.items():
        bars = aggregate_minutes(trades, span=span)
        if len(bars) < 2:
            diagnostics.append(f"{ticker}: fewer than 2 bars; skipped")
            continue
        series[ticker] = returns_from_bars(ticker, bars, first_trade=trades[0].timestamp)
        for w in range(cal.window_count):
            lo, hi = cal.window_bounds(w)
            window_volumes[w] += dollar_volume(bars, lo, hi)

    panel_files = []
    for panel in iter_windows(series, cal):
        path = out_dir / f"panel_{panel.window_id}.csv"
        write_panel_csv(path, panel)
        panel_files.append(path.name)

    with open(out_dir / "volumes.csv", "w", encoding="ascii", newline="") as fh:
        fh.write("window,total_volume\n")
        for w in range(cal.window_count):
            fh.write(f"{w},{window_volumes[w]!r}\n")
    _write_json(
        out_dir / "calendar.json",
        {"start": cal.start, "end": cal.end, "window_count": cal.window_count},
    )
    return {
        "window_count": cal.window_count,
        "assets": sorted(series),
        "diagnostics": diagnostics,
        "panel_files": panel_files,
    }


def _read_volumes(path: Path) -> dict[int, float]:
    volumes: dict[int, float] = {}
    if not path.exists():
        return volumes
    with open(path, "r", encoding="ascii") as fh:
        fh.readline()
        for line in fh:
            w, v = line.rstrip("\n").split(",")
            volumes[int(w)] = float(v)
    return volumes


def _load_calendar(out_dir: Path):
    path = out_dir / "calendar.json"
    if not path.exists():
        return None
    payload = json.loads(path.read_text(encoding="ascii"))
    return build_calendar(payload["start"], payload["end"], payload["window_count"])


# ---------------------------------------------------------------------------
# per-window analysis stage

_PANEL_RE = re.compile(r"panel_(\d+)\.csv$")


def _list_panels(out_dir: Path) -> list[tuple[int, Path]]:
    panels = []
    for path in out_dir.glob("panel_*.csv"):
        match = _PANEL_RE.search(path.name)
        if match:
            panels.append((int(match.group(1)), path))
    return sorted(panels)


def _window_outputs(out_dir: Path, window_id: int, dense: bool) -> list[Path]:
    names = [
        f"edges_{window_id}.csv",
        f"gc_pairs_{window_id}.csv",
        f"nodes_{window_id}.csv",
        f"multiplets_{window_id}.csv",
    ]
    if dense:
        names.append(f"matrix_{window_id}.csv")
    return [out_dir / name for name in names]


def analyze_window(panel_path: Path, out_dir: Path, cfg: RunConfig) -> dict:
    """Run the pairwise network and the multiplet scan for one window."""
    panel = read_panel_csv(panel_path)
    w = panel.window_id
    matrix, edges = gc_matrix(panel, alpha=cfg.alpha, p_max=cfg.p_max)
    write_edges_csv(out_dir / f"edges_{w}.csv", w, edges, significant_only=True)
    write_edges_csv(out_dir / f"gc_pairs_{w}.csv", w, edges, significant_only=False)
    (out_dir / f"nodes_{w}.csv").write_text(
        "".join(lab + "\n" for lab in matrix.labels), encoding="ascii"
    )
    if cfg.dense:
        write_matrix_csv(out_dir / f"matrix_{w}.csv", matrix)
    results = multiplet_scan(panel, p=cfg.lag, n_max=cfg.n_max, policy=cfg.ridge_policy())
    write_multiplets_csv(out_dir / f"multiplets_{w}.csv", results)
    return {
        "window": w,
        "excluded": [list(item) for item in matrix.excluded],
        "n_nodes": len(matrix.labels),
        "n_multiplets": len(results),
    }


def _matrix_from_files(out_dir: Path, window_id: int, alpha: float) -> AdjacencyMatrix:
    nodes_path = out_dir / f"nodes_{window_id}.csv"
    labels = tuple(
        line for line in nodes_path.read_text(encoding="ascii").splitlines() if line
    )
    index = {lab: i for i, lab in enumerate(labels)}
    weights = np.zeros((len(labels), len(labels)))
    _, edges = read_edges_csv(out_dir / f"edges_{window_id}.csv", alpha=alpha)
    for e in edges:
        weights[index[e.source], index[e.target]] = e.f_value
    return AdjacencyMatrix(window_id=window_id, labels=labels, weights=weights, alpha=alpha)


# ---------------------------------------------------------------------------
# global summary stage

def stage_globals(cfg: RunConfig, out_dir: Path, window_ids: list[int]) -> list[str]:
    """Strengths, average network, correlations, indicators, memberships."""
    notes: list[str] = []
    matrices = []
    for w in window_ids:
        matrix = _matrix_from_files(out_dir, w, cfg.alpha)
        matrices.append(matrix)
        write_strengths_csv(out_dir / f"strengths_{w}.csv", matrix)
    if matrices:
        write_matrix_csv(out_dir / "average_network.csv", average_network(matrices))

    if len(matrices) >= 2:
        wc = window_correlation(matrices, alpha=0.01)
        write_window_corr_csv(out_dir / "window_corr.csv", out_dir / "window_corr_p.csv", wc)
    else:
        notes.append("window correlation skipped: fewer than 2 windows")

    pair_stats: dict[int, list[GcEdge]] = {}
    all_multiplets = []
    for w in window_ids:
        _, edges = read_edges_csv(out_dir / f"gc_pairs_{w}.csv", alpha=cfg.alpha)
        pair_stats[w] = edges
        all_multiplets.extend(read_multiplets_csv(out_dir / f"multiplets_{w}.csv", lag_p=cfg.lag))

    volumes = _read_volumes(out_dir / "volumes.csv")
    cal = _load_calendar(out_dir)
    start_dates = None
    if cal is not None:
        start_dates = {
            w: cal.window_start_date(w).isoformat() for w in range(cal.window_count)
        }
    rows = window_indicators(
        pair_stats,
        all_multiplets,
        volumes,
        start_dates=start_dates,
        n_max=cfg.n_max,
        significant_only=cfg.mean_f_significant_only,
    )
    write_indicators_csv(out_dir / "indicators.csv", rows)

    meta = load_registry(cfg.registry) if cfg.registry else None
    if all_multiplets:
        write_membership_csv(out_dir / "membership.csv", membership_counts(all_multiplets, meta))
        write_class_fractions_csv(
            out_dir / "class_fractions.csv", class_fractions(all_multiplets, meta)
        )

    # Age vs. strength: age counts windows in which a ticker's column is active.
    ages: dict[str, int] = {}
    for w, panel_path in _list_panels(out_dir):
        if w not in window_ids:
            continue
        header = panel_path.open(encoding="ascii").readline().strip()
        for lab in header.split(","):
            if lab:
                ages[lab] = ages.get(lab, 0) + 1
    sums: dict[str, list[float]] = {}
    for w in window_ids:
        for lab, (ki, ko) in read_strengths_csv(out_dir / f"strengths_{w}.csv").items():
            acc = sums.setdefault(lab, [0.0, 0.0, 0.0])
            acc[0] += ki
            acc[1] += ko
            acc[2] += 1
    tickers = sorted(lab for lab in sums if lab in ages)
    if len(tickers) >= 5:
        result = age_strength_correlation(
            [ages[lab] for lab in tickers],
            [sums[lab][0] / sums[lab][2] for lab in tickers],
            [sums[lab][1] / sums[lab][2] for lab in tickers],
        )
        write_age_correlation_csv(out_dir / "age_correlation.csv", result)
    else:
        notes.append("age correlation skipped: fewer than 5 assets")
    return notes


# ---------------------------------------------------------------------------
# manifest and the full pipeline

def _load_manifest(out_dir: Path) -> dict:
    path = out_dir / "manifest.json"
    if path.exists():
        try:
            return json.loads(path.read_text(encoding="ascii"))
        except json.JSONDecodeError:
            logger.warning("manifest unreadable; starting fresh")
    return {}


def _save_manifest(out_dir: Path, manifest: dict) -> None:
    _write_json(out_dir / "manifest.json", manifest)


def _analyze_window_task(args: tuple) -> tuple[int, dict | None, str | None]:
    panel_path, out_dir, cfg = args
    try:
        info = analyze_window(Path(panel_path), Path(out_dir), cfg)
        return info["window"], info, None
    except Exception as err:  # noqa: BLE001 - fault isolation per window
        match = _PANEL_RE.search(str(panel_path))
        w = int(match.group(1)) if match else -1
        return w, None, f"{type(err).__name__}: {err}"


def run_pipeline(cfg: RunConfig) -> int:
    """Full batch: ingest, per-window analysis, global summaries, manifest."""
    cfg.validate()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest(out_dir)
    cfg_hash = cfg.hash()
    if manifest.get("config_hash") != cfg_hash:
        manifest = {"config_hash": cfg_hash, "windows": {}}
    manifest.setdefault("windows", {})
    manifest["version"] = __version__
    manifest["prng"] = PRNG_NAME
    manifest["config"] = asdict(cfg)

    if manifest.get("ingest", {}).get("status") != "done" or not (
        out_dir / "calendar.json"
    ).exists():
        info = stage_ingest(cfg, out_dir)
        manifest["ingest"] = {"status": "done", **info}
        _save_manifest(out_dir, manifest)
    else:
        logger.info("ingest outputs present; skipped")

    panels = _list_panels(out_dir)
    pending = []
    for w, path in panels:
        record = manifest["windows"].get(str(w))
        if (
            record
            and record.get("status") == "done"
            and all(p.exists() for p in _window_outputs(out_dir, w, cfg.dense))
        ):
            logger.info("window %d complete; skipped", w)
            continue
        pending.append((w, path))

    failures: list[int] = []
    done_ids: list[int] = []

    def _record(w: int, info: dict | None, error: str | None) -> None:
        if error is None:
            manifest["windows"][str(w)] = {"status": "done", **info}
            done_ids.append(w)
        else:
            manifest["windows"][str(w)] = {"status": "failed", "error": error}
            failures.append(w)
            logger.error("window %d failed: %s", w, error)

    if cfg.jobs == 1 or len(pending) <= 1:
        for w, path in pending:
            w_id, info, error = _analyze_window_task((str(path), str(out_dir), cfg))
            _record(w_id, info, error)
            if error and cfg.strict:
                _save_manifest(out_dir, manifest)
                return EXIT_PARTIAL
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            tasks = [(str(path), str(out_dir), cfg) for _, path in pending]
            for w_id, info, error in pool.map(_analyze_window_task, tasks):
                _record(w_id, info, error)
        if failures and cfg.strict:
            _save_manifest(out_dir, manifest)
            return EXIT_PARTIAL

    completed = sorted(
        int(w) for w, rec in manifest["windows"].items() if rec.get("status") == "done"
    )
    notes = stage_globals(cfg, out_dir, completed)
    manifest["globals"] = {"status": "done", "notes": notes}
    _save_manifest(out_dir, manifest)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# synth command

def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    windows = args.panel_count
    master = np.random.Generator(np.random.PCG64(cfg.seed))
    seeds = [int(s) for s in master.integers(0, 2**62, size=windows)]
    meta: dict = {
        "mode": args.mode,
        "minutes": args.minutes,
        "seed": cfg.seed,
        "window_seeds": seeds,
        "prng": PRNG_NAME,
    }
    for w in range(windows):
        if args.mode == "var":
            couplings = {}
            for item in args.coupling or []:
                src, tgt, lag, coeff = item
                couplings[(int(src), int(tgt), int(lag))] = float(coeff)
            spec = CouplingSpec(
                n_vars=args.vars,
                couplings=couplings,
                noise_variances=tuple([1.0] * args.vars),
                seed=seeds[w],
            )
            panel = gen_var(spec, args.minutes, window_id=w)
            meta["couplings"] = {f"{s}->{t}@{l}": c for (s, t, l), c in couplings.items()}
            meta["n_vars"] = args.vars
        else:
            panel, members, target = gen_planted_highorder(
                args.mode, args.extra, args.minutes, seed=seeds[w]
            )
            panel.window_id = w
            meta["planted_members"] = list(members)
            meta["target"] = target
        write_panel_csv(out_dir / f"panel_{w}.csv", panel)
    _write_json(out_dir / "synth_meta.json", meta)
    return EXIT_OK


# ---------------------------------------------------------------------------
# stage commands

def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    info = stage_ingest(cfg, out_dir)
    logger.info("ingest complete: %d windows, %d assets", info["window_count"], len(info["assets"]))
    return EXIT_OK


def _run_per_window(args: argparse.Namespace, worker) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    panels_dir = Path(args.panels) if args.panels else out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    panels = _list_panels(panels_dir)
    if not panels:
        raise ConfigError(f"no panel files under {panels_dir}")
    failures = 0
    for w, path in panels:
        try:
            worker(w, path, out_dir, cfg)
        except Exception as err:  # noqa: BLE001 - per-window fault isolation
            failures += 1
            logger.error("window %d failed: %s", w, err)
            if cfg.strict:
                return EXIT_PARTIAL
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_gc_network(args: argparse.Namespace) -> int:
    def worker(w: int, path: Path, out_dir: Path, cfg: RunConfig) -> None:
        panel = read_panel_csv(path)
        matrix, edges = gc_matrix(panel, alpha=cfg.alpha, p_max=cfg.p_max)
        write_edges_csv(out_dir / f"edges_{w}.csv", w, edges, significant_only=True)
        write_edges_csv(out_dir / f"gc_pairs_{w}.csv", w, edges, significant_only=False)
        (out_dir / f"nodes_{w}.csv").write_text(
            "".join(lab + "\n" for lab in matrix.labels), encoding="ascii"
        )
        if cfg.dense:
            write_matrix_csv(out_dir / f"matrix_{w}.csv", matrix)

    return _run_per_window(args, worker)


def cmd_oinfo_scan(args: argparse.Namespace) -> int:
    def worker(w: int, path: Path, out_dir: Path, cfg: RunConfig) -> None:
        panel = read_panel_csv(path)
        results = multiplet_scan(panel, p=cfg.lag, n_max=cfg.n_max, policy=cfg.ridge_policy())
        write_multiplets_csv(out_dir / f"multiplets_{w}.csv", results)

    status = _run_per_window(args, worker)
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    all_multiplets = []
    for path in sorted(out_dir.glob("multiplets_*.csv")):
        all_multiplets.extend(read_multiplets_csv(path, lag_p=cfg.lag))
    if all_multiplets:
        meta = load_registry(cfg.registry) if cfg.registry else None
        write_membership_csv(out_dir / "membership.csv", membership_counts(all_multiplets, meta))
        write_class_fractions_csv(
            out_dir / "class_fractions.csv", class_fractions(all_multiplets, meta)
        )
    return status


def _completed_windows(out_dir: Path) -> list[int]:
    ids = []
    for path in out_dir.glob("edges_*.csv"):
        match = re.search(r"edges_(\d+)\.csv$", path.name)
        if match:
            ids.append(int(match.group(1)))
    return sorted(ids)


def cmd_net_stats(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    window_ids = _completed_windows(out_dir)
    if not window_ids:
        raise ConfigError(f"no edge lists under {out_dir}; run gc-network first")
    matrices = []
    for w in window_ids:
        matrix = _matrix_from_files(out_dir, w, cfg.alpha)
        matrices.append(matrix)
        write_strengths_csv(out_dir / f"strengths_{w}.csv", matrix)
    write_matrix_csv(out_dir / "average_network.csv", average_network(matrices))
    return EXIT_OK


def cmd_window_corr(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    window_ids = _completed_windows(out_dir)
    if len(window_ids) < 2:
        raise ConfigError("window correlation needs at least 2 completed windows")
    matrices = [_matrix_from_files(out_dir, w, cfg.alpha) for w in window_ids]
    wc = window_correlation(matrices, alpha=0.01)
    write_window_corr_csv(out_dir / "window_corr.csv", out_dir / "window_corr_p.csv", wc)
    return EXIT_OK


def cmd_indicators(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    window_ids = _completed_windows(out_dir)
    if not window_ids:
        raise ConfigError(f"no pair statistics under {out_dir}")
    pair_stats = {}
    multiplets = []
    for w in window_ids:
        _, edges = read_edges_csv(out_dir / f"gc_pairs_{w}.csv", alpha=cfg.alpha)
        pair_stats[w] = edges
        mpath = out_dir / f"multiplets_{w}.csv"
        if mpath.exists():
            multiplets.extend(read_multiplets_csv(mpath, lag_p=cfg.lag))
    volumes = _read_volumes(out_dir / "volumes.csv")
    cal = _load_calendar(out_dir)
    start_dates = None
    if cal is not None:
        start_dates = {w: cal.window_start_date(w).isoformat() for w in range(cal.window_count)}
    rows = window_indicators(
        pair_stats,
        multiplets,
        volumes,
        start_dates=start_dates,
        n_max=cfg.n_max,
        significant_only=cfg.mean_f_significant_only,
    )
    write_indicators_csv(out_dir / "indicators.csv", rows)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    return run_pipeline(cfg)


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="configuration file (sectioned key=value)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--alpha", type=float, help="significance level (default 0.01)")
    sub.add_argument("--pmax", type=int, help="BIC order-search bound (default 20)")
    sub.add_argument("--lag", type=int, help="multiplet embedding order (default 1)")
    sub.add_argument("--nmax", type=int, help="largest multiplet size (default 5)")
    sub.add_argument("--ridge", type=float, help="covariance ridge coefficient")
    sub.add_argument("--jobs", type=int, help="parallel window workers")
    sub.add_argument("--seed", type=int, help="seed for synthetic data / surrogates")
    sub.add_argument("--strict", action="store_true", help="abort on the first window failure")
    sub.add_argument("--dense", action="store_true", default=None,
                     help="also write dense adjacency matrices")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infoflow",
        description="Directed information-flow networks and high-order dependencies "
        "for asset return series",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("ingest", help="trade files -> per-window return panels")
    sub.add_argument("--input", help="directory of TICKER<fiat>.csv trade files")
    sub.add_argument("--fiat", help="fiat selector, e.g. USD (default)")
    sub.add_argument("--registry", help="ticker,class,first_day metadata CSV")
    sub.add_argument("--start", help="calendar start Monday, YYYY-MM-DD")
    sub.add_argument("--windows", type=int, help="number of weekly windows")
    _add_common(sub)
    sub.set_defaults(func=cmd_ingest)

    sub = subs.add_parser("synth", help="generate synthetic return panels")
    sub.add_argument("--mode", choices=("var", "redundant", "synergistic"), default="var")
    sub.add_argument("--vars", type=int, default=5, help="variables for var mode")
    sub.add_argument("--extra", type=int, default=2, help="distractors for planted modes")
    sub.add_argument("--minutes", type=int, default=WEEK_MINUTES, help="samples per panel")
    sub.add_argument("--panel-count", type=int, default=1, help="number of panels")
    sub.add_argument(
        "--coupling",
        nargs=4,
        action="append",
        metavar=("SRC", "TGT", "LAG", "COEF"),
        help="VAR coupling entry; repeatable",
    )
    _add_common(sub)
    sub.set_defaults(func=cmd_synth)

    for name, func, extra_help in (
        ("gc-network", cmd_gc_network, "panels -> per-window edge lists"),
        ("oinfo-scan", cmd_oinfo_scan, "panels -> best multiplets per target"),
    ):
        sub = subs.add_parser(name, help=extra_help)
        sub.add_argument("--panels", help="directory of panel_<w>.csv files (default: --out)")
        sub.add_argument("--registry", help="metadata CSV for class summaries")
        _add_common(sub)
        sub.set_defaults(func=func)

    for name, func, extra_help in (
        ("net-stats", cmd_net_stats, "edge lists -> strengths and average network"),
        ("window-corr", cmd_window_corr, "edge lists -> cross-window correlation"),
        ("indicators", cmd_indicators, "pair stats + multiplets -> per-window summary"),
    ):
        sub = subs.add_parser(name, help=extra_help)
        _add_common(sub)
        sub.set_defaults(func=func)

    sub = subs.add_parser("run", help="full pipeline with manifest and resume")
    sub.add_argument("--input", help="directory of TICKER<fiat>.csv trade files")
    sub.add_argument("--fiat", help="fiat selector, e.g. USD (default)")
    sub.add_argument("--registry", help="ticker,class,first_day metadata CSV")
    sub.add_argument("--start", help="calendar start Monday, YYYY-MM-DD")
    sub.add_argument("--windows", type=int, help="number of weekly windows")
    _add_common(sub)
    sub.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        logger.error("invalid configuration: %s", err)
        return EXIT_CONFIG
    except InfoflowError as err:
        logger.error("%s", err)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
