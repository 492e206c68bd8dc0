"""Command-line driver for the reproducible experiments.

Every command reads one JSON config, writes only inside the output
directory, and finishes with a ``manifest.json`` listing what it wrote.
CSV numbers use fixed six-decimal formatting so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from . import __version__
from . import auit
from .baselines import run_baseline
from .config import RunConfig, load, resolve_pattern
from .grid import PATTERN_MAGIC, dump_pattern
from .seal import ConfigError, InvariantViolation, RunRecord, run
from .serial import csv_text

log = logging.getLogger("sealci")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 2, 3, 4


def _seal_job(args):
    seal_cfg, spec, mask, agent_count = args
    t0 = time.perf_counter()
    rec = run(seal_cfg, spec, mask, agent_count)
    return rec, time.perf_counter() - t0


def _baseline_job(args):
    algo, seal_cfg, spec, mask, agent_count, params = args
    t0 = time.perf_counter()
    rec = run_baseline(algo, seal_cfg, spec, mask, agent_count, params)
    return rec, time.perf_counter() - t0


def _map(fn: Callable, jobs: Sequence, workers: int) -> List:
    """Run ``fn`` over ``jobs``; results come back in job order regardless of ``workers``."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


class Output:
    """Collects files for one command and writes them, plus the manifest, at the end."""

    def __init__(self, out_dir: Path, cfg: RunConfig, experiment: str):
        self.dir = out_dir
        self.cfg = cfg
        self.experiment = experiment
        self.files = {}
        self.runs = []

    def add(self, name: str, text: str) -> str:
        self.files[name] = text
        return name

    def record(self, seed, files, wall):
        self.runs.append({"seed": seed, "files": list(files), "wall_clock_s": round(wall, 3)})

    def write(self) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.dir / name).write_text(text, encoding="utf-8", newline="\n")
        manifest = {
            "experiment": self.experiment,
            "config_hash": self.cfg.config_hash(),
            "tool_version": __version__,
            "seeds": self.cfg.seeds,
            "files": sorted(self.files),
            "runs": self.runs,
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def trace_csv(rec: RunRecord) -> str:
    return csv_text(("iteration", "similarity"), ((i + 1, s) for i, s in enumerate(rec.similarity)))


def cmd_seal_run(cfg: RunConfig, out: Output, base_dir: Path, workers: int) -> None:
    spec, mask = resolve_pattern(cfg, base_dir)
    jobs = [(cfg.seal.replace(seed=s), spec, mask, cfg.agent_count) for s in cfg.seeds]
    for seed, (rec, wall) in zip(cfg.seeds, _map(_seal_job, jobs, workers)):
        files = [out.add(f"seal_seed{seed}.csv", trace_csv(rec)),
                 out.add(f"seal_seed{seed}.frame", dump_pattern(mask, rec.final_positions.values()))]
        out.record(seed, files, wall)
        log.info("seed %d final similarity %.4f", seed, rec.similarity[-1] if rec.similarity else rec.initial_similarity)


def _final(rec: RunRecord) -> float:
    return rec.similarity[-1] if rec.similarity else rec.initial_similarity


def cmd_noise_sweep(cfg: RunConfig, out: Output, base_dir: Path, workers: int) -> None:
    spec, mask = resolve_pattern(cfg, base_dir)
    jobs = [(cfg.seal.replace(seed=s, noise_std=n0), spec, mask, cfg.agent_count)
            for n0 in cfg.noise_levels for s in cfg.seeds]
    results = iter(_map(_seal_job, jobs, workers))
    rows = []
    for n0 in cfg.noise_levels:
        finals = []
        for seed in cfg.seeds:
            rec, wall = next(results)
            finals.append(_final(rec))
            rows.append((float(n0), seed, finals[-1], 0))
            out.record(seed, [], wall)
        if finals:
            rows.append((float(n0), "median", float(statistics.median(finals)), 1))
            log.info("N0=%g median final similarity %.4f", n0, statistics.median(finals))
    out.add("noise_sweep.csv", csv_text(("N0", "seed", "final_similarity", "median_flag"), rows))


def cmd_baseline_compare(cfg: RunConfig, out: Output, base_dir: Path, workers: int) -> None:
    spec, mask = resolve_pattern(cfg, base_dir)
    if cfg.compare_at > cfg.seal.max_iterations:
        raise ConfigError("compare_at exceeds max_iterations")
    algos = ("SEAL",) + tuple(cfg.algos)
    seal_recs = _map(_seal_job, [(cfg.seal.replace(seed=s), spec, mask, cfg.agent_count)
                                 for s in cfg.seeds], workers)
    base_jobs = [(a, cfg.seal.replace(seed=s), spec, mask, cfg.agent_count, cfg.baseline)
                 for a in cfg.algos for s in cfg.seeds]
    base_recs = _map(_baseline_job, base_jobs, workers)
    records = iter(seal_recs + base_recs)
    rows, at = [], {}
    for algo in algos:
        for seed in cfg.seeds:
            rec, wall = next(records)
            rows.append((algo, seed, rec.at(cfg.compare_at), _final(rec)))
            at.setdefault(algo, []).append(rec.at(cfg.compare_at))
            out.record(seed, [], wall)
    out.add("baseline_compare.csv",
            csv_text(("algo", "seed", f"similarity_at_{cfg.compare_at}", "final_similarity"), rows))
    lines = [f"median similarity at iteration {cfg.compare_at}"]
    medians = {a: statistics.median(v) for a, v in at.items() if v}
    for a, m in medians.items():
        lines.append(f"{a}: {m:.6f}")
    if "SEAL" in medians:
        for a in cfg.algos:
            if a in medians:
                verdict = "yes" if medians["SEAL"] >= medians[a] else "no"
                lines.append(f"SEAL >= {a}: {verdict}")
    out.add("baseline_report.txt", "\n".join(lines) + "\n")


def cmd_auit_eval(cfg: RunConfig, out: Output, base_dir: Path, workers: int) -> None:
    ac = cfg.auit
    patterns = {}
    builtin = auit.reference_patterns()
    for pid in ac.patterns:
        if pid in builtin:
            patterns[pid] = builtin[pid]
        else:
            path = Path(pid) if Path(pid).is_absolute() else base_dir / pid
            try:
                patterns[pid] = auit.MovementPattern.parse(path.read_text(encoding="utf-8"), Path(pid).stem)
            except OSError as exc:
                raise ConfigError(f"cannot read movement pattern {pid}: {exc}") from exc
            except ValueError as exc:
                raise ConfigError(f"bad movement pattern {pid}: {exc}") from exc
    try:
        policy = auit.POLICIES[ac.policy]
        modes = [auit.CommMode(**m) for m in ac.comm_modes]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid auit settings: {exc}") from exc
    cells = [auit.ComplexityCell(pid, patterns[pid], w, h) for pid in ac.patterns for w, h in ac.sizes]
    rows = []
    for mode in modes:
        team = auit.Team.uniform(policy, ac.team_size, comm=mode, sense_radius=ac.sense_radius)
        for k, seed in enumerate(cfg.seeds):
            t0 = time.perf_counter()
            results = auit.evaluate_ci(team, ac.episodes, ac.steps, cells, seed, ac.checkpoint_every)
            # seed k owns episode numbers [k * episodes, (k + 1) * episodes)
            for pid, w, h, comm, ep, t, score in auit.score_rows(results, mode):
                rows.append((pid, w, h, comm, k * ac.episodes + ep, t, score))
            out.record(seed, [], time.perf_counter() - t0)
    out.add("auit_scores.csv", csv_text(auit.SCORE_HEADER, rows))


COMMANDS = {
    "seal-run": cmd_seal_run,
    "noise-sweep": cmd_noise_sweep,
    "baseline-compare": cmd_baseline_compare,
    "auit-eval": cmd_auit_eval,
}


def render_pgm(frame_text: str, scale: int = 1) -> str:
    """Convert an ``A``-overlay frame to an ASCII portable graymap."""
    lines = frame_text.rstrip("\n").split("\n")
    header = lines[0].split()
    if len(header) != 3 or header[0] != PATTERN_MAGIC:
        raise ConfigError("not a frame file")
    width, height = int(header[1]), int(header[2])
    shade = {"0": 255, "1": 170, "A": 0}
    rows = []
    for line in lines[1:1 + height]:
        if len(line) != width or set(line) - shade.keys():
            raise ConfigError("malformed frame row")
        row = " ".join(str(shade[c]) for c in line for _ in range(scale))
        rows.extend([row] * scale)
    return f"P2\n{width * scale} {height * scale}\n255\n" + "\n".join(rows) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--out", help="output directory (default: config output_dir)")
    common.add_argument("--seeds", type=int, help="number of seeds (overrides config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sealci", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    r = sub.add_parser("render", help="convert a frame file to a portable graymap")
    r.add_argument("frame")
    r.add_argument("--out", help="output directory (default: next to the frame)")
    r.add_argument("--scale", type=int, default=8)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "render":
            src = Path(args.frame)
            text = render_pgm(src.read_text(encoding="utf-8"), max(1, args.scale))
            dest_dir = Path(args.out) if args.out else src.parent
            dest_dir.mkdir(parents=True, exist_ok=True)
            (dest_dir / (src.stem + ".pgm")).write_text(text)
            return EXIT_OK

        cfg = load(args.config)
        if args.seeds is not None:
            cfg = cfg.replace(seed_count=args.seeds)
        if cfg.experiment != args.command:
            log.warning("config experiment %r run as %r", cfg.experiment, args.command)
        base_dir = Path(args.config).resolve().parent
        out = Output(Path(args.out or cfg.output_dir), cfg, args.command)
        COMMANDS[args.command](cfg, out, base_dir, max(1, args.jobs))
        out.write()
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
