"""Command-line entry point: ``slowfast-nav {run,sweep,gen-scenes,record-fixtures}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .errors import ConfigError, NavError
from .llm import DEFAULT_KEY_ENV, HttpChatClient, LLMBackend, RecordingClient, ReplayClient
from .reports import write_report, write_sweep, write_trace
from .runner import DEFAULT_TAUS, RunConfig, compute_metrics, dedupe_taus, oracle_factory, run_batch, sweep_tau
from .scenegen import GenParams, generate_suite
from .sim import load_episodes, load_scene, save_episodes, save_scene, validate_suite

log = logging.getLogger("slowfast_nav")

# flag -> RunConfig field
CONFIG_FLAGS = {
    "tau": float, "d_stop": float, "d_sub": float, "horizon": int, "t_max": int, "r_sense": float,
    "lam": float, "bound_form": str, "n_m_mode": str, "window": int, "seed": int, "max_retries": int,
    "v_tok_per_step": int, "v_time_per_step": float, "oracle_prompt_tokens": int,
    "oracle_completion_tokens": int, "oracle_seconds": float,
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    for name, typ in CONFIG_FLAGS.items():
        flag = "--lambda" if name == "lam" else "--nm-mode" if name == "n_m_mode" else "--" + name.replace("_", "-")
        kwargs = {"type": typ, "default": None, "dest": name}
        if name == "bound_form":
            kwargs["choices"] = ("literal", "negated_structure")
        if name == "n_m_mode":
            kwargs["choices"] = ("objects", "timesteps")
        p.add_argument(flag, **kwargs)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Built-in defaults, overridden by the config file, overridden by flags."""
    values = {}
    if getattr(args, "config", None) is not None:
        try:
            values.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise ConfigError(f"{args.config}: config file not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: line {exc.lineno}: {exc.msg}") from None
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"{args.config}: unknown config key(s) {sorted(unknown)}")
    for name in CONFIG_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return RunConfig(**values)


def _add_suite_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenes", nargs="+", type=Path, required=True, help="scene files or directories of them")
    p.add_argument("--episodes", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--planner", choices=("oracle", "llm", "replay"), default="oracle")
    p.add_argument("--fixtures", type=Path, help="fixture file for --planner replay")
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--base-url", default="https://api.openai.com/v1")
    p.add_argument("--key-env", default=DEFAULT_KEY_ENV, help="environment variable holding the API key")


def load_suite(scene_paths: Sequence[Path], episodes_path: Path):
    files: List[Path] = []
    for p in scene_paths:
        files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    scenes = {}
    for f in files:
        s = load_scene(f)
        scenes[s.id] = s
    episodes = load_episodes(episodes_path)
    validate_suite(scenes, episodes)
    return [(scenes[e.scene_id], e) for e in episodes]


def backend_factory(args, config: RunConfig):
    if args.planner == "oracle":
        return oracle_factory(config)
    if args.planner == "replay":
        if args.fixtures is None:
            raise ConfigError("--planner replay needs --fixtures")
        client = ReplayClient.from_file(args.fixtures)
    else:
        client = HttpChatClient(args.base_url, key_env=args.key_env)
    return lambda scene, episode: LLMBackend(client, args.model)


def cmd_run(args) -> int:
    config = build_config(args)
    pairs = load_suite(args.scenes, args.episodes)
    results = run_batch(pairs, config, backend_factory(args, config), args.jobs)
    rep = compute_metrics(results)
    if args.report:
        for p in write_report(args.report, config, results):
            log.info("wrote %s", p)
    if args.trace:
        log.info("wrote %s", write_trace(args.trace, results))
    print(" ".join(f"{k}={rep[k]:.4g}" for k in ("SR", "OSR", "SPL", "NE", "TL", "U-Tok", "T-Time")))
    return 0


def cmd_sweep(args) -> int:
    config = build_config(args)
    pairs = load_suite(args.scenes, args.episodes)
    taus = dedupe_taus(args.taus)
    for tau in taus:
        if not 0.0 <= tau <= 1.0:
            raise ConfigError(f"tau must be in [0, 1], got {tau}")
    factory = None if args.planner == "oracle" else backend_factory(args, config)
    rows = sweep_tau(pairs, config, taus, factory, args.jobs)
    if args.report:
        for p in write_sweep(args.report, config, rows):
            log.info("wrote %s", p)
    for r in rows:
        print(f"tau={r.tau:g} SR={r.report['SR']:.4g} OSR={r.report['OSR']:.4g} SPL={r.report['SPL']:.4g} "
              f"U-Tok={r.report['U-Tok']:.4g} T-Time={r.report['T-Time']:.4g} calls={r.report['calls']:.4g}")
    return 0


def cmd_gen_scenes(args) -> int:
    params = GenParams(rows=args.rows, cols=args.cols, spacing=args.spacing, deletion_prob=args.deletion_prob,
                       episodes_per_scene=args.episodes_per_scene, min_hops=args.min_hops)
    try:
        params.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.count < 0:
        raise ConfigError("--count must be non-negative")
    if args.count == 0:
        log.warning("count is 0; nothing generated")
        return 0
    suite = generate_suite(args.seed, args.count, params)
    scene_dir = args.out / "scenes"
    scene_dir.mkdir(parents=True, exist_ok=True)
    episodes = []
    for scene, eps in suite:
        save_scene(scene, scene_dir / f"{scene.id}.json")
        episodes.extend(eps)
    save_episodes(episodes, args.out / "episodes.json")
    print(f"wrote {len(suite)} scenes and {len(episodes)} episodes to {args.out}")
    return 0


def cmd_record_fixtures(args) -> int:
    config = build_config(args)
    pairs = load_suite(args.scenes, args.episodes)
    live = HttpChatClient(args.base_url, key_env=args.key_env)
    recorder = RecordingClient(live, args.out)
    results = run_batch(pairs, config, lambda s, e: LLMBackend(recorder, args.model), jobs=1)
    for r in results:
        if r.error:
            log.warning("episode %s: %s", r.episode_id, r.error)
    print(f"recorded {recorder.recorded} calls to {args.out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowfast-nav", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a batch of episodes")
    _add_suite_flags(p)
    _add_config_flags(p)
    p.add_argument("--report", type=Path, help="report path stem (.csv and .json are written)")
    p.add_argument("--trace", type=Path, help="per-step trace, one JSON record per line")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the batch at several confidence thresholds")
    _add_suite_flags(p)
    _add_config_flags(p)
    p.add_argument("--taus", type=float, nargs="+", default=list(DEFAULT_TAUS))
    p.add_argument("--report", type=Path)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-scenes", help="generate seeded synthetic scenes and episodes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--spacing", type=float, default=3.0)
    p.add_argument("--deletion-prob", type=float, default=0.2)
    p.add_argument("--episodes-per-scene", type=int, default=5)
    p.add_argument("--min-hops", type=int, default=4)
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("record-fixtures", help="record live planner calls to a fixture file")
    _add_suite_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_record_fixtures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, NavError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
