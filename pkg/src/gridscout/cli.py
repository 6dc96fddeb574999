"""Command-line entry points: single-question runs and batch benchmarks.

Machine-readable output goes to stdout; logs go to stderr.  Exit codes:
0 success, 2 configuration error, 3 backend error, 4 unscorable response.
Config precedence: built-in defaults < --config file < flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from gridscout import bench as benchmod
from gridscout import cost as costmod
from gridscout import pipeline as pl
from gridscout.client import RemoteBackend, ServerEndpoint
from gridscout.posterior import AnswerSpace, UnscorableResponseError
from gridscout.synthetic import SyntheticBackend, SyntheticEpisode

log = logging.getLogger("gridscout")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_UNSCORABLE = 4

MANIFEST_SCHEMA_VERSION = 1
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


class ConfigError(Exception):
    pass


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise ConfigError(f"bad resolution {text!r}, expected WxH") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridscout", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file of pipeline config overrides")
        p.add_argument("--k", type=int, default=None, help="grid side (pool is K^2 frames)")
        p.add_argument("--gamma0", type=float, default=None, help="budget rule coefficient")
        p.add_argument("--mode", default=None, help="auto | fixed:M | monolithic | uniform")
        p.add_argument("--order", default=None, choices=["temporal", "importance"])
        p.add_argument("--collate", action="store_true", default=None, help="composite the focused pass into one tiled image")
        p.add_argument("--probe-res", default=None, metavar="WxH")
        p.add_argument("--focused-res", default=None, metavar="WxH")
        p.add_argument("--probe-input", default=None, choices=["per-frame-sequence", "tiled-collage"])
        p.add_argument("--selector-endpoint", default=None, metavar="URL")
        p.add_argument("--qa-endpoint", default=None, metavar="URL")
        p.add_argument("--selector-model", default="default")
        p.add_argument("--qa-model", default="default")
        p.add_argument("--cost-config", default="vlm_2b", help="cost preset name or JSON file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--parallel", type=int, default=None, metavar="N")
        p.add_argument("--out", default="out", metavar="DIR")

    run_p = sub.add_parser("run", help="run one question")
    run_p.add_argument("--manifest", required=True, help="run manifest JSON")
    add_common(run_p)

    bench_p = sub.add_parser("bench", help="evaluate strategies on an episode suite")
    bench_p.add_argument("--suite", required=True, help="suite JSON file or shipped suite name")
    bench_p.add_argument("--strategies", default="auto,monolithic", help="comma-separated strategy labels")
    add_common(bench_p)
    return parser


def _load_config(args, base: pl.PipelineConfig, manifest_cfg: dict | None = None) -> pl.PipelineConfig:
    cfg = base
    overrides: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        overrides.update(json.loads(path.read_text()))
    if manifest_cfg:
        overrides.update(manifest_cfg)

    flag_map = {
        "k": args.k,
        "gamma0": args.gamma0,
        "ordering": args.order,
        "collate": args.collate,
        "seed": args.seed,
        "parallelism": args.parallel,
        "probe_input_mode": args.probe_input,
    }
    if args.probe_res:
        flag_map["probe_resolution"] = _parse_resolution(args.probe_res)
    if args.focused_res:
        flag_map["focused_resolution"] = _parse_resolution(args.focused_res)
    if args.mode:
        mode, fixed_m = benchmod.parse_strategy(args.mode)
        flag_map["mode"] = mode
        flag_map["fixed_m"] = fixed_m
    overrides.update({k: v for k, v in flag_map.items() if v is not None})

    for key in ("probe_resolution", "focused_resolution", "collage_canvas"):
        if key in overrides and isinstance(overrides[key], list):
            overrides[key] = tuple(overrides[key])
    try:
        cfg = replace(cfg, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg


def _build_backend(endpoint_url: str | None, model: str, fallback_tag: str):
    if endpoint_url:
        return RemoteBackend(ServerEndpoint(base_url=endpoint_url, model=model))
    return SyntheticBackend(fallback_tag)


def _load_manifest(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"manifest not found: {path}")
    raw = json.loads(p.read_text())
    if raw.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ConfigError(f"unsupported manifest schema {raw.get('schema_version')}")
    return raw


def _item_from_manifest(raw: dict, manifest_path: str) -> pl.QuestionItem:
    base = Path(manifest_path).parent
    episode = None
    frame_files = None
    if "episode" in raw:
        episode = SyntheticEpisode.from_dict(raw["episode"])
    elif "episode_file" in raw:
        ep_path = (base / raw["episode_file"]).resolve()
        if not ep_path.is_file():
            raise ConfigError(f"episode file not found: {ep_path}")
        episode = SyntheticEpisode.from_dict(json.loads(ep_path.read_text()))
    elif "frames_dir" in raw:
        frames_dir = (base / raw["frames_dir"]).resolve()
        if not frames_dir.is_dir():
            raise ConfigError(f"frame directory not found: {frames_dir}")
        frame_files = sorted(
            str(p) for p in frames_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
        )
        if not frame_files:
            raise ConfigError(f"no image files in {frames_dir}")
    else:
        raise ConfigError("manifest needs one of: episode, episode_file, frames_dir")

    if episode is not None:
        labels = raw.get("answer_labels")
        space = AnswerSpace(tuple(labels)) if labels else AnswerSpace.letters(8)
        if episode.truth_label not in space.labels:
            raise ConfigError(f"episode truth {episode.truth_label!r} not in answer labels")
        return pl.QuestionItem(
            item_id=raw.get("item_id", "manifest"),
            question=raw.get("question", episode.question),
            answer_space=space,
            truth_label=raw.get("truth_label", episode.truth_label),
            episode=episode,
        )
    if "question" not in raw or "answer_labels" not in raw:
        raise ConfigError("image-frame manifests need question and answer_labels")
    return pl.QuestionItem(
        item_id=raw.get("item_id", "manifest"),
        question=raw["question"],
        answer_space=AnswerSpace(tuple(raw["answer_labels"])),
        truth_label=raw.get("truth_label"),
        frame_files=frame_files,
    )


def cmd_run(args) -> int:
    raw = _load_manifest(args.manifest)
    item = _item_from_manifest(raw, args.manifest)
    cfg = _load_config(args, pl.PipelineConfig(record_timing=True), raw.get("config"))
    if item.episode is not None and cfg.k != item.episode.k:
        cfg = replace(cfg, k=item.episode.k)
    preset = costmod.load_cost_preset(args.cost_config)

    selector = _build_backend(args.selector_endpoint, args.selector_model, "selector")
    qa = _build_backend(args.qa_endpoint, args.qa_model, "qa")
    if item.episode is None and (args.selector_endpoint is None or args.qa_endpoint is None):
        raise ConfigError("image-frame manifests need --selector-endpoint and --qa-endpoint")

    log.info("running item %s in mode %s (K=%d)", item.item_id, cfg.strategy_label(), cfg.k)
    trace = pl.run_question(cfg, item, selector, qa, preset)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    trace_path = outdir / f"trace_{item.item_id}.json"
    trace_path.write_text(json.dumps(trace.to_dict(), indent=2, sort_keys=True) + "\n")

    if trace.status != "ok":
        log.error("item failed: %s", trace.error)
        print(json.dumps({"status": "failed", "error": trace.error, "trace_file": str(trace_path)}))
        return EXIT_UNSCORABLE if trace.error["type"] == "UnscorableResponseError" else EXIT_BACKEND

    summary = {
        "status": "ok",
        "answer": trace.answer,
        "correct": trace.correct,
        "m_eff": trace.m_eff,
        "sigma": None if trace.stats is None else trace.stats.sigma,
        "total_flops": trace.cost.total_flops,
        "probe_flops": trace.cost.probe_flops,
        "focused_flops": trace.cost.focused_flops,
        "trace_file": str(trace_path),
    }
    print(json.dumps(summary))
    return EXIT_OK


def cmd_bench(args) -> int:
    suite_path = Path(args.suite)
    if not suite_path.is_file():
        try:
            suite_path = benchmod.shipped_suite_path(args.suite)
        except FileNotFoundError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        suite = benchmod.load_suite(suite_path)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad suite {suite_path}: {exc}") from exc

    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    if not strategies:
        raise ConfigError("no strategies given")
    for s in strategies:
        benchmod.parse_strategy(s)

    cfg = _load_config(args, pl.PipelineConfig(k=suite.k))
    if cfg.k != suite.k:
        raise ConfigError(f"--k {cfg.k} conflicts with suite K={suite.k}")
    preset = costmod.load_cost_preset(args.cost_config)
    selector = _build_backend(args.selector_endpoint, args.selector_model, "selector")
    qa = _build_backend(args.qa_endpoint, args.qa_model, "qa")

    items = suite.items()
    log.info("evaluating %d strategies on %d episodes", len(strategies), len(items))
    report, traces = benchmod.evaluate(
        strategies, items, cfg, preset, selector=selector, qa=qa, suite_name=suite.name
    )
    paths = benchmod.write_report_files(report, traces, args.out)
    print(
        json.dumps(
            {
                "status": "ok",
                "episodes": len(items),
                "strategies": {
                    label: {
                        "accuracy": report.strategies[label]["accuracy"],
                        "mean_flops": report.strategies[label]["mean_flops"],
                        "n_failed": report.strategies[label]["n_failed"],
                    }
                    for label in strategies
                },
                "report_file": str(paths["report"]),
            }
        )
    )
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_bench(args)
    except ConfigError as exc:
        log.error("%s", exc)
        print(json.dumps({"status": "config-error", "error": str(exc)}))
        return EXIT_CONFIG
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        print(json.dumps({"status": "config-error", "error": str(exc)}))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
