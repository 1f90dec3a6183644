"""Single entry point for every workflow.

Subcommands form a pipeline: generate -> dataset -> bench -> score -> sdpo.
Configuration precedence: command-line flags beat the config file, which
beats built-in defaults. Every subcommand accepts --json for a single
machine-readable summary document on stdout.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import bench as bench_mod
from . import pairs as pairs_mod
from .generate import DifficultyTier, GenConfig, generate
from .grid import maze_to_json
from .metrics import aggregate
from .parsing import parse_response
from .prompts import GLYPH_PACKS, render_prompt
from .selfcheck import run_selftest
from .tasks import DEFAULT_COUNTS, DatasetConfig, TaskInstance, build_dataset, load_instances

DEFAULT_CONFIG_PATH = "mazekit.json"

_BUILTIN_DEFAULTS = {
    "glyphs": "ascii",
    "segment_len": 3,
    "seed": 0,
    "out_dir": ".",
    "tc": DEFAULT_COUNTS["turnpoint"],
    "ru": DEFAULT_COUNTS["rule"],
    "sr": DEFAULT_COUNTS["structured"],
}


def _load_config(path: str | None) -> dict:
    candidate = Path(path) if path else Path(DEFAULT_CONFIG_PATH)
    if candidate.exists():
        with open(candidate, encoding="utf-8") as fh:
            return json.load(fh)
    if path:  # explicitly named file must exist
        raise SystemExit(f"config file not found: {path}")
    return {}


class Settings:
    """flags > config file > builtin defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = _load_config(getattr(args, "config", None))

    def get(self, key: str, flag_value=None):
        if flag_value is not None:
            return flag_value
        if key in self.file:
            return self.file[key]
        return _BUILTIN_DEFAULTS.get(key)


def _emit(args: argparse.Namespace, summary: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    else:
        for line in human_lines:
            print(line)


def _load_dataset_dir(dataset_dir: str, split: str | None = None) -> list[TaskInstance]:
    base = Path(dataset_dir)
    names = [split] if split else ["train", "val", "test"]
    instances: list[TaskInstance] = []
    for name in names:
        path = base / f"{name}.jsonl"
        if path.exists():
            instances.extend(load_instances(path))
    if not instances:
        raise SystemExit(f"no instances found under {dataset_dir} (split={split or 'any'})")
    return instances


def cmd_generate(args: argparse.Namespace, settings: Settings) -> int:
    seed = int(settings.get("seed", args.seed))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    master = random.Random(seed)
    written = 0
    with open(out, "w", encoding="utf-8") as fh:
        for _ in range(args.count):
            cfg = GenConfig(
                tier=DifficultyTier(args.tier),
                grid_side=args.grid_side,
                dead_end_count=args.dead_ends,
                misleading_count=args.misleading,
                seed=master.getrandbits(48),
            )
            fh.write(maze_to_json(generate(cfg)) + "\n")
            written += 1
    _emit(args, {"written": written, "out": str(out), "tier": args.tier, "seed": seed},
          [f"wrote {written} tier-{args.tier} mazes to {out}"])
    return 0


def cmd_dataset(args: argparse.Namespace, settings: Settings) -> int:
    cfg = DatasetConfig(
        turnpoint_count=int(settings.get("tc", args.tc)),
        rule_count=int(settings.get("ru", args.ru)),
        structured_count=int(settings.get("sr", args.sr)),
        seed=int(settings.get("seed", args.seed)),
        out_dir=settings.get("out_dir", args.out_dir),
    )
    manifest = build_dataset(cfg)
    _emit(args, manifest.to_dict(), [
        f"dataset written to {cfg.out_dir}",
        f"counts: {manifest.counts}",
        f"splits: {manifest.split_sizes}",
    ])
    return 0


def cmd_render(args: argparse.Namespace, settings: Settings) -> int:
    glyphs = GLYPH_PACKS[settings.get("glyphs", args.glyphs)]
    instances = _load_dataset_dir(args.dataset)
    match = [inst for inst in instances if inst.id == args.instance]
    if not match:
        raise SystemExit(f"instance id not found: {args.instance}")
    text = render_prompt(match[0], args.style, glyphs=glyphs)
    if args.json:
        print(json.dumps({"id": args.instance, "style": args.style, "prompt": text}))
    else:
        print(text, end="")
    return 0


def cmd_parse(args: argparse.Namespace, settings: Settings) -> int:
    glyphs = GLYPH_PACKS[settings.get("glyphs", None)]
    text = Path(args.infile).read_text(encoding="utf-8", errors="replace")
    parsed = parse_response(args.kind, text, glyphs=glyphs)
    doc = {
        "kind": parsed.kind,
        "trajectory": [d.value for d in parsed.trajectory] if parsed.trajectory is not None else None,
        "choice": parsed.choice,
        "diagnostics": parsed.diagnostics,
    }
    if parsed.session is not None:
        doc["session_steps"] = len(parsed.session.steps)
    print(json.dumps(doc, indent=None if args.json else 2))
    return 0


def cmd_score(args: argparse.Namespace, settings: Settings) -> int:
    instances = _load_dataset_dir(args.dataset, args.split)
    records = []
    with open(args.responses, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    rows = bench_mod.score_records(instances, records)
    report = aggregate(rows)
    out_csv = Path(args.out)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    from .metrics import report_csv, report_text

    out_csv.write_text(report_csv(report), encoding="utf-8")
    out_txt = out_csv.with_suffix(".txt")
    out_txt.write_text(report_text(report), encoding="utf-8")
    outputs = {"csv": str(out_csv), "txt": str(out_txt)}
    if not args.no_figures:
        from . import figures

        outputs["metrics_png"] = str(figures.save_metrics_figure(report, out_csv.with_suffix(".png")))
    pooled = {f"{k[0]}|all": v for k, v in report.aggregates.items() if k[1] is None}
    _emit(args, {"outputs": outputs, "aggregates": pooled, "rows": len(rows)},
          [f"scored {len(rows)} responses", *(f"{path}" for path in outputs.values())])
    return 0


def cmd_sdpo(args: argparse.Namespace, settings: Settings) -> int:
    glyphs = GLYPH_PACKS[settings.get("glyphs", args.glyphs)]
    length = int(settings.get("segment_len", args.segment_len))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.sdpo_command == "pairs":
        instances = _load_dataset_dir(args.dataset, args.split)
        responses: dict[str, object] = {}
        with open(args.responses, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                parsed = parse_response("route", record.get("raw_text", ""), glyphs=glyphs)
                responses[record["id"]] = parsed.trajectory
        records = pairs_mod.build_pairs_from_responses(instances, responses, length=length, glyphs=glyphs)
    elif args.sdpo_command == "synth":
        instances = _load_dataset_dir(args.dataset, args.split)
        kinds = pairs_mod.ERROR_KINDS if args.kinds == "all" else tuple(args.kinds.split(","))
        for kind in kinds:
            if kind not in pairs_mod.ERROR_KINDS:
                raise SystemExit(f"unknown error kind: {kind}")
        records = pairs_mod.build_synthetic_pairs(
            instances, kinds, args.per_maze, seed=int(settings.get("seed", args.seed)),
            length=length, glyphs=glyphs,
        )
    else:  # emit-sft
        instances = _load_dataset_dir(args.dataset, args.split)
        records = pairs_mod.emit_sft_records(instances, glyphs=glyphs)
    pairs_mod.write_jsonl(records, out)
    _emit(args, {"written": len(records), "out": str(out)}, [f"wrote {len(records)} records to {out}"])
    return 0


def cmd_bench(args: argparse.Namespace, settings: Settings) -> int:
    endpoint = bench_mod.EndpointConfig.from_file(args.endpoint)
    glyphs = GLYPH_PACKS[settings.get("glyphs", args.glyphs)]
    out_dir = Path(args.out)
    if args.pairs:
        records = []
        with open(args.pairs, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        means = bench_mod.evaluate_margins(
            records, endpoint, out_dir, seed=int(settings.get("seed", args.seed)),
            write_figures=not args.no_figures,
        )
        _emit(args, {"margins": means, "pairs": len(records), "out": str(out_dir)},
              [f"margins over {len(records)} pairs:"] + [f"  {k}: {v:+.4f}" for k, v in sorted(means.items())])
        return 0
    if not args.dataset:
        raise SystemExit("bench needs --dataset (or --pairs for margin mode)")
    instances = _load_dataset_dir(args.dataset, args.split)
    styles = tuple(s.strip() for s in args.styles.split(",") if s.strip())
    report = bench_mod.run_benchmark(
        instances, styles, endpoint, out_dir, glyphs=glyphs, write_figures=not args.no_figures
    )
    pooled = {f"{k[0]}|all": v for k, v in report.aggregates.items() if k[1] is None}
    _emit(args, {"aggregates": pooled, "instances": len(instances), "styles": list(styles), "out": str(out_dir)},
          [f"benchmarked {len(instances)} instances x {len(styles)} styles", f"reports under {out_dir}"])
    return 0


def cmd_report(args: argparse.Namespace, settings: Settings) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, str] = {}
    layouts = {part.strip() for part in args.layout.split(",") if part.strip()}
    unknown = layouts - {"table1", "table4", "margins"}
    if unknown:
        raise SystemExit(f"unknown layout(s): {sorted(unknown)}")
    if layouts & {"table1", "table4"}:
        if not (args.dataset and args.responses):
            raise SystemExit("table layouts need --dataset and --responses")
        instances = _load_dataset_dir(args.dataset)
        records = []
        with open(args.responses, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        report = aggregate(bench_mod.score_records(instances, records))
        from .metrics import cross_prompt_csv, cross_prompt_text, report_csv, report_text

        if "table1" in layouts:
            (out_dir / "report_table.csv").write_text(report_csv(report), encoding="utf-8")
            (out_dir / "report_table.txt").write_text(report_text(report), encoding="utf-8")
            outputs["table1"] = str(out_dir / "report_table.csv")
        if "table4" in layouts:
            (out_dir / "report_cross_prompt.csv").write_text(cross_prompt_csv(report), encoding="utf-8")
            (out_dir / "report_cross_prompt.txt").write_text(cross_prompt_text(report), encoding="utf-8")
            outputs["table4"] = str(out_dir / "report_cross_prompt.csv")
        if not args.no_figures:
            from . import figures

            outputs["metrics_png"] = str(figures.save_metrics_figure(report, out_dir / "report_metrics.png"))
            outputs["tiers_png"] = str(figures.save_tier_figure(report, out_dir / "report_tiers.png"))
    if "margins" in layouts:
        if not args.margins_file:
            raise SystemExit("margins layout needs --margins-file")
        sums: dict[str, list[float]] = {}
        with open(args.margins_file, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    row = json.loads(line)
                    sums.setdefault(row.get("error_kind", "unlabeled"), []).append(float(row["margin"]))
        means = {k: sum(v) / len(v) for k, v in sums.items()}
        lines = ["error_kind,mean_margin,pairs"] + [
            f"{k},{means[k]:.4f},{len(sums[k])}" for k in sorted(means)
        ]
        (out_dir / "margins.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs["margins"] = str(out_dir / "margins.csv")
        if not args.no_figures and means:
            from . import figures

            outputs["margins_png"] = str(figures.save_margin_figure(means, out_dir / "margins.png"))
    _emit(args, {"outputs": outputs}, [f"{name}: {path}" for name, path in outputs.items()])
    return 0


def cmd_selftest(args: argparse.Namespace, settings: Settings) -> int:
    results = run_selftest()
    ok = all(passed for _, passed, _ in results)
    if args.json:
        print(json.dumps({"ok": ok, "checks": [
            {"name": name, "passed": passed, "message": message} for name, passed, message in results
        ]}, indent=2))
    else:
        for name, passed, message in results:
            print(f"{'PASS' if passed else 'FAIL'} {name}" + (f"  ({message})" if message else ""))
        print("selftest:", "ok" if ok else "FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mazekit",
        description="Maze benchmark generation, scoring, and preference-pair tooling.",
    )
    parser.add_argument("--config", help=f"config file (default: ./{DEFAULT_CONFIG_PATH} if present)")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate calibrated mazes as JSONL")
    p.add_argument("--tier", type=int, required=True, choices=range(1, 13), metavar="K")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--grid-side", type=int, default=None)
    p.add_argument("--dead-ends", type=int, default=None)
    p.add_argument("--misleading", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("dataset", help="build the full QA dataset with splits")
    p.add_argument("--tc", type=int, default=None, help="turnpoint instance count")
    p.add_argument("--ru", type=int, default=None, help="rule instance count")
    p.add_argument("--sr", type=int, default=None, help="structured (route+next-step) count")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("render", help="render one instance's prompt")
    p.add_argument("--dataset", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--style", default="star", choices=("cot", "vot", "star"))
    p.add_argument("--glyphs", default=None, choices=tuple(GLYPH_PACKS))
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("parse", help="parse a raw model response")
    p.add_argument("--kind", required=True, choices=("route", "choice", "star"))
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("score", help="score a responses file against a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--responses", required=True)
    p.add_argument("--out", required=True, help="report CSV path (txt/png written alongside)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sdpo", help="preference pairs and SFT targets")
    sdpo_sub = p.add_subparsers(dest="sdpo_command", required=True)
    for name in ("pairs", "synth", "emit-sft"):
        q = sdpo_sub.add_parser(name)
        q.add_argument("--dataset", required=True)
        q.add_argument("--split", default=None)
        q.add_argument("--out", required=True)
        q.add_argument("--glyphs", default=None, choices=tuple(GLYPH_PACKS))
        q.add_argument("--L", dest="segment_len", type=int, default=None)
        q.add_argument("--seed", type=int, default=None)
        if name == "pairs":
            q.add_argument("--responses", required=True)
        if name == "synth":
            q.add_argument("--kinds", default="all")
            q.add_argument("--per-maze", type=int, default=1)
    p.set_defaults(func=cmd_sdpo)

    p = sub.add_parser("bench", help="run an endpoint over a split, or margin pairs")
    p.add_argument("--dataset")
    p.add_argument("--split", default="test")
    p.add_argument("--styles", default="cot,vot,star")
    p.add_argument("--endpoint", required=True, help="endpoint config JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--pairs", default=None, help="pairs JSONL: evaluate margins instead")
    p.add_argument("--glyphs", default=None, choices=tuple(GLYPH_PACKS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="re-render reports from stored outputs")
    p.add_argument("--layout", default="table1,table4")
    p.add_argument("--dataset")
    p.add_argument("--responses")
    p.add_argument("--margins-file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="run built-in oracle and round-trip checks")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = Settings(args)
    try:
        return args.func(args, settings)
    except SystemExit:
        raise
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
