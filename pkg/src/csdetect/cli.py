"""Command-line interface: ``csdetect {detect,sweep,analyze,synth}``.

Exit codes: 0 success, 2 input or validation error, 3 metric-domain error
(no EER crossing), 1 anything unexpected.
"""

import argparse
import contextlib
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

from ._io import atomic_write_text
from .decision import DecisionRule, FrameLabelSequence, decide, labels_from_alignment
from .exceptions import NoCrossingError, ValidationError
from .metrics import curve_to_csv, det_from_hypotheses, det_sweep, eer, logit_grid
from .posteriors import (
    DEFAULT_FRAME_PERIOD,
    LANGUAGES,
    PosteriorMatrix,
    PriorWeights,
    apply_language_prior,
    l1_normalize,
    load_posteriors,
    parse_inventory,
)
from .segmentation import (
    DEFAULT_EDGES,
    check_edges,
    count_switches,
    duration_histogram,
    frames_to_segments,
    label_dump,
    parse_ctm,
    write_ctm,
)
from .synth import config_from_mapping, parse_key_values, write_corpus

log = logging.getLogger("csdetect")

EXIT_OK, EXIT_UNEXPECTED, EXIT_INPUT, EXIT_METRIC = 0, 1, 2, 3

# Run-config keys whose values are paths, resolved against the config file's directory.
_PATH_KEYS = ("inventory", "input", "ref", "out")


class UsageError(ValidationError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _load_config(path):
    if path is None:
        return {}, None
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_key_values(text), path.parent


def _merge(args, config, base_dir, defaults):
    """Flags win over config values, config values win over defaults."""
    merged = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None and key in config:
            value = config[key]
            if key in _PATH_KEYS and base_dir is not None:
                value = [str(base_dir / v) for v in value] if isinstance(value, list) else str(base_dir / value)
        merged[key] = default if value is None else value
    return merged


def _require(cfg, *keys):
    for key in keys:
        if cfg.get(key) in (None, "", []):
            raise UsageError(f"--{key.replace('_', '-')} is required")


def _as_float(value, key):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: expected a number, got {value!r}") from None


def _as_bool(value):
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _parse_grid(value, w_sil):
    value = str(value).strip()
    if value.isdigit():
        n = int(value)
        if n < 1:
            raise UsageError("--grid: need at least one point")
        return logit_grid(n, w_sil=w_sil)
    path = Path(value)
    if not path.is_file():
        raise UsageError(f"--grid: {value!r} is neither a point count nor a file")
    values = [line.split("#", 1)[0].strip() for line in path.read_text(encoding="utf-8").splitlines()]
    try:
        return [PriorWeights(float(v), w_sil) for v in values if v]
    except ValueError as exc:
        raise UsageError(f"--grid {value}: {exc}") from None


# ---------------------------------------------------------------------------
# input helpers


def _files(path, suffix):
    path = Path(path)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise UsageError(f"{path}: no such file or directory")
    return sorted(p for p in path.iterdir() if p.is_file() and p.suffix == suffix)


def _read_matrices(path, inventory, frame_period=None):
    files = _files(path, ".fpm")
    if not files:
        raise UsageError(f"{path}: no .fpm files")
    matrices = []
    for f in files:
        m = load_posteriors(f, inventory)
        if frame_period is not None:
            m = PosteriorMatrix(m.frames, frame_period, m.utterance_id)
        matrices.append(m)
    _check_unique([m.utterance_id for m in matrices], path)
    return matrices


def _check_unique(ids, where):
    seen = set()
    for utt in ids:
        if utt in seen:
            raise UsageError(f"{where}: utterance {utt!r} appears twice")
        seen.add(utt)


def _read_ctms(path, language_names):
    files = _files(path, ".ctm")
    sequences = []
    for f in files:
        sequences.extend(parse_ctm(f, language_names))
    _check_unique([s.utterance_id for s in sequences], path)
    return sequences


def _n_frames_for(end, frame_period):
    return max(1, math.ceil(end / frame_period - 1e-6))


def _refs_for(matrices, ref_path, language_names):
    by_utt = {s.utterance_id: s for s in _read_ctms(ref_path, language_names)}
    refs = []
    for m in matrices:
        if m.utterance_id not in by_utt:
            raise UsageError(f"{ref_path}: no reference for utterance {m.utterance_id!r}")
        refs.append(labels_from_alignment(by_utt[m.utterance_id], m.frame_period, m.n_frames))
    return refs


@contextlib.contextmanager
def _staged(out_dir):
    """Build outputs in a scratch directory, then move them into ``out_dir``.

    On failure nothing reaches ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        yield tmp
        for src in sorted(p for p in tmp.rglob("*") if p.is_file()):
            dest = out_dir / src.relative_to(tmp)
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dest)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _dump_json(value):
    return json.dumps(value, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_detect(cfg):
    _require(cfg, "inventory", "input", "out")
    inventory = parse_inventory(Path(cfg["inventory"]))
    rule = DecisionRule.parse(cfg["rule"])
    if rule is DecisionRule.BASELINE_ALIGNMENT:
        raise UsageError("detect needs posterior input; use --rule max-language or max-phone")
    weights = PriorWeights(_as_float(cfg["w_l1"], "w_l1"), _as_float(cfg["w_sil"], "w_sil"))
    fp = None if cfg["frame_period"] is None else _as_float(cfg["frame_period"], "frame_period")
    matrices = _read_matrices(cfg["input"], inventory, fp)
    names = inventory.language_names
    dumps = []
    with _staged(cfg["out"]) as tmp:
        for m in matrices:
            m = apply_language_prior(l1_normalize(m), inventory, weights)
            labels = decide(m, inventory, rule)
            atomic_write_text(tmp / f"{m.utterance_id}.ctm", write_ctm(frames_to_segments(labels), names))
            dumps.append(label_dump(labels, names))
        atomic_write_text(tmp / "labels.txt", "".join(dumps))
    log.info("wrote %d hypothesis CTMs to %s", len(matrices), cfg["out"])
    return EXIT_OK


def _baseline_hypotheses(cfg, names, w_sil, frame_period):
    """Per-weight hypothesis CTMs: ``<w_l1>.ctm`` files or ``<w_l1>/`` directories."""
    root = Path(cfg["input"])
    if not root.is_dir():
        raise UsageError(f"{root}: baseline sweeps need a directory of per-weight CTMs")
    entries = []
    for p in sorted(root.iterdir()):
        stem = p.stem if p.is_file() else p.name
        if p.is_file() and p.suffix != ".ctm":
            continue
        try:
            w = float(stem)
        except ValueError:
            raise UsageError(f"{p}: name must be the L1 weight, e.g. 0.25.ctm") from None
        entries.append((PriorWeights(w, w_sil), _read_ctms(p, names)))
    if not entries:
        raise UsageError(f"{root}: no per-weight CTM files")
    refs = _read_ctms(cfg["ref"], names)
    if not refs:
        raise UsageError(f"{cfg['ref']}: no reference segments")
    ref_ids = {r.utterance_id for r in refs}
    ends = {r.utterance_id: r.end for r in refs}
    for _, hyps in entries:
        for h in hyps:
            if h.utterance_id not in ref_ids:
                raise UsageError(f"hypothesis utterance {h.utterance_id!r} has no reference")
            ends[h.utterance_id] = max(ends[h.utterance_id], h.end)
    totals = {u: _n_frames_for(e, frame_period) for u, e in ends.items()}
    ref_labels = [labels_from_alignment(r, frame_period, totals[r.utterance_id]) for r in refs]
    hyps_by_weight = []
    for weights, hyps in entries:
        by_utt = {h.utterance_id: h for h in hyps}
        labels = []
        for r in refs:
            u = r.utterance_id
            h = by_utt.get(u)
            segs = h if h is not None else []
            seq = labels_from_alignment(segs, frame_period, totals[u])
            labels.append(FrameLabelSequence(seq.labels, frame_period, u))
        hyps_by_weight.append((weights, labels))
    return hyps_by_weight, ref_labels


def cmd_sweep(cfg):
    _require(cfg, "inventory", "input", "ref", "out")
    inventory = parse_inventory(Path(cfg["inventory"]))
    names = inventory.language_names
    rule = DecisionRule.parse(cfg["rule"])
    w_sil = _as_float(cfg["w_sil"], "w_sil")
    pooling = cfg["pooling"]
    fp = None if cfg["frame_period"] is None else _as_float(cfg["frame_period"], "frame_period")
    if rule is DecisionRule.BASELINE_ALIGNMENT:
        hyps_by_weight, refs = _baseline_hypotheses(cfg, names, w_sil, fp or DEFAULT_FRAME_PERIOD)
        curve = det_from_hypotheses(hyps_by_weight, refs, rule, pooling)
    else:
        grid = _parse_grid(cfg["grid"], w_sil)
        matrices = _read_matrices(cfg["input"], inventory, fp)
        refs = _refs_for(matrices, cfg["ref"], names)
        curve = det_sweep(matrices, inventory, refs, rule, grid, pooling)

    with _staged(cfg["out"]) as tmp:
        atomic_write_text(tmp / f"det_{rule.value}.csv", curve_to_csv(curve))
        try:
            result = eer(curve)
        except NoCrossingError:
            result = None
        if result is not None:
            summary = {
                "rule": rule.value,
                "eer": result.eer,
                "w_at_eer": {
                    "w_l1": result.w_at_eer.w_l1,
                    "w_l2": result.w_at_eer.w_l2,
                    "w_sil": result.w_at_eer.w_sil,
                },
                "interpolated": result.interpolated,
                "points": len(curve),
                "pooling": pooling,
            }
            atomic_write_text(tmp / "eer.json", _dump_json(summary))
    if result is None:
        raise NoCrossingError(
            f"{rule.value}: miss rates never cross over w_l1 in "
            f"[{curve.w_l1[0]:.6f}, {curve.w_l1[-1]:.6f}]; DET curve written, widen the grid"
        )
    print(f"{rule.value}\tEER {100 * result.eer:.2f}%\tw_l1 {result.w_at_eer.w_l1:.6f}")
    return EXIT_OK


def _system_report(sequences, edges, names):
    sequences = [s.coalesce() for s in sequences]
    hist = duration_histogram(sequences, edges)
    per_utt = {s.utterance_id: count_switches(s).count for s in sequences}
    return {
        "utterances": len(sequences),
        "segments": sum(1 for s in sequences for seg in s if seg.cls in LANGUAGES),
        "switches": sum(per_utt.values()),
        "switches_per_utterance": dict(sorted(per_utt.items())),
        "histogram": {names[c]: [int(v) for v in hist.counts[c]] for c in LANGUAGES},
        "underflow": {names[c]: int(hist.underflow[c]) for c in LANGUAGES},
    }


def _render_text(report):
    edges = report["edges"]
    labels = [f"[{a:g},{b:g})" for a, b in zip(edges, edges[1:])] + [f">={edges[-1]:g}"]
    systems = report["systems"]
    width = max(len(s) for s in systems) + 2
    lines = ["Language switch counts", f"{'system':<{width}}{'utts':>6}{'segments':>10}{'switches':>10}"]
    for name, rep in systems.items():
        lines.append(f"{name:<{width}}{rep['utterances']:>6}{rep['segments']:>10}{rep['switches']:>10}")
    lines.append("")
    lines.append("Monolingual segment durations (s)")
    langs = list(next(iter(systems.values()))["histogram"])
    cols = [f"{name}/{lang}" for name in systems for lang in langs]
    colw = max(10, max(len(c) for c in cols) + 2)
    binw = max(len(b) for b in labels) + 2
    lines.append(f"{'bin':<{binw}}" + "".join(f"{c:>{colw}}" for c in cols))
    for i, label in enumerate(labels):
        row = [systems[name]["histogram"][lang][i] for name in systems for lang in langs]
        lines.append(f"{label:<{binw}}" + "".join(f"{v:>{colw}}" for v in row))
    return "\n".join(lines) + "\n"


def _parse_systems(inputs):
    systems = []
    for item in inputs:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).name or item, item
        systems.append((name, path))
    _check_unique([n for n, _ in systems], "--input")
    return systems


def cmd_analyze(cfg):
    _require(cfg, "inventory", "input", "ref", "out")
    inventory = parse_inventory(Path(cfg["inventory"]))
    names = inventory.language_names
    edges = check_edges(_parse_edges(cfg["edges"]))
    inputs = cfg["input"] if isinstance(cfg["input"], list) else [cfg["input"]]
    systems = {}
    for name, path in _parse_systems(inputs):
        if name == "reference":
            raise UsageError("'reference' is reserved for the --ref system")
        sequences = _read_ctms(path, names)
        if not sequences:
            raise UsageError(f"{path}: no hypothesis segments")
        systems[name] = _system_report(sequences, edges, names)
    refs = _read_ctms(cfg["ref"], names)
    if not refs:
        raise UsageError(f"{cfg['ref']}: no reference segments")
    report = {"edges": list(edges), "systems": {"reference": _system_report(refs, edges, names), **systems}}
    with _staged(cfg["out"]) as tmp:
        atomic_write_text(tmp / "report.json", _dump_json(report))
        atomic_write_text(tmp / "report.txt", _render_text(report))
    sys.stdout.write(_render_text(report))
    return EXIT_OK


def _parse_edges(value):
    if value is None:
        return DEFAULT_EDGES
    if isinstance(value, (list, tuple)):
        return value
    try:
        return [float(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--edges: expected comma-separated seconds, got {value!r}") from None


def cmd_synth(cfg, synth_values, base_dir):
    _require(cfg, "out")
    values = dict(synth_values)
    if cfg.get("seed") is not None:
        values["seed"] = str(cfg["seed"])
    config = config_from_mapping(values, base_dir)
    out = Path(cfg["out"])
    if out.exists() and not out.is_dir():
        raise UsageError(f"{out}: exists and is not a directory")
    if out.is_dir() and any(out.iterdir()):
        if not _as_bool(cfg["force"]):
            raise UsageError(f"{out}: output directory is not empty (use --force to overwrite)")
        shutil.rmtree(out)
    with _staged(out) as tmp:
        write_corpus(config, tmp)
    log.info("wrote %d utterances to %s", config.n_utterances, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

_DEFAULTS = {
    "detect": dict(inventory=None, input=None, out=None, rule="max-language", w_l1=0.5, w_sil=1.0,
                   frame_period=None),
    "sweep": dict(inventory=None, input=None, ref=None, out=None, rule="max-language", grid="101",
                  w_sil=1.0, frame_period=None, pooling="pooled"),
    "analyze": dict(inventory=None, input=None, ref=None, out=None, edges=None),
    "synth": dict(out=None, seed=None, force=False),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="csdetect",
        description="Code-switching detection from phone posteriors, with DET/EER evaluation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *flags):
        p.add_argument("--config", help="flat key=value file; command-line flags win")
        if "inventory" in flags:
            p.add_argument("--inventory", help="phone inventory file")
        if "ref" in flags:
            p.add_argument("--ref", help="reference CTM file or directory")
        p.add_argument("--out", help="output directory")

    rules = [r.value for r in DecisionRule]

    p = sub.add_parser("detect", help="label frames and write one hypothesis CTM per utterance")
    common(p, "inventory")
    p.add_argument("--input", help="FPM file or directory of .fpm files")
    p.add_argument("--rule", choices=rules)
    p.add_argument("--w-l1", dest="w_l1", type=float, help="L1 prior weight in (0,1) [0.5]")
    p.add_argument("--w-sil", dest="w_sil", type=float, help="silence multiplier [1.0]")
    p.add_argument("--frame-period", dest="frame_period", type=float,
                   help="override the frame period of the FPM headers")

    p = sub.add_parser("sweep", help="sweep the language prior and report DET curve and EER")
    common(p, "inventory", "ref")
    p.add_argument("--input", help="FPM directory, or per-weight CTM directory for --rule baseline")
    p.add_argument("--rule", choices=rules)
    p.add_argument("--grid", help="number of logit-spaced weights or a file of w_l1 values [101]")
    p.add_argument("--w-sil", dest="w_sil", type=float)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.add_argument("--pooling", choices=["pooled", "mean"],
                   help="pool frames over utterances (default) or average per-utterance rates")

    p = sub.add_parser("analyze", help="switch counts and segment duration histograms")
    common(p, "inventory", "ref")
    p.add_argument("--input", action="append",
                   help="hypothesis CTM directory, optionally NAME=DIR; repeatable")
    p.add_argument("--edges", help="comma-separated histogram bin edges in seconds")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true", default=None,
                   help="replace a non-empty output directory")
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        config, base_dir = _load_config(args.config)
        defaults = _DEFAULTS[args.command]
        if args.command == "synth":
            run_keys = {k: v for k, v in config.items() if k in defaults and k != "seed"}
            synth_values = {k: v for k, v in config.items() if k not in run_keys}
            cfg = _merge(args, run_keys, base_dir, defaults)
            return cmd_synth(cfg, synth_values, base_dir)
        if args.command == "analyze" and isinstance(config.get("input"), str):
            config["input"] = [v.strip() for v in config["input"].split(",") if v.strip()]
        cfg = _merge(args, config, base_dir, defaults)
        return {"detect": cmd_detect, "sweep": cmd_sweep, "analyze": cmd_analyze}[args.command](cfg)
    except NoCrossingError as exc:
        print(f"csdetect: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except (ValidationError, OSError) as exc:
        print(f"csdetect: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        log.debug("unexpected failure", exc_info=True)
        print(f"csdetect: unexpected error: {exc!r}", file=sys.stderr)
        return EXIT_UNEXPECTED


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
