"""Command-line entry point: ``lprkit <command> [options]``.

Every command accepts ``--seed``, ``--config`` and ``--out``. Settings
resolve as built-in defaults, then the config file, then explicit flags.
Errors exit with status 1 and one JSON record on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .augment import AugmentConfig, apply_pipeline
from .config import check_keys, config_hash, load_config
from .dataset import (
    Category,
    ImageEntry,
    Manifest,
    atomic_write_text,
    box_record,
    leakage_safe_split,
    load_manifest,
    manifest_stats,
    save_manifest,
    select_training_view,
    select_validation_view,
)
from .errors import ArtifactIOError, ConfigError, LprError, ParseError, SchemaViolation
from .glyphs import BitmapGlyphs, load_font_directory
from .image import LabeledImage, load_image, save_png
from .metrics import Detection, GroundTruth, evaluate_detections, format_table, sequence_accuracy
from .parseq import (
    MockRecognizer,
    Permutation,
    T_MAX,
    Vocab,
    decode_ar,
    decode_ensemble,
    decode_nar,
    gen_permutations,
    refine_cloze,
)
from .plate_grammar import default_registry, load_registry
from .sched import SCHEDULE_KEYS, parse_config, preset_text, schedule_from_config
from .synth_render import generate_batch

COMMANDS = ("gen", "augment", "split", "eval-rec", "eval-det", "decode", "sched", "stats")
MAX_SEED = 2**64 - 1


# settings that never change artifact bytes
UNHASHED = {"input", "workers"}


class UsageError(LprError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Resolved settings for one invocation.

    ``params`` holds every setting that can influence the artifacts;
    ``inputs`` maps input names to file digests so the hash follows content,
    not location.
    """

    command: str
    seed: int
    params: dict[str, Any]
    out: str | None = None
    inputs: dict[str, str] = field(default_factory=dict)

    def digest(self) -> str:
        flat = {"command": self.command, "seed": self.seed}
        flat.update({f"param.{k}": v for k, v in self.params.items()
                     if k not in self.inputs and k not in UNHASHED})
        flat.update({f"input.{k}": v for k, v in self.inputs.items()})
        return config_hash(flat)

    def provenance(self, **extra) -> dict:
        prov = {"command": self.command, "seed": self.seed, "config_hash": self.digest(),
                "tool_version": __version__}
        prov.update(extra)
        return prov


# helpers

def _digest_file(path: str | Path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise ArtifactIOError(str(path), e.strerror or str(e)) from e


def _require_out(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise ConfigError("out", "this command writes files; pass --out")
    return Path(cfg.out)


def _write_json_lines(path: Path, records) -> None:
    atomic_write_text(path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))


def _save_png_atomic(pixels: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    save_png(pixels, tmp)
    os.replace(tmp, path)


def _image_root(manifest_path: Path, m: Manifest) -> Path:
    root = (m.provenance or {}).get("image_root", ".")
    return (manifest_path.parent / root).resolve()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _crop_record(image_id: str, img: LabeledImage, categories=(Category.LICENSE_PLATE,)):
    """Full-frame record for a recognition crop."""
    return box_record(image_id, img.width, img.height, (0, 0, img.width, img.height),
                      categories, img.label or None)


def _report(cfg: RunConfig, record: dict, table: str) -> None:
    record = dict(record, config_hash=cfg.digest(), seed=cfg.seed, command=cfg.command)
    line = json.dumps(record, sort_keys=True)
    if cfg.out:
        atomic_write_text(cfg.out, line + "\n")
    else:
        print(line)
    print(table)


# commands

def cmd_gen(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    p = cfg.params
    if p["count"] < 1:
        raise ConfigError("count", "must be >= 1")
    registry = load_registry(p["registry"]) if p["registry"] else default_registry()
    fonts = load_font_directory(p["fonts"]) if p["fonts"] else [BitmapGlyphs()]
    if not fonts:
        raise ArtifactIOError(p["fonts"], "no .ttf/.otf fonts found")
    samples = generate_batch(cfg.seed, p["count"], registry, fonts, workers=p["workers"])
    entries, prov_lines = [], []
    for i, s in enumerate(samples):
        name = f"images/{i:06d}.png"
        _save_png_atomic(s.pixels, out / name)
        entries.append(ImageEntry(name, s.width, s.height, (_crop_record(name, s),)))
        prov_lines.append({"image": name, **_json_safe(dict(s.provenance))})
    _write_json_lines(out / "samples.jsonl", prov_lines)
    save_manifest(Manifest(tuple(entries), cfg.provenance(image_root=".")), out / "manifest.jsonl")
    print(f"wrote {len(entries)} images to {out}")


def _recognition_crops(m: Manifest) -> list[tuple[ImageEntry, Any]]:
    """Entries holding exactly one annotation, and that one has text."""
    out = []
    for e in m.entries:
        if len(e.annotations) == 1 and e.annotations[0].text:
            out.append((e, e.annotations[0]))
    return out


def cmd_augment(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    p = cfg.params
    src = Path(p["input"])
    m = load_manifest(src)
    root = _image_root(src, m)
    aug = AugmentConfig.from_flat(p["augment"])
    crops = _recognition_crops(m)
    if not crops:
        raise SchemaViolation("input has recognition crops", f"{src} has no single-text entries")
    cache: dict[str, LabeledImage] = {}

    def labeled(k: int) -> LabeledImage:
        e, rec = crops[k]
        if e.image not in cache:
            cache[e.image] = LabeledImage(load_image(root / e.image), rec.text, {"source": e.image})
        return cache[e.image]

    def peer(rng):
        return labeled(int(rng.integers(len(crops))))

    entries, prov_lines = [], []
    for k, (e, rec) in enumerate(crops):
        for c in range(p["copies"]):
            rng = np.random.default_rng([cfg.seed, k, c])
            img = apply_pipeline(labeled(k), aug, rng, peer, is_plate=p["plates"])
            name = f"images/{k:06d}_{c}.png"
            _save_png_atomic(img.pixels, out / name)
            cats = rec.categories
            entries.append(ImageEntry(name, img.width, img.height, (_crop_record(name, img, cats),)))
            prov_lines.append({"image": name, **_json_safe(dict(img.provenance))})
    _write_json_lines(out / "samples.jsonl", prov_lines)
    save_manifest(Manifest(tuple(entries), cfg.provenance(image_root=".", augment=aug.to_flat())),
                  out / "manifest.jsonl")
    print(f"wrote {len(entries)} augmented images to {out} ({len(m.entries) - len(crops)} entries skipped)")


def cmd_split(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    src = Path(cfg.params["input"])
    m = load_manifest(src)
    train, val = leakage_safe_split(m, cfg.params["ratio"], cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    root = os.path.relpath(_image_root(src, m), out.resolve())
    for name, part in (("train", train), ("val", val)):
        prov = cfg.provenance(image_root=root, split=name, ratio=cfg.params["ratio"])
        save_manifest(part.with_provenance(prov), out / f"{name}.jsonl")
    print(f"train {len(train)} images, val {len(val)} images")


def _load_predictions(path: str) -> list[dict]:
    """JSON lines with at least ``image`` and ``text``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(path, e.strerror or str(e)) from e
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, lineno) from None
        if not isinstance(obj, dict) or "image" not in obj or "text" not in obj:
            raise SchemaViolation("prediction has image and text", raw[:80], lineno)
        out.append(obj)
    return out


def cmd_eval_rec(cfg: RunConfig) -> None:
    gt = select_validation_view(load_manifest(cfg.params["gt"]), "recognition")
    preds: dict[str, str] = {}
    for obj in _load_predictions(cfg.params["pred"]):
        preds[obj["image"]] = obj["text"] or ""
    by_image: dict[str, list[str]] = {}
    for r in gt:
        by_image.setdefault(r.image_id, []).append(r.text)
    pairs = []
    for image, texts in by_image.items():
        if len(texts) != 1:
            raise SchemaViolation("one recognition record per image", image)
        # a missing prediction counts as an empty string
        pairs.append((preds.get(image, ""), texts[0]))
    report = sequence_accuracy(pairs)
    rec = dict(report.to_json(), missing=sum(i not in preds for i in by_image))
    _report(cfg, rec, format_table(report))


def cmd_eval_det(cfg: RunConfig) -> None:
    gt_m = load_manifest(cfg.params["gt"])
    pred_m = load_manifest(cfg.params["pred"])
    gts = [GroundTruth(r.bbox, r.image_id) for r in select_training_view(gt_m)]
    dets = []
    for r in pred_m.records:
        if r.confidence is None:
            raise SchemaViolation("predictions carry confidence", r.image_id)
        dets.append(Detection(r.bbox, r.confidence, r.image_id))
    report = evaluate_detections(dets, gts)
    _report(cfg, report.to_json(), format_table(report))


def cmd_decode(cfg: RunConfig) -> None:
    p = cfg.params
    try:
        model = MockRecognizer.loads(Path(p["model"]).read_text(encoding="utf-8"))
    except OSError as e:
        raise ArtifactIOError(p["model"], e.strerror or str(e)) from e
    vocab = Vocab(p["charset"])
    if model.vocab_size != len(vocab):
        raise ConfigError("charset", f"model rows have {model.vocab_size} entries, vocabulary has {len(vocab)}")
    t = p["t_max"]
    mode = p["mode"]
    if mode == "ar":
        perm = Permutation(int(i) for i in p["perm"].split(",")) if p["perm"] else None
        res = decode_ar(model, None, perm, vocab, t)
    elif mode == "nar":
        res = decode_nar(model, None, vocab, t)
    elif mode == "refine":
        first = decode_nar(model, None, vocab, t)
        res = refine_cloze(model, None, first.seq, p["iters"])
        res.steps[:0] = first.steps
    elif mode == "ensemble":
        perms = gen_permutations(t, p["k"], np.random.default_rng(cfg.seed))
        res = decode_ensemble(model, None, perms, vocab, t)
    else:
        raise ConfigError("mode", f"unknown decode mode {mode!r}")
    records = [{"kind": "result", "mode": mode, "text": res.text, "ids": list(res.seq.ids),
                "config_hash": cfg.digest(), "seed": cfg.seed}]
    if p["trace"]:
        records += [{"kind": "step", "step": i, **r} for i, r in enumerate(res.trace_records())]
    lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if cfg.out:
        atomic_write_text(cfg.out, lines)
        print(res.text)
    else:
        sys.stdout.write(lines)


def cmd_sched(cfg: RunConfig) -> None:
    p = cfg.params
    values = parse_config(preset_text(p["preset"])) if p["preset"] else {}
    values.update(p["schedule"])
    preset = schedule_from_config(values)
    csv = "step,lr\n" + "".join(f"{s},{lr!r}\n" for s, lr in enumerate(preset.curve()))
    if cfg.out:
        atomic_write_text(cfg.out, csv)
    else:
        sys.stdout.write(csv)


def cmd_stats(cfg: RunConfig) -> None:
    m = load_manifest(cfg.params["input"])
    stats = manifest_stats(m).to_json()
    rows = [f"{'images':16}{stats['n_images']}", f"{'records':16}{stats['n_records']}"]
    rows += [f"{k:16}{v}" for k, v in stats["per_category"].items()]
    rows.append(f"{'multi_category':16}{stats['multi_category']}")
    _report(cfg, {"stats": stats}, "\n".join(rows))


# argument handling

@dataclass(frozen=True)
class Setting:
    default: Any
    kind: Callable[[str], Any] = str
    flag: str | None = None
    help: str = ""


def _bool(v: str) -> bool:
    s = str(v).strip().lower()
    if s not in {"true", "false", "1", "0", "yes", "no"}:
        raise ValueError(v)
    return s in {"true", "1", "yes"}


SETTINGS: dict[str, dict[str, Setting]] = {
    "gen": {
        "count": Setting(100, int, "--count", "number of samples"),
        "registry": Setting("", str, "--registry", "state-code registry (TSV); default is the bundled list"),
        "fonts": Setting("", str, "--fonts", "directory of TrueType fonts; default is the built-in bitmap font"),
        "workers": Setting(1, int, "--workers", "render threads; output does not depend on this"),
    },
    "augment": {
        "copies": Setting(1, int, "--copies", "augmented copies per source image"),
        "plates": Setting(True, _bool, "--plates", "source images are license plates (true/false)"),
    },
    "split": {
        "ratio": Setting(0.1, float, "--ratio", "fraction of plate groups sent to validation"),
    },
    "eval-rec": {
        "pred": Setting("", str, "--pred", "predictions, JSON lines with image and text"),
        "gt": Setting("", str, "--gt", "ground-truth manifest"),
    },
    "eval-det": {
        "pred": Setting("", str, "--pred", "prediction manifest (records carry confidence)"),
        "gt": Setting("", str, "--gt", "ground-truth manifest"),
    },
    "decode": {
        "model": Setting("", str, "--model", "mock recognizer table (JSON lines)"),
        "mode": Setting("ar", str, "--mode", "ar, nar, refine or ensemble"),
        "perm": Setting("", str, "--perm", "decoding order for ar, comma-separated 0-based positions"),
        "t_max": Setting(T_MAX, int, "--t-max", "maximum label length"),
        "iters": Setting(1, int, "--iters", "refinement iterations"),
        "k": Setting(6, int, "--k", "number of orders in the ensemble"),
        "charset": Setting(Vocab().charset, str, "--charset", "recognizer charset"),
        "trace": Setting(False, _bool, None),
    },
    "sched": {
        "preset": Setting("", str, "--preset", "detect or recognize"),
    },
    "stats": {},
}

POSITIONAL_INPUT = {"augment", "split", "stats"}
REQUIRED = {"eval-rec": ("pred", "gt"), "eval-det": ("pred", "gt"), "decode": ("model",)}
AUGMENT_KEYS = set(AugmentConfig().to_flat())

HANDLERS = {
    "gen": cmd_gen,
    "augment": cmd_augment,
    "split": cmd_split,
    "eval-rec": cmd_eval_rec,
    "eval-det": cmd_eval_det,
    "decode": cmd_decode,
    "sched": cmd_sched,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lprkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lprkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--seed", default=None, help="64-bit unsigned seed (default 0)")
        sp.add_argument("--config", default=None, help="flat key = value settings file")
        sp.add_argument("--out", default=None, help="output path")
        if name in POSITIONAL_INPUT:
            sp.add_argument("input", help="input manifest")
        for key, s in SETTINGS[name].items():
            if s.flag:
                sp.add_argument(s.flag, dest=key, default=None, help=s.help)
        if name == "decode":
            sp.add_argument("--trace", action="store_const", const="true", default=None,
                            help="emit per-step distributions")
        if name == "sched":
            for key in ("total_steps", "peak_lr", "start_lr", "end_lr", "peak_fraction"):
                sp.add_argument("--" + key.replace("_", "-"), dest="sched_" + key, default=None)
    return parser


def _convert(key: str, setting: Setting, raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    try:
        return setting.kind(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None


def resolve(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    settings = SETTINGS[cmd]
    file_values: dict[str, str] = load_config(args.config) if args.config else {}
    params: dict[str, Any] = {}
    extra_sections = {"augment": AUGMENT_KEYS, "sched": SCHEDULE_KEYS | {"name"}}.get(cmd, set())
    section: dict[str, str] = {}
    seed_raw = file_values.pop("seed", None)
    for key, raw in file_values.items():
        if key in settings:
            continue
        if key in extra_sections or (cmd == "sched" and key.startswith("recorded.")):
            section[key] = raw
        else:
            raise ConfigError(key, f"unknown key for '{cmd}'")
    for key, s in settings.items():
        raw = getattr(args, key, None)
        if raw is None:
            raw = file_values.get(key, s.default)
        params[key] = _convert(key, s, raw)
    if cmd == "augment":
        check_keys(section, AUGMENT_KEYS, "augmentation")
        AugmentConfig.from_flat(section)  # validate now so errors name the key
        params["augment"] = dict(sorted(section.items()))
    if cmd == "sched":
        for key in ("total_steps", "peak_lr", "start_lr", "end_lr", "peak_fraction"):
            v = getattr(args, "sched_" + key)
            if v is not None:
                section[key] = v
        if not params["preset"] and "total_steps" not in section:
            raise ConfigError("preset", "give --preset or the schedule keys")
        params["schedule"] = dict(sorted(section.items()))
    for key in REQUIRED.get(cmd, ()):
        if not params[key]:
            raise ConfigError(key, f"'{cmd}' needs --{key}")

    raw_seed = args.seed if args.seed is not None else (seed_raw if seed_raw is not None else "0")
    try:
        seed = int(raw_seed)
    except ValueError:
        raise ConfigError("seed", f"not an integer: {raw_seed!r}") from None
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")

    inputs = {}
    if cmd in POSITIONAL_INPUT:
        params["input"] = args.input
        inputs["input"] = _digest_file(args.input)
    for key in ("pred", "gt", "model", "registry"):
        if params.get(key):
            inputs[key] = _digest_file(params[key])
    if params.get("fonts"):
        fonts_dir = Path(params["fonts"])
        if not fonts_dir.is_dir():
            raise ArtifactIOError(str(fonts_dir), "not a directory")
        h = hashlib.sha256()
        for f in sorted(fonts_dir.iterdir()):
            if f.is_file():
                h.update(f.name.encode() + b"\0" + f.read_bytes())
        inputs["fonts"] = h.hexdigest()
    return RunConfig(cmd, seed, params, args.out, inputs)


def _error_record(exc: BaseException) -> dict:
    rec: dict[str, Any] = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("key", "path", "lineno", "invariant"):
        v = getattr(exc, attr, None)
        if v is not None:
            rec[attr] = v
    if isinstance(exc, OSError) and getattr(exc, "filename", None):
        rec.setdefault("path", str(exc.filename))
    return rec


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        run = resolve(args)
        HANDLERS[run.command](run)
    except (LprError, OSError, ValueError, KeyError) as exc:
        print(json.dumps(_error_record(exc), sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
