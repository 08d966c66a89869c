"""``seld3d`` command line: simulate, features, augment, train, eval, codec.

Every option may also come from a flat ``key=value`` file given with
``--config`` (``#`` starts a comment, dashes in keys may be written as
underscores). Flags on the command line win over file values.
"""

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import augment, codec, features, metrics, scenegen, tensorstore, toynet, training
from .errors import SeldError
from .geom import direction_error_deg
from .wavio import read_wav, write_wav

log = logging.getLogger("seld3d")

MANIFEST = "manifest.txt"

# option defaults per subcommand; options are parsed with default None so a
# config file value can be told apart from an untouched flag
DEFAULTS = {
    "simulate": dict(n_clips=20, n_classes=3, n_events=4, noise_db=None),
    "features": dict(visual=None, visual_out=None),
    "augment": dict(transform=0, reflect=False, visual=None, image=None),
    "train": dict(epochs=200, batch_size=4, sed_threshold=0.5, peak_lr=5e-4,
                  no_attention=False, augment=False, widths="8,8,16,16", att_dim=64,
                  context_width=64, head_hidden=64, dilation=2),
    "eval": dict(n_classes=None, report=None),
    "codec": dict(n_frames=1000, n_classes=3),
}
REQUIRED = {"simulate": ("out", "seed"), "train": ("data", "out", "seed"),
            "augment": ("out",)}


def read_config(path):
    kv = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SeldError(f"{path}:{n}: expected key=value, got {line!r}")
            k, _, v = line.partition("=")
            kv[k.strip().replace("-", "_")] = v.strip()
    return kv


def _coerce(value, like):
    if not isinstance(value, str):
        return value
    if isinstance(like, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise SeldError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if value.lower() == "none":
        return None
    return value


def resolve(args):
    """Merge command-line flags over the config file over built-in defaults."""
    file_kv = read_config(args.config) if args.config else {}
    defaults = DEFAULTS.get(args.command, {})
    for key, val in vars(args).items():
        if key in ("command", "config", "func") or val is not None:
            continue
        if key in file_kv:
            like = defaults.get(key)
            if like is None and key in ("seed", "n_clips", "n_classes", "n_events", "transform"):
                like = 0
            elif like is None and key in ("noise_db", "sed_threshold"):
                like = 0.0
            setattr(args, key, _coerce(file_kv[key], like))
        elif key in defaults:
            setattr(args, key, defaults[key])
    for key in REQUIRED.get(args.command, ()):
        if getattr(args, key, None) is None:
            raise SeldError(f"{args.command}: --{key.replace('_', '-')} is required "
                            "(flag or config file)")
    return args


# ---------------------------------------------------------------------------
# dataset layout written by `simulate` and read by `train`

def clip_paths(root, name):
    return {"wav": os.path.join(root, f"{name}.wav"),
            "audio": os.path.join(root, f"{name}.audio.tns"),
            "visual": os.path.join(root, f"{name}.visual.tns"),
            "labels": os.path.join(root, f"{name}.csv"),
            "scene": os.path.join(root, f"{name}.scene.txt")}


def read_manifest(root):
    path = os.path.join(root, MANIFEST)
    if not os.path.exists(path):
        raise SeldError(f"{root}: no {MANIFEST}; run `seld3d simulate` first")
    meta, names = {}, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                for tok in line[1:].split():
                    k, _, v = tok.partition("=")
                    meta[k] = v
            elif line:
                names.append(os.path.splitext(line.split()[0])[0])
    return meta, names


def load_dataset(root):
    meta, names = read_manifest(root)
    if not names:
        raise SeldError(f"{root}: manifest lists no clips")
    n_classes = int(meta.get("n_classes", 3))
    audio, visual, labels = [], [], []
    for name in names:
        p = clip_paths(root, name)
        audio.append(tensorstore.load(p["audio"]))
        visual.append(tensorstore.load(p["visual"]))
        labels.append(codec.read_csv(p["labels"]))
    return training.Dataset(np.stack(audio), np.stack(visual), labels, n_classes), names


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    os.makedirs(args.out, exist_ok=True)
    lines = [f"# seed={args.seed} n_clips={args.n_clips} n_classes={args.n_classes} "
             f"n_events={args.n_events}"]
    for i in range(args.n_clips):
        name = f"clip_{i:04d}"
        spec = scenegen.random_scene(args.seed * 100003 + i, n_events=args.n_events,
                                     n_classes=args.n_classes, noise_db=args.noise_db)
        clip, vis, lab = scenegen.render(spec)
        p = clip_paths(args.out, name)
        write_wav(p["wav"], clip.samples, clip.sample_rate)
        tensorstore.save(features.audio_features(clip).astype(np.float32), p["audio"])
        tensorstore.save(vis.astype(np.float32), p["visual"])
        codec.write_csv(p["labels"], lab)
        scenegen.write_scene(p["scene"], spec)
        lines.append(" ".join(os.path.basename(p[k]) for k in ("wav", "audio", "visual", "labels", "scene")))
    with open(os.path.join(args.out, MANIFEST), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.n_clips} clips to {args.out}")
    return 0


def cmd_features(args):
    samples, rate = read_wav(args.input)
    stack = features.audio_features(features.FoaClip(samples, rate))
    tensorstore.save(stack.astype(np.float32), args.output)
    print(f"audio features {stack.shape[0]}x{stack.shape[1]}x{stack.shape[2]} -> {args.output}")
    if args.visual:
        if not args.visual_out:
            raise SeldError("--visual needs --visual-out")
        rep = features.repeat_visual(tensorstore.load(args.visual))
        tensorstore.save(rep, args.visual_out)
        print(f"visual features {rep.shape[0]}x{rep.shape[1]} -> {args.visual_out}")
    return 0


def cmd_augment(args):
    t = augment.SpatialTransform.from_id(args.transform, reflect=args.reflect)
    os.makedirs(args.out, exist_ok=True)
    samples, rate = read_wav(args.wav)
    write_wav(os.path.join(args.out, "audio.wav"), augment.acs_audio(samples, t), rate)
    codec.write_csv(os.path.join(args.out, "labels.csv"),
                    augment.acs_labels(codec.read_csv(args.labels), t))
    if args.visual:
        v = tensorstore.load(args.visual)
        tensorstore.save(augment.avps_visual_features(v, t), os.path.join(args.out, "visual.tns"))
    if args.image:
        img = augment.read_ppm(args.image)
        augment.write_ppm(os.path.join(args.out, "image.ppm"), augment.avps_frame(img, t))
    print(f"transform id={t.id} rotation={t.rotation} flip={int(t.flip)} "
          f"reflect={int(t.reflect)} -> {args.out}")
    return 0


def cmd_train(args):
    data, names = load_dataset(args.data)
    widths = tuple(int(w) for w in str(args.widths).split(","))
    cfg = toynet.ToyNetConfig(n_classes=data.n_classes, widths=widths, att_dim=args.att_dim,
                              context_width=args.context_width, head_hidden=args.head_hidden,
                              dilation=args.dilation, n_mels=data.audio.shape[-1],
                              use_attention=not args.no_attention, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    t0 = time.perf_counter()
    state = training.fit(cfg, data, epochs=args.epochs, batch_size=args.batch_size,
                         peak_lr=args.peak_lr, seed=args.seed, log_rows=rows,
                         use_augment=args.augment)
    elapsed = time.perf_counter() - t0
    toynet.save_checkpoint(os.path.join(args.out, "checkpoint"), state.params, cfg)
    training.write_log(os.path.join(args.out, "train_log.csv"), rows)

    sed, sce = training.predict(state.params, cfg, data.audio, data.visual)
    per_clip = training.decode_clips(sed, sce, args.sed_threshold)
    pred_dir = os.path.join(args.out, "predictions")
    os.makedirs(pred_dir, exist_ok=True)
    for name, frames in zip(names, per_clip):
        codec.write_csv(os.path.join(pred_dir, f"{name}.csv"), frames)
    scores = metrics.aggregate(training.flatten_clips(per_clip, data.n_frames),
                               training.flatten_clips(data.labels, data.n_frames), cfg.n_classes)
    metrics.write_report(scores, os.path.join(args.out, "scores.txt"),
                         os.path.join(args.out, "scores.csv"))
    print(f"trained {state.step} steps in {elapsed:.1f}s")
    print(scores.report())
    return 0


def cmd_eval(args):
    preds = codec.read_csv(args.pred)
    refs = codec.read_csv(args.ref)
    n_classes = args.n_classes
    if n_classes is None:
        ids = [e.class_id for fe in preds + refs for e in fe.entries]
        n_classes = max(ids) + 1 if ids else 1
    scores = metrics.aggregate(preds, refs, n_classes)
    print(scores.report())
    if args.report:
        metrics.write_report(scores, args.report + ".txt", args.report + ".csv")
    return 0


def cmd_codec(args):
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    C = args.n_classes
    mismatches = 0
    for f in range(args.n_frames):
        entries = []
        for c in range(C):
            if rng.random() < 0.5:
                continue
            v = rng.standard_normal(3)
            az = float(np.degrees(np.arctan2(v[1], v[0])))
            el = float(np.degrees(np.arcsin(v[2] / np.linalg.norm(v))))
            entries.append(codec.Event(c, az, el, float(rng.uniform(0.1, 10.0))))
        fe = codec.FrameEvents(f, entries)
        sed, sce = codec.encode(fe, C)
        back = codec.decode(sed, sce, f)
        if len(back.entries) != len(entries):
            mismatches += 1
            continue
        for a, b in zip(entries, back.entries):
            if (a.class_id != b.class_id
                    or direction_error_deg(a.azimuth, a.elevation, b.azimuth, b.elevation) > 1e-9
                    or abs(a.distance - b.distance) / a.distance > 1e-12):
                mismatches += 1
                break
    print(f"codec round trip: {args.n_frames} frames, {mismatches} mismatches")
    return 0 if mismatches == 0 else 1


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="seld3d", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="key=value file; flags override its values")
        sp.set_defaults(func=func)
        return sp

    sp = command("simulate", cmd_simulate, "render a synthetic dataset")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-clips", type=int)
    sp.add_argument("--n-classes", type=int)
    sp.add_argument("--n-events", type=int)
    sp.add_argument("--noise-db", type=float)

    sp = command("features", cmd_features, "FOA wav -> 7-channel feature tensor")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--visual", help="(frames, 49) tensor to repeat to the audio frame rate")
    sp.add_argument("--visual-out")

    sp = command("augment", cmd_augment, "apply a spatial transform to a clip")
    sp.add_argument("wav")
    sp.add_argument("labels")
    sp.add_argument("--transform", type=int, help="canonical transform id 0-7")
    sp.add_argument("--reflect", action="store_const", const=True)
    sp.add_argument("--visual", help="(frames, 49) visual feature tensor")
    sp.add_argument("--image", help="equirectangular P6 image")
    sp.add_argument("--out")

    sp = command("train", cmd_train, "train the toy network on a simulated dataset")
    sp.add_argument("--data")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--peak-lr", type=float)
    sp.add_argument("--sed-threshold", type=float)
    sp.add_argument("--widths", help="four comma-separated stage widths")
    sp.add_argument("--att-dim", type=int)
    sp.add_argument("--context-width", type=int)
    sp.add_argument("--head-hidden", type=int)
    sp.add_argument("--dilation", type=int)
    sp.add_argument("--no-attention", action="store_const", const=True)
    sp.add_argument("--augment", action="store_const", const=True)

    sp = command("eval", cmd_eval, "score a prediction CSV against a reference CSV")
    sp.add_argument("pred")
    sp.add_argument("ref")
    sp.add_argument("--n-classes", type=int)
    sp.add_argument("--report", help="write <prefix>.txt and <prefix>.csv")

    sp = command("codec", cmd_codec, "encode/decode round trip on random frames")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-frames", type=int)
    sp.add_argument("--n-classes", type=int)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        resolve(args)
        return args.func(args)
    except (SeldError, OSError, ValueError, KeyError) as exc:
        print(f"seld3d {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
