"""``quanv`` command line: gen-circuit, extract, serve, train, eval, visualize.

Exit codes: 0 success, 1 usage, 2 data error, 3 transport error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dsp
from .cache import Manifest, ManifestEntry, read_qnvf, write_qnvf
from .circuits import build_circuit
from .exceptions import (
    FormatError,
    InvalidArgumentError,
    QuanvError,
    RemoteError,
    StartupError,
    TransportError,
)
from .fedsvc import EncodeRequest, QuanvClient, Registry, serve
from .model import SoftmaxRegression, load_models, pool_features, save_models
from .noise import NoiseModel
from .quanv import QuanvConfig, normalize, quanv_encode
from .viz import feature_images, mel_image, write_pgm

log = logging.getLogger("quanv")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRANSPORT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_circuit_flags(p):
    p.add_argument("--kernel", type=int, choices=(1, 2, 3), default=2)
    p.add_argument("--seed", type=int, default=0, help="circuit generation seed")
    p.add_argument("--layout", choices=("auto", "fixed", "random"), default="auto")
    p.add_argument("--n-gates", type=int, default=None)


def _add_noise_flags(p):
    p.add_argument("--shots", type=int, default=None, help="sample readout with this many shots")
    p.add_argument("--noise-p", type=float, default=0.0, help="Pauli error probability per gate")
    p.add_argument("--readout-p", type=float, default=0.0, help="readout sign-flip probability")
    p.add_argument("--trajectories", type=int, default=100)


def build_parser():
    parser = _Parser(prog="quanv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("gen-circuit", help="write a circuit description as JSON")
    _add_circuit_flags(p)
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")

    p = sub.add_parser("extract", help="compute quanvolution features for a dataset")
    p.add_argument("dataset_dir", type=Path)
    p.add_argument("out_dir", type=Path)
    _add_circuit_flags(p)
    _add_noise_flags(p)
    p.add_argument("--remote", default=None, help="server base URL, e.g. http://host:8470")
    p.add_argument("--model-id", default=None, help="server model id (with --remote)")
    p.add_argument("--classes", default=",".join(dsp.DEFAULT_CLASSES),
                   help="comma-separated class directories")
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.add_argument("--manifest", default=None, help="manifest file name (default: <split>.json)")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("serve", help="run the extraction server")
    p.add_argument("--host", default=os.environ.get("QUANV_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("QUANV_PORT", "8470")))
    p.add_argument("--registry", type=Path, default=os.environ.get("QUANV_REGISTRY"))

    p = sub.add_parser("train", help="train the reference classifier")
    p.add_argument("manifest", type=Path)
    p.add_argument("--model-out", type=Path, required=True)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)

    p = sub.add_parser("eval", help="report accuracy of a trained model")
    p.add_argument("manifest", type=Path)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--json", dest="json_out", type=Path, default=None,
                   help="also write the report as JSON to this file")

    p = sub.add_parser("visualize", help="export PGM images of features")
    p.add_argument("input", type=Path, help=".qnvf feature file or .wav clip")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_circuit_flags(p)
    return parser


def _config_from_args(args):
    noise = None
    if getattr(args, "noise_p", 0.0) or getattr(args, "readout_p", 0.0):
        noise = NoiseModel(args.noise_p, args.readout_p, args.trajectories)
    return QuanvConfig(
        kernel=args.kernel,
        circuit_seed=args.seed,
        layout=args.layout,
        n_gates=args.n_gates,
        noise=noise,
        shots=getattr(args, "shots", None),
    )


# ---------------------------------------------------------------------------


def cmd_gen_circuit(args):
    circuit = build_circuit(args.seed, args.kernel, args.layout, args.n_gates)
    text = circuit.to_json(indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return EXIT_OK


def _read_list(path):
    if not path.exists():
        return None
    return {line.strip() for line in path.read_text().splitlines() if line.strip()}


def scan_dataset(root, classes, split="all"):
    """``(utterance_id, label, wav_path)`` in class-list then filename order.

    ``testing_list.txt`` / ``validation_list.txt`` at the dataset root, when
    present, decide the split: ``test`` keeps listed test files, ``train``
    drops everything listed in either file.
    """
    root = Path(root)
    if not root.is_dir():
        raise FormatError(f"dataset directory {root} does not exist")
    testing = _read_list(root / "testing_list.txt")
    validation = _read_list(root / "validation_list.txt") or set()
    items = []
    for label in classes:
        for wav in sorted((root / label).glob("*.wav")):
            rel = f"{label}/{wav.name}"
            if split == "test" and testing is not None and rel not in testing:
                continue
            if split == "train" and (rel in (testing or set()) or rel in validation):
                continue
            items.append((f"{label}/{wav.stem}", label, wav))
    return items


def _extract_one(wav, config, circuit, client, model_id):
    if client is None:
        mel = dsp.mel_spectrogram(dsp.load_wav(wav))
        return quanv_encode(normalize(mel), config, circuit)
    pcm = dsp.read_pcm16(wav)
    return client.encode(EncodeRequest(model_id, config.kernel, pcm16=pcm))


def cmd_extract(args):
    classes = [c for c in args.classes.split(",") if c]
    if not classes:
        raise UsageError("--classes must name at least one class")
    items = scan_dataset(args.dataset_dir, classes, args.split)
    config = _config_from_args(args)
    client = circuit = None
    if args.remote:
        if not args.model_id:
            raise UsageError("--remote requires --model-id")
        client = QuanvClient(args.remote)
    else:
        circuit = config.build_circuit()

    def work(item):
        try:
            return _extract_one(item[2], config, circuit, client, args.model_id)
        except FormatError as exc:
            log.warning("skipping %s: %s", item[2], exc)
            return None

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(it) for it in items]

    args.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(split=args.split, kernel=args.kernel, classes=classes)
    skipped = 0
    for (uid, label, _), fm in zip(items, results):
        if fm is None:
            skipped += 1
            continue
        rel = f"{uid}.qnvf"
        (args.out_dir / rel).parent.mkdir(parents=True, exist_ok=True)
        write_qnvf(args.out_dir / rel, fm)
        manifest.entries.append(ManifestEntry(uid, label, rel))
    if skipped:
        log.warning("skipped %d unreadable file(s)", skipped)
    if not manifest.entries:
        raise FormatError(f"no usable audio found under {args.dataset_dir}")
    name = args.manifest or f"{args.split}.json"
    manifest.save(args.out_dir / name)
    print(f"wrote {len(manifest.entries)} feature file(s) and {args.out_dir / name}"
          + (f" ({skipped} skipped)" if skipped else ""))
    return EXIT_OK


def cmd_serve(args):
    if args.registry is None:
        raise UsageError("--registry (or QUANV_REGISTRY) is required")
    registry = Registry.load(args.registry)
    logging.getLogger("quanvspeech").setLevel(logging.INFO)
    print(f"serving {len(registry)} model(s) on http://{args.host}:{args.port}", flush=True)
    serve(args.host, args.port, registry)
    return EXIT_OK


def _manifest_xy(manifest):
    fms, y = manifest.load_features()
    if not fms:
        raise FormatError(f"{manifest.path}: manifest has no entries")
    return np.stack([pool_features(fm) for fm in fms]), y


def cmd_train(args):
    manifest = Manifest.load(args.manifest)
    X, y = _manifest_xy(manifest)
    labels = np.asarray(manifest.classes)[y]
    models = []
    for seed in args.seeds:
        clf = SoftmaxRegression(learning_rate=args.lr, epochs=args.epochs,
                                batch_size=args.batch_size, random_state=seed,
                                classes=manifest.classes)
        clf.fit(X, labels)
        models.append(clf)
        print(f"seed {seed}: final loss {clf.loss_curve_[-1]:.4f}, "
              f"train acc {clf.score(X, labels):.4f}" if clf.loss_curve_ else f"seed {seed}: no epochs")
    save_models(args.model_out, models, manifest.classes, kernel=manifest.kernel)
    print(f"saved {len(models)} model(s) to {args.model_out}")
    return EXIT_OK


def accuracy_report(models, classes, X, labels):
    """Per-seed, per-class and overall accuracy with mean and population std."""
    per_seed = []
    per_class = {c: [] for c in classes}
    for m in models:
        pred = m.predict(X)
        per_seed.append(float(np.mean(pred == labels)))
        for c in classes:
            mask = labels == c
            if mask.any():
                per_class[c].append(float(np.mean(pred[mask] == c)))
    acc = np.asarray(per_seed)
    return {
        "n_samples": int(len(labels)),
        "seeds": [int(m.random_state) for m in models],
        "per_seed_accuracy": per_seed,
        "accuracy_mean": float(acc.mean()),
        "accuracy_std": float(acc.std()),
        "per_class_accuracy": {c: (float(np.mean(v)) if v else None) for c, v in per_class.items()},
    }


def format_report(report):
    lines = [f"samples: {report['n_samples']}"]
    for seed, acc in zip(report["seeds"], report["per_seed_accuracy"]):
        lines.append(f"seed {seed}: {100 * acc:.2f}%")
    for c, acc in report["per_class_accuracy"].items():
        lines.append(f"  {c:>10s}: " + ("n/a" if acc is None else f"{100 * acc:.2f}%"))
    lines.append(
        f"Acc: {100 * report['accuracy_mean']:.2f} ± {100 * report['accuracy_std']:.2f} %"
    )
    return "\n".join(lines)


def cmd_eval(args):
    models, classes, kernel = load_models(args.model)
    manifest = Manifest.load(args.manifest)
    if list(manifest.classes) != list(classes):
        raise FormatError(
            f"label mismatch: model classes {classes} vs manifest classes {manifest.classes}"
        )
    if kernel is not None and manifest.kernel != kernel:
        raise FormatError(f"model trained on kernel {kernel}, manifest has kernel {manifest.kernel}")
    X, y = _manifest_xy(manifest)
    report = accuracy_report(models, classes, X, np.asarray(classes)[y])
    print(format_report(report))
    if args.json_out is not None:
        args.json_out.write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_visualize(args):
    args.out.mkdir(parents=True, exist_ok=True)
    suffix = args.input.suffix.lower()
    if suffix == ".wav":
        mel = normalize(dsp.mel_spectrogram(dsp.load_wav(args.input)))
        config = _config_from_args(args)
        fm = quanv_encode(mel, config)
        write_pgm(args.out / "mel.pgm", mel_image(mel))
        written = 1
    elif suffix == ".qnvf":
        fm = read_qnvf(args.input)
        written = 0
    else:
        raise FormatError(f"{args.input}: expected a .wav or .qnvf file")
    for c, img in enumerate(feature_images(fm)):
        write_pgm(args.out / f"channel_{c}.pgm", img)
        written += 1
    print(f"wrote {written} image(s) to {args.out}")
    return EXIT_OK


COMMANDS = {
    "gen-circuit": cmd_gen_circuit,
    "extract": cmd_extract,
    "serve": cmd_serve,
    "train": cmd_train,
    "eval": cmd_eval,
    "visualize": cmd_visualize,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"quanv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TransportError, StartupError) as exc:
        print(f"quanv: transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except RemoteError as exc:
        print(f"quanv: server rejected request: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FormatError, InvalidArgumentError, QuanvError, OSError) as exc:
        print(f"quanv: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
