"""Command-line entry point wiring all pipeline stages.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from . import __version__
from .config import PROFILES, RunConfig, default_profile, load_config
from .corpus.articles import extract_pairs, parse_article
from .corpus.images import array_to_image, preprocess_image
from .corpus.store import load_dataset, save_dataset, split_dataset, update_manifest
from .corpus.synthetic import GENERATOR_VERSION, generate_synthetic_corpus
from .corpus.text import clean_text
from .corpus.types import AbsLabel, ImageTextPair, Split
from .errors import ConfigError, DataError, NumericalAbort
from .evaluation import (
    compare_regimes,
    evaluate,
    metrics,
    render_comparison_markdown,
    write_evaluation_outputs,
)
from .model.classifier import classify
from .model.decoder import nearest_token
from .seeding import derive_seed, rng_for
from .training.checkpoint import load_checkpoint, rebuild_modules, save_checkpoint
from .training.gradcheck import BLOCK_PROBES, check_block
from .training.trainer import (
    REGIME_FREEZE,
    REGIME_SCRATCH,
    REGIME_TRANSFER,
    configure_execution,
    pretrain_autoencoder,
    train_classifier,
)
from .vocab import (
    EmbeddingTable,
    Vocabulary,
    build_vocab,
    encode_tokens,
    init_random_embeddings,
    load_embeddings,
    load_vocab,
    save_vocab,
)

GRADCHECK_TOLERANCE = 1e-4

_REGIME_NAMES = {
    "scratch": REGIME_SCRATCH,
    "freeze": REGIME_FREEZE,
    "transfer": REGIME_TRANSFER,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="flat key=value config file")
    parser.add_argument(
        "--profile", choices=PROFILES, help="dimension profile (env ABSNET_PROFILE)"
    )
    parser.add_argument("--seed", type=int, help="root seed for all derived randomness")
    parser.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="single-threaded bit-reproducible execution",
    )
    parser.add_argument("--threads", type=int, help="worker thread cap")
    parser.add_argument(
        "--iterations", type=int, help="override max training iterations"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def _resolve_config(args) -> RunConfig:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise _UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.deterministic is not None:
        overrides["deterministic"] = args.deterministic
    if args.threads is not None:
        overrides["threads"] = args.threads
    if getattr(args, "iterations", None) is not None:
        overrides["max_iterations"] = args.iterations
    # String overrides from --set go through the same typed parser as
    # config-file values.
    from .config import _FIELD_TYPES, _parse_value  # noqa: PLC0415

    typed = {}
    for key, value in overrides.items():
        if isinstance(value, str):
            if key not in _FIELD_TYPES:
                from .errors import UnknownKey

                raise UnknownKey(f"unknown configuration key: {key}")
            typed[key] = _parse_value(key, value)
        else:
            typed[key] = value
    return load_config(args.config, profile=args.profile or default_profile(), overrides=typed)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="absnet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"absnet {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands: dict[str, argparse.ArgumentParser] = {}

    p = subparsers.add_parser("ingest", help="parse XML articles into a dataset")
    p.add_argument("xml_dir", help="directory of article XML files")
    p.add_argument("out_dataset", help="output dataset directory")
    _add_config_flags(p)
    commands["ingest"] = p

    p = subparsers.add_parser("synth", help="generate the labeled synthetic corpus")
    p.add_argument("out_dataset", help="output dataset directory")
    p.add_argument("--per-class", type=int, required=True, help="pairs per class")
    p.add_argument(
        "--test-per-class",
        type=int,
        default=0,
        help="also assign this many test pairs per class",
    )
    _add_config_flags(p)
    commands["synth"] = p

    p = subparsers.add_parser("vocab", help="build the dataset vocabulary")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--max", type=int, default=None, help="maximum vocabulary size")
    _add_config_flags(p)
    commands["vocab"] = p

    p = subparsers.add_parser("pretrain", help="pretrain the autoencoder")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--out", default="runs/pretrain", help="output checkpoint directory")
    _add_config_flags(p)
    commands["pretrain"] = p

    p = subparsers.add_parser("train", help="train the classifier")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument(
        "--regime", choices=sorted(_REGIME_NAMES), required=True, help="training regime"
    )
    p.add_argument("--init", help="pretraining checkpoint (freeze/transfer)")
    p.add_argument("--out", default="runs/train", help="output checkpoint directory")
    _add_config_flags(p)
    commands["train"] = p

    p = subparsers.add_parser("eval", help="evaluate classifier checkpoints")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument(
        "--ckpt",
        dest="ckpts",
        action="append",
        required=True,
        help="classifier checkpoint directory (repeat to compare regimes)",
    )
    p.add_argument("--out", default="runs/eval", help="report output directory")
    _add_config_flags(p)
    commands["eval"] = p

    p = subparsers.add_parser("predict", help="classify one image/text pair")
    p.add_argument("--ckpt", required=True, help="classifier checkpoint directory")
    p.add_argument("--image", required=True, help="image file")
    p.add_argument("--text", required=True, help="UTF-8 text file")
    _add_config_flags(p)
    commands["predict"] = p

    p = subparsers.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument(
        "--block",
        choices=sorted(BLOCK_PROBES),
        help="check one block (default: all)",
    )
    p.add_argument("--eps", type=float, default=1e-5, help="finite-difference step")
    _add_config_flags(p)
    commands["gradcheck"] = p

    p = subparsers.add_parser(
        "dump-recon", help="write original/reconstructed pairs for inspection"
    )
    p.add_argument("--ckpt", required=True, help="pretraining checkpoint directory")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--n", type=int, default=4, help="number of pairs to dump")
    p.add_argument("--out", default="runs/recon", help="report output directory")
    _add_config_flags(p)
    commands["dump-recon"] = p

    return parser, commands


def _load_vocab_for(dataset_dir: Path, run_config: RunConfig, pairs) -> Vocabulary:
    vocab_path = dataset_dir / "vocab.tsv"
    if vocab_path.exists():
        return load_vocab(vocab_path)
    corpus = (p.text for p in pairs if p.split != Split.TEST)
    return build_vocab(corpus, max_size=run_config.vocab_max)


def _load_embeddings_for(run_config: RunConfig, vocab: Vocabulary) -> EmbeddingTable:
    seed = derive_seed(run_config.seed, "embeddings")
    if run_config.embeddings_path:
        return load_embeddings(
            run_config.embeddings_path, vocab, dimension=run_config.word_embed_dim, seed=seed
        )
    return init_random_embeddings(vocab, dimension=run_config.word_embed_dim, seed=seed)


def _cmd_ingest(args) -> int:
    run_config = _resolve_config(args)
    xml_dir = Path(args.xml_dir)
    files = sorted(xml_dir.glob("*.xml"))
    if not files:
        raise DataError(f"no .xml files in {xml_dir}")
    pairs: list[ImageTextPair] = []
    for path in files:
        doc = parse_article(path.read_bytes())
        pairs.extend(extract_pairs(doc, size=run_config.image_size))
        for warning in doc.warnings:
            print(f"warning: {path.name}: {warning}", file=sys.stderr)
    save_dataset(pairs, args.out_dataset)
    print(f"ingested {len(files)} articles -> {len(pairs)} pairs in {args.out_dataset}")
    return 0


def _cmd_synth(args) -> int:
    run_config = _resolve_config(args)
    if args.per_class < 1:
        raise _UsageError("--per-class must be positive")
    pairs = generate_synthetic_corpus(
        args.per_class,
        derive_seed(run_config.seed, "synth"),
        size=run_config.image_size,
    )
    if args.test_per_class:
        split_dataset(pairs, args.test_per_class, derive_seed(run_config.seed, "split"))
    save_dataset(
        pairs, args.out_dataset, seed=run_config.seed, generator_version=GENERATOR_VERSION
    )
    print(f"generated {len(pairs)} pairs in {args.out_dataset}")
    return 0


def _cmd_vocab(args) -> int:
    run_config = _resolve_config(args)
    dataset_dir = Path(args.dataset)
    pairs = load_dataset(dataset_dir)
    max_size = args.max if args.max is not None else run_config.vocab_max
    vocab = build_vocab(
        (p.text for p in pairs if p.split != Split.TEST), max_size=max_size
    )
    save_vocab(vocab, dataset_dir / "vocab.tsv")
    update_manifest(
        dataset_dir,
        {"vocab": {"size": len(vocab.tokens), "coverage": vocab.coverage}},
    )
    print(
        f"vocabulary: {len(vocab.tokens)} tokens, coverage {vocab.coverage:.4f} "
        f"-> {dataset_dir / 'vocab.tsv'}"
    )
    return 0


def _cmd_pretrain(args) -> int:
    run_config = _resolve_config(args)
    dataset_dir = Path(args.dataset)
    pairs = load_dataset(dataset_dir)
    vocab = _load_vocab_for(dataset_dir, run_config, pairs)
    embeddings = _load_embeddings_for(run_config, vocab)
    ckpt = pretrain_autoencoder(pairs, run_config, vocab, embeddings, out_dir=args.out)
    last = ckpt.history[-1] if ckpt.history else {}
    print(
        f"pretrained {ckpt.iteration} iterations; "
        f"image_mse={last.get('image_mse', float('nan')):.4f} "
        f"text_cosine={last.get('text_cosine', float('nan')):.4f} -> {args.out}/final"
    )
    return 0


def _cmd_train(args) -> int:
    run_config = _resolve_config(args)
    regime = _REGIME_NAMES[args.regime]
    if regime in (REGIME_FREEZE, REGIME_TRANSFER) and not args.init:
        raise _UsageError(f"--init is required for --regime {args.regime}")
    dataset_dir = Path(args.dataset)
    pairs = load_dataset(dataset_dir)
    init = load_checkpoint(args.init) if args.init else None
    vocab = embeddings = None
    if regime == REGIME_SCRATCH:
        vocab = _load_vocab_for(dataset_dir, run_config, pairs)
        embeddings = _load_embeddings_for(run_config, vocab)
    ckpt = train_classifier(
        pairs,
        run_config,
        init=init,
        vocab=vocab,
        embeddings=embeddings,
        out_dir=args.out,
        regime=regime,
    )
    last = ckpt.history[-1] if ckpt.history else {}
    print(
        f"trained {regime} for {ckpt.iteration} iterations; "
        f"loss={last.get('classifier_loss', float('nan')):.4f} -> {args.out}/final"
    )
    return 0


def _cmd_eval(args) -> int:
    run_config = _resolve_config(args)
    configure_execution(run_config.deterministic, run_config.threads)
    pairs = load_dataset(args.dataset)
    out_root = Path(args.out)
    reports = []
    for ckpt_path in args.ckpts:
        ckpt = load_checkpoint(ckpt_path)
        cm, records = evaluate(ckpt, pairs)
        report = metrics(cm, regime=ckpt.train_config.regime)
        report_dir = out_root if len(args.ckpts) == 1 else out_root / report.regime
        write_evaluation_outputs(report_dir, report, records)
        print(f"{report.regime}: accuracy {report.accuracy_percent()}% -> {report_dir}")
        reports.append(report)
    if len(reports) > 1:
        comparison = compare_regimes(reports)
        out_root.mkdir(parents=True, exist_ok=True)
        with open(out_root / "comparison.json", "w", encoding="utf-8") as out:
            json.dump(comparison, out, indent=2, sort_keys=True)
            out.write("\n")
        (out_root / "comparison.md").write_text(
            render_comparison_markdown(comparison), encoding="utf-8"
        )
        print(f"comparison table -> {out_root / 'comparison.md'}")
    return 0


def _cmd_predict(args) -> int:
    run_config = _resolve_config(args)
    configure_execution(run_config.deterministic, run_config.threads)
    ckpt = load_checkpoint(args.ckpt)
    if ckpt.vocab is None:
        raise DataError(f"checkpoint {args.ckpt} has no vocabulary")
    modules, table = rebuild_modules(ckpt)
    if "classifier" not in modules:
        raise DataError(f"checkpoint {args.ckpt} has no classifier head")
    cfg = ckpt.run_config.encoder_config()
    image = preprocess_image(Path(args.image).read_bytes(), size=cfg.image_size)
    text = clean_text(Path(args.text).read_text(encoding="utf-8"))
    ids, mask = encode_tokens(text, ckpt.vocab, cfg.max_sentences, cfg.max_words)
    with torch.no_grad():
        images = torch.from_numpy(image.pixels.transpose(2, 0, 1)[None])
        ids_t = torch.from_numpy(ids[None])
        mask_t = torch.from_numpy(mask[None])
        z = modules["encoder"](images, table[ids_t], mask_t)
        probs = classify(z[0], modules["classifier"])
    record = {
        "pair_id": Path(args.image).name,
        "predicted_label": AbsLabel.from_index(
            int(np.argmax(probs.probabilities))
        ).value,
        "probabilities": list(probs.probabilities),
    }
    print(json.dumps(record, sort_keys=True))
    return 0


def _cmd_gradcheck(args) -> int:
    configure_execution(deterministic=True)
    blocks = [args.block] if args.block else sorted(BLOCK_PROBES)
    worst = 0.0
    for name in blocks:
        error = check_block(name, eps=args.eps)
        worst = max(worst, error)
        status = "ok" if error <= GRADCHECK_TOLERANCE else "FAIL"
        print(f"{name}: max relative error {error:.3e} [{status}]")
    if worst > GRADCHECK_TOLERANCE:
        raise NumericalAbort(f"gradient check failed: max relative error {worst:.3e}")
    return 0


def _cmd_dump_recon(args) -> int:
    run_config = _resolve_config(args)
    configure_execution(run_config.deterministic, run_config.threads)
    ckpt = load_checkpoint(args.ckpt)
    if ckpt.vocab is None:
        raise DataError(f"checkpoint {args.ckpt} has no vocabulary")
    modules, table = rebuild_modules(ckpt, with_decoders=True)
    pairs = sorted(load_dataset(args.data), key=lambda p: p.pair_id)[: args.n]
    if not pairs:
        raise DataError(f"dataset {args.data} is empty")
    from .training.batches import encode_dataset
    from .vocab import EmbeddingTable as _Table

    cfg = ckpt.run_config.encoder_config()
    dataset = encode_dataset(pairs, ckpt.vocab, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_np = _Table(vectors=table.numpy())
    with torch.no_grad():
        images = torch.from_numpy(dataset.images)
        ids = torch.from_numpy(dataset.token_ids)
        mask = torch.from_numpy(dataset.token_mask)
        z = modules["encoder"](images, table[ids], mask)
        recon = modules["image_decoder"](z).numpy()
        word_grid = modules["text_decoder"](z).numpy()
    for i, pair in enumerate(pairs):
        stem = f"{i:03d}"
        array_to_image(pair.image.pixels).save(out_dir / f"{stem}-original.png")
        array_to_image(recon[i].transpose(1, 2, 0)).save(out_dir / f"{stem}-reconstructed.png")
        decoded_sentences = []
        for s in range(word_grid.shape[1]):
            tokens = [
                nearest_token(word_grid[i, s, w], table_np, ckpt.vocab)
                for w in range(word_grid.shape[2])
            ]
            tokens = [t for t in tokens if t != "<pad>"]
            if tokens:
                decoded_sentences.append(" ".join(tokens))
        original = " / ".join(" ".join(s) for s in pair.text.sentences)
        (out_dir / f"{stem}-text.txt").write_text(
            f"original: {original}\ndecoded: {' / '.join(decoded_sentences)}\n",
            encoding="utf-8",
        )
    print(f"dumped {len(pairs)} reconstructions to {out_dir}")
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "synth": _cmd_synth,
    "vocab": _cmd_vocab,
    "pretrain": _cmd_pretrain,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "gradcheck": _cmd_gradcheck,
    "dump-recon": _cmd_dump_recon,
}


def run(argv: list[str]) -> int:
    parser, _ = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
