"""Training loops: autoencoder pretraining and the three classifier
regimes, with seeded shuffling, periodic checkpointing, and a
non-finite-loss abort path."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..config import RunConfig
from ..corpus.types import ImageTextPair, Split
from ..errors import EmptyDataset, MissingInitCheckpoint, NonFiniteLoss
from ..external_features import ExternalFeatureFile
from ..model.classifier import build_classifier, classification_loss_from_logits
from ..model.decoder import build_image_decoder, build_text_decoder, image_loss, text_loss
from ..model.encoder import build_article_encoder
from ..model.params import ParameterStore
from ..seeding import rng_for
from ..vocab import EmbeddingTable, Vocabulary
from .batches import batch_tensors, encode_dataset, minibatch_indices
from .checkpoint import Checkpoint, rebuild_modules, save_checkpoint

REGIME_PRETRAIN = "pretrain_ae"
REGIME_SCRATCH = "cl_scratch"
REGIME_FREEZE = "cl_freeze"
REGIME_TRANSFER = "cl_transfer"


def configure_execution(deterministic: bool, threads: int = 1) -> None:
    """Deterministic mode pins execution to one thread; bit-identical
    results require a fixed summation order."""
    torch.set_num_threads(1 if deterministic else max(1, threads))
    torch.use_deterministic_algorithms(deterministic)


def _training_pairs(pairs: list[ImageTextPair], labeled: bool) -> list[ImageTextPair]:
    if labeled:
        selected = [p for p in pairs if p.split == Split.TRAIN and p.label is not None]
        if not selected:
            selected = [p for p in pairs if p.label is not None]
    else:
        selected = [p for p in pairs if p.split != Split.TEST]
    return selected


def _make_snapshot(modules, table, run_config, train_config, iteration, history, vocab):
    store = ParameterStore.from_modules(modules, extras={"embeddings.table": table})
    return Checkpoint(
        params=store.detached_copy(),
        run_config=run_config,
        train_config=train_config,
        iteration=iteration,
        history=list(history),
        vocab=vocab,
    )


def _abort_nonfinite(loss_value, iteration, snapshot_fn, out_dir):
    if out_dir is not None:
        save_checkpoint(snapshot_fn(), Path(out_dir) / "diagnostic")
    raise NonFiniteLoss(f"non-finite loss {loss_value} at iteration {iteration}")


def _external_lookup(run_config: RunConfig):
    if run_config.backbone != "external_features":
        return None
    if not run_config.external_features_path:
        raise MissingInitCheckpoint(
            "backbone external_features requires external_features_path"
        )
    return ExternalFeatureFile.open(run_config.external_features_path)


def _external_batch(feature_file, pair_ids, indices):
    rows = [feature_file.get(pair_ids[i]) for i in indices]
    return torch.from_numpy(np.stack(rows).astype(np.float32))


def pretrain_autoencoder(
    pairs: list[ImageTextPair],
    run_config: RunConfig,
    vocab: Vocabulary,
    embeddings: EmbeddingTable,
    out_dir: str | Path | None = None,
) -> Checkpoint:
    """Minimize w_img * image MSE + w_txt * text cosine loss."""
    cfg = run_config.train_config(REGIME_PRETRAIN, max_iterations=run_config.max_iterations)
    configure_execution(cfg.deterministic, run_config.threads)
    train_pairs = _training_pairs(pairs, labeled=False)
    if not train_pairs:
        raise EmptyDataset("no pairs available for autoencoder pretraining")

    dataset = encode_dataset(train_pairs, vocab, run_config.encoder_config())
    table = torch.from_numpy(embeddings.vectors.copy())
    encoder = build_article_encoder(
        run_config.encoder_config(), rng_for(cfg.seed, "init/encoder")
    )
    image_decoder = build_image_decoder(
        run_config.decoder_config(), rng_for(cfg.seed, "init/image_decoder")
    )
    text_decoder = build_text_decoder(
        run_config.decoder_config(), rng_for(cfg.seed, "init/text_decoder")
    )
    modules: dict[str, nn.Module] = {
        "encoder": encoder,
        "image_decoder": image_decoder,
        "text_decoder": text_decoder,
    }
    feature_file = _external_lookup(run_config)

    trainable = [p for m in modules.values() for p in m.parameters()]
    optimizer = torch.optim.Adam(trainable, lr=cfg.learning_rate)
    shuffle_rng = rng_for(cfg.seed, "shuffle/pretrain_ae")
    history: list[dict] = []

    def snapshot(iteration):
        return _make_snapshot(modules, table, run_config, cfg, iteration, history, vocab)

    iteration = 0
    for indices in minibatch_indices(
        len(dataset), cfg.batch_size, cfg.max_iterations, shuffle_rng
    ):
        iteration += 1
        images, ids, mask = batch_tensors(dataset, indices)
        external = (
            _external_batch(feature_file, dataset.pair_ids, indices)
            if feature_file is not None
            else None
        )
        embedded = table[ids]
        z = encoder(images, embedded, mask, external=external)
        reconstruction = image_decoder(z)
        img_term = image_loss(images, reconstruction)
        predicted = text_decoder(z, n_sentences=ids.shape[1], n_words=ids.shape[2])
        txt_term = text_loss(predicted, ids, mask, table)
        loss = cfg.w_img * img_term + cfg.w_txt * txt_term
        if not torch.isfinite(loss):
            _abort_nonfinite(float(loss.detach()), iteration, lambda: snapshot(iteration), out_dir)
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(trainable, cfg.grad_clip)
        optimizer.step()
        if iteration % cfg.log_interval == 0 or iteration == cfg.max_iterations:
            history.append(
                {
                    "iteration": iteration,
                    "image_mse": float(img_term.detach()),
                    "text_cosine": float(txt_term.detach()),
                    "combined": float(loss.detach()),
                }
            )
        if out_dir is not None and iteration % cfg.checkpoint_interval == 0:
            save_checkpoint(snapshot(iteration), Path(out_dir) / f"iter-{iteration:06d}")

    final = snapshot(iteration)
    if out_dir is not None:
        save_checkpoint(final, Path(out_dir) / "final")
    return final


def _classifier_forward(encoder, head, table, images, ids, mask, external):
    embedded = table[ids]
    z = encoder(images, embedded, mask, external=external)
    return head(z)


def train_classifier(
    pairs: list[ImageTextPair],
    run_config: RunConfig,
    init: Checkpoint | None = None,
    vocab: Vocabulary | None = None,
    embeddings: EmbeddingTable | None = None,
    out_dir: str | Path | None = None,
    regime: str | None = None,
) -> Checkpoint:
    """Train the classification head under one of the three regimes.

    cl_scratch builds a fresh encoder; cl_freeze and cl_transfer start
    from `init` (a pretraining checkpoint). cl_freeze never applies
    gradients to the encoder, so its outputs are identical before and
    after training."""
    regime = regime or REGIME_SCRATCH
    cfg = run_config.train_config(regime, max_iterations=run_config.max_iterations)
    if cfg.regime not in (REGIME_SCRATCH, REGIME_FREEZE, REGIME_TRANSFER):
        raise ValueError(f"unknown classifier regime: {cfg.regime}")
    configure_execution(cfg.deterministic, run_config.threads)

    if cfg.regime in (REGIME_FREEZE, REGIME_TRANSFER):
        if init is None:
            raise MissingInitCheckpoint(f"regime {cfg.regime} requires an init checkpoint")
        init_modules, table = rebuild_modules(init, run_config)
        encoder = init_modules["encoder"]
        # The init checkpoint's vocabulary matches its embedding table;
        # prefer it over any caller-supplied one.
        vocab = init.vocab or vocab
    else:
        if vocab is None or embeddings is None:
            raise MissingInitCheckpoint("cl_scratch requires a vocabulary and embeddings")
        encoder = build_article_encoder(
            run_config.encoder_config(), rng_for(cfg.seed, "init/encoder/cl_scratch")
        )
        table = torch.from_numpy(embeddings.vectors.copy())
    if vocab is None:
        raise MissingInitCheckpoint("no vocabulary available (init checkpoint has none)")

    train_pairs = _training_pairs(pairs, labeled=True)
    if not train_pairs:
        raise EmptyDataset("no labeled training pairs")
    dataset = encode_dataset(train_pairs, vocab, run_config.encoder_config())
    labels_all = torch.from_numpy(dataset.labels)
    feature_file = _external_lookup(run_config)

    head = build_classifier(
        run_config.embedding_dim,
        rng_for(cfg.seed, f"init/classifier/{cfg.regime}"),
        hidden=run_config.classifier_hidden,
    )
    modules: dict[str, nn.Module] = {"encoder": encoder, "classifier": head}

    if cfg.regime == REGIME_FREEZE:
        # Encoder is fixed; compute every embedding once and train the
        # head on the cached values (identical math, no wasted passes).
        cached = []
        with torch.no_grad():
            for start in range(0, len(dataset), cfg.batch_size):
                indices = np.arange(start, min(start + cfg.batch_size, len(dataset)))
                images, ids, mask = batch_tensors(dataset, indices)
                external = (
                    _external_batch(feature_file, dataset.pair_ids, indices)
                    if feature_file is not None
                    else None
                )
                cached.append(encoder(images, table[ids], mask, external=external))
        embeddings_cache = torch.cat(cached, dim=0)
        trainable = list(head.parameters())
    else:
        embeddings_cache = None
        trainable = list(encoder.parameters()) + list(head.parameters())

    optimizer = torch.optim.Adam(trainable, lr=cfg.learning_rate)
    shuffle_rng = rng_for(cfg.seed, f"shuffle/{cfg.regime}")
    history: list[dict] = []

    def snapshot(iteration):
        return _make_snapshot(modules, table, run_config, cfg, iteration, history, vocab)

    iteration = 0
    for indices in minibatch_indices(
        len(dataset), cfg.batch_size, cfg.max_iterations, shuffle_rng
    ):
        iteration += 1
        labels = labels_all[indices]
        if embeddings_cache is not None:
            logits = head(embeddings_cache[indices])
        else:
            images, ids, mask = batch_tensors(dataset, indices)
            external = (
                _external_batch(feature_file, dataset.pair_ids, indices)
                if feature_file is not None
                else None
            )
            logits = _classifier_forward(encoder, head, table, images, ids, mask, external)
        loss = classification_loss_from_logits(logits, labels)
        if not torch.isfinite(loss):
            _abort_nonfinite(float(loss.detach()), iteration, lambda: snapshot(iteration), out_dir)
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(trainable, cfg.grad_clip)
        optimizer.step()
        if iteration % cfg.log_interval == 0 or iteration == cfg.max_iterations:
            batch_accuracy = float(
                (logits.detach().argmax(dim=-1) == labels).to(torch.float64).mean()
            )
            history.append(
                {
                    "iteration": iteration,
                    "classifier_loss": float(loss.detach()),
                    "accuracy": batch_accuracy,
                }
            )
        if out_dir is not None and iteration % cfg.checkpoint_interval == 0:
            save_checkpoint(snapshot(iteration), Path(out_dir) / f"iter-{iteration:06d}")

    final = snapshot(iteration)
    if out_dir is not None:
        save_checkpoint(final, Path(out_dir) / "final")
    return final
