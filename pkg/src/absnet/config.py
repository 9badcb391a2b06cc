"""Run configuration: profiles, flat key=value config files, validation.

Precedence: profile defaults, then config-file keys, then explicit
overrides (CLI flags). The `desk` profile runs the full pipeline on
commodity hardware; `paper-scale` restores the original dimensions
(2,400-wide article embedding, 300x300 images, 25,000-token vocabulary).
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConstraintViolation, UnknownKey

PROFILE_ENV_VAR = "ABSNET_PROFILE"
PROFILES = ("desk", "paper-scale")

DESK_CNN_CHANNELS = (16, 32, 64, 128, 256)


@dataclass(frozen=True)
class EncoderConfig:
    image_size: int = 300
    image_feature_dim: int = 1536
    text_feature_dim: int = 864
    attention_dim: int = 256
    word_embed_dim: int = 300
    backbone: str = "desk_cnn"
    max_sentences: int = 30
    max_words: int = 50

    @property
    def gru_hidden(self) -> int:
        # Per-direction hidden size at both levels; 2 * gru_hidden states
        # concatenate to the text feature width.
        return self.text_feature_dim // 2

    @property
    def embedding_dim(self) -> int:
        return self.image_feature_dim + self.text_feature_dim


@dataclass(frozen=True)
class DecoderConfig:
    image_size: int = 300
    seed_side: int = 30
    seed_channels: int = 128
    conv_channels: tuple[int, ...] = (128, 64, 32, 3)
    upsample_factors: tuple[float, ...] = (2.5, 2.0, 2.0)
    sentence_hidden: int = 512
    word_hidden: int = 512
    word_embed_dim: int = 300
    embedding_dim: int = 2400
    max_sentences: int = 30
    max_words: int = 50

    def spatial_schedule(self) -> list[int]:
        """Spatial side lengths from the seed through every upsample stage."""
        sides = [self.seed_side]
        for factor in self.upsample_factors:
            nxt = sides[-1] * factor
            if abs(nxt - round(nxt)) > 1e-9:
                raise ConstraintViolation(
                    f"upsample factor {factor} gives non-integer side {nxt}"
                )
            sides.append(int(round(nxt)))
        return sides


@dataclass
class TrainConfig:
    regime: str = "pretrain_ae"
    batch_size: int = 15
    max_iterations: int = 1000
    learning_rate: float = 1e-4
    w_img: float = 1.0
    w_txt: float = 1.0
    seed: int = 0
    checkpoint_interval: int = 1000
    log_interval: int = 100
    deterministic: bool = True
    grad_clip: float = 5.0

    REGIMES = ("pretrain_ae", "cl_scratch", "cl_freeze", "cl_transfer")


_PROFILE_OVERRIDES = {
    "desk": dict(
        image_size=60,
        seed_side=6,
        d_img=256,
        d_txt=256,
        embedding_dim=512,
        attention_dim=64,
        word_embed_dim=64,
        sentence_hidden=128,
        word_hidden=128,
        seed_channels=32,
        decoder_channels=(32, 16, 8, 3),
        vocab_max=2000,
    ),
    "paper-scale": dict(
        image_size=300,
        seed_side=30,
        d_img=1536,
        d_txt=864,
        embedding_dim=2400,
        attention_dim=256,
        word_embed_dim=300,
        sentence_hidden=512,
        word_hidden=512,
        seed_channels=128,
        decoder_channels=(128, 64, 32, 3),
        vocab_max=25000,
    ),
}


@dataclass
class RunConfig:
    """Flat merged view of model, training, and path configuration."""

    profile: str = "desk"
    seed: int = 0
    deterministic: bool = True
    threads: int = 1

    image_size: int = 60
    seed_side: int = 6
    d_img: int = 256
    d_txt: int = 256
    embedding_dim: int = 512
    attention_dim: int = 64
    word_embed_dim: int = 64
    sentence_hidden: int = 128
    word_hidden: int = 128
    seed_channels: int = 32
    decoder_channels: tuple[int, ...] = (32, 16, 8, 3)
    upsample_factors: tuple[float, ...] = (2.5, 2.0, 2.0)
    classifier_hidden: tuple[int, ...] = (512, 512)
    backbone: str = "desk_cnn"

    vocab_max: int = 2000
    max_sentences: int = 30
    max_words: int = 50

    batch_size: int = 15
    learning_rate: float = 1e-4
    max_iterations: int = 1000
    w_img: float = 1.0
    w_txt: float = 1.0
    checkpoint_interval: int = 1000
    log_interval: int = 100
    grad_clip: float = 5.0

    embeddings_path: str = ""
    external_features_path: str = ""

    def validate(self) -> "RunConfig":
        if self.profile not in PROFILES:
            raise ConstraintViolation(
                f"profile must be one of {PROFILES}, got {self.profile!r}"
            )
        if self.d_img + self.d_txt != self.embedding_dim:
            raise ConstraintViolation(
                f"d_img + d_txt must equal embedding_dim: "
                f"{self.d_img} + {self.d_txt} != {self.embedding_dim}"
            )
        if self.d_txt % 2 != 0:
            raise ConstraintViolation(f"d_txt must be even, got {self.d_txt}")
        if self.decoder_channels[-1] != 3:
            raise ConstraintViolation(
                f"decoder channel schedule must end in 3, got {self.decoder_channels}"
            )
        if len(self.decoder_channels) != len(self.upsample_factors) + 1:
            raise ConstraintViolation(
                "decoder needs one conv channel per upsample stage plus the "
                f"final 3-channel conv: {self.decoder_channels} vs "
                f"{self.upsample_factors}"
            )
        sides = self.decoder_config().spatial_schedule()
        if sides[-1] != self.image_size:
            raise ConstraintViolation(
                f"upsample schedule reaches {sides[-1]}, image size is {self.image_size}"
            )
        if self.backbone not in ("desk_cnn", "external_features"):
            raise ConstraintViolation(f"unknown backbone {self.backbone!r}")
        positives = (
            "image_size seed_side d_img d_txt attention_dim word_embed_dim "
            "sentence_hidden word_hidden seed_channels vocab_max max_sentences "
            "max_words batch_size checkpoint_interval log_interval threads"
        ).split()
        for name in positives:
            if getattr(self, name) < 1:
                raise ConstraintViolation(f"{name} must be positive")
        if self.max_iterations < 0:
            raise ConstraintViolation("max_iterations must be non-negative")
        if self.learning_rate <= 0:
            raise ConstraintViolation("learning_rate must be positive")
        return self

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            image_size=self.image_size,
            image_feature_dim=self.d_img,
            text_feature_dim=self.d_txt,
            attention_dim=self.attention_dim,
            word_embed_dim=self.word_embed_dim,
            backbone=self.backbone,
            max_sentences=self.max_sentences,
            max_words=self.max_words,
        )

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(
            image_size=self.image_size,
            seed_side=self.seed_side,
            seed_channels=self.seed_channels,
            conv_channels=self.decoder_channels,
            upsample_factors=self.upsample_factors,
            sentence_hidden=self.sentence_hidden,
            word_hidden=self.word_hidden,
            word_embed_dim=self.word_embed_dim,
            embedding_dim=self.embedding_dim,
            max_sentences=self.max_sentences,
            max_words=self.max_words,
        )

    def train_config(self, regime: str, **overrides) -> TrainConfig:
        cfg = TrainConfig(
            regime=regime,
            batch_size=self.batch_size,
            max_iterations=self.max_iterations,
            learning_rate=self.learning_rate,
            w_img=self.w_img,
            w_txt=self.w_txt,
            seed=self.seed,
            checkpoint_interval=self.checkpoint_interval,
            log_interval=self.log_interval,
            deterministic=self.deterministic,
            grad_clip=self.grad_clip,
        )
        for key, value in overrides.items():
            setattr(cfg, key, value)
        return cfg

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in fields:
                raise UnknownKey(f"unknown configuration key: {key}")
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str):
    declared = _FIELD_TYPES[key]
    raw = raw.strip()
    if declared == "int":
        return int(raw)
    if declared == "float":
        return float(raw)
    if declared == "bool":
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConstraintViolation(f"{key}: expected a boolean, got {raw!r}")
    if declared.startswith("tuple"):
        element = float if "float" in declared else int
        return tuple(element(part) for part in raw.split(",") if part.strip())
    return raw


def default_profile() -> str:
    return os.environ.get(PROFILE_ENV_VAR, "desk")


def make_run_config(profile: str | None = None, **overrides) -> RunConfig:
    """Profile defaults plus keyword overrides."""
    profile = profile or default_profile()
    if profile not in _PROFILE_OVERRIDES:
        raise ConstraintViolation(f"profile must be one of {PROFILES}, got {profile!r}")
    merged = dict(_PROFILE_OVERRIDES[profile], profile=profile)
    merged.update(overrides)
    return RunConfig.from_dict(merged).validate()


def read_config_file(path: str | Path) -> dict:
    """Parse a flat `key = value` file into typed values."""
    values: dict = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise UnknownKey(f"{path}:{line_no}: expected 'key = value'")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in _FIELD_TYPES:
                raise UnknownKey(f"{path}:{line_no}: unknown configuration key: {key}")
            values[key] = _parse_value(key, raw)
    return values


def load_config(
    path: str | Path | None,
    profile: str | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Merge profile defaults, config-file keys, and explicit overrides."""
    file_values = read_config_file(path) if path else {}
    overrides = dict(overrides or {})
    chosen_profile = (
        overrides.pop("profile", None) or file_values.pop("profile", None) or profile
    )
    merged = dict(file_values)
    merged.update(overrides)
    return make_run_config(chosen_profile, **merged)
