from .params import ParameterStore
from .encoder import (
    ArticleEncoder,
    ImageEncoder,
    TextEncoder,
    build_article_encoder,
    check_external_features,
    fuse,
)
from .decoder import (
    ImageDecoder,
    TextDecoder,
    build_image_decoder,
    build_text_decoder,
    image_loss,
    nearest_token,
    text_loss,
)
from .classifier import (
    AbstractnessClassifier,
    ClassProbabilities,
    build_classifier,
    classification_loss,
    classification_loss_from_logits,
    classify,
    predict,
)

__all__ = [
    "ParameterStore",
    "ArticleEncoder",
    "ImageEncoder",
    "TextEncoder",
    "build_article_encoder",
    "check_external_features",
    "fuse",
    "ImageDecoder",
    "TextDecoder",
    "build_image_decoder",
    "build_text_decoder",
    "image_loss",
    "nearest_token",
    "text_loss",
    "AbstractnessClassifier",
    "ClassProbabilities",
    "build_classifier",
    "classification_loss",
    "classification_loss_from_logits",
    "classify",
    "predict",
]
