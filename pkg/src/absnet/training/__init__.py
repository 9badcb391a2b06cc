from .batches import EncodedDataset, encode_dataset, real_extents
from .checkpoint import Checkpoint, load_checkpoint, rebuild_modules, save_checkpoint
from .gradcheck import BLOCK_PROBES, check_block, gradient_check
from .trainer import pretrain_autoencoder, train_classifier

__all__ = [
    "EncodedDataset",
    "encode_dataset",
    "real_extents",
    "Checkpoint",
    "load_checkpoint",
    "rebuild_modules",
    "save_checkpoint",
    "BLOCK_PROBES",
    "check_block",
    "gradient_check",
    "pretrain_autoencoder",
    "train_classifier",
]
