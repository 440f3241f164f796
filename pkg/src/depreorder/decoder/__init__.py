from depreorder.decoder.features import (
    dbr_penalty,
    ddp_penalty,
    ds_features,
    linked_pairs,
    load_sparse_weights,
    load_weights,
    nr_feature,
    zones,
)
from depreorder.decoder.lm import NgramLM, train_lm
from depreorder.decoder.phrases import PhraseEntry, PhraseTable, load_phrase_table
from depreorder.decoder.search import DecodeError, LogLinearConfig, decode, rescore

__all__ = [
    "DecodeError", "LogLinearConfig", "NgramLM", "PhraseEntry", "PhraseTable",
    "dbr_penalty", "ddp_penalty", "decode", "ds_features", "linked_pairs",
    "load_phrase_table", "load_sparse_weights", "load_weights", "nr_feature",
    "rescore", "train_lm", "zones",
]
