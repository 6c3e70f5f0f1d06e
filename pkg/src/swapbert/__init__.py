"""Bilingual pretraining pipeline: corpus cleaning, fixed-size WordPiece
vocabularies, MLM/NSP data generation, a from-scratch transformer encoder,
and vocabulary-swap transfer between languages."""

__version__ = "0.1.0"
