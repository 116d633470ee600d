"""Hierarchical severity/diagnosis classifier for breast pathology reports."""

from ._hcsbc import (
    BundleError,
    CorpusError,
    DimensionError,
    HcsbcError,
    InputError,
    Model,
    Ontology,
    OntologyError,
    ProviderError,
    SegmentError,
    TrainingError,
    compare,
    engine_version,
    final_diagnosis,
    mcnemar,
    normalize,
    read_corpus,
    segment,
    split,
    synth,
    tokenize,
    train,
    write_corpus,
)

__version__ = engine_version
