"""Python bindings for the polsynth C++ core.

Trees and DDT parameters are passed as JSON text, the same documents the
command-line tool reads and writes. The helpers below decode them.
"""

import json

from . import _core
from ._core import (
    DictionaryMismatch,
    Environment,
    ParseError,
    SchemaError,
    compare_trees,
    ddt_forward,
    detokenize,
    discretize,
    init_ddt,
    parse_dsl,
    random_ddt,
    render,
    rolling_reward,
    run_cli,
    tokenize,
    train_ddt,
    validate,
)

__version__ = _core.__version__


def build_corpus(domain, n_base=500, seed=0):
    """Returns (examples, vocabulary); examples are dicts as in the corpus file."""
    text, vocabulary = _core.build_corpus(domain, n_base, seed)
    return [json.loads(line) for line in text.splitlines()], vocabulary


def tree_dict(tree):
    return json.loads(tree)


__all__ = [
    "DictionaryMismatch",
    "Environment",
    "ParseError",
    "SchemaError",
    "build_corpus",
    "compare_trees",
    "ddt_forward",
    "detokenize",
    "discretize",
    "init_ddt",
    "parse_dsl",
    "random_ddt",
    "render",
    "rolling_reward",
    "run_cli",
    "tokenize",
    "train_ddt",
    "tree_dict",
    "validate",
]
