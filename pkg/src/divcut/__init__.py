"""Generalized sparsest cut on hypergraphs via diversity embeddings.

The pipeline: solve an LP relaxation over pseudo-diversities with a
hypergraph-Steiner separation oracle, embed the LP diversity into l1 along
a tree or Frechet route, decompose the l1 diversity into cut diversities,
and return the sparsest pulled-back cut. Brute-force oracles validate every
stage at small scale.
"""

from divcut.core import (
    Cut,
    Hypergraph,
    Instance,
    SparsityReport,
    brute_sparsest_cut,
    expansion,
    generate,
    sparsity,
    uniform_demand,
)

__version__ = "0.1.0"
