"""Partition-function engines: quenched DPs, annealed transfers, oracles."""

from .annealed import (copolymer_annealed_iid_logZ, copolymer_annealed_logZ,
                       pinning_annealed_logZ)
from .oracle import (enumerate_annealed_copolymer_logZ,
                     enumerate_annealed_pinning_logZ, enumerate_logZ,
                     enumerate_quenched_copolymer_logZ,
                     enumerate_quenched_pinning_logZ, enumerate_two_replica_AB)
from .quenched import copolymer_logZ, pinning_logZ
from .tilted import TiltedExpectation, tilted_copolymer_expectation
from .tworeplica import two_replica_logAB

__all__ = [
    "copolymer_logZ", "pinning_logZ",
    "copolymer_annealed_logZ", "copolymer_annealed_iid_logZ",
    "pinning_annealed_logZ",
    "enumerate_logZ", "enumerate_quenched_copolymer_logZ",
    "enumerate_quenched_pinning_logZ", "enumerate_annealed_copolymer_logZ",
    "enumerate_annealed_pinning_logZ", "enumerate_two_replica_AB",
    "tilted_copolymer_expectation", "TiltedExpectation",
    "two_replica_logAB",
]
