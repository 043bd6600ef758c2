"""Transparent l-diverse anonymization: Tailor, Ace and Hybrid, baselines
that leak under a known-algorithm adversary, and the exact attack engine
that tells them apart."""

__version__ = "0.1.0"

from .ace import ace, ace_distribution, ace_partition, assign, assign_probability, slice_partition
from .adversary import (
    AlgoSpec,
    Limits,
    ProbabilityMode,
    credibility,
    disclosure_risk,
    enumerate_possible_instances,
    output_probability,
    risk_report,
    verify_transparency,
)
from .baselines import (
    RecodingScheme,
    is_minimal_generalization,
    mask,
    mask_consistency_attack,
    mondrian_lite,
    opt_gen,
)
from .dataio import SchemaConfig, fixture, load_external, load_published, load_table, synthesize, write_published
from .hybrid import hybrid, hybrid_distribution, hybrid_partition
from .model import (
    AttributeSchema,
    Bucket,
    BucketPartition,
    ExternalSource,
    MicrodataTable,
    Partition,
    QIAttribute,
    QIGroup,
    Record,
    is_l_diverse,
    is_l_eligible,
)
from .recoding import Anatomy, Generalization, anonymize, discernability, perimeter
from .tailor import tailor, tailor_partition
from .utility import CountQuery, estimated_count, exact_count, generate_workload, workload_error

__all__ = [
    "AlgoSpec",
    "Anatomy",
    "AttributeSchema",
    "Bucket",
    "BucketPartition",
    "CountQuery",
    "ExternalSource",
    "Generalization",
    "Limits",
    "MicrodataTable",
    "Partition",
    "ProbabilityMode",
    "QIAttribute",
    "QIGroup",
    "RecodingScheme",
    "Record",
    "SchemaConfig",
    "ace",
    "ace_distribution",
    "ace_partition",
    "anonymize",
    "assign",
    "assign_probability",
    "credibility",
    "discernability",
    "disclosure_risk",
    "enumerate_possible_instances",
    "estimated_count",
    "exact_count",
    "fixture",
    "generate_workload",
    "hybrid",
    "hybrid_distribution",
    "hybrid_partition",
    "is_l_diverse",
    "is_l_eligible",
    "is_minimal_generalization",
    "load_external",
    "load_published",
    "load_table",
    "mask",
    "mask_consistency_attack",
    "mondrian_lite",
    "opt_gen",
    "output_probability",
    "perimeter",
    "risk_report",
    "slice_partition",
    "synthesize",
    "tailor",
    "tailor_partition",
    "verify_transparency",
    "workload_error",
    "write_published",
]
