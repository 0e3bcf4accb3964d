"""Floquet-Bloch analysis of periodic second-order ODEs."""

from ._core import (
    Band,
    BandStructure,
    Classification,
    CongruenceClass,
    EdgeKind,
    FloquetOptions,
    HartreeExample,
    Jordan,
    Monodromy,
    NumericalError,
    PeriodicCoefficient,
    Problem1D,
    SigmaTag,
    TransformField,
    UnionReport,
    bloch_floquet,
    catalog,
    class_equal,
    classify,
    discriminant,
    expm2,
    hartree_example,
    intro_fixture,
    locate_bands,
    monodromy,
    planewave_fiber,
    reduce_quasimomentum,
    residual,
    union_check,
)

__version__ = "0.1.0"
