"""
Recovery engine: blind per-block S-OMP and cascade OMP
"""

from .somp import ERASED, SompResult, BlockRecovery, RecoveryOutput, somp, resolve_permutation, recover_all_blocks
from .cascade import (
    SensingMatrix,
    OmpResult,
    UserCascade,
    CascadeEstimate,
    build_sensing_matrix,
    omp,
    estimate_cascades,
)

__all__ = [
    'ERASED',
    'SompResult',
    'BlockRecovery',
    'RecoveryOutput',
    'somp',
    'resolve_permutation',
    'recover_all_blocks',
    'SensingMatrix',
    'OmpResult',
    'UserCascade',
    'CascadeEstimate',
    'build_sensing_matrix',
    'omp',
    'estimate_cascades',
]
