"""
Metrics and the Monte-Carlo experiment harness
"""

from .metrics import WEIGHTED_BER_FORMULA, BerCounts, nmse, weighted_ber, data_rate, id_overhead, mean_nmse_db

__all__ = [
    'WEIGHTED_BER_FORMULA',
    'BerCounts',
    'nmse',
    'weighted_ber',
    'data_rate',
    'id_overhead',
    'mean_nmse_db',
]
