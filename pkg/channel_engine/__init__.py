"""
Channel engine: dictionaries, channel realizations and the block-wise airlink
"""

from .dictionaries import SteeringDictionary, steering_vector, build_dictionaries
from .channel import ChannelRealization, sample_channel, merge_cascade, dump_realization, load_realization
from .airlink import (
    TransmissionScenario,
    ReceivedBlocks,
    equivalent_channel,
    noise_variance_for_snr,
    synthesize,
)

__all__ = [
    'SteeringDictionary',
    'steering_vector',
    'build_dictionaries',
    'ChannelRealization',
    'sample_channel',
    'merge_cascade',
    'dump_realization',
    'load_realization',
    'TransmissionScenario',
    'ReceivedBlocks',
    'equivalent_channel',
    'noise_variance_for_snr',
    'synthesize',
]
