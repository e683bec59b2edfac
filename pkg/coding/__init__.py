from .codebook import Codebook, BlockMessage, gen_codebook, encode, decode_index, draw_messages

__all__ = ['Codebook', 'BlockMessage', 'gen_codebook', 'encode', 'decode_index', 'draw_messages']
