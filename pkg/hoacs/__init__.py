"""Residue-number coding of secret-dependent values, with an AES-128 key schedule case study."""

from hoacs.rnc_core import EncodedValue, ModuliSet, decode, encode, make_moduli_set

__version__ = "0.1.0"

__all__ = ["EncodedValue", "ModuliSet", "decode", "encode", "make_moduli_set", "__version__"]
