"""Exact combinatorial classification of twisted elliptic endoscopic data.

Everything is computed over the rationals: folded root systems, affine
alcoves with their marks, the extended affine Weyl group and its alcove
stabilizer, the classes of pairs (omega-star map, alcove point), the
based root datum each class cuts out, and a finite local-global check.
"""

__version__ = "0.1.0"

SCHEMA_VERSION = (1, 0)
