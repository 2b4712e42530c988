"""Multi-index enumeration and monomial evaluation for polynomial models.

A basis is the set of integer multi-indices ``a`` (one exponent per
regressor) with total degree ``1 <= |a|_1 <= max_degree`` and interaction
order ``|a|_0 <= max_interaction``, optionally plus the constant index
``a = 0``. Monomial ``j`` evaluated at a regressor vector ``phi`` is
``prod_i phi_i ** a_i^(j)``, with ``0**0 == 1``.

Cardinality closed forms (constant excluded):

* ``max_interaction == 1``: ``dim * max_degree``
* ``max_interaction >= max_degree``: ``C(dim + max_degree, max_degree) - 1``

Enumeration order is graded lexicographic -- ascending total degree, then
descending lexicographic comparison of exponent tuples, so the degree-one
block lists the regressors in their natural order -- and is part of the
serialization contract: model files store explicit exponent vectors, and
the stable order makes coefficient round-trips portable.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .exceptions import SizeOverflowError, ValidationError
from .validation import as_float_array, check_positive_int

__all__ = ["BasisSpec", "basis_cardinality", "enumerate_basis", "eval_monomials"]

DEFAULT_SIZE_CAP = 10**6


@dataclass(frozen=True)
class BasisSpec:
    """Truncation scheme of a polynomial basis.

    Parameters
    ----------
    dim : int
        Regressor vector length.
    max_degree : int
        Largest allowed total degree, >= 1.
    max_interaction : int
        Largest allowed number of regressors appearing jointly in one
        monomial, >= 1.
    include_constant : bool
        Whether the constant monomial is part of the basis. Off by
        default; the reference model configurations count coefficients
        without it.
    """

    dim: int
    max_degree: int
    max_interaction: int = 1
    include_constant: bool = False

    def __post_init__(self):
        check_positive_int(self.dim, "dim")
        check_positive_int(self.max_degree, "max_degree")
        check_positive_int(self.max_interaction, "max_interaction")


def basis_cardinality(spec):
    """Number of basis terms, computed without enumerating them.

    Counts, per total degree ``g`` and support size ``s``, the
    ``C(dim, s) * C(g-1, s-1)`` compositions of ``g`` over ``s`` chosen
    positions.
    """
    r = min(spec.max_interaction, spec.max_degree, spec.dim)
    total = 1 if spec.include_constant else 0
    for g in range(1, spec.max_degree + 1):
        for s in range(1, min(r, g) + 1):
            total += comb(spec.dim, s) * comb(g - 1, s - 1)
    return total


def _compositions(total, parts):
    """Positive integer compositions of ``total`` into ``parts`` parts, lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def enumerate_basis(spec, size_cap=DEFAULT_SIZE_CAP):
    """Enumerate the multi-index set as an ``(n_terms, dim)`` integer array.

    Raises ``SizeOverflowError`` if the cardinality exceeds ``size_cap``
    (checked via the closed-form count before any enumeration work).
    """
    n = basis_cardinality(spec)
    if n > size_cap:
        raise SizeOverflowError(f"basis has {n} terms, cap is {size_cap}")
    r = min(spec.max_interaction, spec.max_degree, spec.dim)
    out = np.zeros((n, spec.dim), dtype=np.int64)
    pos = 0
    if spec.include_constant:
        pos = 1  # the zero row is already in place
    for g in range(1, spec.max_degree + 1):
        degree_block = []
        for s in range(1, min(r, g) + 1):
            for support in combinations(range(spec.dim), s):
                for comp in _compositions(g, s):
                    alpha = [0] * spec.dim
                    for i, e in zip(support, comp):
                        alpha[i] = e
                    degree_block.append(alpha)
        degree_block.sort(reverse=True)
        block = np.asarray(degree_block, dtype=np.int64)
        out[pos : pos + len(block)] = block
        pos += len(block)
    return out


def eval_monomials(exponents, phi):
    """Evaluate every monomial of a basis at one or many regressor vectors.

    Parameters
    ----------
    exponents : ndarray of shape (n_terms, dim)
        Multi-index rows as produced by :func:`enumerate_basis`.
    phi : ndarray of shape (dim,) or (n_rows, dim)
        Regressor vector(s); must be finite.

    Returns
    -------
    ndarray of shape (n_terms,) or (n_rows, n_terms).

    Powers of each column are cached up to the basis maximum degree, so a
    monomial costs one multiply per active regressor.
    """
    exponents = np.asarray(exponents, dtype=np.int64)
    phi = as_float_array(phi, "phi")
    single = phi.ndim == 1
    if single:
        phi = phi[None, :]
    if phi.shape[1] != exponents.shape[1]:
        raise ValidationError(
            f"phi has {phi.shape[1]} entries, basis dim is {exponents.shape[1]}"
        )
    max_e = int(exponents.max(initial=0))
    # powers[e] holds phi**e columnwise; powers[0] is all ones (0**0 == 1).
    powers = [np.ones_like(phi)]
    for _ in range(max_e):
        powers.append(powers[-1] * phi)
    out = np.ones((phi.shape[0], exponents.shape[0]))
    for j, alpha in enumerate(exponents):
        for i in np.flatnonzero(alpha):
            out[:, j] *= powers[alpha[i]][:, i]
    return out[0] if single else out
