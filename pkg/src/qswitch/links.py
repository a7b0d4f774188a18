"""Per-slot link-level entanglement counts, raw and after link purification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.stats import binom

from qswitch.yields import YieldModel


def db_per_km_to_theta(db_per_km: float) -> float:
    """Convert fiber loss in dB/km to the exponent coefficient in p = exp(-theta d)."""
    return db_per_km * math.log(10) / 10


@dataclass(frozen=True)
class LinkParams:
    k: int
    alpha_max: int
    p: tuple[float, ...]
    f_link: float
    theta: Optional[float] = None
    d: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two users")
        if self.alpha_max < 1:
            raise ValueError("alpha_max must be >= 1")
        if len(self.p) != self.k:
            raise ValueError(f"expected {self.k} link probabilities, got {len(self.p)}")
        if any(not 0 < pi <= 1 for pi in self.p):
            raise ValueError(f"link success probabilities must lie in (0, 1]: {self.p}")
        if not 0.25 < self.f_link <= 1:
            raise ValueError(f"link fidelity must lie in (0.25, 1], got {self.f_link}")
        if self.theta is not None and self.d is not None:
            expect = [math.exp(-self.theta * di) for di in self.d]
            if any(abs(a - b) > 1e-12 for a, b in zip(expect, self.p)):
                raise ValueError("p is inconsistent with exp(-theta * d)")

    @classmethod
    def uniform(cls, k: int, alpha_max: int, p: float, f_link: float) -> "LinkParams":
        return cls(k, alpha_max, (p,) * k, f_link)

    @classmethod
    def from_distance(cls, k, alpha_max, theta, d, f_link) -> "LinkParams":
        p = tuple(math.exp(-theta * di) for di in d)
        return cls(k, alpha_max, p, f_link, theta=theta, d=tuple(d))


@dataclass(frozen=True)
class CountLaw:
    """Independent per-link count marginals; the joint law is their product."""

    marginals: tuple[np.ndarray, ...]

    def __post_init__(self):
        for m in self.marginals:
            if abs(m.sum() - 1.0) > 1e-9:
                raise ValueError(f"marginal sums to {m.sum()!r}")
            m.flags.writeable = False

    @property
    def k(self) -> int:
        return len(self.marginals)

    def prob(self, a: Sequence[int]) -> float:
        return float(np.prod([m[ai] for m, ai in zip(self.marginals, a)]))

    def means(self) -> np.ndarray:
        return np.array([m @ np.arange(len(m)) for m in self.marginals])

    def states(self, p_cut: float = 0.0) -> Iterator[tuple[tuple[int, ...], float]]:
        """Yield (a, P(a)) for every joint count vector with P(a) > p_cut."""
        supports = [np.flatnonzero(m) for m in self.marginals]
        for a in itertools.product(*supports):
            pa = self.prob(a)
            if pa > p_cut:
                yield tuple(int(v) for v in a), pa


def raw_link_law(params: LinkParams) -> CountLaw:
    ks = np.arange(params.alpha_max + 1)
    return CountLaw(tuple(binom.pmf(ks, params.alpha_max, pi) for pi in params.p))


def purified_link_law(raw: CountLaw, ym: YieldModel) -> CountLaw:
    """P(T~ = t) = sum_a P(Y = t | X = a) P(T = a), per link."""
    out = []
    for m in raw.marginals:
        n = len(m)
        if ym.x_max < n - 1:
            raise ValueError(f"yield table covers x <= {ym.x_max}, need {n - 1}")
        out.append(m @ ym.pmf[:n, :n])
    return CountLaw(tuple(out))


def swap_success_matrix(k: int, q) -> np.ndarray:
    """Symmetric K x K matrix of swap success probabilities (diagonal unused).

    ``q`` may be a scalar, a full matrix, or a mapping {(i, j): q_ij} with
    zero-based user indices.
    """
    if np.isscalar(q):
        mat = np.full((k, k), float(q))
    elif isinstance(q, dict):
        mat = np.full((k, k), np.nan)
        for (i, j), v in q.items():
            if (j, i) in q and q[(j, i)] != v:
                raise ValueError(f"q is asymmetric for pair ({i}, {j})")
            mat[i, j] = mat[j, i] = v
    else:
        mat = np.array(q, dtype=float)
        if mat.shape != (k, k):
            raise ValueError(f"q must be {k}x{k}")
        if not np.array_equal(mat, mat.T, equal_nan=True):
            raise ValueError("q matrix must be symmetric")
    np.fill_diagonal(mat, 0.0)
    off = mat[~np.eye(k, dtype=bool)]
    if np.any(np.isnan(off)) or np.any((off <= 0) | (off > 1)):
        raise ValueError("every q_ij must lie in (0, 1]")
    mat.flags.writeable = False
    return mat
