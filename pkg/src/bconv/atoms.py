"""Atomic approximants of Bernoulli convolutions, exactly.

The depth-n approximant is the distribution of sum(eps_j * lambda^j) over
sign choices eps_j = +-1 on an exponent window [lo, hi).  Atom positions
live either in Q (lambda rational) or in the number field Q(lambda); both
carriers store integer coordinate data over a common denominator, so atom
coincidence (the whole point: entropy drops exactly when sums collide) is
decided by integer equality, never by float proximity.

Enumeration doubles the support one exponent at a time and re-folds
duplicates as it goes, which keeps memory proportional to the number of
distinct atoms rather than 2^n.  When coordinate bounds fit, the doubling
runs on int64 numpy arrays with vectors packed into single int64 keys;
otherwise a Python dict over exact tuples takes over at the same
semantics.

Freeness (all 2^n atoms distinct) is decided exactly: rational ratios in
(0, 1) are always free (a height-one integer polynomial cannot vanish at
p/q with q >= 2, by the primitive-factor argument on qx - p), and for
algebraic ratios a constraint-propagation search looks for a height-one
multiple of the minimal polynomial of the given degree, returning an
explicit witness when one exists.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .algebraic import AlgebraicNumber, FieldElement
from .errors import CapExceeded, InvalidInput
from .polynomial import Coeffs, IntPolynomial, _mul, _trim

DEFAULT_RANGE_CAP = 26
_INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class ExponentRange:
    """Half-open exponent window [lo, hi) selecting which powers of lambda
    participate in the random sum."""
    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise InvalidInput(f"need 0 <= lo < hi, got [{self.lo}, {self.hi})")

    @property
    def length(self) -> int:
        return self.hi - self.lo

    @staticmethod
    def depth(n: int) -> "ExponentRange":
        return ExponentRange(0, n)


@dataclass(frozen=True)
class GenerationMeta:
    """How a measure was generated, carried along for reports."""
    kind: str                    # "bernoulli" | "synthetic" | "convolution" | "scaled"
    rng: Optional[ExponentRange] = None
    bias_num: int = 1
    bias_den: int = 2
    lambda_text: str = ""


class AtomicMeasure:
    """A finitely supported probability measure with exact rational masses
    and exact atom positions.

    Rational carrier: positions are pos_num[i] / pos_den, ascending.
    Algebraic carrier: positions are coords[i] . (1, a, ..., a^(d-1)) /
    coords_den for the field generator a, sorted ascending by true value.
    Masses are counts[i] / mass_den in both cases.
    """

    __slots__ = ("carrier", "pos_num", "pos_den", "coords", "coords_den",
                 "field", "counts", "mass_den", "meta", "_floats")

    def __init__(self, *, carrier: str, counts, mass_den: int,
                 pos_num=None, pos_den: int = 1,
                 coords=None, coords_den: int = 1,
                 field: Optional[AlgebraicNumber] = None,
                 meta: Optional[GenerationMeta] = None,
                 _trust_sorted: bool = False):
        if carrier not in ("rational", "algebraic"):
            raise InvalidInput(f"unknown carrier {carrier!r}")
        self.carrier = carrier
        self.counts = counts
        self.mass_den = int(mass_den)
        self.pos_num = pos_num
        self.pos_den = int(pos_den)
        self.coords = coords
        self.coords_den = int(coords_den)
        self.field = field
        self.meta = meta
        self._floats = None
        if self.mass_den <= 0:
            raise InvalidInput("mass denominator must be positive")
        total = int(np.sum(counts)) if isinstance(counts, np.ndarray) else sum(counts)
        if total != self.mass_den:
            raise InvalidInput("masses must sum to exactly 1")
        if carrier == "rational":
            if self.pos_den <= 0:
                raise InvalidInput("position denominator must be positive")
            if not _trust_sorted:
                ns = list(pos_num)
                if any(ns[i] >= ns[i + 1] for i in range(len(ns) - 1)):
                    raise InvalidInput("positions must be strictly ascending")
        if len(self) == 0:
            raise InvalidInput("a measure needs at least one atom")

    # ------------------------------------------------------------------
    # basic access
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def n_atoms(self) -> int:
        return len(self.counts)

    def mass(self, i: int) -> Fraction:
        return Fraction(int(self.counts[i]), self.mass_den)

    def masses(self) -> list[Fraction]:
        return [Fraction(int(c), self.mass_den) for c in self.counts]

    @property
    def is_uniform(self) -> bool:
        first = int(self.counts[0])
        if isinstance(self.counts, np.ndarray):
            return bool(np.all(self.counts == first))
        return all(int(c) == first for c in self.counts)

    def position_fractions(self) -> list[Fraction]:
        if self.carrier != "rational":
            raise InvalidInput("exact Fractions exist only on the rational carrier")
        return [Fraction(int(n), self.pos_den) for n in self.pos_num]

    def position_field_elements(self) -> list[FieldElement]:
        if self.carrier != "algebraic":
            raise InvalidInput("field elements exist only on the algebraic carrier")
        d = self.field.degree
        den = self.coords_den
        out = []
        for row in self.coords:
            out.append(FieldElement(self.field,
                                    tuple(Fraction(int(c), den) for c in row)))
        return out

    def float_positions(self) -> np.ndarray:
        """Positions as float64.  Rational carrier: correctly rounded from
        the exact values.  Algebraic carrier: |error| <= n_coords * 2^-60
        relative to coordinate size, far below every gap this package
        resolves numerically."""
        if self._floats is not None:
            return self._floats
        if self.carrier == "rational":
            num = np.asarray(self.pos_num, dtype=np.float64)
            vals = num / float(self.pos_den)
        else:
            lo, hi = self.field.refine_bits(64)
            lam = float((lo + hi) / 2)
            d = self.field.degree
            powers = np.array([lam ** i for i in range(d)], dtype=np.float64)
            arr = np.asarray(self.coords, dtype=np.float64)
            vals = (arr @ powers) / float(self.coords_den)
        self._floats = vals
        return vals

    def support_bound(self) -> float:
        pts = self.float_positions()
        return float(max(abs(pts[0]), abs(pts[-1])))

    def __repr__(self) -> str:
        return (f"AtomicMeasure({self.carrier}, atoms={self.n_atoms}, "
                f"mass_den={self.mass_den})")

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @staticmethod
    def from_pairs(pairs: Sequence[tuple], meta: Optional[GenerationMeta] = None
                   ) -> "AtomicMeasure":
        """Synthetic measure from (position, mass) pairs of Fractions.
        Duplicate positions are merged exactly; masses must sum to 1."""
        if not pairs:
            raise InvalidInput("a measure needs at least one atom")
        acc: dict[Fraction, Fraction] = {}
        for pos, m in pairs:
            pos, m = Fraction(pos), Fraction(m)
            if m < 0:
                raise InvalidInput("masses must be nonnegative")
            acc[pos] = acc.get(pos, Fraction(0)) + m
        acc = {p: m for p, m in acc.items() if m != 0}
        if sum(acc.values()) != 1:
            raise InvalidInput("masses must sum to exactly 1")
        positions = sorted(acc)
        pden = 1
        for p in positions:
            pden = pden * p.denominator // math.gcd(pden, p.denominator)
        mden = 1
        for m in acc.values():
            mden = mden * m.denominator // math.gcd(mden, m.denominator)
        nums = [int(p * pden) for p in positions]
        counts = [int(acc[p] * mden) for p in positions]
        return AtomicMeasure(carrier="rational", counts=counts, mass_den=mden,
                             pos_num=nums, pos_den=pden,
                             meta=meta or GenerationMeta(kind="synthetic"),
                             _trust_sorted=True)


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


def _fold_numpy(values: np.ndarray, weights: np.ndarray, total: int):
    u, inv = np.unique(values, return_inverse=True)
    if total < (1 << 53):
        # float accumulation is exact: all partial sums are integers
        # below 2^53
        w = np.bincount(inv, weights=weights.astype(np.float64),
                        minlength=len(u)).astype(np.int64)
    else:
        w = np.zeros(len(u), dtype=np.int64)
        np.add.at(w, inv, weights)
    return u, w


def _enumerate_keys_numpy(terms: list[int], wminus: int, wplus: int):
    """Doubling enumeration over int64 scalar keys, folding duplicates at
    every step.  Caller guarantees no overflow."""
    values = np.zeros(1, dtype=np.int64)
    weights = np.ones(1, dtype=np.int64)
    total = 1
    for t in terms:
        values = np.concatenate((values - t, values + t))
        if wminus == wplus == 1:
            weights = np.concatenate((weights, weights))
        else:
            weights = np.concatenate((weights * wminus, weights * wplus))
        total *= wminus + wplus
        values, weights = _fold_numpy(values, weights, total)
    return values, weights


def _fold_pairs_numpy(k1: np.ndarray, k2: np.ndarray, weights: np.ndarray,
                      total: int):
    order = np.lexsort((k2, k1))
    k1s, k2s, ws = k1[order], k2[order], weights[order]
    new = np.empty(len(k1s), dtype=bool)
    new[0] = True
    new[1:] = (k1s[1:] != k1s[:-1]) | (k2s[1:] != k2s[:-1])
    gid = np.cumsum(new) - 1
    n = int(gid[-1]) + 1
    if total < (1 << 53):
        w = np.bincount(gid, weights=ws.astype(np.float64),
                        minlength=n).astype(np.int64)
    else:
        w = np.zeros(n, dtype=np.int64)
        np.add.at(w, gid, ws)
    sel = np.nonzero(new)[0]
    return k1s[sel], k2s[sel], w


def _enumerate_pair_keys_numpy(terms: list[tuple[int, int]],
                               wminus: int, wplus: int):
    """Doubling enumeration where each vector is packed into two int64
    keys (for coordinate bounds too wide for one)."""
    k1 = np.zeros(1, dtype=np.int64)
    k2 = np.zeros(1, dtype=np.int64)
    weights = np.ones(1, dtype=np.int64)
    total = 1
    for t1, t2 in terms:
        k1 = np.concatenate((k1 - t1, k1 + t1))
        k2 = np.concatenate((k2 - t2, k2 + t2))
        if wminus == wplus == 1:
            weights = np.concatenate((weights, weights))
        else:
            weights = np.concatenate((weights * wminus, weights * wplus))
        total *= wminus + wplus
        k1, k2, weights = _fold_pairs_numpy(k1, k2, weights, total)
    return k1, k2, weights


def _enumerate_dict(terms: list, wminus: int, wplus: int):
    """Exact fallback: terms may be ints or integer tuples."""
    tupled = isinstance(terms[0], tuple)
    zero = tuple([0] * len(terms[0])) if tupled else 0
    acc = {zero: 1}
    for t in terms:
        nxt: dict = {}
        for v, w in acc.items():
            if tupled:
                vm = tuple(a - b for a, b in zip(v, t))
                vp = tuple(a + b for a, b in zip(v, t))
            else:
                vm, vp = v - t, v + t
            nxt[vm] = nxt.get(vm, 0) + w * wminus
            nxt[vp] = nxt.get(vp, 0) + w * wplus
        acc = nxt
    return acc


def _parse_bias(bias) -> tuple[int, int]:
    b = Fraction(bias)
    if not 0 < b < 1:
        raise InvalidInput("bias must lie strictly between 0 and 1")
    return b.numerator, b.denominator


def enumerate_atoms(a: Union[AlgebraicNumber, Fraction, int],
                    rng: Union[ExponentRange, int],
                    bias=Fraction(1, 2),
                    cap: int = DEFAULT_RANGE_CAP) -> AtomicMeasure:
    """The atomic approximant on the exponent window rng for contraction
    ratio a in (0, 1): the distribution of sum of eps_j a^j, where eps_j
    is +1 with probability `bias` independently.

    Every atom position and mass is exact.  Raises CapExceeded when the
    window length exceeds `cap` (default 26); the cap is a resource
    refusal, not an approximation.
    """
    if isinstance(rng, int):
        rng = ExponentRange.depth(rng)
    n = rng.length
    if n > cap:
        raise CapExceeded(
            f"exponent window length {n} exceeds the cap {cap}")
    bnum, bden = _parse_bias(bias)
    wplus, wminus = bnum, bden - bnum
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    if a.compare_fraction(0) <= 0 or a.compare_fraction(1) >= 0:
        raise InvalidInput("contraction ratio must lie strictly in (0, 1)")
    mass_den = bden ** n
    meta = GenerationMeta(kind="bernoulli", rng=rng, bias_num=bnum,
                          bias_den=bden, lambda_text=str(a.min_poly))
    if a.is_rational:
        lam = a.as_fraction()
        p, q = lam.numerator, lam.denominator
        # positions over the common denominator q^(hi-1)
        pden = q ** (rng.hi - 1)
        terms = [p ** j * q ** (rng.hi - 1 - j) for j in range(rng.lo, rng.hi)]
        bound = sum(terms)
        wbound = max(wplus, wminus, 1) ** n
        if bound < _INT64_SAFE and wbound < _INT64_SAFE:
            values, weights = _enumerate_keys_numpy(terms, wminus, wplus)
            return AtomicMeasure(carrier="rational", counts=weights,
                                 mass_den=mass_den, pos_num=values,
                                 pos_den=pden, meta=meta, _trust_sorted=True)
        acc = _enumerate_dict(terms, wminus, wplus)
        items = sorted(acc.items())
        return AtomicMeasure(carrier="rational",
                             counts=[w for _, w in items],
                             mass_den=mass_den,
                             pos_num=[v for v, _ in items],
                             pos_den=pden, meta=meta, _trust_sorted=True)
    return _enumerate_algebraic(a, rng, wminus, wplus, mass_den, meta)


def _coord_terms(a: AlgebraicNumber, rng: ExponentRange) -> tuple[list[tuple[int, ...]], int]:
    """Integer coordinate vectors of a^j for j in the window, over a
    common denominator."""
    d = a.degree
    den = 1
    rows_f = []
    for j in range(rng.lo, rng.hi):
        coords = a.power_coords(j)
        rows_f.append(coords)
        for c in coords:
            den = den * c.denominator // math.gcd(den, c.denominator)
    rows = []
    for coords in rows_f:
        rows.append(tuple(int(c * den) for c in coords))
    return rows, den


def _certified_sort_algebraic(field: AlgebraicNumber, coords_den: int,
                              vec_list) -> list[int]:
    """Order indices of distinct coordinate vectors ascending by true
    value.

    A float pre-sort does almost all the work.  With the dot-product
    error bounded by `err`, any adjacent approximations more than 2*err
    apart are exactly ordered; runs of closer ones get re-sorted with
    exact field-element comparisons.  Elements of distinct runs never
    need exact comparison because the bound already separates them.
    """
    lo, hi = field.refine_bits(80)
    lam = float((lo + hi) / 2)
    d = field.degree
    powers = np.array([lam ** i for i in range(d)], dtype=np.float64)
    arr = np.asarray(vec_list, dtype=np.float64)
    approx = arr @ powers
    order = np.argsort(approx, kind="stable")
    sa = approx[order]
    maxabs = float(np.max(np.abs(arr))) if len(arr) else 0.0
    eps = float(np.finfo(np.float64).eps)
    # per-power drift d*(hi-lo), summed over d coordinates of size maxabs,
    # plus dot rounding; padded by a small constant factor
    err = 4.0 * (d + 1) * (d * maxabs * float(hi - lo) + eps * maxabs * (d + 2))
    close = np.nonzero(np.diff(sa) <= 2.0 * err)[0]
    sorted_idx = [int(i) for i in order]
    if len(close) == 0:
        return sorted_idx

    from functools import cmp_to_key

    def row(i):
        r = vec_list[i]
        return r.tolist() if isinstance(vec_list, np.ndarray) else r

    def cmp(i, j):
        diff = tuple(Fraction(int(x) - int(y), coords_den)
                     for x, y in zip(row(i), row(j)))
        s = FieldElement(field, diff).sign()
        if s == 0:
            raise InvalidInput("duplicate atom positions after folding")
        return s

    # group ambiguous adjacent pairs into maximal runs and re-sort each
    k = 0
    while k < len(close):
        start = int(close[k])
        end = start
        while k + 1 < len(close) and int(close[k + 1]) == int(close[k]) + 1:
            k += 1
            end = int(close[k])
        block = sorted_idx[start:end + 2]
        block.sort(key=cmp_to_key(cmp))
        sorted_idx[start:end + 2] = block
        k += 1
    return sorted_idx


def _pack_split(strides: list[int]) -> Optional[list[list[int]]]:
    """Split coordinate indices into at most two groups whose stride
    products each fit comfortably in int64; None when impossible."""
    groups: list[list[int]] = [[]]
    prod = 1
    for i, s in enumerate(strides):
        if s >= _INT64_SAFE:
            return None
        if prod * s < _INT64_SAFE:
            prod *= s
            groups[-1].append(i)
        else:
            if len(groups) == 2:
                return None
            groups.append([i])
            prod = s
    return groups


def _enumerate_algebraic(a: AlgebraicNumber, rng: ExponentRange,
                         wminus: int, wplus: int, mass_den: int,
                         meta: GenerationMeta) -> AtomicMeasure:
    n = rng.length
    d = a.degree
    rows, den = _coord_terms(a, rng)
    # per-coordinate reach decides whether int64 key packing is safe:
    # each vector maps injectively to sum((c_i + B_i) * prod(strides<i))
    bounds = [sum(abs(r[i]) for r in rows) for i in range(d)]
    strides = [2 * b + 1 for b in bounds]
    weight_ok = max(wplus, wminus, 1) ** n < _INT64_SAFE
    groups = _pack_split(strides) if weight_ok else None

    def group_mults(group: list[int]) -> dict[int, int]:
        mults = {}
        m = 1
        for i in group:
            mults[i] = m
            m *= strides[i]
        return mults

    def unpack_into(vecs: np.ndarray, keys: np.ndarray, group: list[int],
                    mults: dict[int, int]) -> None:
        off = sum(bounds[i] * mults[i] for i in group)
        rem = keys + off
        for i in group:
            vecs[:, i] = rem % strides[i] - bounds[i]
            rem //= strides[i]

    if groups is not None and len(groups[-1]) > 0 and len(groups) == 1:
        g1 = groups[0]
        m1 = group_mults(g1)
        terms = [sum(r[i] * m1[i] for i in g1) for r in rows]
        values, weights = _enumerate_keys_numpy(terms, wminus, wplus)
        vecs = np.empty((len(values), d), dtype=np.int64)
        unpack_into(vecs, values, g1, m1)
        vec_list = vecs
        weight_list = weights
    elif groups is not None and len(groups) == 2:
        g1, g2 = groups
        m1, m2 = group_mults(g1), group_mults(g2)
        terms2 = [(sum(r[i] * m1[i] for i in g1),
                   sum(r[i] * m2[i] for i in g2)) for r in rows]
        k1, k2, weights = _enumerate_pair_keys_numpy(terms2, wminus, wplus)
        vecs = np.empty((len(k1), d), dtype=np.int64)
        unpack_into(vecs, k1, g1, m1)
        unpack_into(vecs, k2, g2, m2)
        vec_list = vecs
        weight_list = weights
    else:
        acc = _enumerate_dict(rows, wminus, wplus)
        items = list(acc.items())
        vec_list = [v for v, _ in items]
        weight_list = [w for _, w in items]
    order = _certified_sort_algebraic(a, den, vec_list)
    if isinstance(vec_list, np.ndarray):
        coords = vec_list[order]
        counts = np.asarray(weight_list)[order]
    else:
        coords = [vec_list[i] for i in order]
        counts = [weight_list[i] for i in order]
    return AtomicMeasure(carrier="algebraic", counts=counts, mass_den=mass_den,
                         coords=coords, coords_den=den, field=a, meta=meta)

# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyResult:
    """Shannon entropy in bits.  exact_bits is set when every mass is a
    power of two (times the common denominator), in which case `bits` is a
    correctly rounded float of the exact rational value."""
    bits: float
    exact_bits: Optional[Fraction] = None

    @property
    def is_exact(self) -> bool:
        return self.exact_bits is not None


def _exact_log2(n: int) -> Optional[int]:
    if n <= 0:
        return None
    k = n.bit_length() - 1
    return k if (1 << k) == n else None


def shannon_entropy(mu: AtomicMeasure) -> EntropyResult:
    """H(mu) = -sum p_i log2 p_i.  With counts c_i over denominator T this
    is log2 T - (sum c_i log2 c_i) / T, exact whenever T and every c_i are
    powers of two."""
    T = mu.mass_den
    kT = _exact_log2(T)
    counts = mu.counts
    if isinstance(counts, np.ndarray) and counts.dtype == np.int64:
        if kT is not None and T < (1 << 56) and \
                bool(np.all((counts & (counts - 1)) == 0)):
            # every count is a power of two: c*log2(c) sums exactly in
            # int64 because sum(c_i * k_i) <= 62 * T < 2^62
            ks = np.round(np.log2(counts.astype(np.float64))).astype(np.int64)
            ssum = int(np.sum(counts * ks))
            val = Fraction(kT) - Fraction(ssum, T)
            return EntropyResult(bits=float(val), exact_bits=val)
        c = counts.astype(np.float64)
        s = float(np.sum(c * np.log2(c)))
        return EntropyResult(bits=math.log2(T) - s / T)
    ints = [int(c) for c in counts]
    if kT is not None:
        exact = Fraction(0)
        ok = True
        for c in ints:
            kc = _exact_log2(c)
            if kc is None:
                ok = False
                break
            exact += Fraction(c * kc, T)
        if ok:
            val = Fraction(kT) - exact
            return EntropyResult(bits=float(val), exact_bits=val)
    s = math.fsum(c * math.log2(c) for c in ints if c > 1)
    return EntropyResult(bits=math.log2(T) - s / T)


@dataclass(frozen=True)
class EntropyBracket:
    """Per-depth entropies H(n) and the resulting upper bound on the
    entropy rate h = lim H(n)/n.  Subadditivity (H(m+n) <= H(m)+H(n))
    makes min_n H(n)/n a genuine upper bound on h and makes the doubling
    chain H(2^k)/2^k non-increasing."""
    ratio: str
    depths: tuple
    entropies: tuple          # floats, aligned with depths
    exact_flags: tuple
    rate_upper: float         # min H(n)/n over computed depths
    rate_at_max: float        # H(n_max)/n_max
    doubling_chain: tuple     # ((n, H(n)/n)) for n = 1, 2, 4, ...

    def as_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "depths": list(self.depths),
            "entropies": list(self.entropies),
            "rate_upper": self.rate_upper,
            "rate_at_max": self.rate_at_max,
        }


def garsia_entropy_bracket(a: Union[AlgebraicNumber, Fraction],
                           n_max: int,
                           bias=Fraction(1, 2),
                           cap: int = DEFAULT_RANGE_CAP) -> EntropyBracket:
    """Entropies of the depth-n approximants for n = 1..n_max, plus the
    implied upper bound on the entropy rate."""
    if n_max < 1:
        raise InvalidInput("need n_max >= 1")
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    depths, ents, flags = [], [], []
    best = math.inf
    for n in range(1, n_max + 1):
        mu = enumerate_atoms(a, n, bias=bias, cap=cap)
        h = shannon_entropy(mu)
        depths.append(n)
        ents.append(h.bits)
        flags.append(h.is_exact)
        best = min(best, h.bits / n)
    chain = []
    k = 1
    while k <= n_max:
        chain.append((k, ents[k - 1] / k))
        k *= 2
    label = str(a.as_fraction()) if a.is_rational else str(a.min_poly)
    return EntropyBracket(ratio=label, depths=tuple(depths),
                          entropies=tuple(ents), exact_flags=tuple(flags),
                          rate_upper=best, rate_at_max=ents[-1] / n_max,
                          doubling_chain=tuple(chain))


# ---------------------------------------------------------------------------
# freeness
# ---------------------------------------------------------------------------


def _height_one_multiple(m: Coeffs, max_deg: int, budget: int) -> Optional[Coeffs]:
    """Search for a nonzero polynomial E with coefficients in {-1, 0, 1},
    deg E <= max_deg, divisible by m.  Writes E = m * Q and determines Q
    coefficient by coefficient from the bottom; each product coefficient
    must land in {-1, 0, 1}, which leaves at most a couple of choices per
    step and prunes hard when |m[0]| >= 2.

    Returns the coefficient tuple of one such E, or None if none exists.
    Raises CapExceeded when the node budget runs out.
    """
    d = len(m) - 1
    qdeg = max_deg - d
    if qdeg < 0:
        return None
    m0 = m[0]
    assert m0 != 0
    nodes = 0

    def product_coeff(q: list, i: int) -> int:
        # coefficient i of m * q using the entries of q available so far
        s = 0
        for k in range(max(0, i - len(q) + 1), min(i, d) + 1):
            s += m[k] * q[i - k]
        return s

    stack: list[tuple[list, int]] = [([], 0)]
    while stack:
        q, i = stack.pop()
        nodes += 1
        if nodes > budget:
            raise CapExceeded(
                f"freeness search exceeded its node budget ({budget})")
        if i > qdeg:
            # all of Q chosen; remaining product coefficients are fixed
            if all(x == 0 for x in q):
                continue
            prod = _mul(m, _trim(q))
            if all(-1 <= c <= 1 for c in prod):
                return prod
            continue
        # choose q_i: partial sum uses q_0..q_{i-1}; m0*q_i + rest must
        # land in [-1, 1]
        rest = 0
        for k in range(1, min(i, d) + 1):
            rest += m[k] * q[i - k]
        lo = math.ceil((-1 - rest) / m0) if m0 > 0 else math.ceil((1 - rest) / m0)
        hi = math.floor((1 - rest) / m0) if m0 > 0 else math.floor((-1 - rest) / m0)
        for t in range(lo, hi + 1):
            stack.append((q + [t], i + 1))
    return None


@dataclass(frozen=True)
class FreenessReport:
    free: bool
    n: int
    witness: Optional[IntPolynomial] = None   # height-one multiple when not free
    reason: str = ""


def is_free(a: Union[AlgebraicNumber, Fraction], n: int,
            budget: int = 2_000_000) -> FreenessReport:
    """Whether the depth-n approximant has all 2^n atoms distinct.

    Atoms collide iff some nonzero polynomial with coefficients in
    {-1, 0, 1} and degree < n vanishes at the ratio.  For rational p/q in
    lowest terms with q >= 2 that is impossible: such a vanishing would
    force qx - p to divide a primitive height-one polynomial, and Gauss's
    lemma would put a factor of q in its leading coefficient.  For
    algebraic ratios the question reduces to whether the minimal
    polynomial divides some height-one polynomial of degree < n, searched
    exactly.
    """
    if n < 1:
        raise InvalidInput("need n >= 1")
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    if a.compare_fraction(0) <= 0 or a.compare_fraction(1) >= 0:
        raise InvalidInput("contraction ratio must lie strictly in (0, 1)")
    if a.is_rational:
        return FreenessReport(free=True, n=n,
                              reason="rational ratio in (0,1): height-one "
                                     "polynomials cannot vanish at p/q")
    mp = a.min_poly
    if abs(mp.leading) >= 2 or abs(mp.constant) >= 2:
        # any integer multiple m*Q has leading coefficient lc(m)*lc(Q) and
        # trailing coefficient m(0) * (lowest coefficient of Q), both of
        # modulus >= 2 once Q != 0, so no height-one multiple exists at
        # any degree
        return FreenessReport(free=True, n=n,
                              reason="extreme coefficient of the minimal "
                                     "polynomial has modulus >= 2; no "
                                     "height-one multiple exists")
    m = tuple(mp.coeffs)
    witness = _height_one_multiple(m, n - 1, budget)
    if witness is None:
        reason = "no height-one multiple of the minimal polynomial below degree %d" % n
        if a.irreducibility == "assumed":
            reason += " (minimal polynomial irreducibility assumed, not proved)"
        return FreenessReport(free=True, n=n, reason=reason)
    return FreenessReport(free=False, n=n, witness=IntPolynomial(witness),
                          reason="height-one multiple of the minimal polynomial")


# ---------------------------------------------------------------------------
# gaps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapResult:
    """Smallest distance between adjacent atoms.  lower/upper are exact
    rational bounds; they coincide on the rational carrier."""
    lower: Fraction
    upper: Fraction

    @property
    def value(self) -> float:
        return float((self.lower + self.upper) / 2)

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    def log2(self) -> float:
        return math.log2(float(self.lower)) if self.lower > 0 else -math.inf


def min_gap(mu: AtomicMeasure, bits: int = 80) -> GapResult:
    if mu.n_atoms < 2:
        raise InvalidInput("min_gap needs at least two atoms")
    if mu.carrier == "rational":
        nums = mu.pos_num
        if isinstance(nums, np.ndarray):
            g = int(np.min(np.diff(nums)))
        else:
            g = min(nums[i + 1] - nums[i] for i in range(len(nums) - 1))
        exact = Fraction(g, mu.pos_den)
        return GapResult(lower=exact, upper=exact)
    # algebraic: find candidates by float, certify by interval arithmetic
    pts = mu.float_positions()
    diffs = np.diff(pts)
    cut = float(np.min(diffs)) * 4 + 2.0 ** (-40)
    idxs = [int(i) for i in np.nonzero(diffs <= cut)[0]]
    field = mu.field
    den = mu.coords_den
    best_lo, best_hi = None, None
    for i in idxs:
        ca = mu.coords[i]
        cb = mu.coords[i + 1]
        dvec = tuple(Fraction(int(x) - int(y), den) for x, y in zip(cb, ca))
        lo, hi = field.eval_coords_interval(dvec, bits)
        while lo <= 0 or (hi - lo) > hi / 8:
            bits *= 2
            if bits > (1 << 14):
                raise CapExceeded("gap certification refused above 2^14 bits")
            lo, hi = field.eval_coords_interval(dvec, bits)
        if best_hi is None or hi < best_hi:
            best_lo, best_hi = lo, hi
    assert best_lo is not None
    return GapResult(lower=best_lo, upper=best_hi)


# ---------------------------------------------------------------------------
# semigroup growth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemigroupCount:
    n: int
    count: int
    log2_count: float
    per_step: float        # log2(count)/n

    def as_dict(self) -> dict:
        return {"n": self.n, "count": self.count,
                "log2_count": self.log2_count, "per_step": self.per_step}


def semigroup_count(a: Union[AlgebraicNumber, Fraction], n: int,
                    direct_cap: int = DEFAULT_RANGE_CAP,
                    pair_cap: int = 44,
                    distinct_budget: int = 1 << 25) -> SemigroupCount:
    """Number of distinct sums sum(eps_j a^j, j < n) -- the size of the
    depth-n sign-pattern image.  Up to direct_cap this is plain
    enumeration; beyond it a meet-in-the-middle pass enumerates both
    halves and counts distinct pairwise sums, refusing via CapExceeded if
    the distinct count would exceed distinct_budget."""
    if n < 1:
        raise InvalidInput("need n >= 1")
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    if n <= direct_cap:
        mu = enumerate_atoms(a, n, cap=direct_cap)
        c = mu.n_atoms
        return SemigroupCount(n=n, count=c, log2_count=math.log2(c),
                              per_step=math.log2(c) / n)
    if n > pair_cap:
        raise CapExceeded(f"semigroup counting refused beyond n = {pair_cap}")
    h = n // 2
    lo_rng = ExponentRange(0, h)
    hi_rng = ExponentRange(h, n)
    if a.is_rational:
        lam = a.as_fraction()
        p, q = lam.numerator, lam.denominator
        pden_pow = n - 1
        t_lo = [p ** j * q ** (pden_pow - j) for j in range(lo_rng.lo, lo_rng.hi)]
        t_hi = [p ** j * q ** (pden_pow - j) for j in range(hi_rng.lo, hi_rng.hi)]
        bound = sum(t_lo) + sum(t_hi)
        if bound >= _INT64_SAFE:
            raise CapExceeded("coordinate growth exceeds int64 for the "
                              "meet-in-the-middle pass; lower n")
        lo_vals, _ = _enumerate_keys_numpy(t_lo, 1, 1)
        hi_vals, _ = _enumerate_keys_numpy(t_hi, 1, 1)
    else:
        rows_all, den = _coord_terms(a, ExponentRange(0, n))
        d = a.degree
        bounds = [sum(abs(r[i]) for r in rows_all) for i in range(d)]
        strides = [2 * b + 1 for b in bounds]
        total = 1
        for s in strides:
            total *= s
        if total >= _INT64_SAFE:
            raise CapExceeded("coordinate growth exceeds int64 packing for "
                              "the meet-in-the-middle pass; lower n")
        mults = [1] * d
        for i in range(1, d):
            mults[i] = mults[i - 1] * strides[i - 1]
        keys = [sum(r[i] * mults[i] for i in range(d)) for r in rows_all]
        lo_vals, _ = _enumerate_keys_numpy(keys[:h], 1, 1)
        hi_vals, _ = _enumerate_keys_numpy(keys[h:], 1, 1)
    # distinct pairwise sums, accumulated in blocks
    seen: Optional[np.ndarray] = None
    block = max(1, (1 << 22) // max(1, len(lo_vals)))
    for start in range(0, len(hi_vals), block):
        chunk = hi_vals[start:start + block]
        sums = (lo_vals[None, :] + chunk[:, None]).ravel()
        sums = np.unique(sums)
        if seen is None:
            seen = sums
        else:
            seen = np.union1d(seen, sums)
        if len(seen) > distinct_budget:
            raise CapExceeded(
                f"distinct-sum count passed the budget {distinct_budget}")
    c = int(len(seen))
    return SemigroupCount(n=n, count=c, log2_count=math.log2(c),
                          per_step=math.log2(c) / n)


# ---------------------------------------------------------------------------
# measure algebra
# ---------------------------------------------------------------------------


def convolve(mu: AtomicMeasure, nu: AtomicMeasure) -> AtomicMeasure:
    """Exact convolution (distribution of the sum of independent draws)."""
    if mu.carrier != nu.carrier:
        raise InvalidInput("convolution needs a common carrier")
    meta = GenerationMeta(kind="convolution")
    if mu.carrier == "rational":
        den = mu.pos_den * nu.pos_den // math.gcd(mu.pos_den, nu.pos_den)
        fa = den // mu.pos_den
        fb = den // nu.pos_den
        acc: dict[int, int] = {}
        for i in range(mu.n_atoms):
            xi = int(mu.pos_num[i]) * fa
            ci = int(mu.counts[i])
            for j in range(nu.n_atoms):
                key = xi + int(nu.pos_num[j]) * fb
                acc[key] = acc.get(key, 0) + ci * int(nu.counts[j])
        items = sorted(acc.items())
        return AtomicMeasure(carrier="rational",
                             counts=[w for _, w in items],
                             mass_den=mu.mass_den * nu.mass_den,
                             pos_num=[v for v, _ in items], pos_den=den,
                             meta=meta, _trust_sorted=True)
    if mu.field is not nu.field and mu.field.min_poly.coeffs != nu.field.min_poly.coeffs:
        raise InvalidInput("algebraic convolution needs a common field")
    den = mu.coords_den * nu.coords_den // math.gcd(mu.coords_den, nu.coords_den)
    fa = den // mu.coords_den
    fb = den // nu.coords_den
    acc2: dict[tuple, int] = {}
    for i in range(mu.n_atoms):
        ci = int(mu.counts[i])
        vi = tuple(int(x) * fa for x in mu.coords[i])
        for j in range(nu.n_atoms):
            key = tuple(a + int(b) * fb for a, b in zip(vi, nu.coords[j]))
            acc2[key] = acc2.get(key, 0) + ci * int(nu.counts[j])
    vec_list = list(acc2.keys())
    order = _certified_sort_algebraic(mu.field, den, vec_list)
    coords = [vec_list[i] for i in order]
    counts = [acc2[vec_list[i]] for i in order]
    return AtomicMeasure(carrier="algebraic", counts=counts,
                         mass_den=mu.mass_den * nu.mass_den,
                         coords=coords, coords_den=den, field=mu.field,
                         meta=meta)


def scale_by_ratio_power(mu: AtomicMeasure, a: Union[AlgebraicNumber, Fraction],
                         k: int) -> AtomicMeasure:
    """Pushforward of mu under x -> a^k x, exactly."""
    if k < 0:
        raise InvalidInput("need k >= 0")
    if k == 0:
        return mu
    meta = GenerationMeta(kind="scaled")
    if mu.carrier == "rational":
        if isinstance(a, AlgebraicNumber):
            a = a.as_fraction()
        f = Fraction(a) ** k
        if f <= 0:
            raise InvalidInput("scaling ratio must be positive")
        num_f, den_f = f.numerator, f.denominator
        den = mu.pos_den * den_f
        nums = [int(n) * num_f for n in mu.pos_num]
        g = math.gcd(math.gcd(*nums) if len(nums) > 1 else abs(nums[0]), den)
        if g > 1:
            nums = [x // g for x in nums]
            den //= g
        counts = [int(c) for c in mu.counts]
        return AtomicMeasure(carrier="rational", counts=counts,
                             mass_den=mu.mass_den, pos_num=nums, pos_den=den,
                             meta=meta, _trust_sorted=True)
    if not isinstance(a, AlgebraicNumber):
        raise InvalidInput("scaling an algebraic-carrier measure needs the field generator")
    field = mu.field
    pk = a.power_coords(k)
    den_pk = 1
    for c in pk:
        den_pk = den_pk * c.denominator // math.gcd(den_pk, c.denominator)
    pk_int = tuple(int(c * den_pk) for c in pk)
    d = field.degree
    table = field._reduction_table()
    new_coords = []
    for row in mu.coords:
        # multiply (row . basis) by (pk . basis) and reduce
        prod = [0] * (2 * d - 1)
        for i in range(d):
            ri = int(row[i])
            if ri == 0:
                continue
            for j in range(d):
                prod[i + j] += ri * pk_int[j]
        out = [Fraction(c) for c in prod[:d]]
        for idx in range(d, 2 * d - 1):
            c = prod[idx]
            if c:
                trow = table[idx]
                for j in range(d):
                    out[j] += c * trow[j]
        new_coords.append(tuple(out))
    # positive scaling preserves order (a^k > 0)
    den_all = mu.coords_den * den_pk
    lcm = 1
    for vec in new_coords:
        for c in vec:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    coords_int = [tuple(int(c * lcm) for c in vec) for vec in new_coords]
    counts = [int(c) for c in mu.counts]
    return AtomicMeasure(carrier="algebraic", counts=counts,
                         mass_den=mu.mass_den, coords=coords_int,
                         coords_den=den_all * lcm,
                         field=field, meta=meta)


def translate(mu: AtomicMeasure, c: Fraction) -> AtomicMeasure:
    """Pushforward of mu under x -> x + c for rational c, exactly."""
    c = Fraction(c)
    meta = GenerationMeta(kind="scaled")
    if mu.carrier == "rational":
        den = mu.pos_den * c.denominator // math.gcd(mu.pos_den, c.denominator)
        f = den // mu.pos_den
        off = int(c * den)
        nums = [int(n) * f + off for n in mu.pos_num]
        return AtomicMeasure(carrier="rational",
                             counts=[int(x) for x in mu.counts],
                             mass_den=mu.mass_den, pos_num=nums, pos_den=den,
                             meta=meta, _trust_sorted=True)
    den = mu.coords_den * c.denominator // math.gcd(mu.coords_den, c.denominator)
    f = den // mu.coords_den
    off = int(c * den)
    coords = []
    for row in mu.coords:
        vec = [int(x) * f for x in row]
        vec[0] += off
        coords.append(tuple(vec))
    return AtomicMeasure(carrier="algebraic",
                         counts=[int(x) for x in mu.counts],
                         mass_den=mu.mass_den, coords=coords, coords_den=den,
                         field=mu.field, meta=meta)


def negate(mu: AtomicMeasure) -> AtomicMeasure:
    """Pushforward under x -> -x (the approximants are all symmetric for
    bias 1/2, which makes this a cheap sanity check)."""
    meta = GenerationMeta(kind="scaled")
    if mu.carrier == "rational":
        nums = [-int(n) for n in reversed(mu.pos_num)]
        counts = [int(c) for c in reversed(mu.counts)]
        return AtomicMeasure(carrier="rational", counts=counts,
                             mass_den=mu.mass_den, pos_num=nums,
                             pos_den=mu.pos_den, meta=meta, _trust_sorted=True)
    coords = [tuple(-int(x) for x in row) for row in reversed(list(mu.coords))]
    counts = [int(c) for c in reversed(list(mu.counts))]
    return AtomicMeasure(carrier="algebraic", counts=counts,
                         mass_den=mu.mass_den, coords=coords,
                         coords_den=mu.coords_den, field=mu.field, meta=meta)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_BIN_MAGIC = b"BCVA"
_BIN_VERSION = 1


def measure_to_dict(mu: AtomicMeasure) -> dict:
    out = {
        "format": "bconv-atoms",
        "version": 1,
        "carrier": mu.carrier,
        "n_atoms": mu.n_atoms,
        "mass_den": str(mu.mass_den),
        "counts": [str(int(c)) for c in mu.counts],
    }
    if mu.carrier == "rational":
        out["pos_den"] = str(mu.pos_den)
        out["pos_num"] = [str(int(n)) for n in mu.pos_num]
    else:
        out["min_poly"] = list(mu.field.min_poly.coeffs)
        lo, hi = mu.field.interval()
        out["interval"] = [f"{lo.numerator}/{lo.denominator}",
                           f"{hi.numerator}/{hi.denominator}"]
        out["irreducibility"] = mu.field.irreducibility
        out["coords_den"] = str(mu.coords_den)
        out["coords"] = [[str(int(c)) for c in row] for row in mu.coords]
    return out


def measure_from_dict(data: dict) -> AtomicMeasure:
    if data.get("format") != "bconv-atoms":
        raise InvalidInput("not a bconv atoms document")
    if int(data.get("version", 0)) != 1:
        raise InvalidInput(f"unsupported atoms format version {data.get('version')}")
    carrier = data["carrier"]
    counts = [int(c) for c in data["counts"]]
    mass_den = int(data["mass_den"])
    if carrier == "rational":
        return AtomicMeasure(carrier="rational", counts=counts,
                             mass_den=mass_den,
                             pos_num=[int(x) for x in data["pos_num"]],
                             pos_den=int(data["pos_den"]))
    poly = IntPolynomial(data["min_poly"])
    lo_s, hi_s = data["interval"]
    field = AlgebraicNumber(poly, Fraction(lo_s), Fraction(hi_s),
                            irreducibility=data.get("irreducibility", "proved"))
    coords = [tuple(int(c) for c in row) for row in data["coords"]]
    return AtomicMeasure(carrier="algebraic", counts=counts, mass_den=mass_den,
                         coords=coords, coords_den=int(data["coords_den"]),
                         field=field)


def save_json(mu: AtomicMeasure, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(measure_to_dict(mu), fh, separators=(",", ":"))
        fh.write("\n")


def load_json(path: str) -> AtomicMeasure:
    with open(path) as fh:
        return measure_from_dict(json.load(fh))


def save_binary(mu: AtomicMeasure, path: str) -> None:
    """Compact binary form: a fixed little-endian header, a JSON metadata
    blob (denominators, field data), then raw little-endian int64 arrays.
    Refuses measures whose integer data does not fit int64 -- use the JSON
    form for those."""
    header_meta = {"carrier": mu.carrier, "mass_den": str(mu.mass_den)}
    if mu.carrier == "rational":
        arrays = [np.asarray(mu.pos_num, dtype=object),
                  np.asarray(mu.counts, dtype=object)]
        header_meta["pos_den"] = str(mu.pos_den)
        header_meta["arrays"] = ["pos_num", "counts"]
    else:
        flat = [int(c) for row in mu.coords for c in row]
        arrays = [np.asarray(flat, dtype=object),
                  np.asarray(mu.counts, dtype=object)]
        header_meta["coords_den"] = str(mu.coords_den)
        header_meta["degree"] = mu.field.degree
        header_meta["min_poly"] = list(mu.field.min_poly.coeffs)
        lo, hi = mu.field.interval()
        header_meta["interval"] = [f"{lo.numerator}/{lo.denominator}",
                                   f"{hi.numerator}/{hi.denominator}"]
        header_meta["irreducibility"] = mu.field.irreducibility
        header_meta["arrays"] = ["coords_flat", "counts"]
    packed = []
    for arr in arrays:
        ints = [int(x) for x in arr]
        if any(abs(x) >= _INT64_SAFE for x in ints):
            raise CapExceeded("integer data exceeds int64; use the JSON form")
        packed.append(np.asarray(ints, dtype="<i8"))
    blob = json.dumps(header_meta, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<HI", _BIN_VERSION, len(blob)))
        fh.write(blob)
        for arr in packed:
            fh.write(struct.pack("<Q", len(arr)))
            fh.write(arr.tobytes())


def load_binary(path: str) -> AtomicMeasure:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BIN_MAGIC:
            raise InvalidInput("not a bconv binary atoms file")
        version, blob_len = struct.unpack("<HI", fh.read(6))
        if version != _BIN_VERSION:
            raise InvalidInput(f"unsupported binary version {version}")
        meta = json.loads(fh.read(blob_len).decode())
        arrays = []
        for _ in meta["arrays"]:
            (count,) = struct.unpack("<Q", fh.read(8))
            arrays.append(np.frombuffer(fh.read(8 * count), dtype="<i8"))
    counts = arrays[-1].astype(np.int64)
    mass_den = int(meta["mass_den"])
    if meta["carrier"] == "rational":
        return AtomicMeasure(carrier="rational", counts=counts,
                             mass_den=mass_den,
                             pos_num=arrays[0].astype(np.int64),
                             pos_den=int(meta["pos_den"]))
    d = int(meta["degree"])
    coords = arrays[0].astype(np.int64).reshape(-1, d)
    poly = IntPolynomial(meta["min_poly"])
    field = AlgebraicNumber(poly, Fraction(meta["interval"][0]),
                            Fraction(meta["interval"][1]),
                            irreducibility=meta.get("irreducibility", "proved"))
    return AtomicMeasure(carrier="algebraic", counts=counts, mass_den=mass_den,
                         coords=coords, coords_den=int(meta["coords_den"]),
                         field=field)
