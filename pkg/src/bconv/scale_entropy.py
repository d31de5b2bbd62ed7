"""Entropy of a measure observed at a finite scale.

The scale-r entropy used throughout is translation averaged:

    H(mu; r) = integral over t in [0,1) of H(floor(x/r + t)) dt,

the Shannon entropy of mu pushed to the partition {[ (k-t) r, (k+1-t) r )},
averaged over the phase t.  Averaging removes the artifacts of any one
grid placement and makes H monotone under convolution, which the tail
bounds here rely on.

As t sweeps [0, 1) the bucket of atom i changes exactly once, at
t = 1 - frac(x_i / r); the integrand is piecewise constant between these
breakpoints.  The sweep below walks the breakpoints in exact order
(integer arithmetic on the rational carrier, certified comparisons on the
algebraic one), so the only inexactness in the reported value is float
rounding in the logarithms.  A vectorized variant handles measures with
millions of atoms; its positions pass through extended-precision floats
and it reports an explicit error bound instead of claiming exactness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Optional, Sequence, Union

import numpy as np

from .algebraic import AlgebraicNumber, FieldElement
from .atoms import AtomicMeasure, enumerate_atoms, shannon_entropy
from .errors import CapExceeded, InvalidInput, PrecisionError

_BUCKET_CAP = 1 << 26
_VECTOR_CUTOFF = 60_000


@dataclass(frozen=True)
class ScaleEntropy:
    """H(mu; r) with provenance.  err_bound is an upper bound on the
    absolute error of `value` coming from the method itself (not from
    truncating the measure; that is the caller's ledger)."""
    value: float
    r: Fraction
    method: str
    n_atoms: int
    n_events: int
    err_bound: float

    @property
    def bits(self) -> float:
        return self.value


def _phi(c: float) -> float:
    return c * math.log2(c) if c > 0 else 0.0


# ---------------------------------------------------------------------------
# exact sweep, rational carrier
# ---------------------------------------------------------------------------


def _sweep_rational_exact(nums: Sequence[int], den: int,
                          counts: Sequence[int], T: int) -> tuple[float, int]:
    """Exact event sweep.  y_i = nums[i]/den; returns (H, n_events)."""
    occ: dict[int, int] = {}
    rems: dict[int, list[int]] = {}
    for i, nv in enumerate(nums):
        nv = int(nv)
        b = nv // den
        rem = nv % den
        occ[b] = occ.get(b, 0) + int(counts[i])
        if rem:
            rems.setdefault(rem, []).append(i)
    S = math.fsum(_phi(c) for c in occ.values())
    logT = math.log2(T)
    integral = 0.0
    prev = Fraction(0)
    # tau = (den - rem)/den ascending means rem descending
    for rem in sorted(rems, reverse=True):
        t = Fraction(den - rem, den)
        integral += float(t - prev) * (logT - S / T)
        for i in rems[rem]:
            nv = int(nums[i])
            b = nv // den
            m = int(counts[i])
            for bb, dm in ((b, -m), (b + 1, m)):
                old = occ.get(bb, 0)
                new = old + dm
                S += _phi(new) - _phi(old)
                occ[bb] = new
        prev = t
    integral += float(1 - prev) * (logT - S / T)
    return integral, len(rems)


def _sweep_rational_vector(nums: np.ndarray, den: int,
                           counts: np.ndarray, T: int) -> tuple[float, int]:
    """Vectorized sweep with exact integer event structure.  Uses the
    telescoping identity  integral = phi(c(0)) + sum over events of
    (1 - t_e) * (phi(after) - phi(before))  per bucket."""
    nums = np.asarray(nums)
    b = nums // den
    rem = nums % den
    bmin, bmax = int(b.min()), int(b.max())
    width = bmax - bmin + 2
    if width > _BUCKET_CAP:
        raise CapExceeded(f"bucket range {width} exceeds the cap {_BUCKET_CAP}")
    b0 = (b - bmin).astype(np.int64)
    base = np.bincount(b0, weights=counts.astype(np.float64),
                       minlength=width)
    mask = rem > 0
    eb = np.concatenate((b0[mask], b0[mask] + 1))
    erem = np.concatenate((rem[mask], rem[mask]))
    edelta = np.concatenate((-counts[mask], counts[mask])).astype(np.float64)
    n_events = int(mask.sum())
    if len(eb):
        # tau ascending within bucket = rem descending; sort by
        # (bucket, -rem) using exact integers
        order = np.lexsort((-erem, eb))
        sb, srem, sd = eb[order], erem[order], edelta[order]
        csum = np.cumsum(sd)
        starts = np.empty(len(sb), dtype=bool)
        starts[0] = True
        starts[1:] = sb[1:] != sb[:-1]
        run_id = np.cumsum(starts) - 1
        start_idx = np.nonzero(starts)[0]
        offsets = np.where(start_idx > 0, csum[start_idx - 1], 0.0)
        within = csum - offsets[run_id]
        c_after = base[sb] + within
        c_before = c_after - sd
        tau = (den - srem).astype(np.float64) / float(den)
        phi_after = np.where(c_after > 0, c_after * np.log2(
            np.where(c_after > 0, c_after, 1.0)), 0.0)
        phi_before = np.where(c_before > 0, c_before * np.log2(
            np.where(c_before > 0, c_before, 1.0)), 0.0)
        correction = float(np.sum((1.0 - tau) * (phi_after - phi_before)))
    else:
        correction = 0.0
    static = float(np.sum(np.where(base > 0, base * np.log2(
        np.where(base > 0, base, 1.0)), 0.0)))
    integral = static + correction
    return math.log2(T) - integral / T, n_events


# ---------------------------------------------------------------------------
# exact sweep, algebraic carrier
# ---------------------------------------------------------------------------


def _field_floor(field: AlgebraicNumber, coords: tuple, bits: int = 64) -> int:
    """Certified floor of a field element given by Fraction coords."""
    if all(c == 0 for c in coords[1:]):
        return math.floor(coords[0])
    while True:
        lo, hi = field.eval_coords_interval(coords, bits)
        fl, fh = math.floor(lo), math.floor(hi)
        if fl == fh:
            return fl
        bits *= 2
        if bits > (1 << 14):
            raise PrecisionError("floor refused to stabilize; position is "
                                 "suspiciously close to a bucket boundary")


def _sweep_algebraic_exact(mu: AtomicMeasure, r: Fraction) -> tuple[float, int]:
    field = mu.field
    den = mu.coords_den * r.numerator
    scale = r.denominator
    T = mu.mass_den
    # y_i coords = coords_i * r.den / (coords_den * r.num)
    fracs = []   # (frac coords tuple, float approx, index)
    occ: dict[int, int] = {}
    items = []
    for i in range(mu.n_atoms):
        row = mu.coords[i]
        ycoords = tuple(Fraction(int(c) * scale, den) for c in row)
        b = _field_floor(field, ycoords)
        occ[b] = occ.get(b, 0) + int(mu.counts[i])
        fcoords = (ycoords[0] - b,) + ycoords[1:]
        if all(c == 0 for c in fcoords):
            continue  # exact integer position: never moves on [0, 1)
        lo, hi = field.eval_coords_interval(fcoords, 80)
        items.append((fcoords, float((lo + hi) / 2), i, b))

    def cmp(u, v):
        if abs(u[1] - v[1]) > 2.0 ** -70:
            return -1 if u[1] < v[1] else 1
        diff = tuple(a - b for a, b in zip(u[0], v[0]))
        return FieldElement(field, diff).sign()

    items.sort(key=cmp_to_key(cmp))
    S = math.fsum(_phi(c) for c in occ.values())
    logT = math.log2(T)
    integral = 0.0
    prev_t = 0.0
    n_events = 0
    k = 0
    # sweep fracs in DESCENDING order of frac = ascending tau; items are
    # ascending by frac, so walk from the end
    idx = len(items) - 1
    while idx >= 0:
        group = [items[idx]]
        j = idx - 1
        while j >= 0:
            diff = tuple(a - b for a, b in zip(items[j][0], items[idx][0]))
            if abs(items[j][1] - items[idx][1]) <= 2.0 ** -70 and \
                    FieldElement(field, diff).sign() == 0:
                group.append(items[j])
                j -= 1
            else:
                break
        frac_lo, frac_hi = field.eval_coords_interval(group[0][0], 80)
        t = 1.0 - float((frac_lo + frac_hi) / 2)
        integral += (t - prev_t) * (logT - S / T)
        for fcoords, _, i, b in group:
            m = int(mu.counts[i])
            for bb, dm in ((b, -m), (b + 1, m)):
                old = occ.get(bb, 0)
                new = old + dm
                S += _phi(new) - _phi(old)
                occ[bb] = new
        n_events += 1
        prev_t = t
        idx = j
    integral += (1.0 - prev_t) * (logT - S / T)
    return integral, n_events


def _sweep_algebraic_vector(mu: AtomicMeasure, r: Fraction) -> tuple[float, int, float]:
    """Large algebraic measures: positions via extended-precision floats,
    exact integer occupancy, explicit error bound on the result."""
    field = mu.field
    d = field.degree
    lo, hi = field.refine_bits(96)
    mid = (lo + hi) / 2
    v = (mid.numerator << 64) // mid.denominator   # 0 < v < 2^64
    lam = (np.longdouble(v >> 32) * np.longdouble(1 << 32) +
           np.longdouble(v & 0xFFFFFFFF)) / np.longdouble(1 << 64)
    powers = np.array([lam ** i for i in range(d)], dtype=np.longdouble)
    arr = np.asarray(mu.coords, dtype=np.longdouble)
    y = (arr @ powers) / np.longdouble(mu.coords_den)
    y = y * np.longdouble(r.denominator) / np.longdouble(r.numerator)
    b = np.floor(y).astype(np.int64)
    frac = (y - np.floor(y)).astype(np.float64)
    counts = np.asarray(mu.counts, dtype=np.int64)
    T = mu.mass_den
    bmin = int(b.min())
    width = int(b.max()) - bmin + 2
    if width > _BUCKET_CAP:
        raise CapExceeded(f"bucket range {width} exceeds the cap {_BUCKET_CAP}")
    b0 = b - bmin
    base = np.bincount(b0, weights=counts.astype(np.float64), minlength=width)
    mask = frac > 0
    eb = np.concatenate((b0[mask], b0[mask] + 1))
    efrac = np.concatenate((frac[mask], frac[mask]))
    edelta = np.concatenate((-counts[mask], counts[mask])).astype(np.float64)
    if len(eb):
        order = np.lexsort((-efrac, eb))
        sb, sfrac, sd = eb[order], efrac[order], edelta[order]
        csum = np.cumsum(sd)
        starts = np.empty(len(sb), dtype=bool)
        starts[0] = True
        starts[1:] = sb[1:] != sb[:-1]
        run_id = np.cumsum(starts) - 1
        start_idx = np.nonzero(starts)[0]
        offsets = np.where(start_idx > 0, csum[start_idx - 1], 0.0)
        within = csum - offsets[run_id]
        c_after = base[sb] + within
        c_before = c_after - sd
        tau = 1.0 - sfrac
        phi_after = np.where(c_after > 0, c_after * np.log2(
            np.where(c_after > 0, c_after, 1.0)), 0.0)
        phi_before = np.where(c_before > 0, c_before * np.log2(
            np.where(c_before > 0, c_before, 1.0)), 0.0)
        correction = float(np.sum((1.0 - tau) * (phi_after - phi_before)))
    else:
        correction = 0.0
    static = float(np.sum(np.where(base > 0, base * np.log2(
        np.where(base > 0, base, 1.0)), 0.0)))
    integral = static + correction
    value = math.log2(T) - integral / T
    # error: each event time carries |tau error| <= tau_err from the
    # longdouble positions; a misplaced event misattributes at most
    # tau_err * |delta phi| / T <= tau_err * (log2 T + 2) of the average
    maxabs = float(np.max(np.abs(np.asarray(mu.coords, dtype=np.float64)))) \
        if mu.n_atoms else 0.0
    pos_err = (d + 2) * maxabs * 2.0 ** -62 / float(mu.coords_den)
    tau_err = pos_err * float(Fraction(r.denominator, r.numerator)) + 2.0 ** -52
    n_events = int(mask.sum())
    err = 2.0 * n_events * tau_err * (math.log2(max(T, 2)) + 2.0)
    return value, n_events, err


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def entropy_at_scale(mu: AtomicMeasure, r, method: str = "auto") -> ScaleEntropy:
    """Translation-averaged entropy of mu at scale r (a positive
    rational).  method: "auto", "exact" (breakpoint sweep), or "vector"
    (vectorized sweep; approximate positions on the algebraic carrier).
    """
    r = Fraction(r)
    if r <= 0:
        raise InvalidInput("scale must be positive")
    if method not in ("auto", "exact", "vector"):
        raise InvalidInput(f"unknown method {method!r}")
    if mu.carrier == "rational":
        # y_i = pos_num * r.den / (pos_den * r.num)
        den = mu.pos_den * r.numerator
        if isinstance(mu.pos_num, np.ndarray) and \
                int(np.max(np.abs(mu.pos_num))) * r.denominator < (1 << 62) \
                and den < (1 << 62):
            nums_np = mu.pos_num * np.int64(r.denominator)
            use_np = True
        else:
            nums = [int(nv) * r.denominator for nv in mu.pos_num]
            use_np = False
        if method == "exact" or (method == "auto" and mu.n_atoms <= _VECTOR_CUTOFF) \
                or not use_np:
            if use_np:
                nums = [int(nv) for nv in nums_np]
            h, ne = _sweep_rational_exact(nums, den, mu.counts, mu.mass_den)
            return ScaleEntropy(value=h, r=r, method="exact-breakpoint",
                                n_atoms=mu.n_atoms, n_events=ne,
                                err_bound=1e-10)
        h, ne = _sweep_rational_vector(nums_np, den,
                                       np.asarray(mu.counts), mu.mass_den)
        return ScaleEntropy(value=h, r=r, method="vector-sweep",
                            n_atoms=mu.n_atoms, n_events=ne, err_bound=1e-9)
    if method == "exact" or (method == "auto" and mu.n_atoms <= 20_000):
        h, ne = _sweep_algebraic_exact(mu, r)
        return ScaleEntropy(value=h, r=r, method="exact-breakpoint",
                            n_atoms=mu.n_atoms, n_events=ne, err_bound=1e-9)
    h, ne, err = _sweep_algebraic_vector(mu, r)
    return ScaleEntropy(value=h, r=r, method="vector-sweep-approx",
                        n_atoms=mu.n_atoms, n_events=ne, err_bound=err)


def quadrature_entropy(mu: AtomicMeasure, r, nodes: int = 10_000) -> float:
    """Left-endpoint quadrature of the translation average: evaluates the
    bucket entropy at t = j/nodes with exact integer bucketing
    (floor((num*nodes + j*den) / (den*nodes))) and averages.  Independent
    of the breakpoint sweep; used to cross-check it."""
    r = Fraction(r)
    if r <= 0:
        raise InvalidInput("scale must be positive")
    if mu.carrier != "rational":
        raise InvalidInput("the quadrature oracle runs on the rational carrier")
    den = mu.pos_den * r.numerator
    nums = [int(nv) * r.denominator for nv in mu.pos_num]
    counts = [int(c) for c in mu.counts]
    T = mu.mass_den
    logT = math.log2(T)
    big = den * nodes
    if max(abs(nv) for nv in nums) * nodes + big < (1 << 62) and T < (1 << 53):
        # vectorized: bucket matrix over (node, atom), folded through one
        # flat bincount keyed by node * width + compact bucket
        nv = np.asarray(nums, dtype=np.int64) * nodes
        j = np.arange(nodes, dtype=np.int64)[:, None] * den
        b = (nv[None, :] + j) // big
        bmin = int(b.min())
        width = int(b.max()) - bmin + 1
        keys = (np.arange(nodes, dtype=np.int64)[:, None] * width +
                (b - bmin)).ravel()
        w = np.tile(np.asarray(counts, dtype=np.float64), (nodes, 1)).ravel()
        flat = np.bincount(keys, weights=w, minlength=nodes * width)
        occ = flat.reshape(nodes, width)
        phi = np.where(occ > 0, occ * np.log2(np.where(occ > 0, occ, 1.0)), 0.0)
        S = phi.sum(axis=1)
        return float(np.mean(logT - S / T))
    total = 0.0
    for jj in range(nodes):
        occ2: dict[int, int] = {}
        for nv2, m in zip(nums, counts):
            bb = (nv2 * nodes + jj * den) // big
            occ2[bb] = occ2.get(bb, 0) + m
        S2 = math.fsum(_phi(c) for c in occ2.values())
        total += logT - S2 / T
    return total / nodes


def conditional_entropy(mu: AtomicMeasure, r_fine, r_coarse) -> float:
    """H(mu; r_fine) - H(mu; r_coarse): the information revealed by
    refining the observation scale.  Nonnegative up to float error when
    r_fine divides r_coarse."""
    rf, rc = Fraction(r_fine), Fraction(r_coarse)
    if rf >= rc:
        raise InvalidInput("need r_fine < r_coarse")
    return entropy_at_scale(mu, rf).value - entropy_at_scale(mu, rc).value


# ---------------------------------------------------------------------------
# truncation-based estimates
# ---------------------------------------------------------------------------


def truncation_depth(a: Union[AlgebraicNumber, Fraction], n: int,
                     slack_bits: int = 3) -> int:
    """Smallest k with lambda^k / (1 - lambda) <= 2^-(n + slack_bits):
    truncating the random sum after k terms then moves every point of the
    full measure by less than an eighth of the observation scale 2^-n."""
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    lo, hi = a.refine_bits(40)
    if hi >= 1:
        raise InvalidInput("ratio must be below 1")
    target = Fraction(1, 1 << (n + slack_bits))
    # exact check against the rational upper endpoint
    k = max(1, math.ceil((n + slack_bits + math.log2(float(1 / (1 - hi))))
                         / -math.log2(float(hi))))
    while hi ** k / (1 - hi) > target:
        k += 1
    while k > 1 and hi ** (k - 1) / (1 - hi) <= target:
        k -= 1
    return k


@dataclass(frozen=True)
class DimensionEstimate:
    """H(truncated; 2^-n)/n plus provenance.  `slope` (when a second,
    coarser scale was requested) removes the additive constant:
    (H(2^-n) - H(2^-n_lo)) / (n - n_lo)."""
    n: int
    k_terms: int
    k_ideal: int
    truncated: bool
    entropy: float
    estimate: float
    slope: Optional[float]
    tail_over_scale: float     # (lambda^k / (1-lambda)) * 2^n, < 1/8 if not truncated
    err_bound: float

    def as_dict(self) -> dict:
        return {"n": self.n, "k_terms": self.k_terms, "k_ideal": self.k_ideal,
                "truncated": self.truncated, "entropy": self.entropy,
                "estimate": self.estimate, "slope": self.slope,
                "tail_over_scale": self.tail_over_scale,
                "err_bound": self.err_bound}


def entropy_dim_estimate(a: Union[AlgebraicNumber, Fraction], n: int,
                         n_lo: Optional[int] = None,
                         max_terms: int = 24,
                         bias=Fraction(1, 2)) -> DimensionEstimate:
    """Estimate the entropy dimension of the full measure as
    H(nu_k; 2^-n)/n, with the truncation depth k chosen so the discarded
    tail is far below the scale (or capped at max_terms, flagged)."""
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    k_ideal = truncation_depth(a, n)
    k = min(k_ideal, max_terms)
    mu = enumerate_atoms(a, k, bias=bias, cap=max(k, 26))
    h = entropy_at_scale(mu, Fraction(1, 1 << n))
    slope = None
    if n_lo is not None:
        if not 0 < n_lo < n:
            raise InvalidInput("need 0 < n_lo < n")
        h_lo = entropy_at_scale(mu, Fraction(1, 1 << n_lo))
        slope = (h.value - h_lo.value) / (n - n_lo)
    _, hi = a.refine_bits(40)
    tail = float(hi ** k / (1 - hi)) * 2.0 ** n
    return DimensionEstimate(n=n, k_terms=k, k_ideal=k_ideal,
                             truncated=k < k_ideal, entropy=h.value,
                             estimate=h.value / n, slope=slope,
                             tail_over_scale=tail, err_bound=h.err_bound)


@dataclass(frozen=True)
class DefectReport:
    """d - H(nu_k; 2^-d): how far the measure falls short of filling
    d bits at scale 2^-d.  Because the full measure is the truncation
    convolved with the tail and the translation-averaged entropy never
    decreases under convolution, the reported defect is an upper bound
    for the defect of the full measure, truncated or not."""
    d: int
    k_terms: int
    k_ideal: int
    truncated: bool
    entropy: float
    defect: float
    tail_over_scale: float
    err_bound: float

    def as_dict(self) -> dict:
        return {"d": self.d, "k_terms": self.k_terms, "k_ideal": self.k_ideal,
                "truncated": self.truncated, "entropy": self.entropy,
                "defect": self.defect, "tail_over_scale": self.tail_over_scale,
                "err_bound": self.err_bound}


def ac_defect(a: Union[AlgebraicNumber, Fraction], d_max: int,
              max_terms: int = 22, bias=Fraction(1, 2)) -> list[DefectReport]:
    """defect(d) = d - H(nu; 2^-d) for d = 1..d_max, each an upper bound
    for the full measure's defect (see DefectReport).  One truncation,
    deep enough for the finest scale or capped at max_terms, serves every
    d; the per-point tail_over_scale column records how far below each
    scale the discarded tail sits."""
    if d_max < 1:
        raise InvalidInput("need d_max >= 1")
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    k = min(truncation_depth(a, d_max), max_terms)
    mu = enumerate_atoms(a, k, bias=bias, cap=max(k, 26))
    _, hi = a.refine_bits(40)
    tail0 = hi ** k / (1 - hi)
    out = []
    for d in range(1, d_max + 1):
        h = entropy_at_scale(mu, Fraction(1, 1 << d))
        k_ideal = truncation_depth(a, d)
        out.append(DefectReport(d=d, k_terms=k, k_ideal=k_ideal,
                                truncated=k < k_ideal, entropy=h.value,
                                defect=d - h.value,
                                tail_over_scale=float(tail0) * 2.0 ** d,
                                err_bound=h.err_bound))
    return out


@dataclass(frozen=True)
class SaturationReport:
    """Entropy at scale 2^-d of deeper and deeper truncations.  The
    sequence H(nu_{B*d}; 2^-d) is nondecreasing in B (convolution never
    loses averaged entropy) and stabilizes once the extra terms fall far
    below the scale.  `b_saturated` is the first B whose Bd-term
    truncation already sits within `tol` bits of the reference entropy
    computed at `k_ref` terms."""
    d: int
    b_saturated: Optional[int]
    values: tuple
    h_ref: float
    k_ref: int
    ref_truncated: bool      # k_ref was capped short of the ideal depth
    tol: float

    def as_dict(self) -> dict:
        return {"d": self.d, "b_saturated": self.b_saturated,
                "values": list(self.values), "h_ref": self.h_ref,
                "k_ref": self.k_ref, "ref_truncated": self.ref_truncated,
                "tol": self.tol}


def fine_scale_saturation(a: Union[AlgebraicNumber, Fraction], d: int,
                          tol: float = 0.05, b_max: int = 4,
                          cap: int = 26) -> SaturationReport:
    if d < 1:
        raise InvalidInput("need d >= 1")
    if not isinstance(a, AlgebraicNumber):
        a = AlgebraicNumber.from_rational(Fraction(a))
    r = Fraction(1, 1 << d)
    k_ideal = truncation_depth(a, d, slack_bits=10)
    k_ref = min(cap, k_ideal)
    ref = entropy_at_scale(enumerate_atoms(a, k_ref, cap=cap), r).value
    values = []
    b_sat = None
    for B in range(1, b_max + 1):
        if B * d > cap:
            break
        if B * d == k_ref:
            h = ref
        else:
            h = entropy_at_scale(enumerate_atoms(a, B * d, cap=cap), r).value
        values.append(h)
        if ref - h <= tol:
            b_sat = B
            break
    return SaturationReport(d=d, b_saturated=b_sat, values=tuple(values),
                            h_ref=ref, k_ref=k_ref,
                            ref_truncated=k_ref < k_ideal, tol=tol)
