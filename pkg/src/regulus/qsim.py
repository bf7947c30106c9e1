"""Exact classical simulation of the period-finding measurement pipeline.

The quantum subroutine's state after measuring the function register is
classically determined: it is the uniform superposition over the preimage of
the observed label.  Only that sparse support is ever stored; applying the
zero-filled transform to it gives exact outcome probabilities over Z_{qk}^r,
from which outcomes are drawn, filtered, and mapped to dual-lattice
candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainTooLarge, RestartRequired
from .ideals import Cycle, ExperimentParams, ReducedIdeal

_DENSE_CAP = 2 ** 24
_NORMALISATION_TOL = 2.0 ** -30


def _centre_int(points: np.ndarray) -> np.ndarray:
    """Set member minimising the summed Euclidean distance; ties lexicographic."""
    pts = np.atleast_2d(points)
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    dists = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2).sum(axis=1)
    return pts[int(np.argmin(dists))].copy()


@dataclass
class PreimageState:
    """Sparse support of the post-measurement state, grouped by translate.

    `translate_vectors[t]` is the real lattice vector of translate t;
    `clipped[t]` marks translates whose ideal block was cut by the domain
    edge.  Per-translate centres, half-widths and offsets are measured
    lazily from the points."""

    label: tuple
    points: np.ndarray            # (T, r) int64
    translate_ids: np.ndarray     # (T,) int64
    translate_vectors: np.ndarray  # (m, r) float64
    clipped: np.ndarray           # (m,) bool
    params: ExperimentParams
    ideal: ReducedIdeal | None = None

    @property
    def cardinality(self) -> int:
        return len(self.points)

    @property
    def translate_count(self) -> int:
        return len(self.translate_vectors)

    @cached_property
    def _by_translate(self) -> list[np.ndarray]:
        order = np.argsort(self.translate_ids, kind="stable")
        pts = self.points[order]
        ids = self.translate_ids[order]
        bounds = np.searchsorted(ids, np.arange(self.translate_count + 1))
        return [pts[bounds[t]:bounds[t + 1]] for t in range(self.translate_count)]

    @cached_property
    def centres(self) -> np.ndarray:
        """Per-translate centres (sum-of-distances minimiser, lex ties)."""
        out = np.zeros((self.translate_count, self.params.rank), dtype=np.float64)
        for t, pts in enumerate(self._by_translate):
            if len(pts) == 0:
                continue
            if self.params.rank == 1:
                lo = int(pts.min())
                out[t, 0] = lo + (len(pts) - 1) // 2 if _is_run(pts) else _centre_int(pts)[0]
            else:
                out[t] = _centre_int(pts)
        return out

    @cached_property
    def half_widths(self) -> np.ndarray:
        """Per-translate, per-axis max deviation of support from its centre."""
        out = np.zeros((self.translate_count, self.params.rank), dtype=np.float64)
        for t, pts in enumerate(self._by_translate):
            if len(pts):
                out[t] = np.abs(pts - self.centres[t]).max(axis=0)
        return out

    @cached_property
    def rho(self) -> np.ndarray:
        """Rounding residual of each translate vector, in [-1/2, 1/2]^r."""
        return np.rint(self.translate_vectors) - self.translate_vectors

    @cached_property
    def centre_drift(self) -> np.ndarray:
        """Measured centre displacement relative to the base translate after
        subtracting the exact lattice vector (diagnostic for the cross-
        translate variation bound)."""
        base = int(np.argmin(self.clipped))   # first unclipped translate
        rel = self.centres - self.centres[base]
        lat = self.translate_vectors - self.translate_vectors[base]
        return rel - lat

    def measured_radius(self) -> float:
        """Largest unclipped half-width, in grid units."""
        mask = ~self.clipped
        if not mask.any():
            mask = np.ones(self.translate_count, dtype=bool)
        widths = self.half_widths[mask]
        return float(widths.max()) if len(widths) else 0.0

    def beta(self) -> float:
        """Measured support radius in units of the 1/N grid (the scale of the
        quarter-log-discriminant bound)."""
        return self.measured_radius() / self.params.n_param

    def complete_translates(self) -> int:
        return int((~self.clipped).sum())


def _is_run(pts: np.ndarray) -> bool:
    v = np.sort(pts[:, 0])
    return len(v) == 1 or bool(np.all(np.diff(v) == 1))


def state_from_points(label, points: np.ndarray, params: ExperimentParams,
                      hider, ideal: ReducedIdeal | None = None) -> PreimageState:
    """Group a preimage point set by lattice translate."""
    points = np.atleast_2d(np.asarray(points, dtype=np.int64))
    if points.shape[0] and points.shape[1] != params.rank:
        points = points.reshape(-1, params.rank)
    coords = hider.translate_coords(points)
    uniq, ids = np.unique(coords, axis=0, return_inverse=True)
    vectors = hider.translate_vector(uniq)
    clipped = hider.translate_clipped(uniq, label)
    return PreimageState(
        label=tuple(np.atleast_1d(label).tolist()),
        points=points,
        translate_ids=ids.astype(np.int64),
        translate_vectors=np.atleast_2d(vectors),
        clipped=np.asarray(clipped, dtype=bool),
        params=params,
        ideal=ideal,
    )


class CycleHider:
    """Hiding function of a principal cycle on the integer grid: the label of
    v is the cycle entry nearest v/N mod R."""

    def __init__(self, cycle: Cycle, params: ExperimentParams):
        if params.rank != 1:
            raise ValueError("cycle hider is one-dimensional")
        self.cycle = cycle
        self.params = params
        self._r = cycle.regulator_f
        self._deltas = cycle._deltas_f

    def label_of(self, points) -> np.ndarray:
        v = np.atleast_2d(np.asarray(points))[:, 0]
        idx = self.cycle.label_indices(v / self.params.n_param)
        return idx.reshape(-1, 1).astype(np.int64)

    def label_key(self, point) -> tuple[int, ...]:
        return (int(self.label_of(np.atleast_2d(point))[0, 0]),)

    def ideal_of(self, label) -> ReducedIdeal:
        return self.cycle.entries[int(np.atleast_1d(label)[0])][0]

    def translate_coords(self, points) -> np.ndarray:
        v = np.atleast_2d(np.asarray(points))[:, 0].astype(np.float64)
        idx = self.label_of(points)[:, 0]
        delta = self._deltas[idx]
        j = np.rint((v / self.params.n_param - delta) / self._r)
        return j.reshape(-1, 1).astype(np.int64)

    def translate_vector(self, coords) -> np.ndarray:
        j = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        return j * self.params.n_param * self._r

    def _block_interval(self, j: int, label_idx: int) -> tuple[int, int]:
        """Ideal (unclipped) integer endpoints of translate j's block."""
        lo, hi = self.cycle.cell_bounds(label_idx)
        n = self.params.n_param
        a = math.ceil(n * (j * self._r + lo))
        b = math.ceil(n * (j * self._r + hi)) - 1
        return a, b

    def translate_clipped(self, coords, label) -> np.ndarray:
        li = int(np.atleast_1d(label)[0])
        out = []
        for j in np.atleast_2d(coords)[:, 0]:
            a, b = self._block_interval(int(j), li)
            out.append(a < 0 or b > self.params.q - 1)
        return np.array(out, dtype=bool)

    def preimage_points(self, label) -> np.ndarray:
        """All v in [0, q) with the given label, via translated cell blocks
        filtered through the canonical label map."""
        li = int(np.atleast_1d(label)[0])
        q, n = self.params.q, self.params.n_param
        lo, hi = self.cycle.cell_bounds(li)
        j_lo = math.floor((0 / n - hi) / self._r) - 1
        j_hi = math.ceil((q / n - lo) / self._r) + 1
        chunks = []
        for j in range(j_lo, j_hi + 1):
            a, b = self._block_interval(j, li)
            a, b = max(a - 2, 0), min(b + 2, q - 1)
            if a > b:
                continue
            cand = np.arange(a, b + 1, dtype=np.int64)
            keep = self.label_of(cand.reshape(-1, 1))[:, 0] == li
            if keep.any():
                chunks.append(cand[keep])
        if not chunks:
            return np.zeros((0, 1), dtype=np.int64)
        allv = np.unique(np.concatenate(chunks))
        return allv.reshape(-1, 1)


def collapse(f, params: ExperimentParams, rng: np.random.Generator,
             min_complete_translates: int = 2) -> PreimageState:
    """Measure the function register: draw w uniformly, return the full
    preimage of its label, grouped by translate.

    Raises RestartRequired when fewer than `min_complete_translates`
    translates survive inside the domain untruncated, i.e. when no
    periodicity is visible and the run must be restarted."""
    w = rng.integers(0, params.q, size=params.rank)
    label = f.label_key(w)
    points = f.preimage_points(label)
    ideal = f.ideal_of(label) if hasattr(f, "ideal_of") else None
    state = state_from_points(label, points, params, f, ideal=ideal)
    if state.complete_translates() < min_complete_translates:
        raise RestartRequired(
            f"label {label}: {state.complete_translates()} complete translates")
    return state


@dataclass
class SpectrumDistribution:
    """Exact outcome probabilities of the zero-filled transform over Z_{qk}^r."""

    probs: np.ndarray          # shape (qk,)*r
    q: int
    k: int
    rank: int

    def __post_init__(self):
        total = float(self.probs.sum())
        if abs(total - 1.0) > _NORMALISATION_TOL:
            raise ArithmeticError(f"spectrum not normalised: sum={total!r}")

    @property
    def qk(self) -> int:
        return self.q * self.k

    def prob(self, c) -> float:
        idx = tuple(int(x) % self.qk for x in np.atleast_1d(c))
        return float(self.probs[idx])

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        flat = self.probs.reshape(-1)
        u = rng.random() * flat.sum()
        pos = int(np.searchsorted(np.cumsum(flat), u))
        pos = min(pos, flat.size - 1)
        return tuple(int(x) for x in np.unravel_index(pos, self.probs.shape))

    def nonzero_items(self, threshold: float = 2.0 ** -40):
        """(c, probability) pairs with probability above the dust threshold."""
        idx = np.argwhere(self.probs > threshold)
        for ix in idx:
            yield tuple(int(x) for x in ix), float(self.probs[tuple(ix)])


def qft_spectrum(state: PreimageState, params: ExperimentParams) -> SpectrumDistribution:
    """P(c) = |sum_w exp(2*pi*i*(w.c)/(qk))|^2 / ((qk)^r T) for all c.

    Dense zero-padded fast-transform path; domain capped at 2^24 points."""
    qk, r = params.qk, params.rank
    if qk ** r > _DENSE_CAP:
        raise DomainTooLarge(f"(qk)^r = {qk ** r} exceeds dense cap 2^24")
    t = state.cardinality
    if t < 1:
        raise ValueError("empty support")
    shape = (qk,) * r
    ind = np.zeros(shape, dtype=np.float64)
    ind[tuple(state.points.T)] = 1.0
    amp = np.fft.ifftn(ind) * (qk ** r)
    probs = (amp.real ** 2 + amp.imag ** 2) / (qk ** r * t)
    return SpectrumDistribution(probs=probs, q=params.q, k=params.k, rank=r)


def spectrum_probability(state: PreimageState, params: ExperimentParams,
                         c_points: np.ndarray) -> np.ndarray:
    """Direct sparse summation of the same probabilities at selected c.

    Consecutive support runs are summed in closed form, so the cost is
    (number of runs) x (number of c points) regardless of q^r."""
    qk = params.qk
    t = state.cardinality
    cs = np.atleast_2d(np.asarray(c_points, dtype=np.int64))
    if params.rank == 1:
        starts, lengths = _runs_1d(state.points[:, 0])
        amp = _run_sum(starts, lengths, cs[:, 0], qk)
    elif params.rank == 2:
        amp = np.zeros(len(cs), dtype=np.complex128)
        pts = state.points[np.lexsort((state.points[:, 1], state.points[:, 0]))]
        rows, row_start = np.unique(pts[:, 0], return_index=True)
        bounds = np.append(row_start, len(pts))
        for i, row in enumerate(rows):
            seg = pts[bounds[i]:bounds[i + 1], 1]
            starts, lengths = _runs_1d(seg)
            rowamp = _run_sum(starts, lengths, cs[:, 1], qk)
            amp += np.exp(2j * np.pi * (int(row) * cs[:, 0]) / qk) * rowamp
    else:
        raise DomainTooLarge("sparse path implemented for rank <= 2")
    return (amp.real ** 2 + amp.imag ** 2) / (qk ** params.rank * t)


def _runs_1d(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.sort(np.asarray(values, dtype=np.int64))
    if len(v) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    breaks = np.where(np.diff(v) > 1)[0]
    starts = v[np.r_[0, breaks + 1]]
    ends = v[np.r_[breaks, len(v) - 1]]
    return starts, ends - starts + 1


def _run_sum(starts: np.ndarray, lengths: np.ndarray, cs: np.ndarray,
             qk: int) -> np.ndarray:
    """sum over runs of e(start*c) * (e(len*c) - 1)/(e(c) - 1), e(x) =
    exp(2*pi*i*x/qk)."""
    out = np.zeros(len(cs), dtype=np.complex128)
    chunk = max(1, 2 ** 22 // max(len(starts), 1))
    for lo in range(0, len(cs), chunk):
        c = cs[lo:lo + chunk].astype(np.float64)
        phase = np.exp(2j * np.pi * np.outer(starts, c) / qk)
        x = np.exp(2j * np.pi * c / qk)
        num = np.exp(2j * np.pi * np.outer(lengths, c) / qk) - 1.0
        den = x - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            geo = np.where(np.abs(den) > 1e-12, num / den,
                           lengths[:, None].astype(np.complex128))
        exact = np.isclose(np.mod(c, qk), 0.0)
        if exact.any():
            geo[:, exact] = lengths[:, None]
        out[lo:lo + chunk] = (phase * geo).sum(axis=0)
    return out


def sample_outcome(dist: SpectrumDistribution,
                   rng: np.random.Generator) -> tuple[int, ...]:
    """Draw one measurement outcome c with probability P(c)."""
    return dist.sample(rng)


class TwoStageSampler:
    """Exact outcome sampling for rank-2 supports without the dense grid.

    The marginal of the second coordinate is the row-mass mixture of per-row
    spectra; conditioned on it, the first coordinate follows the transform
    of the per-row sums.  Together these reproduce the joint law of
    qft_spectrum exactly, at O(rows + qk) per draw."""

    def __init__(self, state: PreimageState, params: ExperimentParams):
        if params.rank != 2:
            raise ValueError("two-stage sampling is for rank 2")
        self.params = params
        pts = state.points[np.lexsort((state.points[:, 1], state.points[:, 0]))]
        self.rows, starts = np.unique(pts[:, 0], return_index=True)
        bounds = np.append(starts, len(pts))
        self.row_runs = []
        sizes = []
        for i in range(len(self.rows)):
            seg = pts[bounds[i]:bounds[i + 1], 1]
            self.row_runs.append(_runs_1d(seg))
            sizes.append(bounds[i + 1] - bounds[i])
        self.row_mass = np.array(sizes, dtype=np.float64)
        self._cum_rows = np.cumsum(self.row_mass / self.row_mass.sum())

    def sample(self, rng: np.random.Generator) -> tuple[int, int]:
        qk = self.params.qk
        ridx = min(int(np.searchsorted(self._cum_rows, rng.random())),
                   len(self.rows) - 1)
        starts, lengths = self.row_runs[ridx]
        ind = np.zeros(qk, dtype=np.float64)
        for s, ln in zip(starts, lengths):
            ind[s:s + ln] = 1.0
        amp = np.fft.ifft(ind) * qk
        p2 = amp.real ** 2 + amp.imag ** 2
        cum2 = np.cumsum(p2)
        c2 = min(int(np.searchsorted(cum2, rng.random() * cum2[-1])), qk - 1)
        # conditional on c2: transform the per-row sums along the first axis
        y = np.zeros(qk, dtype=np.complex128)
        for i, row in enumerate(self.rows):
            s, ln = self.row_runs[i]
            y[row] = _run_sum(s, ln, np.array([c2]), qk)[0]
        amp1 = np.fft.ifft(y) * qk
        p1 = amp1.real ** 2 + amp1.imag ** 2
        cum1 = np.cumsum(p1)
        c1 = min(int(np.searchsorted(cum1, rng.random() * cum1[-1])), qk - 1)
        return c1, c2


def centred(c, qk: int) -> np.ndarray:
    """Residues of c mod qk mapped to [-qk/2, qk/2)."""
    arr = np.mod(np.atleast_1d(np.asarray(c, dtype=np.int64)), qk)
    return np.where(arr >= qk // 2, arr - qk, arr)


def accept(c, params: ExperimentParams, beta: float) -> bool:
    """Keep outcomes with centred infinity norm strictly below q/(5(beta+1)).

    beta is the measured support radius in grid units (1/N of the raw
    integer half-width); for translate-structured supports the kept
    outcomes satisfy dist(c/qk, dual lattice) <= 1/(2qk) per coordinate."""
    cc = centred(c, params.qk)
    return bool(np.max(np.abs(cc)) < params.q / (5.0 * (beta + 1.0)))


def dual_candidate(c, params: ExperimentParams) -> np.ndarray:
    """Map an accepted outcome to the dual-lattice candidate c/(qk)."""
    return centred(c, params.qk).astype(np.float64) / params.qk
