"""
Packing Set Construction

Random packing sets of k-sparse points drawn from the universe of vectors
with exactly k entries equal to +-sqrt(1/k), the probability bounds that
guarantee such a set exists, and the matrix Bernstein machinery that controls
the empirical second moment of the set.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .bounds import check_lemma_preconditions
from .errors import DomainError, InconsistencyError, InputError, PackingExhaustedError, PreconditionError
from .linalg import DenseMatrix, operator_norm_sym

logger = logging.getLogger(__name__)

MIN_DIST_SQ = 0.5
# Float accumulation slack on the squared-distance rule.
DIST_SLACK = 1e-12
ATTEMPTS_FACTOR = 100
UNIVERSE_ENUMERATION_CAP = 10**5
BERNSTEIN_MAX_N = 64
BERNSTEIN_MAX_REPS = 10**4
# Eigensolver slack on the per-draw bound ||X_i|| <= 1.
DRAW_NORM_SLACK = 1e-12


@dataclass(frozen=True)
class SparseVector:
    """Point of R^n stored as sorted support indices and aligned values."""
    n: int
    support: Tuple[int, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        values = tuple(float(v) for v in self.values)
        if len(support) != len(values):
            raise InputError("support and values must have equal length")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise InputError(f"support must be sorted and duplicate-free: {support}")
        if support and (support[0] < 0 or support[-1] >= self.n):
            raise InputError(f"support indices must lie in [0, {self.n})")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_dense(cls, vec: Sequence[float]) -> "SparseVector":
        arr = np.asarray(vec, dtype=float)
        idx = np.flatnonzero(arr)
        return cls(arr.size, tuple(idx.tolist()), tuple(arr[idx].tolist()))

    @property
    def sparsity(self) -> int:
        return len(self.support)

    @property
    def sq_norm(self) -> float:
        return math.fsum(v * v for v in self.values)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[list(self.support)] = self.values
        return out

    def scaled(self, c: float) -> "SparseVector":
        return SparseVector(self.n, self.support, tuple(c * v for v in self.values))

    def to_dict(self) -> Dict[str, Any]:
        return {"support": list(self.support), "values": list(self.values)}


def _difference(a: SparseVector, b: SparseVector) -> Tuple[List[int], List[float]]:
    """Sparse a - b by merging the two sorted supports."""
    idx: List[int] = []
    vals: List[float] = []
    i = j = 0
    sa, va, sb, vb = a.support, a.values, b.support, b.values
    while i < len(sa) or j < len(sb):
        if j >= len(sb) or (i < len(sa) and sa[i] < sb[j]):
            idx.append(sa[i])
            vals.append(va[i])
            i += 1
        elif i >= len(sa) or sb[j] < sa[i]:
            idx.append(sb[j])
            vals.append(-vb[j])
            j += 1
        else:
            idx.append(sa[i])
            vals.append(va[i] - vb[j])
            i += 1
            j += 1
    return idx, vals


def squared_distance(a: SparseVector, b: SparseVector) -> float:
    """||a - b||^2 in O(k) by sparse merge."""
    if a.n != b.n:
        raise InputError(f"dimension mismatch: {a.n} vs {b.n}")
    _, vals = _difference(a, b)
    return math.fsum(v * v for v in vals)


@dataclass(frozen=True)
class MomentSummary:
    """Mean mu, second moment Q = mean of x x*, and the measured beta."""
    mu: np.ndarray = field(compare=False)
    q: np.ndarray = field(compare=False)
    beta_measured: float


@dataclass(frozen=True)
class PackingSet:
    """A finite family of k-sparse points with measured separation and covariance."""
    n: int
    k: int
    points: Tuple[SparseVector, ...]
    scale: float
    measured_min_dist_sq: float
    measured_beta: float
    seed: Optional[int] = None
    redraws: int = 0

    def __post_init__(self):
        points = tuple(self.points)
        for p in points:
            if p.n != self.n:
                raise InputError(f"point dimension {p.n} does not match n={self.n}")
            if p.sparsity > self.k:
                raise InputError(f"point has {p.sparsity} nonzeros, more than k={self.k}")
        object.__setattr__(self, "points", points)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def ref(self) -> str:
        return f"packing-n{self.n}-k{self.k}-size{self.size}-seed{self.seed}"

    def dense(self) -> np.ndarray:
        """Points as rows of a size x n array."""
        out = np.zeros((self.size, self.n))
        for i, p in enumerate(self.points):
            out[i, list(p.support)] = p.values
        return out

    def scaled(self, c: float) -> "PackingSet":
        if not c > 0:
            raise PreconditionError(f"scale factor must be positive, got {c}")
        return PackingSet(
            n=self.n,
            k=self.k,
            points=tuple(p.scaled(c) for p in self.points),
            scale=self.scale * c,
            measured_min_dist_sq=self.measured_min_dist_sq * c * c,
            measured_beta=self.measured_beta,
            seed=self.seed,
            redraws=self.redraws,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "scale": self.scale,
            "seed": self.seed,
            "points": [p.to_dict() for p in self.points],
            "measured_min_dist_sq": self.measured_min_dist_sq,
            "measured_beta": self.measured_beta,
            "redraws": self.redraws,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PackingSet":
        try:
            n = int(data["n"])
            points = tuple(
                SparseVector(n, tuple(p["support"]), tuple(p["values"])) for p in data["points"]
            )
            return cls(
                n=n,
                k=int(data["k"]),
                points=points,
                scale=float(data["scale"]),
                measured_min_dist_sq=float(data["measured_min_dist_sq"]),
                measured_beta=float(data["measured_beta"]),
                seed=data.get("seed"),
                redraws=int(data.get("redraws", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"invalid packing set: {e}") from e


def check_universe_parameters(n: int, k: int) -> None:
    """The universe needs k even, positive and at most n."""
    if k < 2 or k % 2 != 0:
        raise PreconditionError(f"k must be even and positive, got {k}")
    if k > n:
        raise PreconditionError(f"k={k} exceeds n={n}")


def universe_sample(n: int, k: int, rng: np.random.Generator) -> SparseVector:
    """Uniform draw from the universe: random k-subset, independent random signs."""
    check_universe_parameters(n, k)
    idx = list(range(n))
    for i in range(k):
        j = int(rng.integers(i, n))
        idx[i], idx[j] = idx[j], idx[i]
    support = sorted(idx[:k])
    signs = rng.integers(0, 2, size=k)
    magnitude = math.sqrt(1.0 / k)
    return SparseVector(n, tuple(support), tuple(magnitude if s else -magnitude for s in signs))


def universe_points(n: int, k: int) -> List[SparseVector]:
    """Every universe element, supports in lexicographic order. Tiny (n, k) only."""
    check_universe_parameters(n, k)
    total = math.comb(n, k) * 2**k
    if total > UNIVERSE_ENUMERATION_CAP:
        raise PreconditionError(f"universe has {total} elements, above the cap of {UNIVERSE_ENUMERATION_CAP}")
    magnitude = math.sqrt(1.0 / k)
    return [
        SparseVector(n, support, tuple(s * magnitude for s in signs))
        for support in itertools.combinations(range(n), k)
        for signs in itertools.product((1.0, -1.0), repeat=k)
    ]


def lemma_size(n: int, k: int) -> int:
    """ceil((n/k)^(k/4)), computed exactly."""
    check_lemma_preconditions(n, k)
    base = Fraction(n, k) ** (k // 2)  # (n/k)^(k/4) = sqrt(base)
    num, den = base.numerator, base.denominator
    s = math.isqrt(num // den)
    while s * s * den < num:
        s += 1
    return s


def _min_pairwise(points: Sequence[SparseVector]) -> float:
    best = math.inf
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = squared_distance(points[i], points[j])
            if d < best:
                best = d
    return best


def verify_min_distance(packing: PackingSet) -> float:
    """Exact minimum squared distance over all pairs."""
    if packing.size < 2:
        raise PreconditionError("need at least two points")
    return _min_pairwise(packing.points)


def empirical_moments(packing: PackingSet) -> MomentSummary:
    """mu, Q and beta = n ||Q - scale^2 I/n|| / scale^2, accumulated in point order."""
    if packing.size < 1:
        raise PreconditionError("need at least one point")
    n = packing.n
    mu = np.zeros(n)
    q = np.zeros((n, n))
    for p in packing.points:
        s = list(p.support)
        v = np.asarray(p.values)
        mu[s] += v
        q[np.ix_(s, s)] += np.outer(v, v)
    mu /= packing.size
    q /= packing.size
    scale_sq = packing.scale * packing.scale
    deviation = q - np.eye(n) * (scale_sq / n)
    beta = n * operator_norm_sym(DenseMatrix(deviation)) / scale_sq
    return MomentSummary(mu, q, beta)


def assemble_packing(
    n: int,
    k: int,
    points: Iterable[SparseVector],
    scale: float = 1.0,
    seed: Optional[int] = None,
    redraws: int = 0,
) -> PackingSet:
    """Wrap given points in a PackingSet with measured statistics."""
    points = tuple(points)
    draft = PackingSet(n, k, points, scale, math.inf, 0.0, seed, redraws)
    min_dist = _min_pairwise(points) if len(points) >= 2 else math.inf
    beta = empirical_moments(draft).beta_measured if points else 0.0
    return PackingSet(n, k, points, scale, min_dist, beta, seed, redraws)


def build_packing(n: int, k: int, size: int, seed: int, max_attempts: Optional[int] = None) -> PackingSet:
    """Random packing with pairwise squared distance >= 1/2.

    Candidates closer than 1/2 to an accepted point are discarded and redrawn.

    Raises:
        PackingExhaustedError: more than ``max_attempts`` redraws were needed.
    """
    check_lemma_preconditions(n, k)
    if size < 2:
        raise PreconditionError(f"a packing needs at least two points, got size={size}")
    if max_attempts is None:
        max_attempts = ATTEMPTS_FACTOR * size

    rng = np.random.default_rng(seed)
    threshold = MIN_DIST_SQ - DIST_SLACK
    points: List[SparseVector] = []
    redraws = 0
    while len(points) < size:
        candidate = universe_sample(n, k, rng)
        if all(squared_distance(candidate, p) >= threshold for p in points):
            points.append(candidate)
            continue
        redraws += 1
        if redraws > max_attempts:
            raise PackingExhaustedError(
                f"gave up after {redraws} redraws with {len(points)}/{size} points (n={n}, k={k})"
            )

    packing = assemble_packing(n, k, points, scale=1.0, seed=seed, redraws=redraws)
    logger.info(
        "packing n=%d k=%d size=%d seed=%s: %d redraws, min dist^2 %.4f, beta %.4f",
        n, k, size, seed, redraws, packing.measured_min_dist_sq, packing.measured_beta,
    )
    return packing


def scatter_identity_check(packing: PackingSet) -> float:
    """Max entrywise gap between the pairwise scatter and 2(Q - mu mu*)."""
    if packing.size < 2:
        raise PreconditionError("need at least two points")
    n = packing.n
    lhs = np.zeros((n, n))
    pts = packing.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            idx, vals = _difference(pts[i], pts[j])
            d = np.asarray(vals)
            lhs[np.ix_(idx, idx)] += 2.0 * np.outer(d, d)
    lhs /= packing.size * packing.size
    moments = empirical_moments(packing)
    rhs = 2.0 * (moments.q - np.outer(moments.mu, moments.mu))
    return float(np.max(np.abs(lhs - rhs)))


def _log_comb(n: int, r: int) -> float:
    return float(gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1))


def p1_bound(n: int, k: int, size: int) -> float:
    """Union bound on the chance that a one-shot draw violates the distance rule."""
    check_lemma_preconditions(n, k)
    if size < 1:
        raise PreconditionError(f"size must be positive, got {size}")
    log_value = (
        2.0 * math.log(size)
        - math.log(2.0)
        + _log_comb(n, k // 2)
        - _log_comb(n, k)
        + k * math.log(math.sqrt(3.0) / 2.0)
    )
    return math.exp(log_value)


class P1Comparison(NamedTuple):
    three_quarter_side: float  # (3n/4k)^(k/2)
    half_shift_side: float  # (n/k - 1/2)^(k/2)
    binomial_ratio: float  # C(n,k) / C(n,k/2)


def p1_comparison(n: int, k: int) -> P1Comparison:
    """Both sides of the inequality chain used to bound P1 at the lemma size."""
    check_lemma_preconditions(n, k)
    half = k / 2.0
    return P1Comparison(
        three_quarter_side=(3.0 * n / (4.0 * k)) ** half,
        half_shift_side=(n / k - 0.5) ** half,
        binomial_ratio=math.exp(_log_comb(n, k) - _log_comb(n, k // 2)),
    )


def p2_bound(n: int, size: int, beta: float) -> float:
    """2n exp(-beta^2 |P| / (4n)): chance that the second-moment condition fails."""
    if not beta > 0:
        raise PreconditionError(f"beta must be positive, got {beta}")
    return 2.0 * n * math.exp(-beta * beta * size / (4.0 * n))


def beta_min(n: int, size: int) -> float:
    """Smallest beta for which p2_bound stays at 1/2."""
    if size < 1:
        raise PreconditionError(f"size must be positive, got {size}")
    return math.sqrt(4.0 * n * math.log(4.0 * n) / size)


def bernstein_tail(n: int, rho_sq: float, t: float) -> float:
    """Matrix Bernstein tail 2n exp(-t^2 / (4 rho^2)), valid for t in [0, 2 rho^2]."""
    if not rho_sq > 0:
        raise DomainError(f"rho^2 must be positive, got {rho_sq}")
    if not 0.0 <= t <= 2.0 * rho_sq:
        raise DomainError(f"t={t} outside the validity interval [0, {2.0 * rho_sq}]")
    return 2.0 * n * math.exp(-t * t / (4.0 * rho_sq))


def rank_one_deviation_norm(x: SparseVector) -> float:
    """||x x* - I/n||: the eigenvalues are ||x||^2 - 1/n and -1/n."""
    inv_n = 1.0 / x.n
    return max(abs(x.sq_norm - inv_n), inv_n)


@dataclass(frozen=True)
class BernsteinRow:
    t: float
    empirical: float
    analytic: float
    std_error: float


@dataclass(frozen=True)
class BernsteinTable:
    """Exceedance frequencies of ||sum X_i|| next to the Bernstein tail."""
    n: int
    k: int
    size: int
    reps: int
    seed: int
    rho_sq: float
    rows: Tuple[BernsteinRow, ...]
    draws: int
    max_draw_norm: float
    draw_norm_violations: int
    mean_x: np.ndarray = field(compare=False)
    mean_x_std_error: np.ndarray = field(compare=False)
    mean_x_sq: np.ndarray = field(compare=False)
    mean_x_sq_std_error: np.ndarray = field(compare=False)

    @property
    def expected_x_sq(self) -> np.ndarray:
        return np.eye(self.n) * ((self.n - 1) / self.n**2)

    @staticmethod
    def _max_z(deviation: np.ndarray, std_error: np.ndarray) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(std_error > 0, np.abs(deviation) / std_error, np.where(deviation == 0, 0.0, np.inf))
        return float(np.max(z))

    @property
    def max_z_mean_x(self) -> float:
        return self._max_z(self.mean_x, self.mean_x_std_error)

    @property
    def max_z_mean_x_sq(self) -> float:
        return self._max_z(self.mean_x_sq - self.expected_x_sq, self.mean_x_sq_std_error)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "size": self.size,
            "reps": self.reps,
            "seed": self.seed,
            "rho_sq": self.rho_sq,
            "rows": [
                {"t": r.t, "empirical": r.empirical, "analytic": r.analytic, "std_error": r.std_error}
                for r in self.rows
            ],
            "draws": self.draws,
            "max_draw_norm": self.max_draw_norm,
            "draw_norm_violations": self.draw_norm_violations,
            "max_z_mean_x": self.max_z_mean_x,
            "max_z_mean_x_sq": self.max_z_mean_x_sq,
        }


def bernstein_empirical(n: int, k: int, size: int, reps: int, seed: int, grid_points: int = 5) -> BernsteinTable:
    """Monte Carlo check of the Bernstein tail for X_i = x_i x_i* - I/n.

    Each repetition draws ``size`` universe points and records ||sum X_i||;
    per-draw norms and entrywise moments of X_i and X_i^2 are tracked too.
    """
    check_lemma_preconditions(n, k)
    if n > BERNSTEIN_MAX_N or reps > BERNSTEIN_MAX_REPS:
        raise PreconditionError(f"desk-scale only: n <= {BERNSTEIN_MAX_N}, reps <= {BERNSTEIN_MAX_REPS}")
    if size < 1 or reps < 2 or grid_points < 1:
        raise PreconditionError("need size >= 1, reps >= 2 and at least one grid point")

    rng = np.random.default_rng(seed)
    rho_sq = size * (n - 1) / n**2
    grid = np.linspace(2.0 * rho_sq / grid_points, 2.0 * rho_sq, grid_points)
    eye_n = np.eye(n) / n

    sum_x = np.zeros((n, n))
    sum_x_2 = np.zeros((n, n))
    sum_xsq = np.zeros((n, n))
    sum_xsq_2 = np.zeros((n, n))
    norms = np.empty(reps)
    max_draw_norm = 0.0
    violations = 0

    for rep in range(reps):
        draws = [universe_sample(n, k, rng) for _ in range(size)]
        dense = np.stack([x.to_dense() for x in draws])
        xs = np.einsum("bi,bj->bij", dense, dense) - eye_n
        for x, x_b in zip(draws, xs):
            d = operator_norm_sym(DenseMatrix(x_b))
            if abs(d - rank_one_deviation_norm(x)) > 1e-9:
                raise InconsistencyError(f"draw norm {d!r} disagrees with the rank-one spectrum")
            max_draw_norm = max(max_draw_norm, d)
            if d > 1.0 + DRAW_NORM_SLACK:
                violations += 1
        xs_sq = np.einsum("bij,bjk->bik", xs, xs)
        sum_x += xs.sum(axis=0)
        sum_x_2 += (xs * xs).sum(axis=0)
        sum_xsq += xs_sq.sum(axis=0)
        sum_xsq_2 += (xs_sq * xs_sq).sum(axis=0)
        norms[rep] = operator_norm_sym(DenseMatrix(xs.sum(axis=0)))

    total = reps * size
    mean_x = sum_x / total
    mean_xsq = sum_xsq / total
    se_x = np.sqrt(np.clip(sum_x_2 / total - mean_x**2, 0.0, None) * total / (total - 1) / total)
    se_xsq = np.sqrt(np.clip(sum_xsq_2 / total - mean_xsq**2, 0.0, None) * total / (total - 1) / total)

    rows = []
    for t in grid:
        freq = float(np.count_nonzero(norms >= t)) / reps
        rows.append(BernsteinRow(
            t=float(t),
            empirical=freq,
            analytic=bernstein_tail(n, rho_sq, float(t)),
            std_error=math.sqrt(freq * (1.0 - freq) / reps),
        ))
    logger.info("bernstein n=%d k=%d size=%d reps=%d: median norm %.4f", n, k, size, reps, float(np.median(norms)))
    return BernsteinTable(
        n=n, k=k, size=size, reps=reps, seed=seed, rho_sq=rho_sq, rows=tuple(rows),
        draws=total, max_draw_norm=max_draw_norm, draw_norm_violations=violations,
        mean_x=mean_x, mean_x_std_error=se_x, mean_x_sq=mean_xsq, mean_x_sq_std_error=se_xsq,
    )
