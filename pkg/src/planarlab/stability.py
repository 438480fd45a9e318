"""Stability criteria, random characteristic polynomials, Markus-Yamabe and La Salle checks."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import DomainError
from .flow import integrate

log = logging.getLogger(__name__)


def _coeffs(coeffs: Sequence, n: int | None):
    """Ascending coefficients [A_0, ..., A_n] with a nonzero leading entry."""
    a = list(coeffs)
    if n is not None:
        if len(a) != n + 1:
            raise DomainError(f"expected {n + 1} coefficients for degree {n}, got {len(a)}")
    if not a or a[-1] == 0:
        raise DomainError("leading coefficient must be nonzero")
    return a


def routh_hurwitz(coeffs: Sequence, n: int | None = None) -> bool:
    """All roots of sum A_k lambda^k in Re < 0 (coefficients ascending).

    Exact for int/Fraction input. A zero pivot or sign change in the first
    column of the Routh array means "not stable" (marginal cases included).
    """
    a = [Fraction(c) if isinstance(c, int) else c for c in _coeffs(coeffs, n)]
    if a[-1] < 0:
        a = [-c for c in a]
    d = len(a) - 1
    hi = a[::-1]                       # A_n, A_{n-1}, ..., A_0
    r0, r1 = list(hi[0::2]), list(hi[1::2])
    for _ in range(d):
        if not r1 or r1[0] <= 0:
            return False
        r1 += [0 * a[0]] * (len(r0) - len(r1))
        nxt = [r0[j + 1] - r0[0] * r1[j + 1] / r1[0] for j in range(len(r0) - 1)]
        r0, r1 = r1, nxt
    return True


def jury(coeffs: Sequence, n: int | None = None) -> bool:
    """All roots of sum A_k lambda^k strictly inside the unit disk.

    Schur-Cohn reduction of the Jury table: |a_0| < |a_n| at every stage;
    equality (a root on or a pair symmetric about the circle) counts as unstable.
    """
    a = [Fraction(c) if isinstance(c, int) else c for c in _coeffs(coeffs, n)]
    while len(a) > 1:
        a0, an = a[0], a[-1]
        if abs(a0) >= abs(an):
            return False
        m = len(a) - 1
        a = [an * a[i + 1] - a0 * a[m - 1 - i] for i in range(m)]
    return True


# -- vectorised criteria for Monte Carlo ---------------------------------------------

def routh_hurwitz_batch(A: np.ndarray) -> np.ndarray:
    """Row-wise routh_hurwitz for a (trials, n+1) float array of ascending coefficients."""
    A = np.where(A[:, -1:] < 0, -A, A)
    hi = A[:, ::-1]
    r0, r1 = hi[:, 0::2].copy(), hi[:, 1::2].copy()
    ok = np.ones(len(A), dtype=bool)
    d = A.shape[1] - 1
    for _ in range(d):
        if r1.shape[1] == 0:
            ok[:] = False
            break
        piv = r1[:, 0]
        ok &= piv > 0
        safe = np.where(piv > 0, piv, 1.0)
        if r1.shape[1] < r0.shape[1]:
            r1 = np.concatenate([r1, np.zeros((len(A), r0.shape[1] - r1.shape[1]))], axis=1)
        nxt = r0[:, 1:] - r0[:, :1] * r1[:, 1:] / safe[:, None]
        r0, r1 = r1, nxt
    return ok


def jury_batch(A: np.ndarray) -> np.ndarray:
    """Row-wise jury for a (trials, n+1) float array."""
    ok = np.ones(len(A), dtype=bool)
    a = A.copy()
    while a.shape[1] > 1:
        a0, an = a[:, :1], a[:, -1:]
        ok &= np.abs(a0[:, 0]) < np.abs(an[:, 0])
        a = an * a[:, 1:] - a0 * a[:, -2::-1]
        # rescale to keep magnitudes bounded; the criterion is scale invariant
        s = np.max(np.abs(a), axis=1, keepdims=True)
        a = a / np.where(s > 0, s, 1.0)
    return ok


# -- counter-based normal variates ----------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_normals(seed: int, start: int, count: int, width: int) -> np.ndarray:
    """N(0,1) array of shape (count, width) for trials start..start+count-1.

    Entry (i, j) depends only on (seed, trial index, j): SplitMix64 of the
    counter i*width + j offset by a seed-derived key, then the inverse normal CDF.
    """
    with np.errstate(over="ignore"):
        key = _mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        ctr = (np.arange(start * width, (start + count) * width, dtype=np.uint64) + np.uint64(1))
        z = _mix64(key + ctr * _GOLDEN)
    u = ((z >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)
    return ndtri(u).reshape(count, width)


@dataclass(frozen=True)
class TrialBatch:
    n: int
    kind: str          # differential | difference
    trials: int
    seed: int
    successes: int

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)

    def to_json(self):
        d = asdict(self)
        d.update(estimate=self.estimate, stderr=self.stderr)
        return d


_KINDS = {"differential": "differential", "diff": "differential",
          "difference": "difference", "ddiff": "difference"}
CHUNK = 1 << 18


def _count(n, kind, seed, start, count):
    A = counter_normals(seed, start, count, n + 1)
    crit = routh_hurwitz_batch if kind == "differential" else jury_batch
    return int(np.count_nonzero(crit(A)))


def mc_probability(n: int, kind: str, trials: int, seed: int = 0, workers: int = 1,
                   chunk: int = CHUNK) -> TrialBatch:
    """Fraction of N(0,1) characteristic polynomials of degree n that are stable.

    Chunks cover fixed trial ranges and the reduction is an integer sum, so the
    result does not depend on ``workers``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if n < 1:
        raise DomainError("order must be >= 1")
    kind = _KINDS.get(kind)
    if kind is None:
        raise DomainError("kind must be differential|diff or difference|ddiff")
    jobs = [(s, min(chunk, trials - s)) for s in range(0, trials, chunk)]
    if workers <= 1:
        total = sum(_count(n, kind, seed, s, c) for s, c in jobs)
    else:
        with ThreadPoolExecutor(workers) as ex:
            total = sum(ex.map(lambda j: _count(n, kind, seed, *j), jobs))
    return TrialBatch(n, kind, trials, seed, total)


# -- Markus-Yamabe counterexample ---------------------------------------------------

def cimen_field(n: int):
    """x' = -x + z1 (x + y z1)^2, y' = -y - (x + y z1)^2, z_i' = -z_i (state length n)."""
    if n < 3:
        raise DomainError("n must be >= 3")

    def rhs(t, s):
        x, y, z = s[0], s[1], s[2]
        u = x + y * z
        return [-x + z * u * u, -y - u * u] + [-v for v in s[2:]]
    return rhs


def cimen_jacobian(n: int, p: Sequence):
    """Exact Jacobian (works with Fraction entries)."""
    x, y, z = p[0], p[1], p[2]
    u = x + y * z
    one = type(u)(1) if not isinstance(u, float) else 1.0
    J = [[0 * one] * n for _ in range(n)]
    J[0][0] = -one + 2 * z * u
    J[0][1] = 2 * z * z * u
    J[0][2] = u * u + 2 * z * u * y
    J[1][0] = -2 * u
    J[1][1] = -one - 2 * u * z
    J[1][2] = -2 * u * y
    for i in range(2, n):
        J[i][i] = -one
    return J


def charpoly(M) -> list:
    """Characteristic polynomial det(lambda I - M), ascending, by Faddeev-LeVerrier (exact for Fractions)."""
    n = len(M)
    I = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def mul(A, B):
        return [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    c = [Fraction(0)] * (n + 1)
    c[n] = Fraction(1)
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        Mk = [[Mk[i][j] + (c[n - k + 1] if i == j else 0) for j in range(n)] for i in range(n)]
        Mk = mul(M, Mk)
        c[n - k] = -sum(Mk[i][i] for i in range(n)) / k
    return c


@dataclass
class MYReport:
    n: int
    points: int
    exact_charpoly_ok: bool
    max_eig_dev: float
    residual_t1: float
    max_rel_residual: float
    growth_rate: float
    ok: bool

    def to_json(self):
        return asdict(self)


def my_verify(n: int = 3, samples: int = 100, t_max: float = 3.0, seed: int = 0,
              tol: float = 1e-12) -> MYReport:
    """Check the Markus-Yamabe counterexample at random rational points.

    Eigenvalues: the exact characteristic polynomial must be (lambda+1)^n;
    numerical eigenvalues are also reported. The orbit from (18, -12, 1, ...)
    is compared with (18 e^t, -12 e^2t, e^-t, ...) and its log-norm slope
    over the last unit of time must be at least 1.9.
    """
    if n < 3:
        raise DomainError("n must be >= 3")
    rng = np.random.default_rng(seed)
    target = [math.comb(n, k) for k in range(n + 1)]
    exact_ok, dev = True, 0.0
    for _ in range(samples):
        p = [Fraction(int(v), 1000) for v in rng.integers(-5000, 5001, size=n)]
        J = cimen_jacobian(n, p)
        if charpoly(J) != target:
            exact_ok = False
        ev = np.linalg.eigvals(np.array(J, dtype=float))
        dev = max(dev, float(np.max(np.abs(ev + 1))))
    x0 = [18.0, -12.0] + [1.0] * (n - 2)
    tr = integrate(cimen_field(n), x0, (0.0, t_max), tol=tol)

    def exact(t):
        return [18 * math.exp(t), -12 * math.exp(2 * t)] + [math.exp(-t)] * (n - 2)
    r1 = max(abs(a - b) for a, b in zip(tr(1.0), exact(1.0))) if t_max >= 1 else math.nan
    rel = 0.0
    for t in np.linspace(0, t_max, 31):
        e = exact(t)
        rel = max(rel, max(abs(a - b) for a, b in zip(tr(t), e)) / max(abs(v) for v in e))
    t0 = max(0.0, t_max - 1.0)
    growth = math.log(np.linalg.norm(tr(t_max)) / np.linalg.norm(tr(t0))) / (t_max - t0)
    ok = exact_ok and (math.isnan(r1) or r1 < 1e-7) and growth >= 1.9
    return MYReport(n, samples, exact_ok, dev, float(r1), float(rel), float(growth), bool(ok))


# -- La Salle conditions -----------------------------------------------------------------

def fd_jacobian(F: Callable, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * max(1.0, abs(x[j]))
        J[:, j] = (np.asarray(F(x + e)) - np.asarray(F(x - e))) / (2 * e[j])
    return J


def spectral_radius(M: np.ndarray, max_iter: int = 10_000, rtol: float = 1e-12):
    """(rho, converged) by power iteration; falls back to eigvals when it stalls."""
    M = np.asarray(M, dtype=float)
    v = np.ones(len(M)) / math.sqrt(len(M))
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0, True
        w /= nw
        # converged when the direction repeats up to sign
        if abs(nw - lam) <= rtol * max(nw, 1e-300) and min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < 1e-9:
            return nw, True
        v, lam = w, nw
    return float(np.max(np.abs(np.linalg.eigvals(M)))), False


@dataclass
class LaSalleReport:
    condition: str
    max_rho: float
    witness: list
    satisfied_on_samples: bool
    fallbacks: int

    def to_json(self):
        return asdict(self)


def lasalle_check(F: Callable, condition: str, box: Sequence[Sequence[float]], samples: int = 200,
                  seed: int = 0, jacobian: Callable | None = None, max_iter: int = 10_000) -> LaSalleReport:
    """Largest rho(DF) (C1) or rho(|DF|) (C2) over random points of ``box``.

    A sampler, not a certificate.
    """
    cond = condition.upper()
    if cond not in ("C1", "C2"):
        raise DomainError("condition must be C1 or C2")
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    rng = np.random.default_rng(seed)
    best, wit, fallbacks = -1.0, None, 0
    for _ in range(samples):
        x = lo + (hi - lo) * rng.random(len(lo))
        J = np.asarray(jacobian(x), dtype=float) if jacobian else fd_jacobian(F, x)
        if cond == "C2":
            J = np.abs(J)
        rho, conv = spectral_radius(J, max_iter)
        if not conv:
            fallbacks += 1
            log.debug("power iteration did not converge at %s; used eigenvalue solver", x.tolist())
        if rho > best:
            best, wit = rho, x.tolist()
    return LaSalleReport(cond, best, wit, best < 1.0, fallbacks)
