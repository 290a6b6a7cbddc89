"""Monte Carlo and matrix checks in floating point.

Every random quantity of trial ``i`` is drawn from its own generator seeded
with ``(seed, i)``, so results do not depend on how trials are split into
batches. The same draws are reused across an SNR grid; only the
SNR-dependent scalings change, which keeps slope fits low-variance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import DomainError, MisoError, SystemConfig

LN2 = math.log(2.0)
COND_LIMIT = 1e12
DET_FLOOR = np.finfo(float).eps
MAX_RESAMPLES = 100


def trial_rng(seed: int, trial: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial), *extra])


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    z = rng.standard_normal((2, *shape)) if isinstance(shape, tuple) else rng.standard_normal((2, shape))
    return (z[0] + 1j * z[1]) / math.sqrt(2.0)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(complex_normal(rng, (n, n)))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def parse_grid(text: str) -> list[float]:
    """``"30:70:10"`` -> [30, 40, 50, 60, 70] (stop inclusive)."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise DomainError(f"SNR grid must look like start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise DomainError(f"bad SNR grid {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def mean(values: Iterable[float]) -> float:
    """Correctly rounded mean, independent of summation order."""
    values = list(np.asarray(values, dtype=float).ravel())
    return math.fsum(values) / len(values)


def mc_stderr(values) -> float:
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2:
        return 0.0
    mu = mean(values)
    return math.sqrt(math.fsum((values - mu) ** 2) / (values.size - 1) / values.size)


# ---------------------------------------------------------------------------
# channel sampling and zero-forcing


@dataclass(frozen=True)
class ChannelBatch:
    """Channels ``H = Hhat + Htilde`` for a run of trials at one SNR.

    Arrays have shape (trials, K, M). Row k of the error has per-entry
    variance ``snr ** -alphas[k]``.
    """

    snr: float
    alphas: tuple[float, ...]
    channels: np.ndarray
    estimates: np.ndarray
    errors: np.ndarray
    seed: int
    first_trial: int = 0

    @property
    def trials(self) -> int:
        return self.channels.shape[0]


def _draw_channel(cfg: SystemConfig, sigma: np.ndarray, rng: np.random.Generator):
    h = complex_normal(rng, (cfg.k, cfg.m))
    e = sigma[:, None] * complex_normal(rng, (cfg.k, cfg.m))
    return h, h - e, e


def sample_channel_batch(cfg: SystemConfig, alphas: Sequence[float], snr_db: float, trials: int,
                         seed: int, first_trial: int = 0) -> ChannelBatch:
    """Draw trials ``first_trial .. first_trial + trials - 1``.

    The error is independent of the true channel, so the channel rows stay
    unit-variance while the estimate is ``H - Htilde``.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    alphas = tuple(float(a) for a in alphas)
    if len(alphas) != cfg.k:
        raise DomainError(f"expected {cfg.k} exponents, got {len(alphas)}")
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise DomainError("CSIT exponents must lie in [0, 1]")
    snr = db_to_linear(snr_db)
    sigma = np.sqrt(snr ** -np.asarray(alphas))
    h = np.empty((trials, cfg.k, cfg.m), complex)
    hh = np.empty_like(h)
    e = np.empty_like(h)
    for i in range(trials):
        h[i], hh[i], e[i] = _draw_channel(cfg, sigma, trial_rng(seed, first_trial + i))
    return ChannelBatch(snr, alphas, h, hh, e, int(seed), first_trial)


@dataclass
class ZfRates:
    per_user: np.ndarray  # (trials, |active|) bits per channel use
    resampled: int = 0

    @property
    def sum_rate(self) -> float:
        return mean(self.per_user.sum(axis=1))


def _zf_precoder(h_est: np.ndarray) -> np.ndarray:
    v = np.linalg.pinv(h_est)
    return v / np.linalg.norm(v, axis=-2, keepdims=True)


def _condition(h_est: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(h_est, compute_uv=False)
    with np.errstate(divide="ignore"):
        return s[..., 0] / s[..., -1]


def zf_rates(batch: ChannelBatch, active: Sequence[int]) -> ZfRates:
    """Per-trial ZF rates of the ``active`` users (0-based indices).

    Precoders come from the estimates; SINRs use the true channel. Trials
    whose estimated submatrix has condition number above 1e12 are redrawn
    from a fresh substream and counted.
    """
    active = list(active)
    k_total, m = batch.channels.shape[1:]
    if not active or len(active) > min(m, k_total) or len(set(active)) != len(active):
        raise DomainError(f"need 1..min(M,K) distinct active users, got {active}")
    h = batch.channels[:, active, :].copy()
    h_est = batch.estimates[:, active, :].copy()
    cfg = SystemConfig(m, k_total)
    sigma = np.sqrt(batch.snr ** -np.asarray(batch.alphas))
    resampled = 0
    bad = np.flatnonzero(~(_condition(h_est) <= COND_LIMIT))
    for i in bad:
        for attempt in range(1, MAX_RESAMPLES + 1):
            full_h, full_est, _ = _draw_channel(cfg, sigma, trial_rng(batch.seed, batch.first_trial + i, attempt))
            resampled += 1
            if _condition(full_est[active]) <= COND_LIMIT:
                h[i], h_est[i] = full_h[active], full_est[active]
                break
        else:
            raise MisoError(f"trial {batch.first_trial + i}: estimate stays rank-deficient after resampling")
    v = _zf_precoder(h_est)
    gains = np.abs(h @ v) ** 2  # (trials, s, s): row = receiver, column = stream
    p_stream = batch.snr / len(active)
    signal = p_stream * np.diagonal(gains, axis1=1, axis2=2)
    interference = p_stream * (gains.sum(axis=2) - np.diagonal(gains, axis1=1, axis2=2))
    return ZfRates(np.log2(1.0 + signal / (1.0 + interference)), resampled)


def zf_sum_rate(batch: ChannelBatch, active: Sequence[int]) -> float:
    return zf_rates(batch, active).sum_rate


# ---------------------------------------------------------------------------
# slope fitting


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of a rate curve in bits per log2(P), i.e. in DoF."""

    snr_grid_db: tuple[float, ...]
    values: tuple[float, ...]
    slope: float
    stderr: float
    intercept: float = 0.0


def fit_dof_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    if len(points) < 3:
        raise DomainError("slope fit needs at least 3 SNR points")
    snr_db = np.array([p[0] for p in points], dtype=float)
    values = np.array([p[1] for p in points], dtype=float)
    if np.any(np.diff(snr_db) <= 0):
        raise DomainError("SNR grid must be strictly increasing")
    x = snr_db / 10.0 * math.log2(10.0)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (values - values.mean())) / sxx
    intercept = float(values.mean() - slope * x.mean())
    resid = values - (intercept + slope * x)
    stderr = math.sqrt(max(float(resid @ resid), 0.0) / (len(x) - 2) / sxx)
    return SlopeFit(tuple(snr_db), tuple(values), slope, stderr, intercept)


@dataclass
class CurveResult:
    """Per-SNR Monte Carlo means with their standard errors, plus the slope fit."""

    rows: list[tuple[float, float, float]]  # snr_db, mean, stderr
    fit: SlopeFit
    extra: dict = field(default_factory=dict)

    def csv_lines(self) -> list[str]:
        out = ["snr_db,mean_value,stderr"]
        out += [f"{s:g},{m:.12g},{e:.6g}" for s, m, e in self.rows]
        return out


def zf_slope(cfg: SystemConfig, alphas: Sequence[float], snr_grid_db: Sequence[float], trials: int,
             seed: int, active: Sequence[int] | None = None) -> CurveResult:
    """Sum-rate curve of ZF over an SNR grid, with per-user slope fits in ``extra``."""
    active = list(range(cfg.rank)) if active is None else list(active)
    rows, per_user_means, resampled = [], [], 0
    for snr_db in snr_grid_db:
        rates = zf_rates(sample_channel_batch(cfg, alphas, snr_db, trials, seed), active)
        resampled += rates.resampled
        sums = rates.per_user.sum(axis=1)
        rows.append((float(snr_db), mean(sums), mc_stderr(sums)))
        per_user_means.append([mean(rates.per_user[:, j]) for j in range(len(active))])
    fit = fit_dof_slope([(s, m) for s, m, _ in rows])
    per_user = [fit_dof_slope([(s, pm[j]) for s, pm in zip(snr_grid_db, per_user_means)]).slope
                for j in range(len(active))]
    return CurveResult(rows, fit, {"per_user_slopes": per_user, "resampled": resampled, "active": active})


# ---------------------------------------------------------------------------
# pivoted QR and the eigenvalue guarantees


@dataclass(frozen=True)
class PivotedQr:
    """``a[:, permutation] == q @ r`` with unitary q and upper-triangular r."""

    permutation: np.ndarray
    q: np.ndarray
    r: np.ndarray

    @property
    def diag(self) -> np.ndarray:
        return np.real(np.diagonal(self.r))

    def permuted(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a)[:, self.permutation]


def pivoted_qr_lemma2(a) -> PivotedQr:
    """Householder QR with greedy pivoting: at each step the remaining column
    of largest norm (first one on ties) moves to the front.

    The diagonal of r is made real and nonnegative. Then
    ``r_ii**2 >= lambda_i(a^H a) / (m - i + 1)`` for the i-th largest
    eigenvalue.
    """
    work = np.array(a, dtype=complex)
    if work.ndim != 2:
        raise DomainError("expected a matrix")
    rows, cols = work.shape
    perm = np.arange(cols)
    q = np.eye(rows, dtype=complex)
    for i in range(min(rows, cols)):
        norms = np.linalg.norm(work[i:, i:], axis=0)
        j = i + int(np.argmax(norms))
        if j != i:
            work[:, [i, j]] = work[:, [j, i]]
            perm[[i, j]] = perm[[j, i]]
        x = work[i:, i]
        alpha = float(np.linalg.norm(x))
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        work[i:, :] -= 2.0 * np.outer(v, v.conj() @ work[i:, :])
        q[:, i:] -= 2.0 * np.outer(q[:, i:] @ v, v.conj())
        work[i + 1:, i] = 0.0
    r = np.triu(work)
    d = np.diagonal(r).copy()
    mag = np.abs(d)
    ph = np.ones(rows, dtype=complex)
    ph[: d.size] = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    r = ph.conj()[:, None] * r
    q = q * ph[None, :]
    return PivotedQr(perm, q, r)


def eigenvalues_desc(a) -> np.ndarray:
    a = np.asarray(a)
    return np.clip(np.linalg.eigvalsh(a.conj().T @ a)[::-1], 0.0, None)


def lemma2_violations(a, slack: float = 1e-9) -> list[int]:
    """Indices i (0-based) where the diagonal bound fails by more than ``slack``."""
    a = np.asarray(a, dtype=complex)
    m = a.shape[1]
    qr = pivoted_qr_lemma2(a)
    lam = eigenvalues_desc(a)
    tol = slack * max(1.0, lam[0])
    rii2 = qr.diag ** 2
    return [i for i in range(m) if rii2[i] < lam[i] / (m - i) - tol]


def permute_lemma3(a) -> np.ndarray:
    """Column-permuted copy of ``a`` using the greedy pivot order."""
    return pivoted_qr_lemma2(a).permuted(a)


def lemma3_violations(a, rel_slack: float = 1e-9) -> list[tuple[int, ...]]:
    """Column subsets I (0-based) where det(Abar_I^H Abar_I) < m^-|I| prod_{i in I} lambda_i."""
    a = np.asarray(a, dtype=complex)
    m = a.shape[1]
    if m > 10:
        raise DomainError("exhaustive subset check is limited to m <= 10")
    abar = permute_lemma3(a)
    lam = eigenvalues_desc(a)
    bad = []
    for size in range(1, m + 1):
        floor = 1e-12 * lam[0] ** size
        for subset in itertools.combinations(range(m), size):
            sub = abar[:, subset]
            det = float(np.real(np.linalg.det(sub.conj().T @ sub)))
            bound = m ** (-size) * float(np.prod(lam[list(subset)]))
            if det < bound * (1.0 - rel_slack) - floor:
                bad.append(subset)
    return bad


# ---------------------------------------------------------------------------
# log-det asymptotics


def _log2det_psd(mat: np.ndarray) -> np.ndarray:
    sign, logabs = np.linalg.slogdet(mat)
    return logabs / LN2


@dataclass
class SlopeCheck:
    curve: CurveResult
    predicted: float
    tolerance: float
    regularized: int = 0

    @property
    def slope(self) -> float:
        return self.curve.fit.slope

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.predicted) <= self.tolerance

    def summary(self) -> dict:
        return {"slope": self.slope, "bound": self.predicted, "pass": self.passed}


def lemma1_slope_check(m: int, exponents: Sequence[float], snr_grid_db: Sequence[float], trials: int,
                       seed: int, tolerance: float = 0.1) -> SlopeCheck:
    """Slope of E[log2 det(G^H G)] for ``G = U diag(P^(b/2)) V^H + noise``.

    The predicted slope is the sum of the positive exponents.
    """
    b = np.asarray(exponents, dtype=float)
    if b.shape != (m,):
        raise DomainError(f"need {m} exponents")
    if np.any(np.abs(b) > 1):
        raise DomainError("exponents must lie in [-1, 1]")
    u = np.empty((trials, m, m), complex)
    v = np.empty_like(u)
    noise = np.empty_like(u)
    for i in range(trials):
        rng = trial_rng(seed, i)
        u[i], v[i], noise[i] = haar_unitary(rng, m), haar_unitary(rng, m), complex_normal(rng, (m, m))
    rows, regularized = [], 0
    for snr_db in snr_grid_db:
        scale = db_to_linear(snr_db) ** (b / 2.0)
        g = (u * scale[None, None, :]) @ np.conj(np.swapaxes(v, 1, 2)) + noise
        sign, logabs = np.linalg.slogdet(g)
        vals = 2.0 * logabs / LN2
        floor = math.log2(DET_FLOOR)
        low = ~(vals >= floor)
        regularized += int(low.sum())
        vals = np.where(low, floor, vals)
        rows.append((float(snr_db), mean(vals), mc_stderr(vals)))
    fit = fit_dof_slope([(s, mu) for s, mu, _ in rows])
    predicted = float(np.sum(np.clip(b, 0.0, None)))
    return SlopeCheck(CurveResult(rows, fit), predicted, tolerance, regularized)


PSI_KINDS = ("isotropic", "spectral-skewed", "estimate-aligned")


def input_covariance(kind: str, snr: float, n_tx: int, est_rows: np.ndarray | None = None) -> np.ndarray:
    """Transmit covariance with trace at most ``snr``.

    ``estimate-aligned`` spreads power over the null space of the estimated
    rows ``est_rows`` (shape (..., l, M)); when that null space is empty the
    power goes on the weakest estimated direction.
    """
    if kind == "isotropic":
        return snr / n_tx * np.eye(n_tx)
    if kind == "spectral-skewed":
        return np.diag([snr ** (1.0 - i / n_tx) / n_tx for i in range(n_tx)]).astype(complex)
    if kind == "estimate-aligned":
        if est_rows is None:
            raise DomainError("estimate-aligned covariance needs the estimated rows")
        l = est_rows.shape[-2]
        _, _, vh = np.linalg.svd(est_rows)
        basis = np.conj(np.swapaxes(vh, -1, -2))  # columns are right singular vectors
        null = basis[..., :, l:] if l < n_tx else basis[..., :, -1:]
        return snr / null.shape[-1] * (null @ np.conj(np.swapaxes(null, -1, -2)))
    raise DomainError(f"unknown covariance kind {kind!r}; choose from {PSI_KINDS}")


@dataclass
class Prop4Check:
    curve: CurveResult
    bound: float
    tolerance: float
    config: dict

    @property
    def lhs_slope(self) -> float:
        return self.curve.fit.slope

    @property
    def passed(self) -> bool:
        return self.lhs_slope <= self.bound + self.tolerance

    def summary(self) -> dict:
        return {**self.config, "slope": self.lhs_slope, "bound": self.bound, "pass": self.passed}


def prop4_slope_check(m_users: int, l_users: int, n_tx: int, alphas: Sequence[float], psi_kind: str,
                      snr_grid_db: Sequence[float], trials: int, seed: int,
                      tolerance: float = 0.1) -> Prop4Check:
    """Gaussian-input check of the weighted log-det difference.

    Estimates the slope of ``l' E log det(I + H_m Psi H_m^H) - m' E log det(I + H_l Psi H_l^H)``
    with ``l' = min(l, M)``, ``m' = min(m, M)``, and compares it to
    ``(m' - l') * sum(alphas)``. Users past the first ``l`` get exponent 0.
    """
    if not 1 <= l_users <= m_users:
        raise DomainError(f"need 1 <= l <= m, got l={l_users}, m={m_users}")
    alphas = [float(a) for a in alphas]
    if len(alphas) != l_users:
        raise DomainError(f"need {l_users} exponents")
    if psi_kind not in PSI_KINDS:
        raise DomainError(f"unknown covariance kind {psi_kind!r}")
    all_alpha = np.array(alphas + [0.0] * (m_users - l_users))
    h = np.empty((trials, m_users, n_tx), complex)
    w = np.empty_like(h)
    for i in range(trials):
        rng = trial_rng(seed, i)
        h[i], w[i] = complex_normal(rng, (m_users, n_tx)), complex_normal(rng, (m_users, n_tx))
    lp, mp = min(l_users, n_tx), min(m_users, n_tx)
    rows = []
    for snr_db in snr_grid_db:
        snr = db_to_linear(snr_db)
        sigma = np.sqrt(snr ** -all_alpha)
        est = h - sigma[None, :, None] * w
        psi = input_covariance(psi_kind, snr, n_tx, est[:, :l_users, :])
        hm, hl = h, h[:, :l_users, :]
        big = np.eye(m_users) + hm @ psi @ np.conj(np.swapaxes(hm, 1, 2))
        small = np.eye(l_users) + hl @ psi @ np.conj(np.swapaxes(hl, 1, 2))
        vals = lp * _log2det_psd(big) - mp * _log2det_psd(small)
        rows.append((float(snr_db), mean(vals), mc_stderr(vals)))
    fit = fit_dof_slope([(s, mu) for s, mu, _ in rows])
    bound = (mp - lp) * sum(alphas)
    config = {"m": m_users, "l": l_users, "M": n_tx, "alphas": alphas, "psi": psi_kind}
    return Prop4Check(CurveResult(rows, fit), bound, tolerance, config)


# ---------------------------------------------------------------------------
# suites used by the CLI and the acceptance tests


def verify_lemma2(trials: int, seed: int, sizes: Sequence[int] = tuple(range(2, 9))) -> dict:
    violations = 0
    for i in range(trials):
        rng = trial_rng(seed, i)
        m = int(sizes[rng.integers(len(sizes))])
        if lemma2_violations(complex_normal(rng, (m, m))):
            violations += 1
    return {"check": "lemma2", "matrices": trials, "violations": violations, "pass": violations == 0}


def verify_lemma3(trials: int, seed: int, sizes: Sequence[int] = tuple(range(1, 7))) -> dict:
    violations = subsets = 0
    for i in range(trials):
        rng = trial_rng(seed, i)
        m = int(sizes[rng.integers(len(sizes))])
        violations += len(lemma3_violations(complex_normal(rng, (m, m))))
        subsets += 2 ** m - 1
    return {"check": "lemma3", "matrices": trials, "subsets": subsets, "violations": violations,
            "pass": violations == 0}


LEMMA1_CASES = ((1.0, 0.0), (0.5, 0.25, 0.0), (0.0, 0.0))


def verify_lemma1(trials: int, seed: int, snr_grid_db: Sequence[float] = (40, 50, 60, 70)) -> dict:
    results = []
    for b in LEMMA1_CASES:
        chk = lemma1_slope_check(len(b), b, snr_grid_db, trials, seed)
        results.append({"exponents": list(b), **chk.summary(), "regularized": chk.regularized})
    return {"check": "lemma1", "cases": results, "pass": all(r["pass"] for r in results)}


PROP4_NESTINGS = ((2, 1), (3, 1), (3, 2))
PROP4_ALPHAS = (0.0, 0.5, 1.0)


def verify_prop4(trials: int, seed: int, snr_grid_db: Sequence[float] = (30, 40, 50, 60, 70),
                 n_tx: int = 2) -> dict:
    results = []
    for (m, l), kind in itertools.product(PROP4_NESTINGS, PSI_KINDS):
        for a in PROP4_ALPHAS:
            chk = prop4_slope_check(m, l, n_tx, [a] * l, kind, snr_grid_db, trials, seed)
            results.append(chk.summary())
    return {"check": "prop4", "cases": results, "pass": all(r["pass"] for r in results)}
