"""Noise models and the moment bundle consumed by the risk transform.

Two noise sources (process w in R^n, output eps in R^q) are described either by
Gaussian mixtures (analytic moments) or by empirical sample arrays (plug-in
moments). The joint statistic p_t = C (w_t - wbar) + (eps_t - epsbar) drives all
output-side quantities, so coupled models are reduced to one stacked mixture on
R^{n+q} and every p-moment is computed on that stacked law with the selector
J = [C  I].

Fourth-order scalars m_w and m_weps default to Monte-Carlo estimates with a
recorded seed and sample count (deterministic per configuration); the exact
Gaussian-mixture closed form is available via fourth_moment="analytic" and the
two paths are cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InsufficientSamples,
    NonPsdWeight,
    UnsupportedSource,
)
from .model import check_penalty

DEFAULT_MC_COUNT = 10_000_000
DEFAULT_MC_SEED = 20_240_901
_MC_CHUNK = 1_000_000

WEIGHT_SUM_TOL = 1e-12


def _rng(seed: int) -> np.random.Generator:
    # Counter-based generator so replication streams can be derived by XOR.
    return np.random.Generator(np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))


@dataclass(frozen=True)
class GaussianMixture:
    """Finite Gaussian mixture sum_i p_i N(mu_i, Sigma_i) on R^d."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        mu = np.atleast_2d(np.array(self.means, dtype=float))
        cov = np.array(self.covariances, dtype=float)
        if cov.ndim == 0:
            cov = cov.reshape(1, 1, 1)
        elif cov.ndim == 1:
            cov = cov.reshape(-1, 1, 1)
        elif cov.ndim == 2 and w.size == 1:
            cov = cov[None, :, :]
        k, d = mu.shape
        if w.shape != (k,) or cov.shape != (k, d, d):
            raise DimensionMismatch(
                f"inconsistent mixture shapes: weights {w.shape}, means {mu.shape}, covs {cov.shape}"
            )
        if np.any(w <= 0.0) or abs(float(np.sum(w)) - 1.0) > WEIGHT_SUM_TOL:
            raise NonPsdWeight("mixture weights must be positive and sum to 1 within 1e-12")
        for i in range(k):
            scale = max(1.0, float(np.max(np.abs(cov[i]))))
            if np.max(np.abs(cov[i] - cov[i].T)) > 1e-10 * scale:
                raise NonPsdWeight(f"component {i} covariance is not symmetric")
            if np.min(np.linalg.eigvalsh((cov[i] + cov[i].T) / 2.0)) < -1e-10 * scale:
                raise NonPsdWeight(f"component {i} covariance is not PSD")
        for arr in (w, mu, cov):
            arr.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.weights.size

    @classmethod
    def single(cls, mean, cov) -> "GaussianMixture":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(weights=np.ones(1), means=mean[None, :], covariances=cov[None, :, :])

    @classmethod
    def scalar(cls, weights, means, variances) -> "GaussianMixture":
        """Scalar mixture from per-component (weight, mean, variance) triples."""
        w = np.asarray(weights, dtype=float)
        mu = np.asarray(means, dtype=float).reshape(-1, 1)
        var = np.asarray(variances, dtype=float).reshape(-1, 1, 1)
        return cls(weights=w, means=mu, covariances=var)

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def covariance(self) -> np.ndarray:
        mbar = self.mean()
        dev = self.means - mbar
        cov = np.einsum("k,kij->ij", self.weights, self.covariances)
        cov += np.einsum("k,ki,kj->ij", self.weights, dev, dev)
        return (cov + cov.T) / 2.0

    def third_moment(self, q_weight: np.ndarray) -> np.ndarray:
        """E{delta delta' Q delta} with delta centered at the mixture mean.

        Per component with offset d_i = mu_i - mbar:
        d_i d_i'Q d_i + d_i tr(Q Sigma_i) + 2 Sigma_i Q d_i.
        """
        mbar = self.mean()
        out = np.zeros(self.dim)
        for p, mu, cov in zip(self.weights, self.means, self.covariances):
            d = mu - mbar
            out += p * (d * (d @ q_weight @ d) + d * np.trace(q_weight @ cov) + 2.0 * cov @ q_weight @ d)
        return out

    def fourth_scalar(self, q_weight: np.ndarray) -> float:
        """E{(delta'Q delta - tr(Q Cov))^2} in closed form.

        Uses the Gaussian identity Var(z'Qz) = 2 tr((Q Sigma)^2) + 4 d'Q Sigma Q d
        for z ~ N(d, Sigma), mixed over components.
        """
        mbar = self.mean()
        total_cov = self.covariance()
        tr_qw = float(np.trace(q_weight @ total_cov))
        second = 0.0
        for p, mu, cov in zip(self.weights, self.means, self.covariances):
            d = mu - mbar
            qs = q_weight @ cov
            mean_i = float(d @ q_weight @ d + np.trace(qs))
            var_i = float(2.0 * np.trace(qs @ qs) + 4.0 * d @ q_weight @ cov @ q_weight @ d)
            second += p * (var_i + mean_i**2)
        return second - tr_qw**2

    def expand(self, g: np.ndarray) -> "GaussianMixture":
        """Push the mixture through a linear injection x -> G x (input-channel noise)."""
        g = np.atleast_2d(np.asarray(g, dtype=float))
        if g.shape[1] != self.dim:
            raise DimensionMismatch(f"injection matrix needs {self.dim} columns, got {g.shape}")
        means = self.means @ g.T
        covs = np.einsum("ij,kjl,ml->kim", g, self.covariances, g)
        return GaussianMixture(weights=self.weights.copy(), means=means, covariances=covs)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Component selection then Gaussian draw; consumes one choice + one normal row per sample."""
        comps = rng.choice(self.n_components, size=count, p=self.weights)
        normals = rng.standard_normal((count, self.dim))
        out = np.empty((count, self.dim))
        for i in range(self.n_components):
            mask = comps == i
            if not np.any(mask):
                continue
            factor = psd_factor(self.covariances[i])
            out[mask] = self.means[i] + normals[mask] @ factor.T
        return out


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """Factor L with L L' = cov for PSD (possibly singular) covariances."""
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return vecs @ np.diag(np.sqrt(vals))


@dataclass(frozen=True)
class EmpiricalSource:
    """Noise law given by i.i.d. sample rows; drawn from by bootstrap."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.array(self.samples, dtype=float))
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatch("empirical samples contain non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


NoiseSource = Union[GaussianMixture, EmpiricalSource]


@dataclass(frozen=True)
class JointNoiseModel:
    """Joint law of (w_t, eps_t), i.i.d. across time.

    Either `process`/`output` are independent sources, or `joint` holds one
    stacked mixture (or stacked empirical array) over R^{n+q}. One draw per step.
    """

    n: int
    q: int
    process: Optional[NoiseSource] = None
    output: Optional[NoiseSource] = None
    joint: Optional[NoiseSource] = None

    def __post_init__(self):
        if self.joint is not None:
            if self.joint.dim != self.n + self.q:
                raise DimensionMismatch(
                    f"joint source has dim {self.joint.dim}, expected n+q={self.n + self.q}"
                )
        else:
            if self.process is None or self.output is None:
                raise DimensionMismatch("need either a joint source or both marginals")
            if self.process.dim != self.n:
                raise DimensionMismatch(f"process source has dim {self.process.dim}, expected {self.n}")
            if self.output.dim != self.q:
                raise DimensionMismatch(f"output source has dim {self.output.dim}, expected {self.q}")

    @classmethod
    def independent(cls, process: NoiseSource, output: NoiseSource) -> "JointNoiseModel":
        return cls(n=process.dim, q=output.dim, process=process, output=output)

    @classmethod
    def coupled(cls, joint: NoiseSource, n: int, q: int) -> "JointNoiseModel":
        return cls(n=n, q=q, joint=joint)

    @classmethod
    def input_channel(cls, xi: GaussianMixture, g, output: NoiseSource) -> "JointNoiseModel":
        """Process noise w = G xi with a low-dimensional source xi (default G = B)."""
        return cls.independent(xi.expand(np.asarray(g, dtype=float)), output)

    @property
    def is_analytic(self) -> bool:
        if self.joint is not None:
            return isinstance(self.joint, GaussianMixture)
        return isinstance(self.process, GaussianMixture) and isinstance(self.output, GaussianMixture)

    def stacked_mixture(self) -> GaussianMixture:
        """Stacked (n+q)-dimensional mixture for the joint law of (w, eps).

        Independent marginals become the product mixture with block-diagonal
        component covariances; this is distributionally exact.
        """
        if not self.is_analytic:
            raise UnsupportedSource("stacked mixture requires Gaussian-mixture sources")
        if self.joint is not None:
            return self.joint
        pw, po = self.process, self.output
        weights, means, covs = [], [], []
        for i in range(pw.n_components):
            for j in range(po.n_components):
                weights.append(pw.weights[i] * po.weights[j])
                means.append(np.concatenate([pw.means[i], po.means[j]]))
                block = np.zeros((self.n + self.q, self.n + self.q))
                block[: self.n, : self.n] = pw.covariances[i]
                block[self.n :, self.n :] = po.covariances[j]
                covs.append(block)
        return GaussianMixture(
            weights=np.array(weights), means=np.array(means), covariances=np.array(covs)
        )

    def sample(self, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        return sample(self, count, seed)


def sample(model: JointNoiseModel, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw `count` i.i.d. (w, eps) pairs, deterministic given the 64-bit seed."""
    if count < 1:
        raise InsufficientSamples("count must be >= 1")
    rng = _rng(seed)
    n, q = model.n, model.q
    if model.joint is not None:
        if isinstance(model.joint, GaussianMixture):
            stacked = model.joint.sample(count, rng)
        else:
            rows = rng.integers(0, model.joint.samples.shape[0], size=count)
            stacked = model.joint.samples[rows]
        return stacked[:, :n], stacked[:, n:]
    if model.is_analytic:
        stacked = model.stacked_mixture().sample(count, rng)
        return stacked[:, :n], stacked[:, n:]
    w = _sample_source(model.process, count, rng)
    eps = _sample_source(model.output, count, rng)
    return w, eps


def _sample_source(src: NoiseSource, count: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(src, GaussianMixture):
        return src.sample(count, rng)
    rows = rng.integers(0, src.samples.shape[0], size=count)
    return src.samples[rows]


@dataclass(frozen=True)
class MomentStdErrs:
    """Standard errors for the sampled moment fields (3-sigma comparisons)."""

    m_w: float
    m_weps: float
    big_m_w: np.ndarray
    big_m: np.ndarray


@dataclass(frozen=True)
class NoiseMoments:
    """Every moment quantity the TQCQP reformulation needs.

    All covariance-level fields are exact for mixture models. P and Z satisfy
    P = C W C' + C H + (C H)' + E and Z = C W C' + epsbar epsbar' (the paper's
    printed transpose term (HC)' is dimensionally inconsistent; (CH)' is used).
    """

    w_bar: np.ndarray
    eps_bar: np.ndarray
    w_cov: np.ndarray
    e_cov: np.ndarray
    h_cross: np.ndarray
    m3_w: np.ndarray
    m3_eps: np.ndarray
    m3_p: np.ndarray
    m3_weps: np.ndarray
    m_w: float
    m_weps: float
    p_cov: np.ndarray
    z_cov: np.ndarray
    qs: np.ndarray
    qo: np.ndarray
    c: np.ndarray
    fourth_moment_method: str = "analytic"
    mc_seed: Optional[int] = None
    mc_count: Optional[int] = None
    stderr: Optional[MomentStdErrs] = None

    @property
    def tr_qs_w(self) -> float:
        return float(np.trace(self.qs @ self.w_cov))

    @property
    def tr_qo_p(self) -> float:
        return float(np.trace(self.qo @ self.p_cov))


def _p_selector(c: np.ndarray, n: int, q: int) -> np.ndarray:
    return np.hstack([c, np.eye(q)])


def moments_analytic(
    model: JointNoiseModel,
    qs,
    qo,
    c,
    fourth_moment: str = "mc",
    mc_count: int = DEFAULT_MC_COUNT,
    mc_seed: int = DEFAULT_MC_SEED,
) -> NoiseMoments:
    """Exact mixture moments; m_w/m_weps by Monte-Carlo (default) or closed form.

    The MC fourth-moment path records its seed and count in the bundle so the
    result is deterministic per configuration. Raises UnsupportedSource for
    empirical inputs.
    """
    if not model.is_analytic:
        raise UnsupportedSource("moments_analytic requires Gaussian-mixture sources")
    if fourth_moment not in ("mc", "analytic"):
        raise ValueError(f"unknown fourth_moment method {fourth_moment!r}")
    qs = check_penalty(qs, "Q_s")
    qo = check_penalty(qo, "Q_o")
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n, q = model.n, model.q
    if qs.shape != (n, n) or qo.shape != (q, q) or c.shape != (q, n):
        raise DimensionMismatch(
            f"weight shapes Qs {qs.shape}, Qo {qo.shape}, C {c.shape} inconsistent with (n={n}, q={q})"
        )

    stacked = model.stacked_mixture()
    sel = _p_selector(c, n, q)
    mean_s = stacked.mean()
    cov_s = stacked.covariance()

    w_bar = mean_s[:n]
    eps_bar = mean_s[n:]
    w_cov = cov_s[:n, :n]
    e_cov = cov_s[n:, n:]
    h_cross = cov_s[:n, n:]

    # Marginal third moments need the component-marginal mixtures.
    proc_marg = GaussianMixture(
        weights=stacked.weights,
        means=stacked.means[:, :n],
        covariances=stacked.covariances[:, :n, :n],
    )
    out_marg = GaussianMixture(
        weights=stacked.weights,
        means=stacked.means[:, n:],
        covariances=stacked.covariances[:, n:, n:],
    )
    m3_w = proc_marg.third_moment(qs)
    m3_eps = out_marg.third_moment(qo)

    # p = J (s - sbar) with J = [C I]; p-moments are stacked moments under J'QoJ.
    q_p = sel.T @ qo @ sel
    m3_p = sel @ stacked.third_moment(q_p)
    p_cov = sel @ cov_s @ sel.T
    p_cov = (p_cov + p_cov.T) / 2.0
    z_cov = c @ w_cov @ c.T + np.outer(eps_bar, eps_bar)
    z_cov = (z_cov + z_cov.T) / 2.0

    if fourth_moment == "analytic":
        m_w = proc_marg.fourth_scalar(qs)
        m_weps = stacked.fourth_scalar(q_p)
        seed_used = count_used = None
    else:
        m_w, m_weps = _mc_fourth_scalars(
            stacked, qs, q_p, n, w_cov, p_trace=float(np.trace(qo @ p_cov)),
            count=mc_count, seed=mc_seed,
        )
        seed_used, count_used = mc_seed, mc_count

    return NoiseMoments(
        w_bar=w_bar,
        eps_bar=eps_bar,
        w_cov=w_cov,
        e_cov=e_cov,
        h_cross=h_cross,
        m3_w=m3_w,
        m3_eps=m3_eps,
        m3_p=m3_p,
        m3_weps=m3_p - m3_eps,
        m_w=float(m_w),
        m_weps=float(m_weps),
        p_cov=p_cov,
        z_cov=z_cov,
        qs=qs,
        qo=qo,
        c=c,
        fourth_moment_method=fourth_moment,
        mc_seed=seed_used,
        mc_count=count_used,
    )


def _mc_fourth_scalars(stacked, qs, q_p, n, w_cov, p_trace, count, seed):
    """Streaming MC estimates of m_w and m_weps with exact centering constants."""
    rng = _rng(seed)
    tr_qs_w = float(np.trace(qs @ w_cov))
    mean_s = stacked.mean()
    acc_w = 0.0
    acc_p = 0.0
    done = 0
    while done < count:
        batch = min(_MC_CHUNK, count - done)
        draws = stacked.sample(batch, rng) - mean_s
        dw = draws[:, :n]
        qf_w = np.einsum("bi,ij,bj->b", dw, qs, dw)
        acc_w += float(np.sum((qf_w - tr_qs_w) ** 2))
        qf_p = np.einsum("bi,ij,bj->b", draws, q_p, draws)
        acc_p += float(np.sum((qf_p - p_trace) ** 2))
        done += batch
    return acc_w / count, acc_p / count


def moments_empirical(samples_w, samples_eps, qs, qo, c) -> NoiseMoments:
    """Plug-in sample moments for every field, with standard errors attached.

    Samples must be paired (same count, jointly drawn when coupled); count
    must be at least 1000 so the fourth-moment plug-ins are meaningful.
    """
    qs = check_penalty(qs, "Q_s")
    qo = check_penalty(qo, "Q_o")
    c = np.atleast_2d(np.asarray(c, dtype=float))
    w = np.atleast_2d(np.asarray(samples_w, dtype=float))
    eps = np.atleast_2d(np.asarray(samples_eps, dtype=float))
    if w.shape[0] != eps.shape[0]:
        raise DimensionMismatch(
            f"paired samples required: {w.shape[0]} process vs {eps.shape[0]} output rows"
        )
    count = w.shape[0]
    if count < 1000:
        raise InsufficientSamples(f"need >= 1000 paired samples, got {count}")
    n, q = w.shape[1], eps.shape[1]
    if qs.shape != (n, n) or qo.shape != (q, q) or c.shape != (q, n):
        raise DimensionMismatch("weight/selector shapes inconsistent with sample dimensions")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(eps))):
        raise DimensionMismatch("samples contain non-finite values")

    w_bar = w.mean(axis=0)
    eps_bar = eps.mean(axis=0)
    dw = w - w_bar
    de = eps - eps_bar
    w_cov = dw.T @ dw / count
    e_cov = de.T @ de / count
    h_cross = dw.T @ de / count

    p = dw @ c.T + de
    p_cov = p.T @ p / count
    p_cov = (p_cov + p_cov.T) / 2.0
    zeta = eps_bar[None, :] - dw @ c.T
    z_cov = zeta.T @ zeta / count
    z_cov = (z_cov + z_cov.T) / 2.0

    qf_w = np.einsum("bi,ij,bj->b", dw, qs, dw)
    m3_w_terms = dw * qf_w[:, None]
    m3_w = m3_w_terms.mean(axis=0)
    qf_e = np.einsum("bi,ij,bj->b", de, qo, de)
    m3_eps = (de * qf_e[:, None]).mean(axis=0)
    qf_p = np.einsum("bi,ij,bj->b", p, qo, p)
    m3_p_terms = p * qf_p[:, None]
    m3_p = m3_p_terms.mean(axis=0)

    dev_w = (qf_w - float(np.trace(qs @ w_cov))) ** 2
    dev_p = (qf_p - float(np.trace(qo @ p_cov))) ** 2
    m_w = float(dev_w.mean())
    m_weps = float(dev_p.mean())

    stderr = MomentStdErrs(
        m_w=float(dev_w.std(ddof=1) / np.sqrt(count)),
        m_weps=float(dev_p.std(ddof=1) / np.sqrt(count)),
        big_m_w=m3_w_terms.std(axis=0, ddof=1) / np.sqrt(count),
        big_m=m3_p_terms.std(axis=0, ddof=1) / np.sqrt(count),
    )
    return NoiseMoments(
        w_bar=w_bar,
        eps_bar=eps_bar,
        w_cov=(w_cov + w_cov.T) / 2.0,
        e_cov=(e_cov + e_cov.T) / 2.0,
        h_cross=h_cross,
        m3_w=m3_w,
        m3_eps=m3_eps,
        m3_p=m3_p,
        m3_weps=m3_p - m3_eps,
        m_w=m_w,
        m_weps=m_weps,
        p_cov=p_cov,
        z_cov=z_cov,
        qs=qs,
        qo=qo,
        c=c,
        fourth_moment_method="empirical",
        mc_seed=None,
        mc_count=count,
        stderr=stderr,
    )
