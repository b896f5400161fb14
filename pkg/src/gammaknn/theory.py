"""False-negative / false-positive probabilities of 1-NN under d_gamma.

For a query z whose nearest neighbor lies at distance eps:

* a positive z is a false negative iff no positive falls in the ball of
  radius ``eps / gamma`` around z:  ``FN_gamma = (1 - P(B(z, eps/gamma)))^m+``
* a negative z is a false positive iff no negative falls in the ball of
  radius ``gamma * eps``:  ``FP_gamma = (1 - P(B(z, gamma*eps)))^m-``

Training points of a class are assumed i.i.d., which is what turns the
product over points into a power.  Ball probabilities come either from a
closed form (Gaussian families) or from Monte-Carlo sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

_LOG_DOMAIN_ABOVE = 50
_BATCH = 2_000_000  # floats per sampling batch


class Estimate(NamedTuple):
    value: float
    stderr: float


def complement_power(prob: float, exponent: float) -> float:
    """``(1 - prob) ** exponent``, in log domain for large exponents.

    Small integer exponents are evaluated exactly on the binary value of
    ``prob`` and rounded once, so e.g. ``complement_power(0.1, 5) == 0.59049``.
    """
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability {prob} outside [0, 1]")
    if prob == 1.0:
        return 0.0 if exponent > 0 else 1.0
    if exponent > _LOG_DOMAIN_ABOVE:
        return math.exp(exponent * math.log1p(-prob))
    if float(exponent).is_integer() and exponent >= 0:
        return float((1 - Fraction(prob)) ** int(exponent))
    return (1.0 - prob) ** exponent


SphereProb = Callable[[np.ndarray, float], float]


def _prob(p_in_sphere: SphereProb, query, radius: float) -> float:
    p = p_in_sphere(np.asarray(query, dtype=float), radius)
    return float(p[0] if isinstance(p, tuple) else p)


def fn_probability(gamma: float, query, epsilon: float, p_in_sphere: SphereProb,
                   m_plus: int) -> float:
    """Probability that positive ``query`` is a false negative under gamma-1NN."""
    if gamma <= 0 or epsilon <= 0:
        raise ValueError("gamma and epsilon must be positive")
    return complement_power(_prob(p_in_sphere, query, epsilon / gamma), m_plus)


def fp_probability(gamma: float, query, epsilon: float, p_in_sphere: SphereProb,
                   m_minus: int) -> float:
    """Probability that negative ``query`` is a false positive under gamma-1NN."""
    if gamma <= 0 or epsilon <= 0:
        raise ValueError("gamma and epsilon must be positive")
    return complement_power(_prob(p_in_sphere, query, gamma * epsilon), m_minus)


# ---------------------------------------------------------------------------
# Generators


@dataclass(frozen=True)
class UniformBox:
    low: tuple
    high: tuple

    @property
    def dim(self):
        return len(self.low)

    @property
    def center(self):
        return (np.asarray(self.low) + np.asarray(self.high)) / 2.0

    def sample(self, rng, n):
        return rng.uniform(self.low, self.high, size=(n, self.dim))


@dataclass(frozen=True)
class Gaussian:
    """Isotropic Gaussian ``N(mean, scale^2 I)``."""

    mean: tuple
    scale: float = 1.0

    @property
    def dim(self):
        return len(self.mean)

    @property
    def center(self):
        return np.asarray(self.mean, dtype=float)

    def sample(self, rng, n):
        return self.center + self.scale * rng.standard_normal((n, self.dim))

    def ball_probability(self, center, radius):
        """Exact P(||x - center|| <= radius) via the (noncentral) chi-square law."""
        r = np.asarray(radius, dtype=float)
        x = (r / self.scale) ** 2
        lam = float(np.sum((self.center - np.asarray(center)) ** 2)) / self.scale ** 2
        if lam == 0:
            return stats.chi2.cdf(x, self.dim)
        return stats.ncx2.cdf(x, self.dim, lam)


@dataclass(frozen=True)
class GaussianMixture:
    means: tuple
    scale: float = 1.0
    weights: tuple | None = None

    @property
    def dim(self):
        return len(self.means[0])

    @property
    def _w(self):
        w = np.ones(len(self.means)) if self.weights is None else np.asarray(self.weights, float)
        return w / w.sum()

    @property
    def center(self):
        return self._w @ np.asarray(self.means, dtype=float)

    def sample(self, rng, n):
        comp = rng.choice(len(self.means), size=n, p=self._w)
        return (np.asarray(self.means, dtype=float)[comp]
                + self.scale * rng.standard_normal((n, self.dim)))

    def ball_probability(self, center, radius):
        return sum(w * Gaussian(tuple(mu), self.scale).ball_probability(center, radius)
                   for w, mu in zip(self._w, self.means))


DISTRIBUTIONS = ("uniform", "gaussian", "mixture")


def make_distribution(name: str, dim: int = 2):
    if name == "uniform":
        return UniformBox((0.0,) * dim, (1.0,) * dim)
    if name == "gaussian":
        return Gaussian((0.0,) * dim, 1.0)
    if name == "mixture":
        return GaussianMixture(((-1.0,) + (0.0,) * (dim - 1), (1.0,) + (0.0,) * (dim - 1)), 0.5)
    raise ValueError(f"unknown distribution {name!r}; choose from {DISTRIBUTIONS}")


# ---------------------------------------------------------------------------
# Monte-Carlo


@dataclass(frozen=True)
class SphereModel:
    """Class-conditional generators plus the sizes of the training sample."""

    positive: object
    negative: object = None
    m_plus: int = 10
    m_minus: int = 100
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.negative is None:
            object.__setattr__(self, "negative", self.positive)

    def generator(self, label: int):
        return self.positive if label == 1 else self.negative


class BallSampler:
    """Distances from a fixed center to ``trials`` draws of one generator.

    All radii are answered from the same draws, so the estimated ball
    probability is exactly monotone in the radius.
    """

    def __init__(self, model: SphereModel, center, label: int = 1):
        gen = model.generator(label)
        rng = np.random.default_rng([model.seed, 0 if label == 1 else 1])
        center = np.asarray(center, dtype=float)
        step = max(1, _BATCH // gen.dim)
        parts = []
        for start in range(0, model.trials, step):
            x = gen.sample(rng, min(step, model.trials - start))
            parts.append(np.sqrt(np.sum((x - center) ** 2, axis=1)))
        self.distances = np.sort(np.concatenate(parts))

    def __call__(self, radius: float) -> Estimate:
        n = len(self.distances)
        p = np.searchsorted(self.distances, radius, side="right") / n
        return Estimate(float(p), math.sqrt(p * (1 - p) / n))


def monte_carlo_sphere_prob(model: SphereModel, center, radius: float,
                            label: int = 1) -> Estimate:
    """Fraction of generator draws inside the closed L2 ball, with its std. error."""
    return BallSampler(model, center, label)(radius)


@dataclass(frozen=True)
class PropositionRow:
    gamma: float
    fn: float
    fp: float
    fn_se: float
    fp_se: float


def proposition_table(model: SphereModel, query, epsilon: float,
                      gammas: Sequence[float]) -> list[PropositionRow]:
    """FN_gamma and FP_gamma (with delta-method std. errors) over a gamma grid."""
    pos = BallSampler(model, query, 1)
    neg = BallSampler(model, query, -1)
    rows = []
    for g in gammas:
        pf, sf = pos(epsilon / g)
        pn, sn = neg(g * epsilon)
        fn = fn_probability(g, query, epsilon, lambda c, r: pos(r).value, model.m_plus)
        fp = fp_probability(g, query, epsilon, lambda c, r: neg(r).value, model.m_minus)
        fn_se = model.m_plus * complement_power(pf, model.m_plus - 1) * sf
        fp_se = model.m_minus * complement_power(pn, model.m_minus - 1) * sn
        rows.append(PropositionRow(float(g), fn, fp, fn_se, fp_se))
    return rows


@dataclass(frozen=True)
class BridgeResult:
    observed: float
    predicted: float
    stderr: float

    @property
    def z(self) -> float:
        return (self.observed - self.predicted) / self.stderr if self.stderr else 0.0


def _min_distances(gen, rng, trials: int, m: int, center) -> np.ndarray:
    out = np.empty(trials)
    step = max(1, _BATCH // (m * gen.dim))
    for start in range(0, trials, step):
        n = min(step, trials - start)
        x = gen.sample(rng, n * m).reshape(n, m, gen.dim)
        out[start:start + n] = np.sqrt(np.sum((x - center) ** 2, axis=-1)).min(axis=1)
    return out


def empirical_bridge(model: SphereModel, query, gamma: float) -> tuple[BridgeResult, BridgeResult]:
    """Simulate gamma-1NN on fresh training samples and compare to the closed forms.

    Each trial draws m+ positives and m- negatives.  For the false-negative
    side the query is taken as positive and eps is its measured distance to
    the nearest negative; for the false-positive side it is taken as negative
    and eps is its distance to the nearest positive.  The per-trial closed
    form uses the exact ball probability of the generators, so
    ``observed - predicted`` has mean zero under the i.i.d. assumption.
    Returns ``(fn_result, fp_result)``.
    """
    rng = np.random.default_rng([model.seed, 2])
    z = np.asarray(query, dtype=float)
    T = model.trials
    d_pos = _min_distances(model.positive, rng, T, model.m_plus, z)
    d_neg = _min_distances(model.negative, rng, T, model.m_minus, z)

    # positive query: wrong iff the nearest negative beats every scaled positive
    fn_obs = (gamma * d_pos > d_neg).astype(float)
    p = model.positive.ball_probability(z, d_neg / gamma)
    fn_pred = (1.0 - p) ** model.m_plus
    # negative query: wrong iff the nearest scaled positive beats every negative
    fp_obs = (d_neg > gamma * d_pos).astype(float)
    q = model.negative.ball_probability(z, gamma * d_pos)
    fp_pred = (1.0 - q) ** model.m_minus

    def summarize(obs, pred):
        diff = obs - pred
        return BridgeResult(float(obs.mean()), float(pred.mean()),
                            float(diff.std(ddof=1) / math.sqrt(len(diff))))

    return summarize(fn_obs, fn_pred), summarize(fp_obs, fp_pred)
