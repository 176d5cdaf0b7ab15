"""
Ground-truth models with closed-form f, r, g, g1 and g2 and reproducible samplers.

A model's density lives on an enclosing box (its support); the estimators are
judged on a strictly smaller evaluation box B on which f >= c0 > 0.
"""
import math
from collections import namedtuple
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr
from scipy.stats import qmc

from knnlab.constant import (DEFAULT_NOISE_SIGMA, MIN_ACCEPTANCE_RATE, MODEL_NAMES, TARGET_DENSITY,
                             TARGET_G, TARGET_G1, TARGET_G2, TARGET_REGRESSION)
from knnlab.entity.artifact_entity import TrialSample
from knnlab.entity.estimator import schedule_M
from knnlab.entity.sample_set import SampleSet
from knnlab.exception import (DimensionMismatch, InvalidTarget, ModelMisconfigured,
                              OutsideEvaluationBox, PreconditionFailed)
from knnlab.logger import logging

DensitySpec = namedtuple("DensitySpec", ["mixture_weight", "weights", "means", "scales"])

# sinusoid: r(x) = amplitude * sum_j sin(2 pi x_j / period)
# polynomial: r(x) = c_0 + sum_j sum_{d>=1} c_d x_j^d
RegressionSpec = namedtuple("RegressionSpec", ["kind", "coefficients", "period"])

SINUSOID = "sinusoid"
POLYNOMIAL = "polynomial"
SMOOTH_MODEL_ORDER = 8
PROPOSAL_BATCH = 4096


def _std_normal_pdf(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


class SyntheticModel:

    def __init__(self, name: str, p: int, support: Tuple[Sequence[float], Sequence[float]],
                 box: Tuple[Sequence[float], Sequence[float]], density_spec: DensitySpec,
                 c0: float, regression_spec: RegressionSpec, noise_sigma: float,
                 r_model: int = SMOOTH_MODEL_ORDER):
        self.name = name
        self.p = int(p)
        self.support_low, self.support_high = (np.array(bound, dtype=float).reshape(self.p) for bound in support)
        self.box_low, self.box_high = (np.array(bound, dtype=float).reshape(self.p) for bound in box)
        if np.any(self.box_low < self.support_low) or np.any(self.box_high > self.support_high) \
                or np.any(self.box_low >= self.box_high):
            raise ModelMisconfigured(f"evaluation box of {name} must be a non-empty subset of its support")
        self.density_spec = DensitySpec(mixture_weight=float(density_spec.mixture_weight),
                                        weights=np.asarray(density_spec.weights, dtype=float).reshape(-1),
                                        means=np.asarray(density_spec.means, dtype=float).reshape(-1, self.p),
                                        scales=np.asarray(density_spec.scales, dtype=float).reshape(-1, self.p))
        self.c0 = float(c0)
        self.regression_spec = regression_spec
        self.noise_sigma = float(noise_sigma)
        self.r_model = int(r_model)
        spec = self.density_spec
        self._truncation = np.prod(ndtr((self.support_high - spec.means) / spec.scales)
                                   - ndtr((self.support_low - spec.means) / spec.scales), axis=1)

    @property
    def support_volume(self) -> float:
        return float(np.prod(self.support_high - self.support_low))

    @property
    def density_bound(self) -> float:
        """Upper bound of f used by the rejection sampler."""
        spec = self.density_spec
        peaks = 1.0 / (np.prod(spec.scales, axis=1) * (2.0 * math.pi) ** (self.p / 2.0) * self._truncation)
        return (1.0 - spec.mixture_weight) / self.support_volume + spec.mixture_weight * float(np.sum(spec.weights * peaks))

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.p:
            raise DimensionMismatch(f"model {self.name} has dimension {self.p}, got points of dimension {x.shape[-1]}")
        return x

    def in_support(self, x) -> np.ndarray:
        x = self._points(x)
        return np.all((x >= self.support_low) & (x <= self.support_high), axis=-1)

    def in_box(self, x) -> np.ndarray:
        x = self._points(x)
        return np.all((x >= self.box_low) & (x <= self.box_high), axis=-1)

    # vectorised truths, valid on all of R^p (zero density outside the support)

    def density(self, x) -> np.ndarray:
        x = self._points(x)
        spec = self.density_spec
        values = np.full(x.shape[:-1], (1.0 - spec.mixture_weight) / self.support_volume)
        if spec.mixture_weight > 0.0:
            mixture = np.zeros(x.shape[:-1])
            for weight, mean, scale, mass in zip(spec.weights, spec.means, spec.scales, self._truncation):
                mixture = mixture + weight * np.prod(_std_normal_pdf((x - mean) / scale) / scale, axis=-1) / mass
            values = values + spec.mixture_weight * mixture
        return np.where(self.in_support(x), values, 0.0)

    def regression(self, x) -> np.ndarray:
        x = self._points(x)
        spec = self.regression_spec
        if spec.kind == SINUSOID:
            return spec.coefficients[0] * np.sum(np.sin(2.0 * math.pi * x / spec.period), axis=-1)
        values = np.full(x.shape[:-1], float(spec.coefficients[0]))
        for degree, coefficient in enumerate(spec.coefficients[1:], start=1):
            if coefficient != 0.0:
                values = values + coefficient * np.sum(x ** degree, axis=-1)
        return values

    def g(self, x) -> np.ndarray:
        return self.regression(x) * self.density(x)

    def _partial_expectations(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """E[Y 1{Y>=0} | X=x] and E[-Y 1{Y<0} | X=x] for Y = r(x) + N(0, sigma^2)."""
        m = self.regression(x)
        sigma = self.noise_sigma
        if sigma == 0.0:
            return np.maximum(m, 0.0), np.maximum(-m, 0.0)
        z = m / sigma
        tail = sigma * _std_normal_pdf(z)
        return m * ndtr(z) + tail, -m * ndtr(-z) + tail

    def g1(self, x) -> np.ndarray:
        return self._partial_expectations(x)[0] * self.density(x)

    def g2(self, x) -> np.ndarray:
        return self._partial_expectations(x)[1] * self.density(x)

    def truth(self, target: str, x) -> np.ndarray:
        functions = {TARGET_DENSITY: self.density, TARGET_G: self.g, TARGET_REGRESSION: self.regression,
                     TARGET_G1: self.g1, TARGET_G2: self.g2}
        if target not in functions:
            raise InvalidTarget(f"unknown target [{target}], expected one of {sorted(functions)}")
        return functions[target](x)

    def marginal_cdf(self, j: int, t) -> np.ndarray:
        """CDF of the j-th coordinate of X."""
        t = np.clip(np.asarray(t, dtype=float), self.support_low[j], self.support_high[j])
        spec = self.density_spec
        low, high = self.support_low[j], self.support_high[j]
        values = (1.0 - spec.mixture_weight) * (t - low) / (high - low)
        for weight, mean, scale in zip(spec.weights, spec.means[:, j], spec.scales[:, j]):
            base = ndtr((low - mean) / scale)
            mass = ndtr((high - mean) / scale) - base
            values = values + spec.mixture_weight * weight * (ndtr((t - mean) / scale) - base) / mass
        return values

    def __repr__(self) -> str:
        return (f"SyntheticModel({self.name}, p={self.p}, support=[{self.support_low.tolist()}, "
                f"{self.support_high.tolist()}], sigma={self.noise_sigma})")


def _check_in_box(model: SyntheticModel, x) -> np.ndarray:
    x = model._points(np.asarray(x, dtype=float).reshape(-1))
    if not bool(model.in_box(x)):
        raise OutsideEvaluationBox(f"point {x.tolist()} lies outside the evaluation box of {model.name}")
    return x


def true_density(model: SyntheticModel, x) -> float:
    return float(model.density(_check_in_box(model, x)))


def true_regression(model: SyntheticModel, x) -> float:
    return float(model.regression(_check_in_box(model, x)))


def true_g(model: SyntheticModel, x) -> float:
    return float(model.g(_check_in_box(model, x)))


def true_g1(model: SyntheticModel, x) -> float:
    return float(model.g1(_check_in_box(model, x)))


def true_g2(model: SyntheticModel, x) -> float:
    return float(model.g2(_check_in_box(model, x)))


def make_model(name: str, p: int = 1, sigma: Optional[float] = None, box: Optional[float] = None) -> SyntheticModel:
    """
    M1: uniform on [0, L]^p, r(x) = sum sin(2 pi x_j / L), Gaussian noise.
    M2: 0.9 * truncated two-component Gaussian mixture + 0.1 * uniform on [-b, b]^p,
        polynomial r, Gaussian noise.
    M3: M1 without noise.
    `box` is L for M1/M3 (default 1) and b for M2 (default 3).
    """
    if name not in MODEL_NAMES:
        raise ModelMisconfigured(f"unknown model [{name}], expected one of {MODEL_NAMES}")
    p = int(p)
    if p < 1:
        raise ModelMisconfigured(f"model dimension must be >= 1, got {p}")
    if name in ("M1", "M3"):
        side = 1.0 if box is None else float(box)
        noise = 0.0 if name == "M3" else (DEFAULT_NOISE_SIGMA if sigma is None else float(sigma))
        return SyntheticModel(name=name, p=p,
                              support=([0.0] * p, [side] * p),
                              box=([0.1 * side] * p, [0.9 * side] * p),
                              density_spec=DensitySpec(0.0, [1.0], [[0.0] * p], [[1.0] * p]),
                              c0=side ** -p,
                              regression_spec=RegressionSpec(SINUSOID, (1.0,), side),
                              noise_sigma=noise)
    half = 3.0 if box is None else float(box)
    return SyntheticModel(name=name, p=p,
                          support=([-half] * p, [half] * p),
                          box=([-0.8 * half] * p, [0.8 * half] * p),
                          density_spec=DensitySpec(0.9, [0.5, 0.5], [[-1.0] * p, [1.0] * p], [[0.8] * p, [0.8] * p]),
                          c0=0.1 / (2.0 * half) ** p,
                          regression_spec=RegressionSpec(POLYNOMIAL, (1.0, 0.5, 0.0, -0.05), None),
                          noise_sigma=DEFAULT_NOISE_SIGMA if sigma is None else float(sigma))


def stream_generator(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, *stream)."""
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(s) for s in stream)]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample(model: SyntheticModel, n: int, seed: int, C_M: float, stream: Sequence[int] = ()) -> TrialSample:
    """
    Draws n pairs (X, Y): X by rejection from the enclosing box, Y = r(X) + noise
    clipped to [-M_n, M_n]. Identical (model, n, seed, stream) give identical samples.
    """
    M_n = schedule_M(n, C_M)
    acceptance = 1.0 / (model.density_bound * model.support_volume)
    if acceptance < MIN_ACCEPTANCE_RATE:
        raise ModelMisconfigured(f"rejection acceptance rate {acceptance:.2e} of {model.name} is below {MIN_ACCEPTANCE_RATE}")

    rng = stream_generator(seed, stream)
    accepted = []
    remaining = n
    while remaining > 0:
        batch = max(PROPOSAL_BATCH, int(math.ceil(1.2 * remaining / acceptance)))
        proposals = model.support_low + (model.support_high - model.support_low) * rng.random((batch, model.p))
        keep = rng.random(batch) * model.density_bound <= model.density(proposals)
        chosen = proposals[keep][:remaining]
        accepted.append(chosen)
        remaining -= chosen.shape[0]
    X = np.concatenate(accepted, axis=0)

    Y = model.regression(X) + model.noise_sigma * rng.standard_normal(n)
    clip_count = int(np.count_nonzero(np.abs(Y) > M_n))
    Y = np.clip(Y, -M_n, M_n)
    trial_sample = TrialSample(sample=SampleSet(X, Y), seed=int(seed), clip_count=clip_count)
    logging.debug(f"Sampled n={n} from {model.name} (seed {seed}, stream {tuple(stream)}): "
                  f"{clip_count} responses clipped at {M_n:.4f}")
    return trial_sample


def make_eval_grid(model: SyntheticModel, points: int, inset: float = 0.0) -> np.ndarray:
    """
    Lattice with `points` per axis (p <= 2) or `points` Sobol points (p >= 3)
    inside B shrunk by `inset` on every side.
    """
    low, high = model.box_low + inset, model.box_high - inset
    if np.any(low > high):
        raise PreconditionFailed(f"inset {inset:.4g} leaves no room inside the evaluation box of {model.name}")
    if model.p <= 2:
        axes = [np.linspace(lo, hi, int(points)) for lo, hi in zip(low, high)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([axis.reshape(-1) for axis in mesh], axis=-1)
    design = qmc.Sobol(d=model.p, scramble=False).random(int(points))
    return qmc.scale(design, low, high) if np.all(low < high) else np.broadcast_to(low, design.shape).copy()
