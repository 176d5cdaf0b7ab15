"""
Multivariate kernels K : R^p -> R.

Every family is built from even functions of the coordinates (squares or the
squared norm), so K(u) == K(-u) holds bit for bit.
"""
import math
import re
import sys
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma, ndtri
from scipy.stats import qmc

from knnlab.constant import EPANECHNIKOV_RADIAL, GAUSSIAN_PRODUCT, KERNEL_FAMILIES, POLY_GAUSSIAN
from knnlab.exception import DimensionMismatch, UnsupportedKernelSpec

FAMILY_ALIASES = {
    "gaussian": GAUSSIAN_PRODUCT,
    "epanechnikov": EPANECHNIKOV_RADIAL,
    "poly_gaussian": POLY_GAUSSIAN,
}

# coefficients of the polynomial factor in u^2, per declared order
POLY_GAUSSIAN_PARAMS = {
    1: (1.0,),
    3: (1.5, -0.5),
}

_KERNEL_SPEC_PATTERN = re.compile(r"^(?P<family>[a-z_]+)((:[a-z]+=[^:]+)*)$")


def unit_ball_volume(p: int) -> float:
    return math.pi ** (p / 2.0) / gamma(p / 2.0 + 1.0)


class Kernel:
    """
    Immutable kernel of a declared order.

    family: one of KERNEL_FAMILIES
    p: dimension
    order: declared moment-vanishing order r
    params: coefficients (c0, c1, ...) of the factor sum_m c_m u^(2m) applied per
        coordinate by the poly-Gaussian family; empty for the other families
    """

    __slots__ = ("_family", "_p", "_order", "_params", "_bound", "_normalizer")

    def __init__(self, family: str, p: int, order: int, params: Sequence[float] = ()):
        self._family = family
        self._p = int(p)
        self._order = int(order)
        self._params = tuple(float(c) for c in params)
        if family == EPANECHNIKOV_RADIAL:
            self._normalizer = (self._p + 2.0) / (2.0 * unit_ball_volume(self._p))
            self._bound = self._normalizer
        else:
            self._normalizer = (2.0 * math.pi) ** (-self._p / 2.0)
            self._bound = self._normalizer * self._profile_factor_bound() ** self._p

    def _profile_factor_bound(self) -> float:
        if not self._params:
            return 1.0
        t = np.linspace(0.0, 12.0, 120001)
        return float(np.max(np.abs(np.polyval(self._params[::-1], t * t) * np.exp(-0.5 * t * t))))

    @property
    def family(self) -> str:
        return self._family

    @property
    def p(self) -> int:
        return self._p

    @property
    def order(self) -> int:
        return self._order

    @property
    def params(self) -> Tuple[float, ...]:
        return self._params

    @property
    def bound(self) -> float:
        """G = sup |K|."""
        return self._bound

    @property
    def profile_width(self) -> float:
        """Support radius (compact families) or standard deviation (Gaussian families)."""
        return 1.0

    @property
    def is_compact(self) -> bool:
        return self._family == EPANECHNIKOV_RADIAL

    @property
    def is_gaussian_weighted(self) -> bool:
        return not self.is_compact

    def spec(self) -> str:
        return format_kernel_spec(self)

    def polynomial_factor(self, u: np.ndarray) -> np.ndarray:
        """K(u) / standard normal density, for the Gaussian-weighted families."""
        u = np.asarray(u, dtype=float)
        if not self._params:
            return np.ones(u.shape[:-1])
        coefficients = self._params[::-1]
        return np.prod(np.polyval(coefficients, u * u), axis=-1)

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        """Vectorised K over the last axis of `u` (shape (..., p))."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self._p:
            raise DimensionMismatch(f"kernel dimension is {self._p}, got points of dimension {u.shape[-1]}")
        squared_norm = np.sum(u * u, axis=-1)
        if self._family == EPANECHNIKOV_RADIAL:
            return self._normalizer * np.maximum(1.0 - squared_norm, 0.0)
        values = self._normalizer * np.exp(-0.5 * squared_norm)
        if self._family == POLY_GAUSSIAN:
            values = values * self.polynomial_factor(u)
        return values

    def __call__(self, u) -> float:
        return eval_kernel(self, u)

    def __eq__(self, other) -> bool:
        return isinstance(other, Kernel) and (self._family, self._p, self._order, self._params) == \
            (other._family, other._p, other._order, other._params)

    def __hash__(self) -> int:
        return hash((self._family, self._p, self._order, self._params))

    def __repr__(self) -> str:
        return f"Kernel({self.spec()})"


def make_kernel(family: str, p: int, r: int, params: Optional[Sequence[float]] = None) -> Kernel:
    """Builds a kernel; raises UnsupportedKernelSpec for combinations that are not shipped."""
    family = FAMILY_ALIASES.get(family, family)
    if family not in KERNEL_FAMILIES:
        raise UnsupportedKernelSpec(f"unknown kernel family [{family}], expected one of {KERNEL_FAMILIES}")
    if int(p) != p or p < 1:
        raise UnsupportedKernelSpec(f"kernel dimension p must be a positive integer, got {p}")
    if int(r) != r or r < 1:
        raise UnsupportedKernelSpec(f"kernel order r must be a positive integer, got {r}")
    params = tuple(params or ())
    if family == POLY_GAUSSIAN:
        if not params:
            if r not in POLY_GAUSSIAN_PARAMS:
                raise UnsupportedKernelSpec(f"{POLY_GAUSSIAN} ships orders {sorted(POLY_GAUSSIAN_PARAMS)}, got r={r}")
            params = POLY_GAUSSIAN_PARAMS[r]
    elif params:
        raise UnsupportedKernelSpec(f"family [{family}] takes no polynomial parameters")
    return Kernel(family=family, p=int(p), order=int(r), params=params)


def eval_kernel(kernel: Kernel, u) -> float:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != kernel.p:
        raise DimensionMismatch(f"kernel dimension is {kernel.p}, got a point of dimension {u.shape[0]}")
    return float(kernel.evaluate(u))


def parse_kernel_spec(spec: str) -> Kernel:
    """`family:p=<int>:r=<int>[:params=c0,c1,...]` -> Kernel."""
    try:
        text = str(spec).strip()
        if not _KERNEL_SPEC_PATTERN.match(text):
            raise ValueError(f"malformed kernel spec [{spec}]")
        family, *fields = text.split(":")
        values = dict(field.split("=", 1) for field in fields)
        unknown = set(values) - {"p", "r", "params"}
        if unknown:
            raise ValueError(f"unknown kernel spec fields {sorted(unknown)}")
        params = [float(c) for c in values["params"].split(",")] if "params" in values else None
        return make_kernel(family, int(values.get("p", 1)), int(values.get("r", 1)), params)
    except UnsupportedKernelSpec:
        raise
    except Exception as e:
        raise UnsupportedKernelSpec(e, sys) from e


def format_kernel_spec(kernel: Kernel) -> str:
    spec = f"{kernel.family}:p={kernel.p}:r={kernel.order}"
    if kernel.family == POLY_GAUSSIAN and kernel.params != POLY_GAUSSIAN_PARAMS.get(kernel.order):
        spec += ":params=" + ",".join(repr(c) for c in kernel.params)
    return spec


def _tensor_grid(nodes_1d: np.ndarray, weights_1d: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    mesh = np.meshgrid(*([nodes_1d] * p), indexing="ij")
    weight_mesh = np.meshgrid(*([weights_1d] * p), indexing="ij")
    nodes = np.stack([axis.reshape(-1) for axis in mesh], axis=-1)
    weights = np.prod(np.stack([axis.reshape(-1) for axis in weight_mesh], axis=-1), axis=-1)
    return nodes, weights


def _polar_rule(p: int, nodes_per_axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rule for functions supported on the unit ball (Lebesgue measure)."""
    t, w = leggauss(nodes_per_axis)
    if p == 1:
        return t[:, None], w
    rho, w_rho = 0.5 * (t + 1.0), 0.5 * w
    n_angles = 2 * nodes_per_axis
    angles = 2.0 * math.pi * np.arange(n_angles) / n_angles
    w_angle = 2.0 * math.pi / n_angles
    if p == 2:
        r, a = np.meshgrid(rho, angles, indexing="ij")
        nodes = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1).reshape(-1, 2)
        weights = (np.outer(w_rho * rho, np.full(n_angles, w_angle))).reshape(-1)
        return nodes, weights
    if p == 3:
        r, c, a = np.meshgrid(rho, t, angles, indexing="ij")
        s = np.sqrt(1.0 - c * c)
        nodes = np.stack([r * s * np.cos(a), r * s * np.sin(a), r * c], axis=-1).reshape(-1, 3)
        weights = (w_rho * rho * rho)[:, None, None] * w[None, :, None] * w_angle
        return nodes, np.broadcast_to(weights, r.shape).reshape(-1)
    raise UnsupportedKernelSpec(f"tensor quadrature is available for p <= 3, got p={p}")


def kernel_quadrature(kernel: Kernel, nodes_per_axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights with sum(weights * h(nodes)) ~ integral of K(u) h(u) du.

    Gaussian-weighted families use a Gauss-Hermite tensor rule with the kernel's
    polynomial factor folded into the weights; compact radial families use a
    polar Gauss-Legendre rule on the unit ball.
    """
    if kernel.is_gaussian_weighted:
        t, w = hermegauss(nodes_per_axis)
        nodes, weights = _tensor_grid(t, w, kernel.p)
        return nodes, weights * (2.0 * math.pi) ** (-kernel.p / 2.0) * kernel.polynomial_factor(nodes)
    nodes, weights = _polar_rule(kernel.p, nodes_per_axis)
    return nodes, weights * kernel.evaluate(nodes)


def kernel_monte_carlo(kernel: Kernel, budget: int, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stratified (Latin hypercube) sample with importance weights:
    sum(weights * h(nodes)) is an unbiased estimate of integral of K(u) h(u) du.
    """
    design = qmc.LatinHypercube(d=kernel.p, seed=seed).random(budget)
    if kernel.is_gaussian_weighted:
        nodes = ndtri(design)
        return nodes, kernel.polynomial_factor(nodes) / budget
    nodes = 2.0 * design - 1.0
    return nodes, kernel.evaluate(nodes) * 2.0 ** kernel.p / budget
