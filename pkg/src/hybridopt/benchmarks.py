"""Synthetic black-box problems with known ground truth.

``fitting_like`` is a noisy, multimodal, mono-objective error minimization
over wide bounds. ``blade_like`` is a three-objective maximization whose
Pareto front is a closed-form curve. The calibration functions (sphere,
rotated quadratic, shifted Rastrigin) have analytic optima.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ConfigError, Scalarizer, SearchSpace, Sense, as_point
from .evaluator import Problem

# Simulated seconds per block, so that one hour of runtime is 133 blocks and
# eight hours are 404 blocks.
FITTING_COST_SECONDS = 3600.0 / 133
BLADE_COST_SECONDS = 8 * 3600.0 / 404


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    problem: Problem
    scalarizer: Scalarizer
    reference_value: float = 1.0
    known_optimum: tuple[np.ndarray, float] | None = None
    starts: dict[str, np.ndarray] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        if not self.reference_value > 0:
            raise ConfigError("reference_value must be positive")

    @property
    def multi_objective(self) -> bool:
        return self.problem.objective_count > 1

    def start(self, preset: str = "far") -> np.ndarray:
        try:
            return self.starts[preset]
        except KeyError:
            raise ConfigError(
                f"benchmark {self.name!r} has no start preset {preset!r}; "
                f"choose from {sorted(self.starts)}") from None

    def describe(self) -> dict:
        p = self.problem
        out = {
            "name": self.name,
            "description": self.description,
            "dim": p.dim,
            "objectives": list(p.objective_names),
            "sense": p.sense.value,
            "space": p.space.to_dict(),
            "noise_sigma": p.noise_sigma,
            "trust_factor": p.trust_factor,
            "cost_seconds": p.cost_seconds,
            "scalarizer": self.scalarizer.to_dict(),
            "reference_value": self.reference_value,
            "starts": {k: v.tolist() for k, v in self.starts.items()},
            "parameters": getattr(p.eval_fn, "parameters", lambda: {})(),
        }
        if self.known_optimum is not None:
            out["known_optimum"] = {"point": self.known_optimum[0].tolist(),
                                    "value": self.known_optimum[1]}
        return out

    def export(self) -> str:
        return json.dumps(self.describe(), indent=2)


@dataclass(frozen=True)
class WellsFunction:
    """Sum of non-negative terms above ``floor`` in unit-cube coordinates ``u``.

    * wells: ``height * (1 - max_j depth_j * exp(-(|u - c_j|^2 / 2w^2)^shape))``
    * bowl: ``bowl * |u - bowl_center|^2 / dim``, faded out inside the
      global well ``centers[0]``
    * ripple: ``ripple_amplitude * mean(1 - cos(2 pi (x - centers[0]) / wavelength))``
      in raw units

    Every term vanishes at ``centers[0]`` (depth 1), so that is the global
    minimum with value ``floor``. ``shape > 1`` flattens the bottoms of the
    wells; the ripple adds a lattice of shallow local minima everywhere.
    """

    space: SearchSpace
    centers: np.ndarray
    depths: np.ndarray
    width: float
    floor: float
    height: float
    ripple_amplitude: float
    wavelength: float
    bowl: float = 0.0
    bowl_center: np.ndarray | None = None  # unit-cube coordinates; None -> centre of the cube
    shape: float = 1.0

    def __call__(self, x: np.ndarray) -> tuple[float]:
        u = self.space.normalize(x)
        d2 = np.sum((u - self.space.normalize(self.centers)) ** 2, axis=1)
        profile = np.exp(-(d2 / (2.0 * self.width**2)) ** self.shape)
        wells = float(np.max(self.depths * profile))
        b = np.full(u.size, 0.5) if self.bowl_center is None else self.bowl_center
        bowl = self.bowl * float(np.sum((u - b) ** 2)) / u.size * (1.0 - profile[0])
        phase = 2.0 * np.pi * (np.asarray(x) - self.centers[0]) / self.wavelength
        ripple = self.ripple_amplitude * float(np.mean(1.0 - np.cos(phase)))
        return (self.floor + self.height * (1.0 - wells) + bowl + ripple,)

    def parameters(self) -> dict:
        b = self.bowl_center
        return {"centers": self.centers.tolist(), "depths": self.depths.tolist(),
                "width": self.width, "floor": self.floor, "height": self.height,
                "ripple_amplitude": self.ripple_amplitude, "wavelength": self.wavelength,
                "bowl": self.bowl, "bowl_center": None if b is None else np.asarray(b).tolist(),
                "shape": self.shape}


def fitting_like(dim: int = 5, noise_sigma: float = 0.0, rng_seed: int = 0, *,
                 n_wells: int = 6, cost_seconds: float = FITTING_COST_SECONDS) -> BenchmarkSpec:
    """Noisy multimodal error minimization over wide bounds.

    The global well has depth 1, the secondary wells 0.80-0.95. A shallow
    bowl centred in the box pulls local searches towards the middle, where
    they tend to settle in a secondary well; the global well sits elsewhere.
    """
    if dim < 2:
        raise ConfigError("fitting_like needs dim >= 2")
    rng = np.random.default_rng([rng_seed, 1001])
    half = 50.0
    space = SearchSpace(np.full(dim, -half), np.full(dim, half))
    wavelength = 2.0
    width = 0.16
    min_sep = 3.0 * width

    def on_lattice(u):
        x = space.denormalize(u)
        return np.round(x / wavelength) * wavelength

    centers = [on_lattice(rng.uniform(0.2, 0.8, dim))]
    tries = 0
    while len(centers) < n_wells:
        c = on_lattice(rng.uniform(0.1, 0.9, dim))
        if all(np.linalg.norm(space.normalize(c) - space.normalize(o)) >= min_sep for o in centers):
            centers.append(c)
        tries += 1
        if tries % 2000 == 0:
            # crowded low-dimensional boxes: relax the separation
            min_sep *= 0.9
    centers = np.array(centers)
    depths = np.concatenate([[1.0], rng.uniform(0.8, 0.95, n_wells - 1)])
    floor = 1.0
    fn = WellsFunction(space, centers, depths, width, floor=floor, height=1.0,
                       ripple_amplitude=0.04, wavelength=wavelength, bowl=1.0, shape=2.0)

    # "far": the random candidate farthest from every well; "near": a small
    # offset from the global optimum.
    cand = space.uniform(rng, 256)
    dist = np.min(np.linalg.norm(space.normalize(cand)[:, None, :]
                                 - space.normalize(centers)[None, :, :], axis=2), axis=1)
    far = cand[int(np.argmax(dist))]
    offset = rng.standard_normal(dim)
    near = np.clip(centers[0] + 0.03 * space.width * offset / np.linalg.norm(offset),
                   space.lower, space.upper)

    problem = Problem(space, 1, fn, Sense.MINIMIZE, noise_sigma=noise_sigma, trust_factor=1.0,
                      cost_seconds=cost_seconds, objective_names=("error",))
    return BenchmarkSpec(
        name="fitting_like",
        problem=problem,
        scalarizer=Scalarizer((1.0,), Sense.MINIMIZE, trust_weight=1.0),
        reference_value=1.25 * floor,
        known_optimum=(as_point(centers[0]), floor),
        starts={"far": as_point(far), "near": as_point(near)},
        description="noisy multimodal error minimization; secondary wells trap local searches",
    )


@dataclass(frozen=True)
class BladeFunction:
    """Three maximized objectives with a closed-form Pareto curve.

    With ``t`` the first unit coordinate, ``a = t*pi/2`` and ``g >= 0`` the
    distance of the remaining coordinates from ``targets``:
    eta = sin(a) - g, area_obj = cos(a) - g, mc_obj = 0.5 sin(a) - g.
    The front is ``g = 0``: area falls and mc rises as eta rises.
    """

    space: SearchSpace
    targets: np.ndarray
    curvature: float = 1.0
    ripple_amplitude: float = 0.005
    ripple_freq: float = 5.0

    def distance(self, u: np.ndarray) -> float:
        d = u[1:] - self.targets
        ripple = np.mean(1.0 - np.cos(2.0 * np.pi * self.ripple_freq * d))
        return float(self.curvature * np.sum(d * d) + self.ripple_amplitude * ripple)

    def front(self, t: float | np.ndarray) -> np.ndarray:
        a = np.asarray(t) * np.pi / 2.0
        return np.stack([np.sin(a), np.cos(a), 0.5 * np.sin(a)], axis=-1)

    def project(self, x: np.ndarray) -> np.ndarray:
        u = self.space.normalize(x)
        return self.space.denormalize(np.concatenate([[u[0]], self.targets]))

    def __call__(self, x: np.ndarray) -> tuple[float, float, float]:
        u = self.space.normalize(x)
        g = self.distance(u)
        eta, area, mc = self.front(u[0])
        return (eta - g, area - g, mc - g)

    def parameters(self) -> dict:
        return {"targets": self.targets.tolist(), "curvature": self.curvature,
                "ripple_amplitude": self.ripple_amplitude, "ripple_freq": self.ripple_freq}


def blade_like(dim: int = 6, rng_seed: int = 0, noise_sigma: float = 0.0, *,
               weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
               cost_seconds: float = BLADE_COST_SECONDS) -> BenchmarkSpec:
    """Three-objective maximization (eta, area_obj, mc_obj) with a known front."""
    if dim < 2:
        raise ConfigError("blade_like needs dim >= 2")
    rng = np.random.default_rng([rng_seed, 2002])
    lower = rng.uniform(-1.0, 1.0, dim).round(3)
    upper = lower + rng.uniform(0.5, 5.0, dim).round(3)
    space = SearchSpace(lower, upper)
    targets = rng.uniform(0.25, 0.75, dim - 1)
    fn = BladeFunction(space, targets)
    scalarizer = Scalarizer(weights, Sense.MAXIMIZE, trust_weight=1.0)

    w_eta, w_area, w_mc = scalarizer.weights
    a_star = math.atan2(w_eta + 0.5 * w_mc, w_area)
    u_star = np.concatenate([[a_star / (np.pi / 2.0)], targets])
    best_point = as_point(space.denormalize(u_star))
    best_value = float(np.dot(scalarizer.weights, fn(best_point)))

    far_u = np.concatenate([[0.02], np.where(targets > 0.5, 0.02, 0.98)])
    near_u = u_star + 0.04 * np.where(rng.random(dim) < 0.5, -1.0, 1.0)
    problem = Problem(space, 3, fn, Sense.MAXIMIZE, noise_sigma=noise_sigma, trust_factor=1.0,
                      cost_seconds=cost_seconds, objective_names=("eta", "area_obj", "mc_obj"))
    return BenchmarkSpec(
        name="blade_like",
        problem=problem,
        scalarizer=scalarizer,
        reference_value=1.0,
        known_optimum=(best_point, best_value),
        starts={"far": as_point(space.denormalize(far_u)),
                "near": as_point(space.denormalize(np.clip(near_u, 0.0, 1.0)))},
        description="three maximized objectives; area trades against eta, mc follows eta",
    )


@dataclass(frozen=True)
class QuadraticFunction:
    center: np.ndarray
    hessian: np.ndarray

    def __call__(self, x: np.ndarray) -> tuple[float]:
        d = np.asarray(x) - self.center
        return (float(d @ self.hessian @ d),)

    def parameters(self) -> dict:
        return {"center": self.center.tolist(), "hessian": self.hessian.tolist()}


@dataclass(frozen=True)
class RastriginFunction:
    shift: np.ndarray

    def __call__(self, x: np.ndarray) -> tuple[float]:
        z = np.asarray(x) - self.shift
        return (float(10.0 * z.size + np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z))),)

    def parameters(self) -> dict:
        return {"shift": self.shift.tolist()}


def _mono(name, space, fn, optimum, starts, description, cost_seconds=1.0):
    problem = Problem(space, 1, fn, Sense.MINIMIZE, cost_seconds=cost_seconds)
    return BenchmarkSpec(name, problem, Scalarizer((1.0,), Sense.MINIMIZE), 1.0,
                         (as_point(optimum), 0.0), starts, description)


def sphere(dim: int = 2, rng_seed: int = 0) -> BenchmarkSpec:
    space = SearchSpace.cube(dim, -5.0, 5.0)
    fn = QuadraticFunction(np.zeros(dim), np.eye(dim))
    rng = np.random.default_rng([rng_seed, 3003])
    return _mono("sphere", space, fn, np.zeros(dim),
                 {"far": as_point(np.full(dim, 4.0)), "near": as_point(rng.uniform(-0.5, 0.5, dim))},
                 "sum of squares, minimum 0 at the origin")


def quadratic(dim: int = 2, condition_number: float = 10.0, rng_seed: int = 0) -> BenchmarkSpec:
    """Randomly rotated convex quadratic with eigenvalues log-spaced in [1, condition_number]."""
    if condition_number < 1:
        raise ConfigError("condition_number must be >= 1")
    rng = np.random.default_rng([rng_seed, 4004])
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eig = np.geomspace(1.0, condition_number, dim)
    hessian = q @ np.diag(eig) @ q.T
    hessian = 0.5 * (hessian + hessian.T)
    space = SearchSpace.cube(dim, -1.0, 1.0)
    center = rng.uniform(-0.5, 0.5, dim)
    fn = QuadraticFunction(center, hessian)
    return _mono("quadratic", space, fn, center,
                 {"far": as_point(rng.uniform(-1.0, 1.0, dim)),
                  "near": as_point(center + rng.uniform(-0.05, 0.05, dim))},
                 f"rotated convex quadratic, condition number {condition_number:g}")


def rastrigin_like(dim: int = 2, rng_seed: int = 0) -> BenchmarkSpec:
    rng = np.random.default_rng([rng_seed, 5005])
    shift = rng.uniform(-2.0, 2.0, dim)
    space = SearchSpace.cube(dim, -5.12, 5.12)
    return _mono("rastrigin_like", space, RastriginFunction(shift), shift,
                 {"far": as_point(np.full(dim, -5.0)),
                  "near": as_point(np.clip(shift + 0.2, -5.12, 5.12))},
                 "shifted Rastrigin, minimum 0 at the shift")


BENCHMARKS: dict[str, Callable[..., BenchmarkSpec]] = {
    "fitting_like": fitting_like,
    "blade_like": blade_like,
    "sphere": sphere,
    "quadratic": quadratic,
    "rastrigin_like": rastrigin_like,
}


def make_benchmark(name: str, **kwargs) -> BenchmarkSpec:
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise ConfigError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None
    return factory(**kwargs)
