"""Ergodic limit of the periodic dynamics: skeleton invariant measure and the
period-averaged limiting value of time averages.

The period map of the auxiliary dynamics is the AR recursion
x -> a x + s0 Z with a = exp(-int_0^gamma g) and s0 the one-period standard
deviation, whose Gaussian fixed point Normal(0, s0^2/(1-a^2)) anchors the
ergodic limit.  A mesh power-iteration oracle computes the same invariant
measure independently; tests cross-check the two routes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.special import ndtr  # standard normal CDF

from .measures import Mesh, MeshMeasure
from .ou import OUSpec, drift_profile, transition_params
from .paths import Observable

__all__ = [
    "SkeletonMap",
    "ContractionError",
    "PowerIterationError",
    "invariant_gaussian",
    "skeleton_kernel_matrix",
    "gaussian_kernel_matrix",
    "power_iteration_invariant",
    "limiting_value",
    "default_skeleton_mesh",
]


class ContractionError(ValueError):
    """The skeleton map is not a contraction (a >= 1)."""


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the iteration budget."""


@dataclass(frozen=True)
class SkeletonMap:
    """One-period AR map x -> a x + s0 Z of the auxiliary dynamics."""

    a: float
    s0: float

    @staticmethod
    def from_spec(spec: OUSpec) -> "SkeletonMap":
        tr = transition_params(spec.g, 0.0, spec.gamma)
        return SkeletonMap(a=tr.m, s0=tr.sigma)


def skeleton_fixed_point_variance(sk: SkeletonMap) -> float:
    """Variance of the Gaussian fixed point of x -> a x + s0 Z."""
    if sk.a >= 1.0:
        raise ContractionError(f"skeleton not contracting: a = {sk.a!r} >= 1")
    return sk.s0 ** 2 / (1.0 - sk.a ** 2)


def invariant_gaussian(spec: OUSpec) -> Tuple[float, float]:
    """(mean, variance) of the skeleton's Gaussian fixed point.

    The AR map x -> a x + s0 Z has invariant law Normal(0, s0^2 / (1 - a^2)),
    provided a < 1.
    """
    return 0.0, skeleton_fixed_point_variance(SkeletonMap.from_spec(spec))


def default_skeleton_mesh(spec: OUSpec, n_cells: int = 400, n_sd: float = 6.0) -> Mesh:
    """Mesh truncated at +- n_sd standard deviations of the analytic invariant."""
    _, var = invariant_gaussian(spec)
    half = n_sd * math.sqrt(var) if var > 0 else 1.0
    return Mesh(x_min=-half, x_max=half, n_cells=n_cells)


def gaussian_kernel_matrix(m: float, sigma: float, mesh: Mesh) -> np.ndarray:
    """Row-stochastic matrix of x -> Normal(m x, sigma^2) on the mesh.

    Row i gives the law from the cell center x_i; mass beyond the mesh is
    folded into the edge cells, so rows sum to 1 exactly.
    """
    centers = mesh.centers()
    edges = mesh.edges()
    if sigma == 0.0:
        k = np.zeros((mesh.n_cells, mesh.n_cells))
        k[np.arange(mesh.n_cells), mesh.cell_index(m * centers)] = 1.0
        return k
    z = (edges[None, :] - m * centers[:, None]) / sigma
    cdf = ndtr(z)
    cdf[:, 0] = 0.0
    cdf[:, -1] = 1.0
    return np.diff(cdf, axis=1)


def skeleton_kernel_matrix(spec: OUSpec, mesh: Mesh) -> np.ndarray:
    sk = SkeletonMap.from_spec(spec)
    return gaussian_kernel_matrix(sk.a, sk.s0, mesh)


def power_iteration_invariant(kernel_matrix: np.ndarray, mesh: Mesh,
                              tol: float = 1e-12, max_iter: int = 100_000
                              ) -> Tuple[MeshMeasure, int]:
    """Invariant probability vector of a row-stochastic mesh operator.

    Iterates mu <- mu K from the uniform start until ||mu K - mu||_1 <= tol.
    Returns the measure and the iteration count.
    """
    k = np.asarray(kernel_matrix, dtype=float)
    if k.shape != (mesh.n_cells, mesh.n_cells):
        raise ValueError(f"matrix shape {k.shape} does not match mesh ({mesh.n_cells} cells)")
    row_err = np.abs(k.sum(axis=1) - 1.0).max()
    if row_err > 1e-10:
        raise ValueError(f"rows must sum to 1 within 1e-10, worst error {row_err:.3e}")
    mu = np.full(mesh.n_cells, 1.0 / mesh.n_cells)
    for it in range(1, max_iter + 1):
        nxt = mu @ k
        if np.abs(nxt - mu).sum() <= tol:
            nxt = nxt / nxt.sum()
            return MeshMeasure(mesh, nxt), it
        mu = nxt
    raise PowerIterationError(f"no convergence to {tol:.1e} within {max_iter} iterations")


def _gauss_hermite(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    return nodes, weights / math.sqrt(math.pi)


def limiting_value(spec: OUSpec, f: Observable | Callable[[np.ndarray], np.ndarray],
                   origin: float = 0.0, n_s: int = 256, gh_order: int = 64) -> float:
    """Period-averaged limit of time averages under the periodic dynamics.

    Computes (1/gamma) int_0^gamma E[f] ds where the law at phase s is the
    skeleton invariant pushed through the partial period: Normal(0,
    a_s^2 sigma_inf^2 + sigma(0,s)^2) with a_s = exp(-int_0^s g).  The inner
    expectation uses Gauss-Hermite quadrature of the given order, the outer
    s-integral composite Simpson on n_s panels.  ``origin`` shifts the
    quadrature window to [origin, origin + gamma] (multiples of gamma leave
    the value unchanged).
    """
    _, var_inf = invariant_gaussian(spec)
    # profile of Q_{0,s} over [0, origin + gamma] at half-panel resolution,
    # then restricted to the quadrature window [origin, origin + gamma]
    half_panel = spec.gamma / (2 * n_s)
    n_prof = int(round((origin + spec.gamma) / half_panel))
    _, a_vals, var_vals = drift_profile(spec.g, 0.0, origin + spec.gamma, n=n_prof)
    take = np.arange(n_prof - 2 * n_s, n_prof + 1)
    a_s = a_vals[take]
    var_s = var_vals[take]
    total_var = np.exp(-2.0 * a_s) * var_inf + var_s
    nodes, weights = _gauss_hermite(gh_order)
    x = math.sqrt(2.0) * np.sqrt(total_var)[:, None] * nodes[None, :]
    fn = f.fn if isinstance(f, Observable) else f
    vals = np.asarray(fn(x), dtype=float) @ weights
    if vals.shape != (2 * n_s + 1,):
        raise ValueError("observable must evaluate elementwise on arrays")
    simpson = (vals[0:-2:2] + 4.0 * vals[1:-1:2] + vals[2::2]).sum() / (6.0 * n_s)
    return float(simpson)
