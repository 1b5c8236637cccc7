"""Independent oracles used to freeze expected values.

Everything here is derived from closed-form analysis (spectral series,
reflection images, Gaussian CDFs), not from the code under test.
"""

import numpy as np
from scipy.stats import norm


def dirichlet_survival_spectral(x: float, T: float, radius: float = 1.0,
                                n_terms: int = 400) -> float:
    """P_x[no exit from (-radius, radius) before T], eigenfunction series."""
    y, s = x / radius, T / radius ** 2
    k = np.arange(1, n_terms + 1)
    coef = (4.0 / (np.pi * k)) * np.sin(k * np.pi / 2.0)  # 0 for even k
    return float(np.sum(coef * np.cos(k * np.pi * y / 2.0)
                        * np.exp(-k ** 2 * np.pi ** 2 * s / 8.0)))


def dirichlet_survival_images(x: float, T: float, radius: float = 1.0,
                              n_images: int = 60) -> float:
    """Same probability via the reflection (image-charge) representation:
    P_x[no exit from (-a,a) by t] = sum_k (-1)^k [Phi(((2k+1)a - x)/sqrt(t))
    - Phi(((2k-1)a - x)/sqrt(t))]."""
    y, s = x / radius, T / radius ** 2
    k = np.arange(-n_images, n_images + 1)
    sq = np.sqrt(s)
    terms = (-1.0) ** np.abs(k) * (norm.cdf((2 * k + 1 - y) / sq)
                                   - norm.cdf((2 * k - 1 - y) / sq))
    return float(terms.sum())


def qsd_density(x, radius: float = 1.0):
    """Quasi-stationary density on (-radius, radius): normalized cosine."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < radius,
                   (np.pi / (4.0 * radius)) * np.cos(np.pi * x / (2.0 * radius)), 0.0)
    return out


def qed_density(x, radius: float = 1.0):
    """Quasi-ergodic density: squared cosine (eigenfunction-tilted law)."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < radius,
                   np.cos(np.pi * x / (2.0 * radius)) ** 2 / radius, 0.0)
    return out


def qed_cell_masses(edges: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Exact per-cell integrals of the quasi-ergodic density."""
    e = np.clip(edges, -radius, radius)
    anti = e / (2.0 * radius) + np.sin(np.pi * e / radius) / (2.0 * np.pi)
    return np.diff(anti)


def qed_second_moment(radius: float = 1.0) -> float:
    """int x^2 cos^2(pi x / 2r)/r dx over (-r, r) = r^2 (1/3 - 2/pi^2)."""
    return radius ** 2 * (1.0 / 3.0 - 2.0 / np.pi ** 2)


def gaussian_tv_exact(mean1: float, sd1: float, mean2: float, sd2: float) -> float:
    """TV between two normals via density crossings and CDF differences."""
    if sd1 == sd2:
        if mean1 == mean2:
            return 0.0
        return float(2.0 * norm.cdf(abs(mean1 - mean2) / (2.0 * sd1)) - 1.0)
    alpha = 0.5 / sd2 ** 2 - 0.5 / sd1 ** 2
    beta = mean1 / sd1 ** 2 - mean2 / sd2 ** 2
    c0 = mean2 ** 2 / (2 * sd2 ** 2) - mean1 ** 2 / (2 * sd1 ** 2) + np.log(sd2 / sd1)
    disc = beta ** 2 - 4 * alpha * c0
    pts = []
    if disc >= 0:
        r = np.sqrt(disc)
        pts = sorted([(-beta - r) / (2 * alpha), (-beta + r) / (2 * alpha)])
    cuts = [-np.inf] + pts + [np.inf]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        d1 = norm.cdf(b, mean1, sd1) - norm.cdf(a, mean1, sd1)
        d2 = norm.cdf(b, mean2, sd2) - norm.cdf(a, mean2, sd2)
        total += abs(d1 - d2)
    return 0.5 * total


def ou_constant_variance(lam0: float, dt: float) -> float:
    """Exact transition variance of the constant-rate case."""
    if lam0 == 0.0:
        return dt
    return (1.0 - np.exp(-2.0 * lam0 * dt)) / (2.0 * lam0)


def _dirichlet_modes(y, k):
    """Eigenfunctions sin(k pi (y+1)/2) of the unit interval (-1, 1)."""
    return np.sin(k[:, None] * np.pi * (np.asarray(y)[None, :] + 1.0) / 2.0)


def dirichlet_heat_kernel(x: float, y, t: float, n_terms: int = 200):
    """Transition density of Brownian motion killed at -1 and 1."""
    k = np.arange(1, n_terms + 1)
    decay = np.exp(-k ** 2 * np.pi ** 2 * t / 8.0)
    fx = np.sin(k * np.pi * (x + 1.0) / 2.0)
    return (decay * fx) @ _dirichlet_modes(y, k)


def dirichlet_survival_fn(y, u: float, n_terms: int = 200):
    """P_y[no exit before u] as a function of the state y."""
    k = np.arange(1, n_terms + 1)
    c = (2.0 / (k * np.pi)) * (1.0 - np.cos(k * np.pi))  # 4/(k pi) for odd k
    decay = np.exp(-k ** 2 * np.pi ** 2 * u / 8.0)
    return (c * decay) @ _dirichlet_modes(y, k)


def conditioned_cell_masses(x: float, t: float, horizon: float,
                            edges: np.ndarray, n_sub: int = 32) -> np.ndarray:
    """Exact cell masses of law(X_t | tau > horizon) from X_0 = x, unit radius.

    Density proportional to p_t(x, y) * P_y[tau > horizon - t].
    """
    w = np.diff(edges)
    offs = (np.arange(n_sub) + 0.5) / n_sub
    pts = (edges[:-1][:, None] + w[:, None] * offs[None, :]).ravel()
    dens = dirichlet_heat_kernel(x, pts, t) * dirichlet_survival_fn(pts, horizon - t)
    cell = dens.reshape(len(w), n_sub).mean(axis=1) * w
    cell = np.maximum(cell, 0.0)
    return cell / cell.sum()
