"""Rotational dipole factors L and Hoenl-London factors for linearly polarised light."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import eval_jacobi

GL_NODES = 64


def _check(J: int, M: int, Omega: int) -> None:
    if J < 0 or abs(M) > J or J < abs(Omega):
        raise ValueError(f"invalid rotational quantum numbers J={J} M={M} Omega={Omega}")


def wigner_small_d(J: int, M: int, K: int, theta) -> np.ndarray:
    """Wigner d^J_{M K}(theta) through its Jacobi-polynomial representation."""
    theta = np.asarray(theta, dtype=float)
    k = min(J + K, J - K, J + M, J - M)
    if k == J + K:
        a, phase = M - K, M - K
    elif k == J - K:
        a, phase = K - M, 0
    elif k == J + M:
        a, phase = K - M, 0
    else:
        a, phase = M - K, M - K
    b = 2 * J - 2 * k - a
    # sqrt(binom(2J - k, k + a) / binom(k + b, b))
    log_ratio = (
        math.lgamma(2 * J - k + 1) - math.lgamma(k + a + 1) - math.lgamma(2 * J - 2 * k - a + 1)
        - math.lgamma(k + b + 1) + math.lgamma(b + 1) + math.lgamma(k + 1)
    )
    sign = -1.0 if phase % 2 else 1.0
    return (
        sign
        * math.exp(0.5 * log_ratio)
        * np.sin(theta / 2.0) ** a
        * np.cos(theta / 2.0) ** b
        * eval_jacobi(k, a, b, np.cos(theta))
    )


@lru_cache(maxsize=4)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def L_factor_quadrature(J: int, M: int, Omega: int, J_prime: int, M_prime: int, Omega_prime: int, n_nodes: int = GL_NODES) -> float:
    """L by direct quadrature of the angular integral.

    u_{J M Omega}(theta, phi) = sqrt((2J+1)/4pi) d^J_{M Omega}(theta) e^{i M phi};
    the weight is cos(theta) for Delta Omega = 0 and sin(theta) for |Delta Omega| = 1.
    Gauss-Legendre in cos(theta), trapezoid in phi.
    """
    _check(J, M, Omega)
    _check(J_prime, M_prime, Omega_prime)
    dO = Omega_prime - Omega
    if abs(dO) > 1:
        return 0.0
    x, w = _gauss_legendre(n_nodes)
    theta = np.arccos(x)
    weight = x if dO == 0 else np.sqrt(1.0 - x * x)
    a = math.sqrt((2 * J + 1) / (4 * math.pi)) * wigner_small_d(J, M, Omega, theta)
    b = math.sqrt((2 * J_prime + 1) / (4 * math.pi)) * wigner_small_d(J_prime, M_prime, Omega_prime, theta)
    theta_part = float(np.sum(w * a * b * weight))
    # phi integral of exp(i (M - M') phi) on a uniform periodic grid
    n_phi = 2 * (abs(M) + abs(M_prime)) + 8
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    phi_part = float(np.sum(np.cos((M - M_prime) * phi)) * 2 * math.pi / n_phi)
    return theta_part * phi_part


def L_factor(J: int, M: int, Omega: int, J_prime: int, M_prime: int, Omega_prime: int) -> float:
    """Rotational factor of the dipole matrix element.

    Sigma-Sigma (Omega = Omega' = 0) uses the closed-form cos(theta) matrix
    elements; any other combination falls back to quadrature. Only |L| is
    meaningful downstream.
    """
    _check(J, M, Omega)
    _check(J_prime, M_prime, Omega_prime)
    if Omega != 0 or Omega_prime != 0:
        return L_factor_quadrature(J, M, Omega, J_prime, M_prime, Omega_prime)
    if M_prime != M:
        return 0.0
    if J_prime == J + 1:
        return math.sqrt(((J + 1) ** 2 - M * M) / ((2 * J + 1) * (2 * J + 3)))
    if J_prime == J - 1:
        return math.sqrt((J * J - M * M) / ((2 * J - 1) * (2 * J + 1)))
    return 0.0


def L_factor_sigma(J, M, J_prime) -> np.ndarray:
    """Vectorised closed form of |L| for Sigma-Sigma lines with M' = M."""
    J = np.asarray(J, dtype=float)
    M = np.asarray(M, dtype=float)
    J_prime = np.asarray(J_prime)
    up = np.sqrt(np.clip((J + 1) ** 2 - M * M, 0, None) / ((2 * J + 1) * (2 * J + 3)))
    with np.errstate(invalid="ignore", divide="ignore"):
        down = np.sqrt(np.clip(J * J - M * M, 0, None) / ((2 * J - 1) * (2 * J + 1)))
    return np.where(J_prime == J + 1, up, np.where(J_prime == J - 1, np.nan_to_num(down), 0.0))


def honl_london(J: int, J_prime: int):
    """S(J, J') for a Sigma-Sigma transition: J + 1 (R branch), J (P branch).

    The Q branch (J' = J) is forbidden and raises ``ValueError``.
    """
    J_a = np.asarray(J)
    Jp_a = np.asarray(J_prime)
    if np.any(Jp_a == J_a):
        raise ValueError("Q branch (J' = J) is forbidden for Sigma-Sigma transitions")
    if np.any(np.abs(Jp_a - J_a) != 1):
        raise ValueError("Sigma-Sigma transitions need J' = J +- 1")
    S = np.where(Jp_a == J_a + 1, J_a + 1, J_a)
    return int(S) if S.ndim == 0 else S


def sum_rule_check(J: int, Omega: int = 0) -> float:
    """Sum over M and J' of |L|^2 / (2J+1): the M-averaged <cos^2 theta>."""
    total = 0.0
    for M in range(-J, J + 1):
        for Jp in (J - 1, J, J + 1):
            if Jp < max(abs(Omega), abs(M)):
                continue
            total += L_factor(J, M, Omega, Jp, M, Omega) ** 2
    return total / (2 * J + 1)


@dataclass(frozen=True)
class RotationalFactor:
    J: int
    M: int
    Omega: int
    J_prime: int
    M_prime: int
    Omega_prime: int

    @property
    def L(self) -> float:
        return L_factor(self.J, self.M, self.Omega, self.J_prime, self.M_prime, self.Omega_prime)
