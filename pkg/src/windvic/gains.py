"""Chain-of-integrators (Brunovsky) models and LQR state-feedback synthesis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DomainError, SynthesisError

RICCATI_TOL = 1e-9
HURWITZ_MARGIN = 1e-12


@dataclass(frozen=True)
class BrunovskyChain:
    n: int
    A: np.ndarray
    B: np.ndarray

    def controllability_rank(self) -> int:
        cols = [self.B]
        for _ in range(self.n - 1):
            cols.append(self.A @ cols[-1])
        return int(np.linalg.matrix_rank(np.hstack(cols)))


@dataclass(frozen=True)
class LqrWeights:
    Q: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        object.__setattr__(self, "Q", Q)
        if Q.shape[0] != Q.shape[1]:
            raise DomainError("Q must be square")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise SynthesisError("Q must be symmetric")
        if np.min(np.linalg.eigvalsh(Q)) <= 0:
            raise SynthesisError("Q must be positive definite")
        if not self.alpha > 0:
            raise SynthesisError("alpha must be positive")

    @classmethod
    def diagonal(cls, q: Sequence[float], alpha: float = 1.0) -> "LqrWeights":
        return cls(np.diag(np.asarray(q, dtype=float)), alpha)

    @classmethod
    def default(cls, n: int) -> "LqrWeights":
        """diag(7, 1) for the single-WTG chain, identity otherwise."""
        if n == 2:
            return cls.diagonal([7.0, 1.0])
        return cls(np.eye(n))


@dataclass(frozen=True)
class OhftGains:
    """Feedback coefficients k_1..k_{N+1}: one per WTG twist rate, last for the grid."""

    k: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))
        if not self.k:
            raise DomainError("gain vector is empty")

    @property
    def n_wtg(self) -> int:
        return len(self.k) - 1

    def __str__(self) -> str:
        return " ".join(f"{v:.6f}" for v in self.k)


@dataclass(frozen=True)
class LqrResult:
    gains: OhftGains
    P: np.ndarray
    residual: float
    closed_loop_eigs: np.ndarray


def brunovsky_chain(n: int) -> BrunovskyChain:
    if n < 1:
        raise DomainError("chain order must be >= 1")
    A = np.eye(n, k=1)
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    return BrunovskyChain(n, A, B)


def riccati_residual(chain: BrunovskyChain, w: LqrWeights, P: np.ndarray) -> float:
    A, B = chain.A, chain.B
    res = A.T @ P + P @ A - (P @ B @ B.T @ P) / w.alpha + w.Q
    return float(np.linalg.norm(res, "fro"))


def _newton_polish(chain: BrunovskyChain, w: LqrWeights, P: np.ndarray, sweeps: int = 3) -> np.ndarray:
    # Kleinman iteration: each sweep is a Lyapunov solve with the current closed loop.
    A, B = chain.A, chain.B
    for _ in range(sweeps):
        K = (B.T @ P) / w.alpha
        Acl = A - B @ K
        P_new = scipy.linalg.solve_continuous_lyapunov(Acl.T, -(w.Q + w.alpha * K.T @ K))
        P_new = 0.5 * (P_new + P_new.T)
        if riccati_residual(chain, w, P_new) >= riccati_residual(chain, w, P):
            break
        P = P_new
    return P


def lqr(chain: BrunovskyChain, w: LqrWeights) -> LqrResult:
    """Continuous-time LQR for the chain, with the Riccati residual reported."""
    if w.Q.shape != (chain.n, chain.n):
        raise DomainError(f"Q must be {chain.n}x{chain.n}, got {w.Q.shape}")
    try:
        P = scipy.linalg.solve_continuous_are(chain.A, chain.B, w.Q, np.array([[w.alpha]]))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SynthesisError(f"Riccati solver failed: {exc}") from exc
    P = _newton_polish(chain, w, 0.5 * (P + P.T))
    residual = riccati_residual(chain, w, P)
    if not residual < RICCATI_TOL:
        raise SynthesisError(f"Riccati residual {residual:.3e} above tolerance")
    K = (chain.B.T @ P).ravel() / w.alpha
    eigs = np.linalg.eigvals(chain.A - chain.B @ K[None, :])
    return LqrResult(OhftGains(tuple(K)), P, residual, eigs)


def lqr_gains(chain: BrunovskyChain, w: LqrWeights) -> OhftGains:
    return lqr(chain, w).gains


def closed_loop_matrix(k: OhftGains | Sequence[float]) -> np.ndarray:
    gains = np.asarray(k.k if isinstance(k, OhftGains) else k, dtype=float)
    chain = brunovsky_chain(len(gains))
    return chain.A - chain.B @ gains[None, :]


def hurwitz_check(k: OhftGains | Sequence[float]) -> tuple[bool, np.ndarray]:
    """Stability verdict of the chain under u = -k.x, with its eigenvalues."""
    eigs = np.linalg.eigvals(closed_loop_matrix(k))
    return bool(np.all(eigs.real < -HURWITZ_MARGIN)), eigs
