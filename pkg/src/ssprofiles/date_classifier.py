"""Invariants and sign-pattern classification of planar homogeneous quadratic fields.

A field is stored as a tensor P[k, l, m] with dx_k/dt = sum_{l,m} P[k, l, m] x_l x_m,
symmetric in the last two indices.  The vector/tensor split and the scalar
invariants follow Date's construction for (2,2)-homogeneous systems.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricTensor, DegenerateSigns
from .params import Parameters, derive_exponents

# Levi-Civita symbol with eps[0, 1] = -1, eps[1, 0] = 1
EPS = np.array([[0.0, -1.0], [1.0, 0.0]])


class Portrait(str, enum.Enum):
    ELLIPTIC_SECTOR = "Portrait8_EllipticSector"
    NO_REENTRY = "Portrait3_NoReentry"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class QuadraticSystem2D:
    P: np.ndarray  # shape (2, 2, 2)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.shape != (2, 2, 2):
            raise ValueError(f"tensor must have shape (2, 2, 2), got {P.shape}")
        scale = max(1.0, float(np.abs(P).max()))
        if not np.allclose(P, P.transpose(0, 2, 1), rtol=0, atol=1e-14 * scale):
            raise AsymmetricTensor("P[k][l][m] must be symmetric in (l, m)")
        object.__setattr__(self, "P", P)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("klm,l,m->k", self.P, x, x)

    def transformed(self, A) -> "QuadraticSystem2D":
        """The same field in coordinates y with x = A y."""
        A = np.asarray(A, dtype=float)
        Ainv = np.linalg.inv(A)
        return QuadraticSystem2D(np.einsum("ki,ijl,jr,ls->krs", Ainv, self.P, A, A))


def center_flow_system(params: Parameters) -> QuadraticSystem2D:
    """Quadratic part of the flow on the centre manifold of P0, time rescaled by beta."""
    a = derive_exponents(params).alpha
    m, p = params.m, params.p
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = 1.0
    P[0, 0, 1] = P[0, 1, 0] = -(m - 1) * a / 2
    P[1, 0, 1] = P[1, 1, 0] = 1.0
    P[1, 1, 1] = -(m + p - 2) * a
    return QuadraticSystem2D(P)


@dataclass
class DateInvariants:
    p_vec: np.ndarray
    Q: np.ndarray
    h: np.ndarray
    H: float
    D: float
    F: float
    K: tuple[float, float, float]
    portrait: str | None = None

    @property
    def K2(self) -> float:
        return self.K[1]

    @property
    def K3(self) -> float:
        return self.K[2]

    def to_dict(self) -> dict:
        return {
            "p": [float(v) for v in self.p_vec],
            "h": [[float(v) for v in row] for row in self.h],
            "H": float(self.H),
            "D": float(self.D),
            "F": float(self.F),
            "K1": float(self.K[0]),
            "K2": float(self.K[1]),
            "K3": float(self.K[2]),
            "portrait": self.portrait,
        }


def decompose(sys: QuadraticSystem2D) -> tuple[np.ndarray, np.ndarray]:
    """Split P into its trace vector p and trace-free tensor Q."""
    P = sys.P
    p = np.einsum("klk->l", P)
    delta = np.eye(2)
    Q = P - (np.einsum("lk,m->klm", delta, p) + np.einsum("mk,l->klm", delta, p)) / 3.0
    return p, Q


def invariants(sys: QuadraticSystem2D) -> DateInvariants:
    p, Q = decompose(sys)
    h = 0.5 * np.einsum("ac,bd,kab,lcd->kl", EPS, EPS, Q, Q)
    H = float(p @ h @ p)
    D = float(-4.0 * np.linalg.det(h))
    C = np.einsum("skl,s->kl", Q, p)
    u = np.array([p[1], -p[0]])
    F = float(u @ C @ u)
    K = tuple(F + 9 * (-2.0) ** (j - 3) * H - 27 * (-8.0) ** (j - 3) * D for j in (1, 2, 3))
    return DateInvariants(p_vec=p, Q=Q, h=h, H=H, D=D, F=F, K=K)


def closed_form_invariants(params: Parameters) -> dict:
    """Invariants of the centre-manifold flow at P0 as explicit functions of (m, p, sigma)."""
    a = derive_exponents(params).alpha
    m, p = params.m, params.p
    return {
        "h11": -a * a * (1 - p) ** 2 / 9,
        "h12": a * (1 - p) / 18,
        "h22": -1.0 / 9,
        "H": -(a * a / 9) * (3 * (p - 1) ** 2 + 2.25 * (m - 1) ** 2),
        "D": -a * a * (1 - p) ** 2 / 27,
        "F": -(a * a / 2) * (3 * m + 2 * p - 5) * (3 * m - 2 * p - 1),
        "K2": -(27 / 8) * a * a * (m + p - 2) * (m - p),
        "K3": -(27 / 4) * a * a * (m - 1) ** 2,
    }


def classify(inv: DateInvariants, tol: float = 1e-12) -> Portrait:
    """Map the signs of (D, K2, K3) to a portrait tag."""
    D, K2, K3 = inv.D, inv.K2, inv.K3
    for name, v in (("D", D), ("K2", K2), ("K3", K3)):
        if abs(v) < tol:
            raise DegenerateSigns(f"{name} = {v:.3e} lies on a classification boundary")
    if D < 0 and K2 < 0 and K3 < 0:
        return Portrait.ELLIPTIC_SECTOR
    if D < 0 and K2 > 0 and K3 < 0:
        return Portrait.NO_REENTRY
    return Portrait.UNCLASSIFIED


def sign_pattern(inv: DateInvariants) -> str:
    return "".join("+" if v > 0 else "-" for v in (inv.D, inv.K2, inv.K3))


def analyze_center_flow(params: Parameters) -> DateInvariants:
    inv = invariants(center_flow_system(params))
    try:
        portrait = classify(inv)
        inv.portrait = portrait.value if portrait is not Portrait.UNCLASSIFIED else (
            f"Unclassified(D{sign_pattern(inv)[0]},K2{sign_pattern(inv)[1]},K3{sign_pattern(inv)[2]})")
    except DegenerateSigns as exc:
        inv.portrait = f"Degenerate({exc})"
    return inv
