"""Drift and diffusion vector fields with derivative evaluators and constants.

A diffusion maps ``y in R^d`` to a ``d x m`` matrix.  Derivatives are stored
with the differentiation slots last: ``Dg(y)[a, i, b] = d g_{ai} / d y_b``,
``D2g(y)[a, i, b, c]`` and so on.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Drift",
    "LinearDiffusion",
    "BoundedDiffusion",
    "VectorFieldPair",
    "apply_jac",
    "jac_times",
    "linear_drift",
    "zero_drift",
    "ridge_diffusion",
    "rotation_diffusion",
    "field_from_spec",
    "derivative_consistency",
]


def apply_jac(J, v):
    """``(J v)[a, i] = sum_b J[a, i, b] v[b]``."""
    d, m, k = J.shape
    return (J.reshape(d * m, k) @ v).reshape(d, m)


def jac_times(J, G):
    """``(J G)[a, i, j] = sum_b J[a, i, b] G[b, j]``."""
    d, m, k = J.shape
    return (J.reshape(d * m, k) @ G).reshape(d, m, G.shape[1])


@dataclass(frozen=True)
class Drift:
    fn: object
    lipschitz: float
    f0: float
    dim: int
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lipschitz < 0:
            raise ValueError("drift Lipschitz constant must be nonnegative")
        if self.lipschitz == 0 and self.f0 > 0:
            raise ValueError("a nonzero constant drift needs a positive Lipschitz constant")

    def __call__(self, y):
        return np.asarray(self.fn(y), dtype=float)

    @property
    def is_zero(self):
        return self.spec.get("kind") == "zero"

    def ratio(self):
        """``||f(0)|| / C_f`` with the convention ``0 / 0 = 0``."""
        if self.f0 == 0:
            return 0.0
        return self.f0 / self.lipschitz


def linear_drift(A, b=None, lipschitz=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float).reshape(d)
    f0 = float(np.linalg.norm(b))
    if lipschitz is None:
        lipschitz = float(np.linalg.norm(A, 2))
        if lipschitz == 0 and f0 > 0:
            lipschitz = 1.0
    spec = {"kind": "linear", "A": A.tolist(), "b": b.tolist(), "lipschitz": lipschitz}
    return Drift(lambda y: A @ y + b, float(lipschitz), f0, d, spec)


def zero_drift(d):
    return Drift(lambda y: np.zeros(d), 0.0, 0.0, d, {"kind": "zero", "dim": d})


class LinearDiffusion:
    """``g(y) = C y + g0`` with ``C in L(R^d, L(R^m, R^d))`` of shape ``(d, m, d)``."""

    linear = True

    def __init__(self, C, g0=None, cg=None):
        C = np.asarray(C, dtype=float)
        if C.ndim != 3 or C.shape[0] != C.shape[2]:
            raise ValueError(f"C must have shape (d, m, d), got {C.shape}")
        self.C = C
        self.d, self.m = C.shape[0], C.shape[1]
        self.g0 = np.zeros((self.d, self.m)) if g0 is None else np.asarray(g0, dtype=float).reshape(self.d, self.m)
        self.norm_C = float(np.sqrt(np.sum(C * C)))
        self.cg = self.norm_C if cg is None else float(cg)
        if self.norm_C > self.cg * (1 + 1e-12):
            raise ValueError("||C|| exceeds the declared bound C_g")
        self.g0_norm = float(np.sqrt(np.sum(self.g0 * self.g0)))
        self.sup_g = math.inf if self.norm_C > 0 else self.g0_norm

    def __call__(self, y):
        return apply_jac(self.C, y) + self.g0

    def jac(self, y):
        return self.C

    def hess(self, y):
        return None

    def third(self, y):
        return np.zeros((self.d, self.m, self.d, self.d, self.d))

    @property
    def spec(self):
        return {"kind": "linear", "C": self.C.tolist(), "g0": self.g0.tolist()}


class BoundedDiffusion:
    """C^3-bounded diffusion given by its value and three derivative evaluators."""

    linear = False

    def __init__(self, g, Dg, D2g, D3g, d, m, sup_g, cg, spec=None):
        self.g, self.Dg, self.D2g, self.D3g = g, Dg, D2g, D3g
        self.d, self.m = int(d), int(m)
        self.sup_g = float(sup_g)
        self.cg = float(cg)
        self.spec = spec or {}

    def __call__(self, y):
        return self.g(y)

    def jac(self, y):
        return self.Dg(y)

    def hess(self, y):
        return self.D2g(y)

    def third(self, y):
        return self.D3g(y)


_ACTIVATIONS = {
    # value, 1st, 2nd, 3rd derivative, sup norms of each
    "sin": (
        np.sin,
        np.cos,
        lambda u: -np.sin(u),
        lambda u: -np.cos(u),
        (1.0, 1.0, 1.0, 1.0),
    ),
    "tanh": (
        np.tanh,
        lambda u: 1.0 - np.tanh(u) ** 2,
        lambda u: -2.0 * np.tanh(u) * (1.0 - np.tanh(u) ** 2),
        lambda u: -2.0 * (1.0 - np.tanh(u) ** 2) * (1.0 - 3.0 * np.tanh(u) ** 2),
        (1.0, 1.0, 4.0 / (3.0 * math.sqrt(3.0)), 2.0),
    ),
}


def ridge_diffusion(d, m, activation="sin", scale=1.0, weights=None, phase=None):
    """``g_{ai}(y) = scale * act(W_{ai} . y + phase_{ai})``.

    ``weights`` defaults to ``W[a, i, b] = delta_{ab}``; sup norms are
    Frobenius bounds computed from the weights.
    """
    act, d1, d2, d3, sups = _ACTIVATIONS[activation]
    W = np.zeros((d, m, d))
    if weights is None:
        for a in range(d):
            W[a, :, a] = 1.0
    else:
        W = np.asarray(weights, dtype=float).reshape(d, m, d)
    ph = np.zeros((d, m)) if phase is None else np.asarray(phase, dtype=float).reshape(d, m)
    s = float(scale)

    def u(y):
        return W @ y + ph

    def g(y):
        return s * act(u(y))

    def Dg(y):
        return (s * d1(u(y)))[:, :, None] * W

    def D2g(y):
        return (s * d2(u(y)))[:, :, None, None] * W[:, :, :, None] * W[:, :, None, :]

    def D3g(y):
        return (
            (s * d3(u(y)))[:, :, None, None, None]
            * W[:, :, :, None, None]
            * W[:, :, None, :, None]
            * W[:, :, None, None, :]
        )

    wn = np.sqrt(np.sum(W * W, axis=2))  # |W_ai|
    sup_g = abs(s) * sups[0] * math.sqrt(d * m)
    derivs = [
        abs(s) * sups[k] * math.sqrt(float(np.sum(wn ** (2 * k)))) for k in (1, 2, 3)
    ]
    spec = {
        "kind": activation,
        "d": d,
        "m": m,
        "scale": s,
        "weights": W.tolist(),
        "phase": ph.tolist(),
    }
    return BoundedDiffusion(g, Dg, D2g, D3g, d, m, sup_g, max(derivs), spec)


def rotation_diffusion(scales):
    """Linear field on ``R^2`` with ``C[:, i, :] = scales[i] * J``, ``J`` a quarter turn."""
    sc = np.atleast_1d(np.asarray(scales, dtype=float))
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    C = np.stack([s * J for s in sc], axis=1)
    return LinearDiffusion(C)


@dataclass(frozen=True)
class VectorFieldPair:
    drift: Drift
    diffusion: object

    def __post_init__(self):
        if self.drift.dim != self.diffusion.d:
            raise ValueError("drift and diffusion disagree on the state dimension")

    @property
    def d(self):
        return self.diffusion.d

    @property
    def m(self):
        return self.diffusion.m

    @property
    def cg(self):
        """Constant entering the a-priori bounds.

        For bounded fields this is ``max(C_g, ||g||_inf)``, since the norm
        estimates use ``||g(y)|| <= C_g`` as well.
        """
        dif = self.diffusion
        if dif.linear:
            return dif.cg
        return max(dif.cg, dif.sup_g)

    def spec(self):
        return {"drift": dict(self.drift.spec), "diffusion": dict(self.diffusion.spec)}


def _drift_from_spec(s, d):
    kind = s.get("kind", "zero")
    if kind == "zero":
        return zero_drift(d)
    if kind == "linear":
        return linear_drift(s["A"], s.get("b"), s.get("lipschitz"))
    if kind == "constant":
        b = np.asarray(s["b"], dtype=float).reshape(d)
        lip = float(s.get("lipschitz", 1.0))
        return Drift(lambda y: b.copy(), lip, float(np.linalg.norm(b)), d, dict(s))
    raise ValueError(f"unknown drift kind {kind!r}")


def field_from_spec(spec):
    """Build a :class:`VectorFieldPair` from a JSON-style description.

    Diffusion kinds: ``linear`` (``C``, ``g0``), ``rotation`` (``scales``),
    ``sin`` and ``tanh`` ridge fields (``d``, ``m``, ``scale``, ``weights``,
    ``phase``).  Drift kinds: ``zero``, ``linear`` (``A``, ``b``), ``constant``.
    """
    if "diffusion" not in spec:
        raise ValueError("field spec is missing 'diffusion'")
    ds = spec["diffusion"]
    kind = ds.get("kind")
    if kind == "linear":
        dif = LinearDiffusion(ds["C"], ds.get("g0"))
    elif kind == "rotation":
        dif = rotation_diffusion(ds["scales"])
    elif kind in _ACTIVATIONS:
        dif = ridge_diffusion(
            int(ds["d"]),
            int(ds["m"]),
            kind,
            ds.get("scale", 1.0),
            ds.get("weights"),
            ds.get("phase"),
        )
    else:
        raise ValueError(f"unknown diffusion kind {kind!r}")
    drift = _drift_from_spec(spec.get("drift", {"kind": "zero"}), dif.d)
    return VectorFieldPair(drift, dif)


def derivative_consistency(diffusion, y, h):
    """Taylor defects of ``g`` and ``Dg`` along direction ``h``.

    Returns ``(|g(y+h) - g(y) - Dg h|, |Dg(y+h) - Dg(y) - D2g h|)``; both are
    ``O(|h|^2)`` for consistent evaluators.
    """
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    e1 = diffusion(y + h) - diffusion(y) - apply_jac(diffusion.jac(y), h)
    H = diffusion.hess(y)
    if H is None:
        e2 = diffusion.jac(y + h) - diffusion.jac(y)
    else:
        e2 = diffusion.jac(y + h) - diffusion.jac(y) - np.einsum("aibc,c->aib", H, h)
    return float(np.sqrt(np.sum(e1 * e1))), float(np.sqrt(np.sum(e2 * e2)))
