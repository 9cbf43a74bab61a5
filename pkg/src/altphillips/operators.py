"""Problem parameters and the admissible family of fully nonlinear operators.

An operator ``F`` acts on symmetric matrices and must be uniformly elliptic,
convex, vanish at zero and have ``DF(0) = trace``.  Every operator here
evaluates on stacks of matrices of shape ``(..., d, d)`` so that the solver
can apply it to all grid nodes at once.

Ellipticity is measured with ``||P|| = trace(P)`` for ``P >= 0``, which makes
the Laplacian exactly ``Lambda = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractError, ParameterError

THETA_MAX = 0.2


def beta_of(gamma: float) -> float:
    """Homogeneity exponent ``beta = 2 / (2 - gamma)``.

    Raises
    ------
    ParameterError
        If ``gamma`` lies outside the open interval (1, 2).
    """
    gamma = float(gamma)
    if not (1.0 < gamma < 2.0):
        raise ParameterError(
            f"gamma must lie in the open interval (1, 2), got {gamma!r}", gamma=gamma
        )
    return 2.0 / (2.0 - gamma)


@dataclass(frozen=True)
class ApParams:
    """Exponent ``gamma`` and ellipticity bound ``lam``.

    ``beta`` is always recomputed from ``gamma``.
    """

    gamma: float = 1.5
    lam: float = 1.0

    def __post_init__(self):
        beta_of(self.gamma)
        if not (np.isfinite(self.lam) and self.lam >= 1.0):
            raise ParameterError(f"lam must be >= 1, got {self.lam!r}", lam=self.lam)

    @property
    def beta(self) -> float:
        return beta_of(self.gamma)

    @property
    def amplitude(self) -> float:
        """Amplitude ``(sqrt(2)/beta)**beta`` of the half-space profile."""
        return (np.sqrt(2.0) / self.beta) ** self.beta


def rhs(params: ApParams, u):
    """Right side ``gamma * u**(gamma-1)``, zero on ``u = 0``.

    Works on scalars and arrays.  Negative input violates the contract.
    """
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0):
        raise ContractError("rhs requires u >= 0")
    g = params.gamma
    out = np.where(arr > 0, g * np.power(np.maximum(arr, 0.0), g - 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def _trace(M):
    return np.trace(M, axis1=-2, axis2=-1)


def _frob(M):
    return np.sqrt(np.sum(M * M, axis=(-2, -1)))


def _eye_like(M):
    d = M.shape[-1]
    return np.broadcast_to(np.eye(d), M.shape).copy()


class Operator:
    """Base class; subclasses implement ``value``, ``gradient`` and ``omega``."""

    kind = "abstract"

    def value(self, M):
        raise NotImplementedError

    def gradient(self, M):
        """``DF(M)`` as a matrix, so that ``dF = sum(DF * dM)``."""
        raise NotImplementedError

    def omega(self, s):
        """Modulus with ``||DF(M) - DF(0)||_F <= omega(||M||_F)``."""
        raise NotImplementedError

    @property
    def declared_lambda(self) -> float:
        raise NotImplementedError

    @property
    def is_linear(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, M):
        return self.value(M)


@dataclass(frozen=True)
class Laplacian(Operator):
    kind = "laplacian"

    def value(self, M):
        return _trace(np.asarray(M, dtype=float))

    def gradient(self, M):
        return _eye_like(np.asarray(M, dtype=float))

    def omega(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    @property
    def declared_lambda(self):
        return 1.0

    @property
    def is_linear(self):
        return True

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class LinearTrace(Operator):
    """``F(M) = trace(A M)`` for a symmetric positive-definite ``A``.

    ``lam`` defaults to the smallest admissible bound ``max(l_max, 1/l_min)``.
    ``DF(0) = A`` differs from the trace unless ``A`` is the identity.
    """

    A: np.ndarray
    lam: Optional[float] = None
    kind = "linear_trace"

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ParameterError("A must be a square matrix")
        if not np.allclose(A, A.T, rtol=0, atol=1e-14):
            raise ParameterError("A must be symmetric")
        ev = np.linalg.eigvalsh(A)
        if ev[0] <= 0:
            raise ParameterError("A must be positive definite", eigenvalues=ev.tolist())
        needed = max(ev[-1], 1.0 / ev[0])
        lam = needed if self.lam is None else float(self.lam)
        if lam < needed * (1 - 1e-12):
            raise ParameterError(
                f"spectrum of A {ev.tolist()} not inside [1/{lam}, {lam}]", lam=lam
            )
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lam", lam)

    def value(self, M):
        return np.einsum("ij,...ji->...", self.A, np.asarray(M, dtype=float))

    def gradient(self, M):
        M = np.asarray(M, dtype=float)
        return np.broadcast_to(self.A, M.shape).copy()

    def omega(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    @property
    def declared_lambda(self):
        return self.lam

    @property
    def is_linear(self):
        return True

    def to_dict(self):
        return {"kind": self.kind, "A": self.A.ravel().tolist()}


@dataclass(frozen=True)
class PerturbedTrace(Operator):
    """``F(M) = trace(M) + theta * phi(M)`` with ``phi = |M|^2 / (1 + |M|)``.

    ``|.|`` is the Frobenius norm.  ``phi`` is convex with
    ``Dphi(M) = (2+|M|)/(1+|M|)^2 * M``, whose norm stays below one, so the
    increment ratio lies in ``[1 - theta, 1 + theta]``.
    """

    theta: float
    kind = "perturbed_trace"

    def __post_init__(self):
        th = float(self.theta)
        if not (0.0 <= th <= THETA_MAX):
            raise ParameterError(
                f"theta must lie in [0, {THETA_MAX}], got {th!r}", theta=th
            )
        object.__setattr__(self, "theta", th)

    def value(self, M):
        M = np.asarray(M, dtype=float)
        s = _frob(M)
        return _trace(M) + self.theta * s * s / (1.0 + s)

    def gradient(self, M):
        M = np.asarray(M, dtype=float)
        s = _frob(M)[..., None, None]
        return _eye_like(M) + self.theta * (2.0 + s) / (1.0 + s) ** 2 * M

    def omega(self, s):
        s = np.asarray(s, dtype=float)
        return self.theta * s * (2.0 + s) / (1.0 + s) ** 2

    @property
    def declared_lambda(self):
        return 1.0 / (1.0 - 2.0 * self.theta)

    def to_dict(self):
        return {"kind": self.kind, "theta": self.theta}


@dataclass(frozen=True)
class Rescaled(Operator):
    """``F_r(M) = r**(2-beta) * F(r**(beta-2) * M)``."""

    inner: Operator
    scale: float
    beta: float = field(default=4.0)
    kind = "rescaled"

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ParameterError(f"scale must be > 0, got {self.scale!r}")

    @property
    def _c(self):
        return self.scale ** (self.beta - 2.0)

    def value(self, M):
        c = self._c
        return self.inner.value(c * np.asarray(M, dtype=float)) / c

    def gradient(self, M):
        return self.inner.gradient(self._c * np.asarray(M, dtype=float))

    def omega(self, s):
        return self.inner.omega(self._c * np.asarray(s, dtype=float))

    @property
    def declared_lambda(self):
        return self.inner.declared_lambda

    @property
    def is_linear(self):
        return self.inner.is_linear

    def to_dict(self):
        return {
            "kind": self.kind,
            "inner": self.inner.to_dict(),
            "scale": self.scale,
            "beta": self.beta,
        }


def eval_operator(spec: Operator, M) -> float:
    """Evaluate ``F(M)`` for one symmetric matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError("M must be a square matrix")
    if not np.all(np.isfinite(M)):
        raise ContractError("M must have finite entries")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise ContractError("M must be symmetric")
    return float(spec.value(M))


def rescaled_operator(spec: Operator, r: float, params: ApParams) -> Rescaled:
    if not (np.isfinite(r) and r > 0):
        raise ParameterError(f"r must be > 0, got {r!r}")
    return Rescaled(spec, float(r), params.beta)


def operator_from_config(cfg: dict) -> Operator:
    """Build an operator from a config table such as ``{kind = "perturbed_trace", theta = 0.1}``."""
    kind = str(cfg.get("kind", "laplacian")).lower()
    if kind == "laplacian":
        return Laplacian()
    if kind == "linear_trace":
        a = np.asarray(cfg["A"], dtype=float)
        d = int(round(np.sqrt(a.size)))
        if d * d != a.size:
            raise ParameterError("linear_trace A must be a flat row-major square matrix")
        return LinearTrace(a.reshape(d, d), cfg.get("lam"))
    if kind == "perturbed_trace":
        return PerturbedTrace(float(cfg["theta"]))
    if kind == "rescaled":
        return Rescaled(
            operator_from_config(cfg["inner"]), float(cfg["scale"]), float(cfg.get("beta", 4.0))
        )
    raise ParameterError(f"unknown operator kind {kind!r}")


def _random_symmetric(rng, n, d):
    B = rng.standard_normal((n, d, d))
    M = 0.5 * (B + np.swapaxes(B, -1, -2))
    scale = 10.0 ** rng.uniform(-2, 2, size=(n, 1, 1))
    return scale * M


def _random_psd(rng, n, d):
    out = np.zeros((n, d, d))
    for k in range(n):
        rank = rng.integers(1, d + 1)
        B = rng.standard_normal((d, rank))
        out[k] = B @ B.T
    return 10.0 ** rng.uniform(-2, 2, size=(n, 1, 1)) * out


def ellipticity_report(spec: Operator, n_samples: int = 1000, rng_seed: int = 7, dim: int = 2):
    """Sample the structural assumptions of ``spec``.

    Returns a dict with

    ``measured_lambda``
        tightest ``Lambda`` with ``trace(P)/Lambda <= F(M+P)-F(M) <= Lambda trace(P)``
        over the samples;
    ``within_declared``
        every sampled quotient lies in ``[1/Lambda, Lambda]`` for the declared
        ``Lambda``, up to its own rounding error;
    ``convexity_violations``
        number of failed midpoint-convexity checks;
    ``trace_gradient_error``
        max of ``|(F(tM)-F(-tM))/(2t) - trace(M)| / |M|`` with ``t = 1e-4``;
    ``omega_violations``
        samples near zero where the finite-difference ``|DF(M)-DF(0)|``
        exceeds ``omega(|M|)``.
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    d = int(dim)
    M = _random_symmetric(rng, n_samples, d)
    P = _random_psd(rng, n_samples, d)
    N = _random_symmetric(rng, n_samples, d)

    f_mp, f_m = spec.value(M + P), spec.value(M)
    inc = f_mp - f_m
    trP = _trace(P)
    q = inc / trP
    measured = float(max(q.max(), 1.0 / q.min()))
    # rounding error of each increment quotient
    qerr = 64 * np.finfo(float).eps * (np.abs(f_mp) + np.abs(f_m) + 1.0) / trP
    lam = spec.declared_lambda
    within = bool(np.all(q <= lam + qerr) and np.all(q >= 1.0 / lam - qerr))

    fm, fn = spec.value(M), spec.value(N)
    mid = spec.value(0.5 * (M + N))
    slack = 1e-12 * (np.abs(fm) + np.abs(fn) + 1.0)
    violations = int(np.sum(mid > 0.5 * (fm + fn) + slack))

    U = M / _frob(M)[:, None, None]
    t = 1e-4
    fd = (spec.value(t * U) - spec.value(-t * U)) / (2 * t)
    tg_err = float(np.max(np.abs(fd - _trace(U))))

    # omega check near zero
    small = U * (10.0 ** rng.uniform(-3, 0, size=(n_samples, 1, 1)))
    delta = 1e-6
    grad_fd = np.zeros_like(small)
    grad0 = np.zeros_like(small)
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0
            w = 1.0 if i == j else 0.5
            g = (spec.value(small + delta * E) - spec.value(small - delta * E)) / (2 * delta)
            g0 = (spec.value(delta * E[None]) - spec.value(-delta * E[None])) / (2 * delta)
            grad_fd[:, i, j] = grad_fd[:, j, i] = w * g
            grad0[:, i, j] = grad0[:, j, i] = w * g0
    dev = _frob(grad_fd - grad0)
    om = spec.omega(_frob(small))
    omega_violations = int(np.sum(dev > om + 1e-6))

    return {
        "kind": spec.kind,
        "n_samples": int(n_samples),
        "seed": int(rng_seed),
        "dim": d,
        "measured_lambda": measured,
        "declared_lambda": float(spec.declared_lambda),
        "within_declared": within,
        "convexity_violations": violations,
        "trace_gradient_error": tg_err,
        "omega_violations": omega_violations,
    }
