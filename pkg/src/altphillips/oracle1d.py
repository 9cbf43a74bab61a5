"""Ground truth for the one-dimensional problem ``u'' = gamma u^(gamma-1)``.

The half-space profile ``(sqrt(2) x/beta)**beta`` is the zero-energy branch of
the first integral ``u'^2/2 - u^gamma = E0``.  ``shoot`` selects ``E0`` by
bisection and integrates ``u' = sqrt(2 (u^gamma + E0))`` with a fixed-step
classical Runge-Kutta scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleError, ParameterError
from .grid import HalfGrid, ScalarField, gradients
from .operators import ApParams


def profile_eval(params: ApParams, x_n):
    """``(sqrt(2) max(x_n, 0) / beta)**beta``; scalars in, scalars out."""
    x = np.asarray(x_n, dtype=float)
    b = params.beta
    out = (np.sqrt(2.0) * np.maximum(x, 0.0) / b) ** b
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Profile1D:
    """The half-space profile with exact derivatives."""

    params: ApParams

    @property
    def amplitude(self) -> float:
        return self.params.amplitude

    def __call__(self, x_n):
        return profile_eval(self.params, x_n)

    def derivative(self, x_n, order: int = 1):
        b = self.params.beta
        x = np.maximum(np.asarray(x_n, dtype=float), 0.0)
        coef = self.amplitude
        for k in range(order):
            coef = coef * (b - k)
        return coef * x ** (b - order)


def first_integral(field1d: ScalarField, params: ApParams):
    """``E = u'^2/2 - u^gamma`` at interior nodes by central differences.

    Returns
    -------
    x, E : ndarray
    """
    g = field1d.grid
    if g.dim != 1:
        raise ParameterError("first_integral needs a 1D field")
    m = g.interior_mask
    du = gradients(field1d, m)[:, 0]
    u = np.maximum(field1d.values[m], 0.0)
    return g.axes[0][m], 0.5 * du * du - u ** params.gamma


def _rk4(params, length, e0, steps):
    g = params.gamma
    hs = length / steps

    def f(u):
        return np.sqrt(2.0 * (np.maximum(u, 0.0) ** g + e0))

    u = np.zeros(steps + 1)
    for k in range(steps):
        y = u[k]
        k1 = f(y)
        k2 = f(y + 0.5 * hs * k1)
        k3 = f(y + 0.5 * hs * k2)
        k4 = f(y + hs * k3)
        u[k + 1] = y + hs * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return u


def shoot(
    params: ApParams,
    length: float = 1.0,
    terminal_value: float = None,
    tol: float = 1e-12,
    steps: int = 4096,
    return_energy: bool = False,
):
    """Solve ``u'' = gamma u^(gamma-1) chi_{u>0}`` on ``(0, length)`` with ``u(0)=0``.

    Parameters
    ----------
    terminal_value : float
        Prescribed ``u(length) >= 0``; defaults to the profile value.
    steps : int
        Fixed RK4 steps; the returned field lives on ``HalfGrid.interval(steps)``.
    return_energy : bool
        Also return the selected first-integral value ``E0``.

    Notes
    -----
    Below the profile value the solution has a contact interval ``[0, a]`` and
    equals the translated zero-energy branch, with ``a`` in closed form.  Above
    it, ``E0 > 0`` and ``u'(0) = sqrt(2 E0)``.
    """
    grid = HalfGrid.interval(steps, length)
    x = grid.axes[0]
    p_end = profile_eval(params, length)
    if terminal_value is None:
        terminal_value = p_end
    terminal_value = float(terminal_value)
    if terminal_value < 0:
        raise ParameterError("terminal_value must be >= 0")

    def done(u, e0):
        f = ScalarField(grid, u)
        return (f, e0) if return_energy else f

    if terminal_value == 0.0:
        return done(np.zeros_like(x), 0.0)
    if abs(terminal_value - p_end) <= tol:
        return done(profile_eval(params, x), 0.0)
    if terminal_value < p_end:
        a = length - (terminal_value / params.amplitude) ** (1.0 / params.beta)
        return done(profile_eval(params, x - a), 0.0)

    lo, hi = 0.0, max(terminal_value**2, 1e-30)
    for _ in range(400):
        if _rk4(params, length, hi, steps)[-1] >= terminal_value:
            break
        hi *= 4.0
    else:
        raise OracleError("could not bracket the first-integral value")
    u = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        u = _rk4(params, length, mid, steps)
        err = u[-1] - terminal_value
        if abs(err) <= tol:
            return done(u, mid)
        if err > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-17 * hi:
            break
    if u is not None and abs(u[-1] - terminal_value) <= max(tol, 1e-13 * terminal_value):
        return done(u, 0.5 * (lo + hi))
    raise OracleError(
        "bisection on the first integral did not reach the terminal value",
        residual=float(u[-1] - terminal_value),
    )
