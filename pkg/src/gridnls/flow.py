"""Mass-constrained minimisation by normalised gradient descent.

Any problem object with the following attributes can be minimised:

``weights``
    positive lumped-mass diagonal, so ``mass(x) = sum(weights * x**2)``
``energy(x)``, ``euclidean_gradient(x)``
    energy and its plain partial derivatives
``stiffness`` (only for ``metric="h1"``)
    sparse SPD-ish matrix used to build the preconditioner ``K + shift * M``
``diagnostics(x)``, ``to_field(x)`` (optional)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, splu

log = logging.getLogger(__name__)

NEGATIVE = "Negative"
ZERO = "Zero"


@dataclass(frozen=True)
class SolveConfig:
    step0: float = 1.0
    shrink: float = 0.5
    grow: float = 1.5
    grad_tol: float = 1e-8
    max_iters: int = 20000
    energy_flat_tol: float = 1e-15
    patience: int = 25
    metric: str = "h1"
    shift: float = 1.0
    min_step: float = 1e-14

    def __post_init__(self):
        problems = []
        if not self.step0 > 0:
            problems.append("step0 must be positive")
        if not 0 < self.shrink < 1:
            problems.append("shrink must lie in (0,1)")
        if not self.grow > 1:
            problems.append("grow must exceed 1")
        if not self.grad_tol > 0:
            problems.append("grad_tol must be positive")
        if not (int(self.max_iters) == self.max_iters and self.max_iters >= 1):
            problems.append("max_iters must be a positive integer")
        if not self.energy_flat_tol > 0:
            problems.append("energy_flat_tol must be positive")
        if self.metric not in ("l2", "h1"):
            problems.append(f"metric must be 'l2' or 'h1', got {self.metric!r}")
        if not self.shift > 0:
            problems.append("shift must be positive")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class SolveResult:
    state: np.ndarray
    energy: float
    lam: float
    iterations: int
    converged: bool
    reason: str
    grad_norm: float
    mu: float
    diagnostics: Any = None
    energies: list[float] = field(default_factory=list, repr=False)
    mass_errors: list[float] = field(default_factory=list, repr=False)
    problem: Any = field(default=None, repr=False)

    @property
    def field(self):
        return self.problem.to_field(self.state)

    def record(self) -> dict:
        diag = self.diagnostics
        if hasattr(diag, "as_dict"):
            diag = diag.as_dict()
        return {
            "energy": self.energy,
            "lambda": self.lam,
            "iterations": self.iterations,
            "converged": self.converged,
            "reason": self.reason,
            "grad_norm": self.grad_norm,
            "mu": self.mu,
            "residuals": diag,
        }


def mass_of(problem, x: np.ndarray) -> float:
    return float(np.sum(problem.weights * x * x))


def project_mass(problem, x: np.ndarray, mu: float) -> np.ndarray:
    m = mass_of(problem, x)
    if not m > 0:
        raise ValueError("cannot rescale a field with zero mass")
    return np.sqrt(mu / m) * x


# above this many unknowns the LU fill gets too large; K + shift*M has a
# window-independent condition number, so Jacobi-CG converges in a few dozen steps
DIRECT_LIMIT = 400_000


class _Preconditioner:
    def __init__(self, problem, shift: float):
        P = (problem.stiffness + sp.diags(shift * problem.weights)).tocsr()
        self._lu = None
        if P.shape[0] <= DIRECT_LIMIT:
            self._lu = splu(P.tocsc())
        else:
            self._P = P
            d = 1.0 / P.diagonal()
            self._jacobi = LinearOperator(P.shape, matvec=lambda r: d * r, dtype=float)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        if self._lu is not None:
            return self._lu.solve(r)
        z, info = cg(self._P, r, rtol=1e-10, atol=0.0, maxiter=500, M=self._jacobi)
        if info != 0:
            log.warning("preconditioner CG did not converge (info=%d)", info)
        return z


def _direction(problem, x, eg, precond):
    w = problem.weights
    wx = w * x
    if precond is None:
        s = float(eg @ x) / float(wx @ x)
        return (eg - s * wx) / w
    z = precond(eg)
    y = precond(wx)
    s = float(wx @ z) / float(wx @ y)
    return z - s * y


def projected_gradient_norm(problem, x: np.ndarray, eg: np.ndarray | None = None) -> float:
    """L^2 norm of the gradient minus its component along ``x``, per unit root-mass."""
    if eg is None:
        eg = problem.euclidean_gradient(x)
    w = problem.weights
    m = mass_of(problem, x)
    gp = (eg - (float(eg @ x) / m) * w * x) / w
    return float(np.sqrt(np.sum(w * gp * gp) / m))


def multiplier(problem, x: np.ndarray, eg: np.ndarray | None = None) -> float:
    if eg is None:
        eg = problem.euclidean_gradient(x)
    return -float(eg @ x) / mass_of(problem, x)


def minimize(
    problem,
    mu: float,
    init: np.ndarray,
    config: SolveConfig = SolveConfig(),
    *,
    stop_energy: float | None = None,
    callback: Callable[[int, np.ndarray, float], None] | None = None,
    record: bool = False,
    precond=None,
) -> SolveResult:
    """Projected descent ``x <- P_mu(x - tau d)`` with backtracking on ``tau``.

    Stops when the projected-gradient norm drops below ``grad_tol``, when the
    relative energy change stays below ``energy_flat_tol`` for ``patience``
    accepted steps, or (if given) as soon as the energy falls below
    ``stop_energy``.
    """
    if not mu > 0:
        raise ValueError("mass must be positive")
    x = project_mass(problem, np.asarray(init, dtype=float), mu)
    if config.metric == "h1" and precond is None:
        precond = _Preconditioner(problem, config.shift)
    elif config.metric == "l2":
        precond = None

    E = problem.energy(x)
    tau = config.step0
    energies = [E] if record else []
    mass_errors = [abs(mass_of(problem, x) - mu) / mu] if record else []
    flat_run = 0
    reason = "max_iters"
    it = 0
    eg = problem.euclidean_gradient(x)
    gnorm = projected_gradient_norm(problem, x, eg)
    while it < config.max_iters:
        if gnorm < config.grad_tol:
            reason = "gradient"
            break
        if stop_energy is not None and E < stop_energy:
            reason = "below_target"
            break
        d = _direction(problem, x, eg, precond)
        while True:
            trial = project_mass(problem, x - tau * d, mu)
            Et = problem.energy(trial)
            if Et < E:
                break
            tau *= config.shrink
            if tau < config.min_step:
                break
        if tau < config.min_step:
            reason = "stalled"
            break
        it += 1
        dE = E - Et
        x, E = trial, Et
        tau = min(tau * config.grow, 1e12)
        if record:
            energies.append(E)
            mass_errors.append(abs(mass_of(problem, x) - mu) / mu)
        if callback is not None:
            callback(it, x, E)
        eg = problem.euclidean_gradient(x)
        gnorm = projected_gradient_norm(problem, x, eg)
        if dE <= config.energy_flat_tol * max(1.0, abs(E)):
            flat_run += 1
            if flat_run >= config.patience:
                reason = "flat"
                break
        else:
            flat_run = 0

    converged = reason in ("gradient", "flat")
    if reason == "stalled" and gnorm < 1e3 * config.grad_tol:
        converged = True
    if not converged and reason != "below_target":
        log.warning("minimize stopped without converging (%s, |grad|=%.3e)", reason, gnorm)
    diag = problem.diagnostics(x) if hasattr(problem, "diagnostics") else None
    return SolveResult(
        state=x,
        energy=E,
        lam=multiplier(problem, x, eg),
        iterations=it,
        converged=converged,
        reason=reason,
        grad_norm=gnorm,
        mu=mu,
        diagnostics=diag,
        energies=energies,
        mass_errors=mass_errors,
        problem=problem,
    )


@dataclass
class SignResult:
    sign: str
    energy: float
    neg_tol: float
    results: list[SolveResult] = field(repr=False, default_factory=list)


def sign_of_level(
    problem,
    mu: float,
    config: SolveConfig,
    inits: list[np.ndarray],
    neg_tol: float | None = None,
) -> SignResult:
    """Classify the ground-state level at mass ``mu`` as Negative or Zero.

    Any admissible state with energy below ``-neg_tol`` certifies a negative
    level, so each start stops early once it crosses that bound.  ``neg_tol``
    defaults to ``1e-8 * mu``.
    """
    if len(inits) < 3:
        raise ValueError("sign classification needs at least three starts")
    if neg_tol is None:
        neg_tol = 1e-8 * mu
    precond = None
    if config.metric == "h1":
        precond = _Preconditioner(problem, config.shift)
    results = []
    best = np.inf
    for x0 in inits:
        res = minimize(problem, mu, x0, config, stop_energy=-neg_tol, precond=precond)
        results.append(res)
        best = min(best, res.energy)
        if best < -neg_tol:
            break
    sign = NEGATIVE if best < -neg_tol else ZERO
    return SignResult(sign, float(best), neg_tol, results)
