"""Unstable-subspace tracking: discrete QR recursion, Lyapunov spectra,
Kaplan-Yorke dimension."""

from __future__ import annotations

import numpy as np

from ..errors import RankDeficiencyError, ReductionError
from ..numerics import qr_positive
from .basis import ReductionBasis


def _resolve_map(model):
    """Accept a plain callable map or a model object exposing cycle_map."""
    if callable(model):
        return model
    if hasattr(model, "cycle_map"):
        return model.cycle_map
    raise TypeError("expected a callable map or a model with cycle_map")


def aus_step(model, x, basis: ReductionBasis, eps: float = 1e-6):
    """One discrete QR step of the tangent recursion along a trajectory point.

    The Jacobian action is approximated by finite differences,
    Z = [f(x + e U) - f(x)] / e column-wise with e = eps * max(||x||, 1), and
    (U_next, T) = qr_positive(Z). Raises on basis collapse (rank-deficient Z).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    fmap = _resolve_map(model)
    x = np.asarray(x, dtype=float)
    e = eps * max(np.linalg.norm(x), 1.0)
    block = np.concatenate([x[:, None], x[:, None] + e * basis.columns], axis=1)
    fblock = fmap(block)
    z = (fblock[:, 1:] - fblock[:, :1]) / e
    try:
        q, t = qr_positive(z)
    except RankDeficiencyError as exc:
        raise ReductionError(f"tangent basis collapsed: {exc}") from exc
    return ReductionBasis(q, kind="aus", time_dependent=True, validate=False), t


def lyapunov_spectrum(model, x0, n_steps: int, p: int, eps: float = 1e-6,
                      qr_interval: int = 10) -> np.ndarray:
    """Leading p Lyapunov exponents of the model's internal step map.

    Benettin scheme with finite-difference tangent propagation: a cloud of p
    perturbed copies is advanced alongside the base trajectory and
    re-orthonormalized by positive-diagonal QR every qr_interval steps; the
    exponents are the accumulated log diagonal of T divided by the elapsed
    time n_steps * model.dt. Returned sorted descending.
    """
    x = np.asarray(x0, dtype=float)
    m = x.size
    if p > m:
        raise ValueError(f"cannot compute {p} exponents in dimension {m}")
    if n_steps < 1 or qr_interval < 1:
        raise ValueError("n_steps and qr_interval must be >= 1")

    q = np.eye(m, p)
    log_sums = np.zeros(p)
    e = eps * max(np.linalg.norm(x), 1.0)
    cloud = x[:, None] + e * q
    since_qr = 0
    for step in range(n_steps):
        block = np.concatenate([x[:, None], cloud], axis=1)
        block = model.step(block)
        x = block[:, 0]
        cloud = block[:, 1:]
        since_qr += 1
        if since_qr == qr_interval or step == n_steps - 1:
            z = (cloud - x[:, None]) / e
            try:
                q, t = qr_positive(z)
            except RankDeficiencyError as exc:
                raise ReductionError(f"tangent basis collapsed at step {step}: {exc}") from exc
            log_sums += np.log(np.diag(t))
            e = eps * max(np.linalg.norm(x), 1.0)
            cloud = x[:, None] + e * q
            since_qr = 0

    exponents = log_sums / (n_steps * model.dt)
    return np.sort(exponents)[::-1]


def kaplan_yorke(exponents) -> float:
    """Kaplan-Yorke dimension of a descending Lyapunov spectrum.

    D = k + (l_1 + ... + l_k)/|l_{k+1}| with k the largest index whose partial
    sum is positive. Returns 0.0 when the leading exponent is nonpositive
    (non-expanding spectrum); raises when every partial sum is positive, since
    the crossing index then lies beyond the computed spectrum.
    """
    lam = np.asarray(exponents, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("exponents must be a nonempty 1-d sequence")
    if np.any(np.diff(lam) > 1e-12):
        raise ValueError("exponents must be sorted descending")
    if lam[0] <= 0.0:
        return 0.0
    sums = np.cumsum(lam)
    positive = np.flatnonzero(sums > 0.0)
    k0 = positive[-1]
    if k0 == lam.size - 1:
        raise ReductionError(
            "all partial sums are positive; the spectrum is too short to "
            "bracket the Kaplan-Yorke crossing"
        )
    return float(k0 + 1 + sums[k0] / abs(lam[k0 + 1]))
