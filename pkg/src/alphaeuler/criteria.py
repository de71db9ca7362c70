"""Necessary conditions for linear instability of channel shear states.

A growing normal mode requires U'' to vanish somewhere (Rayleigh) and the
product U''(y) (V(y) - V(y_s)) to be negative somewhere (Fjortoft, with y_s
an inflection point of U). These are necessary conditions only, so the
"stable" verdict is a proof and the other verdict merely fails to rule
instability out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .domain import Profile1D, SteadyShearState
from .errors import NoInflectionPoint

RAYLEIGH = "rayleigh"
FJORTOFT = "fjortoft"
FJORTOFT_GENERALIZED = "fjortoft-generalized"

STABLE = "StableByCriterion"
NOT_RULED_OUT = "InstabilityNotRuledOut"
DEGENERATE = "DegenerateStable"

# |U''| below this (relative) threshold counts as zero
_ZERO_RTOL = 1e-9
# products above -1e-10 * scale^2 are treated as non-negative
_PRODUCT_RTOL = 1e-10


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of a single criterion check.

    witnesses are (y, value) pairs backing the verdict: the minimiser of
    |U''| for a stable Rayleigh verdict, the worst product point for
    Fjortoft. inflection_points lists the sign-changing zeros of U''.
    """

    criterion: str
    verdict: str
    witnesses: tuple[tuple[float, float], ...] = ()
    inflection_points: tuple[float, ...] = ()
    detail: str = ""
    best_shift: float | None = None  # certifying constant for the generalized check

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "witnesses": [[y, v] for y, v in self.witnesses],
            "inflection_points": list(self.inflection_points),
            "detail": self.detail,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _interpolant(profile: Profile1D):
    if profile.descriptor is not None:
        return profile.descriptor
    return profile.evaluate


def sign_change_zeros(profile: Profile1D, tol: float) -> tuple[list[float], list[float]]:
    """Locate zeros of a sampled function, split into sign-changing and
    tangential ones. Zeros are refined on the analytic descriptor when
    present, otherwise on the polynomial interpolant."""
    y = profile.grid.nodes
    vals = profile.values
    signs = np.where(np.abs(vals) <= tol, 0, np.sign(vals)).astype(int)
    fn = _interpolant(profile)

    def refine(lo: float, hi: float) -> float:
        flo, fhi = float(fn(lo)), float(fn(hi))
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if flo * fhi < 0:
            return float(brentq(lambda s: float(fn(s)), lo, hi, xtol=1e-14, rtol=8.9e-16))
        return 0.5 * (lo + hi)

    crossings: list[float] = []
    tangential: list[float] = []
    i = 0
    n = len(y)
    while i < n:
        if signs[i] != 0:
            i += 1
            continue
        j = i
        while j < n and signs[j] == 0:
            j += 1
        left = signs[i - 1] if i > 0 else 0
        right = signs[j] if j < n else 0
        lo = y[i - 1] if i > 0 else y[i]
        hi = y[j] if j < n else y[j - 1]
        if left != 0 and right != 0 and left != right:
            crossings.append(refine(lo, hi))
        else:
            tangential.append(0.5 * (y[i] + y[j - 1]))
        i = j
    # strict sign flips between adjacent non-zero samples
    for i in range(n - 1):
        if signs[i] != 0 and signs[i + 1] != 0 and signs[i] != signs[i + 1]:
            crossings.append(refine(y[i], y[i + 1]))
    return sorted(crossings), sorted(tangential)


def rayleigh_check(state: SteadyShearState) -> CriterionReport:
    """Inflection-point test on the momentum profile U.

    No zero of U'' proves spectral stability; U'' identically zero is the
    degenerate (Couette-type) case where the modal energy identity forces
    the trivial mode, reported as DegenerateStable.
    """
    d2u = state.d2U
    vals = d2u.values
    tol = _ZERO_RTOL * max(1.0, float(np.max(np.abs(vals))))
    if np.all(np.abs(vals) <= tol):
        i = int(np.argmax(np.abs(vals)))
        return CriterionReport(
            RAYLEIGH, DEGENERATE,
            witnesses=((float(d2u.grid.nodes[i]), float(vals[i])),),
            detail="U'' vanishes identically; no nontrivial mode exists",
        )
    crossings, tangential = sign_change_zeros(d2u, tol)
    if not crossings:
        i = int(np.argmin(np.abs(vals)))
        note = f"; tangential zeros at {tangential}" if tangential else ""
        return CriterionReport(
            RAYLEIGH, STABLE,
            witnesses=((float(d2u.grid.nodes[i]), float(vals[i])),),
            detail="U'' has no sign change: no growing normal mode exists" + note,
        )
    witnesses = tuple((ys, float(d2u.evaluate(ys))) for ys in crossings)
    return CriterionReport(
        RAYLEIGH, NOT_RULED_OUT,
        witnesses=witnesses,
        inflection_points=tuple(crossings),
        detail=f"U'' changes sign at {len(crossings)} point(s)",
    )


def fjortoft_check(state: SteadyShearState) -> CriterionReport:
    """Sign test of U''(y) (V(y) - V(y_s)) over each inflection point y_s.

    If the product is everywhere non-negative for some y_s the state is
    stable despite the inflection point; otherwise instability is not
    ruled out and the most negative product is reported as witness.
    """
    rayleigh = rayleigh_check(state)
    if rayleigh.verdict == STABLE:
        return CriterionReport(
            FJORTOFT, STABLE,
            witnesses=rayleigh.witnesses,
            detail="no inflection point; stability already follows from the Rayleigh check",
        )
    if rayleigh.verdict == DEGENERATE:
        raise NoInflectionPoint("U'' vanishes identically: no inflection point to test")

    y = state.grid.nodes
    d2u = state.d2U.values
    v = state.V.values
    best: tuple[float, np.ndarray] | None = None  # (min product, products) for best y_s
    best_ys = None
    for ys in rayleigh.inflection_points:
        vs = float(state.V.evaluate(ys))
        product = d2u * (v - vs)
        scale = max(1.0, float(np.max(np.abs(d2u)))) * max(1.0, float(np.max(np.abs(v - vs))))
        worst = float(np.min(product))
        if worst >= -_PRODUCT_RTOL * scale:
            i = int(np.argmin(product))
            return CriterionReport(
                FJORTOFT, STABLE,
                witnesses=((float(y[i]), worst),),
                inflection_points=rayleigh.inflection_points,
                detail=f"U''(V - V(y_s)) >= 0 everywhere for y_s = {ys!r}",
            )
        if best is None or worst > best[0]:
            best = (worst, product)
            best_ys = ys
    assert best is not None
    i = int(np.argmin(best[1]))
    return CriterionReport(
        FJORTOFT, NOT_RULED_OUT,
        witnesses=((float(y[i]), float(best[1][i])),),
        inflection_points=rayleigh.inflection_points,
        detail=f"U''(V - V(y_s)) < 0 at y = {float(y[i])!r} for every inflection point "
               f"(closest to certifying: y_s = {best_ys!r})",
    )


def fjortoft_generalized_check(
    state: SteadyShearState,
    z_grid: np.ndarray | None = None,
) -> CriterionReport:
    """Scan shift constants z for a certificate (V - z) U'' >= 0 everywhere.

    A single certifying z proves stability; the default grid spans the range
    of V widened by itself on both sides, 201 points.
    """
    d2u = state.d2U.values
    v = state.V.values
    y = state.grid.nodes
    tol_zero = _ZERO_RTOL * max(1.0, float(np.max(np.abs(d2u))))
    if np.all(np.abs(d2u) <= tol_zero):
        return CriterionReport(
            FJORTOFT_GENERALIZED, DEGENERATE,
            detail="U'' vanishes identically; every shift certifies",
            best_shift=0.0,
        )
    if z_grid is None:
        vmin, vmax = float(np.min(v)), float(np.max(v))
        span = (vmax - vmin) or max(1.0, abs(vmax))
        z_grid = np.linspace(vmin - span, vmax + span, 201)
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size == 0:
        raise ValueError("z_grid must be non-empty")

    scale_u = max(1.0, float(np.max(np.abs(d2u))))
    best_z, best_worst, best_idx = None, -np.inf, 0
    certified = False
    for z in z_grid:
        product = (v - z) * d2u
        worst = float(np.min(product))
        if worst > best_worst:
            best_worst = worst
            best_z = float(z)
            best_idx = int(np.argmin(product))
        scale = scale_u * max(1.0, float(np.max(np.abs(v - z))))
        if worst >= -_PRODUCT_RTOL * scale:
            certified = True
    rayleigh = rayleigh_check(state)
    if certified:
        return CriterionReport(
            FJORTOFT_GENERALIZED, STABLE,
            witnesses=((float(y[best_idx]), best_worst),),
            inflection_points=rayleigh.inflection_points,
            detail=f"(V - z) U'' >= 0 everywhere for z = {best_z!r}",
            best_shift=best_z,
        )
    return CriterionReport(
        FJORTOFT_GENERALIZED, NOT_RULED_OUT,
        witnesses=((float(y[best_idx]), best_worst),),
        inflection_points=rayleigh.inflection_points,
        detail=f"no certifying shift on the scan grid; best z = {best_z!r} "
               f"still gives min product {best_worst!r}",
        best_shift=best_z,
    )
