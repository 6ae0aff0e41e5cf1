"""Built-in demonstration scenarios.

Twelve named presets (fig1a ... fig3d) cover the transform gallery on the
Lame family at m = 1/2: first- and second-order transforms seeded at band
edges, at Bloch solutions below the spectrum or inside a gap, and at
general non-Bloch mixtures that create bound states inside the forbidden
regions.  The acceptance suite and the CLI both run them by name.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import floquet
from .darboux import TransformResult, susy1, susy2
from .errors import SingularTransformError
from .potentials import DEFAULT_SAMPLES_PER_PERIOD, LamePotential, lame
from .seeds import (
    DEFAULT_PERIODS,
    SeedSolution,
    bloch_branches,
    bloch_seed,
    general_seed,
    nodeless_mixing,
)

__all__ = ["Scenario", "ScenarioRun", "SCENARIOS", "run_scenario", "band_structure_for"]

MODE_EDGE = "edge"
MODE_BLOCH = "bloch"
MODE_GENERAL = "general"


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    n: int
    m: float
    order: int
    mode: str
    energies: tuple[float, ...] = ()
    edge_indices: tuple[int, ...] = ()


SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario("fig1a", "first-order transform at the lowest band edge, n=1",
                 1, 0.5, 1, MODE_EDGE, edge_indices=(0,)),
        Scenario("fig1b", "first-order transform at the lowest band edge, n=2",
                 2, 0.5, 1, MODE_EDGE, edge_indices=(0,)),
        Scenario("fig1c", "first-order transform at the lowest band edge, n=3",
                 3, 0.5, 1, MODE_EDGE, edge_indices=(0,)),
        Scenario("fig1d", "second-order transform at the edges of the first gap, n=3",
                 3, 0.5, 2, MODE_EDGE, edge_indices=(1, 2)),
        Scenario("fig2a", "first-order transform, Bloch seed below the spectrum, n=1",
                 1, 0.5, 1, MODE_BLOCH, energies=(-1.0,)),
        Scenario("fig2b", "first-order transform, Bloch seed below the spectrum, n=2",
                 2, 0.5, 1, MODE_BLOCH, energies=(0.4,)),
        Scenario("fig2c", "second-order transform, Bloch seeds inside the first gap, n=2",
                 2, 0.5, 2, MODE_BLOCH, energies=(1.6, 2.9)),
        Scenario("fig2d", "second-order transform, Bloch seeds inside the first gap, n=3",
                 3, 0.5, 2, MODE_BLOCH, energies=(2.3, 5.0)),
        Scenario("fig3a", "first-order transform, non-Bloch seed below the spectrum, n=1",
                 1, 0.5, 1, MODE_GENERAL, energies=(0.0,)),
        Scenario("fig3b", "first-order transform, non-Bloch seed below the spectrum, n=2",
                 2, 0.5, 1, MODE_GENERAL, energies=(0.4,)),
        Scenario("fig3c", "second-order transform, non-Bloch seeds inside the first gap, n=1",
                 1, 0.5, 2, MODE_GENERAL, energies=(1.2, 1.3)),
        Scenario("fig3d", "second-order transform, non-Bloch seeds inside the first gap, n=2",
                 2, 0.5, 2, MODE_GENERAL, energies=(1.51, 2.51)),
    )
}


@dataclass(frozen=True)
class ScenarioRun:
    scenario: Scenario
    potential: LamePotential
    band_structure: floquet.BandStructure
    seeds: tuple[SeedSolution, ...]
    result: TransformResult


_BAND_CACHE: dict[tuple, floquet.BandStructure] = {}


def band_structure_for(
    v: LamePotential,
    *,
    scan_per_unit: float = 400.0,
    rtol: float = floquet.DEFAULT_RTOL,
    atol: float = floquet.DEFAULT_ATOL,
) -> floquet.BandStructure:
    """Band structure of a Lame potential over a window sure to hold all
    2n+1 edges; the amplitude n(n+1)m plus a margin covers the last gap."""
    e_max = v.amplitude + 4.0
    key = (v.n, v.m, scan_per_unit, rtol, atol, e_max)
    if key not in _BAND_CACHE:
        _BAND_CACHE[key] = floquet.band_edges(
            v, -0.5, e_max, scan_per_unit=scan_per_unit, rtol=rtol, atol=atol
        )
    return _BAND_CACHE[key]


def _wronskian_score(u1, up1, u2, up2, spp):
    """min |W| over the grid, normalized by the per-period scale of W."""
    w = u1 * up2 - up1 * u2
    cells = (len(w) - 1) // spp
    score = np.inf
    for c in range(cells):
        seg = np.abs(w[c * spp : (c + 1) * spp + 1])
        top = np.max(seg)
        if top == 0.0:
            return 0.0
        score = min(score, float(np.min(seg) / top))
    return score


def _best_bloch_pair(v, e1, e2, periods, samples_per_period, rtol, atol):
    """Pick the (branch at e1, branch at e2) pairing with the safest Wronskian."""
    pair1 = bloch_seed(v, e1, periods=periods, samples_per_period=samples_per_period,
                       rtol=rtol, atol=atol)
    pair2 = bloch_seed(v, e2, periods=periods, samples_per_period=samples_per_period,
                       rtol=rtol, atol=atol)
    best = None
    best_score = -1.0
    for s1 in pair1:
        for s2 in pair2:
            score = _wronskian_score(
                s1.u, s1.u_prime, s2.u, s2.u_prime, samples_per_period
            )
            if score > best_score:
                best_score = score
                best = (s1, s2)
    return best


def _mixing_angles(n_per_band: int = 24):
    """Candidate mixing angles with |c_minus / c_plus| in [1/4, 4], both signs.

    Balanced magnitudes keep the defect's crossover within roughly a period
    of the window center (the offset grows like ln|ratio| / (2 ln|beta|)),
    which the decay-rate fits of the kernel states need.
    """
    lo, hi = np.arctan(0.25), np.arctan(4.0)
    band = np.linspace(lo, hi, n_per_band)
    return np.concatenate([band, np.pi - band[::-1]])


def _best_general_pair(v, e1, e2, periods, samples_per_period, rtol, atol):
    """Deterministic mixing search for a zero-free Wronskian with all four
    branch coefficients active (so both kernel states are normalizable).

    The Wronskian is bilinear in the branches, so the four basis Wronskians
    are evaluated once on a coarse grid and the (theta1, theta2) scan is
    pure arithmetic.
    """
    spp_coarse = 256
    g1, d1, _ = bloch_branches(v, e1, samples_per_period=spp_coarse, rtol=rtol, atol=atol)
    g2, d2, _ = bloch_branches(v, e2, samples_per_period=spp_coarse, rtol=rtol, atol=atol)
    half = periods // 2
    period = float(v.period)
    x = np.linspace(-half * period, half * period, periods * spp_coarse + 1)
    basis = []
    for b1 in (g1, d1):
        u1, up1 = b1.evaluate(x)
        row = []
        for b2 in (g2, d2):
            u2, up2 = b2.evaluate(x)
            row.append(u1 * up2 - up1 * u2)
        basis.append(row)
    thetas = _mixing_angles()
    cells = periods
    best = None
    best_score = -1.0
    for t1 in thetas:
        c1 = (np.cos(t1), np.sin(t1))
        for t2 in thetas:
            c2 = (np.cos(t2), np.sin(t2))
            w = (
                c1[0] * c2[0] * basis[0][0]
                + c1[0] * c2[1] * basis[0][1]
                + c1[1] * c2[0] * basis[1][0]
                + c1[1] * c2[1] * basis[1][1]
            )
            score = np.inf
            for c in range(cells):
                seg = np.abs(w[c * spp_coarse : (c + 1) * spp_coarse + 1])
                top = np.max(seg)
                if top == 0.0:
                    score = 0.0
                    break
                score = min(score, float(np.min(seg) / top))
            if score > best_score:
                best_score = score
                best = (c1, c2)
    if best is None or best_score <= 0.0:
        raise SingularTransformError(
            f"no zero-free Wronskian mixing found for energies {e1}, {e2}"
        )
    (cp1, cm1), (cp2, cm2) = best
    s1 = general_seed(v, e1, cp1, cm1, periods=periods,
                      samples_per_period=samples_per_period, rtol=rtol, atol=atol)
    s2 = general_seed(v, e2, cp2, cm2, periods=periods,
                      samples_per_period=samples_per_period, rtol=rtol, atol=atol)
    return s1, s2


def run_scenario(
    name: str,
    *,
    periods: int = DEFAULT_PERIODS,
    samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD,
    rtol: float = floquet.DEFAULT_RTOL,
    atol: float = floquet.DEFAULT_ATOL,
) -> ScenarioRun:
    """Execute a named scenario and return its seeds, transform, and context."""
    if name not in SCENARIOS:
        raise KeyError(
            f"unknown scenario {name!r}; available: {', '.join(sorted(SCENARIOS))}"
        )
    sc = SCENARIOS[name]
    v = lame(sc.n, sc.m)
    bands = band_structure_for(v, rtol=rtol, atol=atol)
    kwargs = dict(
        periods=periods, samples_per_period=samples_per_period, rtol=rtol, atol=atol
    )

    if sc.mode == MODE_EDGE:
        energies = [bands.edges[i] for i in sc.edge_indices]
        chosen = [bloch_seed(v, e, **kwargs)[0] for e in energies]
    elif sc.mode == MODE_BLOCH:
        if sc.order == 1:
            chosen = [bloch_seed(v, sc.energies[0], **kwargs)[0]]
        else:
            chosen = list(
                _best_bloch_pair(v, *sc.energies, periods, samples_per_period, rtol, atol)
            )
    else:
        if sc.order == 1:
            eps = sc.energies[0]
            mix = nodeless_mixing(v, eps, periods=periods, rtol=rtol, atol=atol)
            chosen = [general_seed(v, eps, *mix, **kwargs)]
        else:
            chosen = list(
                _best_general_pair(v, *sc.energies, periods, samples_per_period, rtol, atol)
            )

    if sc.order == 1:
        result = susy1(v, chosen[0])
    else:
        result = susy2(v, chosen[0], chosen[1])
    return ScenarioRun(
        scenario=sc,
        potential=v,
        band_structure=bands,
        seeds=tuple(chosen),
        result=result,
    )
