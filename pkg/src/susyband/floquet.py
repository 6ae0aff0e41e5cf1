"""Transfer-matrix machinery for -psi'' + V(x) psi = E psi on periodic potentials.

The first-order system d/dx (psi, psi') = [[0, 1], [V - E, 0]] (psi, psi')
is integrated with an adaptive embedded Dormand-Prince 5(4) pair.  The two
canonical columns (1,0) and (0,1) propagate together, so the result of one
pass is the full transfer matrix b(x1 <- x0); a whole batch of energies can
ride along in one integration since V(x) is shared between them, which is
what makes dense discriminant sweeps cheap.

On top of the propagator sit the one-period (Floquet) matrix, its trace
D(E), the |D| trichotomy classifier, and the band-edge finder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StiffIntegrationError
from .potentials import Potential

__all__ = [
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
    "EDGE_TOL",
    "TransferMatrix",
    "EnergyClass",
    "BandStructure",
    "propagate",
    "transfer_matrix",
    "transfer_matrices",
    "discriminant",
    "discriminants",
    "classify",
    "classify_discriminant",
    "multipliers_from_discriminant",
    "band_edges",
    "write_discriminant_csv",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
#: |D| within this of 2 classifies an energy as a band edge
EDGE_TOL = 1e-7

# Dormand-Prince 5(4) tableau (FSAL)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_MAX_GROW = 5.0
_MIN_SHRINK = 0.2
_SAFETY = 0.9


def _deriv(v_x: float, e, y):
    """RHS of the matrix Schrodinger system; y has shape (2, ...)."""
    return np.stack((y[1], (v_x - e) * y[0]))


def _advance(v, e, x0: float, x1: float, y, rtol: float, atol: float, f_start=None):
    """Adaptive DP5(4) advance of y from x0 to x1 (either direction).

    `v` is a scalar-in scalar-out callable; `e` broadcasts against the
    trailing shape of y.  Returns (y_end, f_end) with f_end reusable as the
    FSAL stage of a continuation.
    """
    span = x1 - x0
    if span == 0.0:
        return y, f_start
    direction = 1.0 if span > 0 else -1.0
    x = x0
    f1 = _deriv(v(x), e, y) if f_start is None else f_start

    # First trial step from the local oscillation scale.
    k_scale = math.sqrt(max(1.0, float(np.max(np.abs(v(x0) - e)))))
    h = direction * min(abs(span), 0.1 / k_scale)
    h_floor = 64.0 * np.finfo(float).eps

    while (x1 - x) * direction > 0.0:
        if abs(h) > abs(x1 - x):
            h = x1 - x
        if abs(h) < h_floor * max(1.0, abs(x)):
            raise StiffIntegrationError("step size underflow in propagation", x)

        k2 = _deriv(v(x + _C2 * h), e, y + h * (_A21 * f1))
        k3 = _deriv(v(x + _C3 * h), e, y + h * (_A31 * f1 + _A32 * k2))
        k4 = _deriv(v(x + _C4 * h), e, y + h * (_A41 * f1 + _A42 * k2 + _A43 * k3))
        k5 = _deriv(
            v(x + _C5 * h), e, y + h * (_A51 * f1 + _A52 * k2 + _A53 * k3 + _A54 * k4)
        )
        k6 = _deriv(
            v(x + h),
            e,
            y + h * (_A61 * f1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
        )
        y_new = y + h * (_B1 * f1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = _deriv(v(x + h), e, y_new)

        err = h * (_E1 * f1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))

        if err_norm <= 1.0:
            x += h
            y = y_new
            f1 = k7
            factor = _MAX_GROW if err_norm == 0.0 else min(
                _MAX_GROW, max(_MIN_SHRINK, _SAFETY * err_norm ** -0.2)
            )
            h *= factor
        else:
            h *= max(_MIN_SHRINK, _SAFETY * err_norm ** -0.2)
    return y, f1


def _advance_sampled(v, e, xs, y0, rtol: float, atol: float):
    """Advance through the strictly monotone breakpoints xs, recording y at each."""
    out = np.empty((len(xs),) + np.shape(y0))
    out[0] = y0
    y = y0
    f = None
    for i in range(1, len(xs)):
        y, f = _advance(v, e, xs[i - 1], xs[i], y, rtol, atol, f_start=f)
        out[i] = y
    return out


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 unit-determinant matrix carrying (psi, psi') across [x0, x1]."""

    matrix: np.ndarray
    x0: float
    x1: float
    energy: float

    @property
    def det(self) -> float:
        b = self.matrix
        return float(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0])

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        # composition b(x2 <- x0) = b(x2 <- x1) @ b(x1 <- x0)
        return TransferMatrix(self.matrix @ other.matrix, other.x0, self.x1, self.energy)


def propagate(
    v: Potential,
    energy: float,
    x0: float,
    x1: float,
    samples: int | None = None,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
):
    """Transfer matrix b(x1 <- x0) at the given energy, optionally with a trace.

    With ``samples=n`` the interval is traversed through n+1 uniform
    breakpoints and the canonical-column matrices b(x_k <- x0) are recorded,
    so (psi, psi')(x_k) = b_k @ (psi, psi')(x0) for any initial data.

    Returns (TransferMatrix, trace) where trace is None or an array of shape
    (n+1, 2, 2).
    """
    if not x1 > x0:
        raise ValueError("propagation interval must satisfy x0 < x1")
    y0 = np.eye(2)
    if samples is None:
        y, _ = _advance(v, float(energy), x0, x1, y0, rtol, atol)
        return TransferMatrix(y, x0, x1, float(energy)), None
    xs = np.linspace(x0, x1, samples + 1)
    trace = _advance_sampled(v, float(energy), xs, y0, rtol, atol)
    return TransferMatrix(trace[-1], x0, x1, float(energy)), trace


def transfer_matrix(v, energy, x0, x1, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> TransferMatrix:
    tm, _ = propagate(v, energy, x0, x1, rtol=rtol, atol=atol)
    return tm


def transfer_matrices(v, energies, x0, x1, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """One-pass transfer matrices for a whole batch of energies; shape (nE, 2, 2).

    The potential is evaluated once per integrator stage for the entire
    batch, so a dense energy sweep costs barely more than a single solve.
    """
    e = np.asarray(energies, dtype=float)
    if e.ndim != 1:
        raise ValueError("energies must be one-dimensional")
    if e.size == 0:
        return np.empty((0, 2, 2))
    y0 = np.broadcast_to(np.eye(2)[:, :, None], (2, 2, e.size)).copy()
    y, _ = _advance(v, e[None, :], x0, x1, y0, rtol, atol)
    return np.moveaxis(y, 2, 0)


def _require_period(v: Potential) -> float:
    period = v.period
    if period is None:
        raise ValueError("potential has no period; Floquet analysis needs one")
    return float(period)


def discriminant(v, energy, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> float:
    """D(E) = Tr b(T <- 0), the trace of the one-period Floquet matrix."""
    period = _require_period(v)
    return transfer_matrix(v, energy, 0.0, period, rtol=rtol, atol=atol).trace


def discriminants(v, energies, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Batched discriminant sweep over an array of energies."""
    period = _require_period(v)
    ms = transfer_matrices(v, energies, 0.0, period, rtol=rtol, atol=atol)
    return ms[:, 0, 0] + ms[:, 1, 1]


TAG_ALLOWED_BAND = "allowed_band"
TAG_EDGE_PERIODIC = "band_edge_periodic"
TAG_EDGE_ANTIPERIODIC = "band_edge_antiperiodic"
TAG_GAP = "gap"


@dataclass(frozen=True)
class EnergyClass:
    """Spectral classification of one energy from the |D| trichotomy."""

    tag: str
    discriminant: float
    multipliers: tuple[complex, complex]


def multipliers_from_discriminant(d: float) -> tuple[complex, complex]:
    """Floquet multipliers beta_pm = D/2 +- sqrt(D^2/4 - 1); product is 1."""
    half = 0.5 * d
    disc = half * half - 1.0
    if disc >= 0.0:
        root = math.sqrt(disc)
        return half + root, half - root
    root = math.sqrt(-disc)
    return complex(half, root), complex(half, -root)


def classify_discriminant(d: float, edge_tol: float = EDGE_TOL) -> EnergyClass:
    if abs(d - 2.0) <= edge_tol:
        return EnergyClass(TAG_EDGE_PERIODIC, d, (1.0, 1.0))
    if abs(d + 2.0) <= edge_tol:
        return EnergyClass(TAG_EDGE_ANTIPERIODIC, d, (-1.0, -1.0))
    tag = TAG_ALLOWED_BAND if abs(d) < 2.0 else TAG_GAP
    return EnergyClass(tag, d, multipliers_from_discriminant(d))


def classify(v, energy, edge_tol: float = EDGE_TOL, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> EnergyClass:
    """Classify an energy as allowed band, band edge, or gap."""
    return classify_discriminant(discriminant(v, energy, rtol=rtol, atol=atol), edge_tol)


@dataclass(frozen=True)
class BandStructure:
    """Ordered band edges with the intervals they delimit.

    ``edges`` holds only the edges of genuinely open bands and gaps (kinds
    parallel: periodic/antiperiodic); ``touching`` lists double roots where a
    gap has closed, reported as single coincident-pair energies.  The last
    band is truncated at the search window.
    """

    edges: tuple[float, ...]
    kinds: tuple[str, ...]
    bands: tuple[tuple[float, float], ...]
    gaps: tuple[tuple[float, float], ...]
    touching: tuple[float, ...]
    window: tuple[float, float]

    def gap_index(self, energy: float) -> int | None:
        """Index of the forbidden region containing energy: 0 below the first
        edge, k for the k-th open gap, None inside a band."""
        if not self.edges:
            return None
        if energy < self.edges[0]:
            return 0
        for i, (lo, hi) in enumerate(self.gaps):
            if lo < energy < hi:
                return i + 1
        return None


def _bisect_roots(v, lo, hi, f_lo, targets, *, iters, rtol, atol, scan_rtol):
    """Vectorized two-stage bisection for D(E) = target_i on bracketing intervals.

    Most iterations run at the cheap scan tolerance; the bracket is tight
    enough by then that the final full-tolerance sweeps dominate accuracy.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    targets = np.asarray(targets, dtype=float)
    s_lo = np.sign(f_lo)
    for _ in range(iters):
        # cheap tolerance while the bracket is wide; once |D - target| across
        # the bracket could drown in scan noise, pay for the full tolerance
        tol = scan_rtol if float(np.max(hi - lo)) > 3e-5 else rtol
        mid = 0.5 * (lo + hi)
        d_mid = discriminants(v, mid, rtol=tol, atol=atol) - targets
        left = np.sign(d_mid) == s_lo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _refine_extremum(v, e_left, e_mid, e_right, d_left, d_mid, d_right, maximize,
                     *, iters=10, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Successive parabolic refinement of an interior extremum of D(E)."""
    sign = 1.0 if maximize else -1.0
    xs = [e_left, e_mid, e_right]
    fs = [sign * d_left, sign * d_mid, sign * d_right]
    for _ in range(iters):
        order = np.argsort(xs)
        x0, x1, x2 = (xs[i] for i in order)
        f0, f1, f2 = (fs[i] for i in order)
        denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0)
        if denom == 0.0:
            break
        vertex = x1 - 0.5 * (
            (x1 - x0) ** 2 * (f1 - f2) - (x1 - x2) ** 2 * (f1 - f0)
        ) / denom
        if not x0 < vertex < x2 or abs(vertex - x1) < 1e-12:
            break
        f_v = sign * discriminant(v, vertex, rtol=rtol, atol=atol)
        # keep the best three points bracketing the extremum
        worst = int(np.argmin(fs))
        xs[worst] = vertex
        fs[worst] = f_v
    best = int(np.argmax(fs))
    return xs[best], sign * fs[best]


def band_edges(
    v: Potential,
    e_min: float,
    e_max: float,
    *,
    scan_per_unit: float = 400.0,
    edge_tol: float = EDGE_TOL,
    refine_iters: int = 40,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    scan_rtol: float = 1e-8,
) -> BandStructure:
    """Locate all band edges (roots of D = +-2) inside [e_min, e_max].

    A coarse scan brackets sign changes of D -+ 2, vectorized bisection
    refines each bracket below 1e-9, and interior extrema of D are
    parabolically refined to catch touching bands (double roots) or sub-grid
    root pairs.  Touching points are reported separately and do not count as
    edges.
    """
    if not e_max > e_min:
        raise ValueError("need e_min < e_max")
    n_scan = max(64, int(math.ceil((e_max - e_min) * scan_per_unit)))
    es = np.linspace(e_min, e_max, n_scan + 1)
    ds = discriminants(v, es, rtol=scan_rtol, atol=atol)

    roots: list[tuple[float, str]] = []
    bracketed_cells: set[int] = set()
    bisect_lo: list[float] = []
    bisect_hi: list[float] = []
    bisect_flo: list[float] = []
    bisect_target: list[float] = []
    bisect_kind: list[str] = []
    for target, kind in ((2.0, TAG_EDGE_PERIODIC), (-2.0, TAG_EDGE_ANTIPERIODIC)):
        g = ds - target
        cells = np.nonzero(g[:-1] * g[1:] < 0.0)[0]
        bracketed_cells.update(int(i) for i in cells)
        for i in cells:
            bisect_lo.append(es[i])
            bisect_hi.append(es[i + 1])
            bisect_flo.append(g[i])
            bisect_target.append(target)
            bisect_kind.append(kind)
        exact = np.nonzero(g == 0.0)[0]
        roots.extend((float(es[i]), kind) for i in exact)

    # Interior extrema: candidates for closed gaps (D tangent to +-2) or for
    # a root pair that slipped between scan points.
    touching: list[float] = []
    slopes = np.diff(ds)
    for i in range(1, n_scan):
        if slopes[i - 1] * slopes[i] > 0.0:
            continue
        maximize = slopes[i - 1] > 0.0 or (slopes[i - 1] == 0.0 and slopes[i] < 0.0)
        target = 2.0 if maximize else -2.0
        kind = TAG_EDGE_PERIODIC if maximize else TAG_EDGE_ANTIPERIODIC
        # Only interesting when the extremum sits near the relevant target.
        if abs(ds[i] - target) > 0.05:
            continue
        e_ext, d_ext = _refine_extremum(
            v, es[i - 1], es[i], es[i + 1], ds[i - 1], ds[i], ds[i + 1],
            maximize, rtol=rtol, atol=atol,
        )
        overshoot = (d_ext - target) if maximize else (target - d_ext)
        if abs(d_ext - target) <= edge_tol:
            touching.append(e_ext)
        elif overshoot > 0.0 and not ({i - 1, i} & bracketed_cells):
            # genuine pair of roots hiding inside two scan cells
            for lo, hi in ((es[i - 1], e_ext), (e_ext, es[i + 1])):
                g_lo = discriminant(v, lo, rtol=rtol, atol=atol) - target
                g_hi = discriminant(v, hi, rtol=rtol, atol=atol) - target
                if g_lo * g_hi < 0.0:
                    bisect_lo.append(lo)
                    bisect_hi.append(hi)
                    bisect_flo.append(g_lo)
                    bisect_target.append(target)
                    bisect_kind.append(kind)

    if bisect_lo:
        refined = _bisect_roots(
            v, bisect_lo, bisect_hi, bisect_flo, bisect_target,
            iters=refine_iters, rtol=rtol, atol=atol, scan_rtol=scan_rtol,
        )
        roots.extend((float(r), k) for r, k in zip(refined, bisect_kind))

    roots.sort(key=lambda rk: rk[0])
    # collapse duplicates from adjacent brackets
    deduped: list[tuple[float, str]] = []
    for e, kind in roots:
        if deduped and abs(e - deduped[-1][0]) < 1e-8 and kind == deduped[-1][1]:
            continue
        deduped.append((e, kind))

    edges = tuple(e for e, _ in deduped)
    kinds = tuple(k for _, k in deduped)
    bands: list[tuple[float, float]] = []
    gaps: list[tuple[float, float]] = []
    for j in range(0, len(edges), 2):
        if j + 1 < len(edges):
            bands.append((edges[j], edges[j + 1]))
        else:
            bands.append((edges[j], float(e_max)))
    for j in range(1, len(edges) - 1, 2):
        gaps.append((edges[j], edges[j + 1]))
    return BandStructure(
        edges=edges,
        kinds=kinds,
        bands=tuple(bands),
        gaps=tuple(gaps),
        touching=tuple(sorted(touching)),
        window=(float(e_min), float(e_max)),
    )


def write_discriminant_csv(stream, v, energies, edge_tol: float = EDGE_TOL, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Emit an E, D(E), class_tag sweep as CSV (12 significant digits)."""
    energies = np.asarray(energies, dtype=float)
    ds = discriminants(v, energies, rtol=rtol, atol=atol)
    stream.write("E,D,class_tag\n")
    for e, d in zip(energies, ds):
        tag = classify_discriminant(float(d), edge_tol).tag
        stream.write(f"{e:.12g},{d:.12g},{tag}\n")
