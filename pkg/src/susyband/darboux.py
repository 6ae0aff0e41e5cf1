"""First- and second-order Darboux (SUSY) transforms of periodic potentials.

Order one uses a nodeless seed u at factorization energy eps:

    alpha = u'/u,   V~ = 2 eps - V + 2 alpha^2,   psi~_eps ~ 1/u.

Order two uses a pair of seeds u1, u2 at eps1 != eps2 whose Wronskian
W = u1 u2' - u1' u2 is zero-free (the seeds themselves may have nodes):

    beta = -W'/W,   V~ = V + 2 beta',   psi~_eps1 ~ u2/W,  psi~_eps2 ~ u1/W.

Every derivative that enters a partner potential comes from the
Schrodinger equation or the Wronskian identity W' = (eps1 - eps2) u1 u2,
never from differencing integrated data, so the partner inherits the
integrator's accuracy.  Finite differences appear only in diagnostics,
where an independent route is the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfluentTransformError,
    SeedConsistencyError,
    SingularTransformError,
)
from .numdiff import BOUNDARY_CELLS, derivative, second_derivative
from .potentials import Potential, TabulatedPotential
from .seeds import (
    KIND_GENERAL,
    RICCATI_GATE,
    SeedSolution,
)

__all__ = [
    "KernelState",
    "TransformResult",
    "susy1",
    "susy2",
    "kernel_states",
    "factorization_residual",
    "apply_intertwiner",
    "write_transform_csv",
]


@dataclass(frozen=True)
class KernelState:
    """A partner eigenfunction annihilated by B, sampled on the window grid."""

    epsilon: float
    psi: np.ndarray
    l2_estimate: float
    normalizable: bool
    decay_rate: float | None
    expected_decay_rate: float | None


@dataclass(frozen=True)
class TransformResult:
    """A partner potential with its intertwining data and diagnostics."""

    order: int
    initial: Potential
    partner: Potential
    x: np.ndarray
    v_values: np.ndarray
    partner_values: np.ndarray
    intertwiner: np.ndarray  # alpha (order 1) or beta (order 2) on the grid
    gamma: np.ndarray | None
    kernel: tuple[KernelState, ...]
    seeds: tuple[SeedSolution, ...]
    periodic: bool
    diagnostics: dict


def _decay_rate(x, psi, period):
    """Fitted e-folding rate of |psi| toward the window ends.

    Uses per-period peak magnitudes (insensitive to the oscillation inside
    each cell).  Only the outermost cell pair on each flank enters the fit:
    the defect peak can sit off-center and its subleading corrections decay
    slowly, so inner ratios are systematically biased toward zero.
    """
    n = len(x) - 1
    spp = int(round(n * period / (x[-1] - x[0])))
    cells = n // spp
    peaks = np.array(
        [np.max(np.abs(psi[c * spp : (c + 1) * spp + 1])) for c in range(cells)]
    )
    peaks = np.maximum(peaks, 1e-300)
    c_star = int(np.argmax(peaks))
    rates = []
    if c_star >= 3:
        rates.append(math.log(peaks[1] / peaks[0]))
    if c_star <= cells - 4:
        rates.append(math.log(peaks[cells - 2] / peaks[cells - 1]))
    if not rates:
        return None
    return float(np.mean(rates)) / period


def _kernel_state(x, psi_raw, epsilon, seed_exponents, denom_exponents, period):
    """Normalize a kernel-state sample and settle its normalizability.

    The flag follows the multiplier bookkeeping: psi~ = numerator / denominator
    decays at an end iff the denominator's dominant growth strictly exceeds
    the numerator's there.
    """
    scale = np.max(np.abs(psi_raw))
    psi = psi_raw / scale if scale > 0 else psi_raw
    num_plus, num_minus = seed_exponents
    den_plus, den_minus = denom_exponents
    rate_plus = den_plus - num_plus
    rate_minus = den_minus - num_minus
    normalizable = rate_plus > 1e-12 and rate_minus > 1e-12
    h = x[1] - x[0]
    l2 = float(np.sqrt(np.sum(psi * psi) * h))
    decay = _decay_rate(x, psi, period) if normalizable else None
    expected = 0.5 * (rate_plus + rate_minus) if normalizable else None
    return KernelState(
        epsilon=float(epsilon),
        psi=psi,
        l2_estimate=l2,
        normalizable=bool(normalizable),
        decay_rate=decay,
        expected_decay_rate=expected,
    )


def _grid_params(seed: SeedSolution):
    n = len(seed.x) - 1
    spp = int(round(n * seed.period / (seed.x[-1] - seed.x[0])))
    return n // spp, spp


def _one_period_values(branches, period, spp, fn):
    """Evaluate fn(u_vec, up_vec, x) on a single-period grid [0, T]."""
    xs = np.linspace(0.0, period, spp + 1)
    us = []
    ups = []
    for coeff, branch in branches:
        bu, bup = branch.evaluate(xs)
        us.append(coeff * bu)
        ups.append(coeff * bup)
    u = np.sum(us, axis=0)
    up = np.sum(ups, axis=0)
    return xs, fn(u, up, xs)


def _asymptotic_period_residual(x, values, period):
    """max |V~(x + T) - V~(x)| over the outermost period at each window end."""
    n = len(x) - 1
    spp = int(round(n * period / (x[-1] - x[0])))
    if n < 3 * spp:
        return math.nan
    left = np.max(np.abs(values[spp : 2 * spp] - values[:spp]))
    right = np.max(np.abs(values[-spp:] - values[-2 * spp : -spp]))
    return float(max(left, right))


def _check_riccati(seed: SeedSolution, gate: float):
    if seed.riccati_residual > gate:
        raise SeedConsistencyError(
            f"seed at epsilon = {seed.epsilon:.6g} fails its Riccati gate",
            seed.riccati_residual,
        )


def susy1(
    v: Potential,
    seed: SeedSolution,
    *,
    riccati_gate: float = RICCATI_GATE,
) -> TransformResult:
    """First-order transform from a nodeless seed.

    The partner is V~ = 2 eps - V + 2 alpha^2 (the Riccati equation folds
    the alpha' of the log-derivative form back into known quantities).
    Bloch seeds give a strictly periodic partner, emitted as a one-period
    table; general seeds give an asymptotically periodic window whose tail
    is the partner of the dominant growing Bloch branch.
    """
    if seed.nodes:
        raise SingularTransformError(
            f"seed at epsilon = {seed.epsilon:.6g} has nodes in the window",
            seed.nodes,
        )
    _check_riccati(seed, riccati_gate)

    x = seed.x
    eps = seed.epsilon
    period = seed.period
    _, spp = _grid_params(seed)
    v_values = np.asarray(v(x), dtype=float)
    alpha = seed.u_prime / seed.u
    partner_values = 2.0 * eps - v_values + 2.0 * alpha * alpha

    def partner_fn(u, up, xs):
        a = up / u
        return 2.0 * eps - np.asarray(v(xs), dtype=float) + 2.0 * a * a

    periodic = seed.kind != KIND_GENERAL
    diagnostics = {
        "min_abs_u": float(np.min(np.abs(seed.u))),
        "riccati_residual": seed.riccati_residual,
        "asymptotic_period_residual": _asymptotic_period_residual(
            x, partner_values, period
        ),
    }
    if periodic:
        xs1, vals1 = _one_period_values(seed.branches, period, spp, partner_fn)
        diagnostics["periodic_closure_mismatch"] = float(abs(vals1[-1] - vals1[0]))
        partner = TabulatedPotential(0.0, xs1[1] - xs1[0], vals1, period)
    else:
        # tail from the growing Bloch branch alone: the mixture converges to
        # it pointwise at +infinity (no displacement needed)
        grow = max(seed.branches, key=lambda cb: cb[1].growth_rate)
        xs1, vals1 = _one_period_values([(1.0, grow[1])], period, spp, partner_fn)
        tail = TabulatedPotential(0.0, xs1[1] - xs1[0], vals1, period)
        diagnostics["tail_mismatch_plus"] = float(
            np.max(np.abs(partner_values[-spp:] - tail(x[-spp:])))
        )
        diagnostics["tail_mismatch_minus"] = float(
            np.max(np.abs(partner_values[:spp] - tail(x[:spp])))
        )
        partner = TabulatedPotential(
            x[0], x[1] - x[0], partner_values, period, tail=tail
        )

    psi_raw = 1.0 / seed.u
    denom_exponents = seed.growth_exponents
    kernel = _kernel_state(
        x, psi_raw, eps, (0.0, 0.0), denom_exponents, period
    )
    return TransformResult(
        order=1,
        initial=v,
        partner=partner,
        x=x,
        v_values=v_values,
        partner_values=partner_values,
        intertwiner=alpha,
        gamma=None,
        kernel=(kernel,),
        seeds=(seed,),
        periodic=periodic,
        diagnostics=diagnostics,
    )


def _wronskian_parts(s1: SeedSolution, s2: SeedSolution):
    w = s1.u * s2.u_prime - s1.u_prime * s2.u
    wp = (s1.epsilon - s2.epsilon) * s1.u * s2.u
    return w, wp


def _wronskian_exponents(s1: SeedSolution, s2: SeedSolution):
    """Dominant growth of W toward each end, from the branch bookkeeping.

    W is bilinear in the branches; the cross Wronskians of two branches at
    different rates all grow like the product of the branch growths, so the
    dominant exponent at an end is the max over contributing pairs of the
    sum of branch exponents there.
    """
    plus = -math.inf
    minus = -math.inf
    for c1, b1 in s1.branches:
        if c1 == 0.0:
            continue
        for c2, b2 in s2.branches:
            if c2 == 0.0:
                continue
            total = b1.growth_rate + b2.growth_rate
            plus = max(plus, total)
            minus = max(minus, -total)
    return plus, minus


def susy2(
    v: Potential,
    seed1: SeedSolution,
    seed2: SeedSolution,
    *,
    riccati_gate: float = RICCATI_GATE,
) -> TransformResult:
    """Second-order transform from two seeds with a zero-free Wronskian.

    Everything is closed-form in the sampled seeds:

        W' = (eps1 - eps2) u1 u2
        beta = -W'/W
        beta' = -(eps1-eps2) [ (u1' u2 + u1 u2') W - (eps1-eps2) u1^2 u2^2 ] / W^2
        gamma = beta^2/2 - beta'/2 - V + (eps1+eps2)/2
    """
    if seed1.epsilon == seed2.epsilon:
        raise ConfluentTransformError(
            "second-order transform needs distinct factorization energies"
        )
    if len(seed1.x) != len(seed2.x) or abs(seed1.x[0] - seed2.x[0]) > 1e-12:
        raise ValueError("seeds must share the same window grid")
    _check_riccati(seed1, riccati_gate)
    _check_riccati(seed2, riccati_gate)

    x = seed1.x
    period = seed1.period
    cells, spp = _grid_params(seed1)
    de = seed1.epsilon - seed2.epsilon
    w, wp = _wronskian_parts(seed1, seed2)

    # zero-freeness against a per-period local scale
    local = np.empty_like(w)
    for c in range(cells):
        seg = slice(c * spp, (c + 1) * spp + 1)
        local[seg] = np.max(np.abs(w[seg]))
    sign_flips = np.nonzero(w[:-1] * w[1:] < 0.0)[0]
    if sign_flips.size or np.any(np.abs(w) < 1e-12 * local):
        zeros = [0.5 * (x[i] + x[i + 1]) for i in sign_flips]
        raise SingularTransformError(
            "Wronskian vanishes inside the window", zeros
        )

    v_values = np.asarray(v(x), dtype=float)
    beta = -wp / w
    cross = seed1.u_prime * seed2.u + seed1.u * seed2.u_prime
    beta_prime = -de * (cross * w - de * (seed1.u * seed2.u) ** 2) / (w * w)
    partner_values = v_values + 2.0 * beta_prime
    gamma = 0.5 * beta * beta - 0.5 * beta_prime - v_values + 0.5 * (
        seed1.epsilon + seed2.epsilon
    )

    periodic = seed1.kind != KIND_GENERAL and seed2.kind != KIND_GENERAL

    def partner_from_branches(branches1, branches2, xs):
        u1s = np.zeros_like(xs)
        up1s = np.zeros_like(xs)
        u2s = np.zeros_like(xs)
        up2s = np.zeros_like(xs)
        for c, b in branches1:
            bu, bup = b.evaluate(xs)
            u1s += c * bu
            up1s += c * bup
        for c, b in branches2:
            bu, bup = b.evaluate(xs)
            u2s += c * bu
            up2s += c * bup
        ws = u1s * up2s - up1s * u2s
        crosses = up1s * u2s + u1s * up2s
        bps = -de * (crosses * ws - de * (u1s * u2s) ** 2) / (ws * ws)
        return np.asarray(v(xs), dtype=float) + 2.0 * bps

    # independent-route diagnostics
    h = x[1] - x[0]
    wp_fd = derivative(w, h)
    interior = slice(BOUNDARY_CELLS, -BOUNDARY_CELLS)
    wp_scale = np.max(np.abs(wp))
    wprime_identity = float(
        np.max(np.abs(wp_fd[interior] - wp[interior])) / wp_scale
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha1 = seed1.u_prime / seed1.u
        alpha2 = seed2.u_prime / seed2.u
        dalpha = alpha1 - alpha2
        beta_from_alpha = np.where(np.abs(dalpha) > 1e-6, de / dalpha, np.nan)
    mask = np.isfinite(beta_from_alpha)
    beta_consistency = float(np.max(np.abs(beta_from_alpha[mask] - beta[mask])))

    diagnostics = {
        "min_abs_w": float(np.min(np.abs(w) / local)),
        "wprime_identity_residual": wprime_identity,
        "beta_consistency_residual": beta_consistency,
        "asymptotic_period_residual": _asymptotic_period_residual(
            x, partner_values, period
        ),
    }

    xs1 = np.linspace(0.0, period, spp + 1)
    if periodic:
        vals1 = partner_from_branches(seed1.branches, seed2.branches, xs1)
        diagnostics["periodic_closure_mismatch"] = float(abs(vals1[-1] - vals1[0]))
        partner = TabulatedPotential(0.0, xs1[1] - xs1[0], vals1, period)
    else:
        grow1 = max(seed1.branches, key=lambda cb: cb[1].growth_rate)
        grow2 = max(seed2.branches, key=lambda cb: cb[1].growth_rate)
        vals1 = partner_from_branches([(1.0, grow1[1])], [(1.0, grow2[1])], xs1)
        tail = TabulatedPotential(0.0, xs1[1] - xs1[0], vals1, period)
        diagnostics["tail_mismatch_plus"] = float(
            np.max(np.abs(partner_values[-spp:] - tail(x[-spp:])))
        )
        diagnostics["tail_mismatch_minus"] = float(
            np.max(np.abs(partner_values[:spp] - tail(x[:spp])))
        )
        partner = TabulatedPotential(
            x[0], x[1] - x[0], partner_values, period, tail=tail
        )

    w_exponents = _wronskian_exponents(seed1, seed2)
    kernel = (
        _kernel_state(
            x, seed2.u / w, seed1.epsilon, seed2.growth_exponents, w_exponents, period
        ),
        _kernel_state(
            x, seed1.u / w, seed2.epsilon, seed1.growth_exponents, w_exponents, period
        ),
    )
    return TransformResult(
        order=2,
        initial=v,
        partner=partner,
        x=x,
        v_values=v_values,
        partner_values=partner_values,
        intertwiner=beta,
        gamma=gamma,
        kernel=kernel,
        seeds=(seed1, seed2),
        periodic=periodic,
        diagnostics=diagnostics,
    )


def kernel_states(result: TransformResult) -> tuple[KernelState, ...]:
    """The partner eigenfunctions living in the kernel of B."""
    return result.kernel


def _default_test_functions(x):
    period_scale = 0.1 * (x[-1] - x[0])
    centers = (0.0, 0.35 * x[-1])
    return [np.exp(-(((x - c) / period_scale) ** 2)) for c in centers]


def factorization_residual(
    v: Potential, result: TransformResult, test_functions=None
) -> float:
    """Operator-level factorization check on smooth test functions.

    Order 1: compares B B^dag + eps against H and B^dag B + eps against the
    partner Hamiltonian, applying the first-order factors as two separate
    finite-difference passes.  Order 2: compares B^dag B against
    (H~ - eps1)(H~ - eps2).  All derivatives are high-order finite
    differences on the sample grid, which makes this an independent route
    through the data rather than an algebraic identity.
    """
    x = result.x
    h = x[1] - x[0]
    fs = test_functions if test_functions is not None else _default_test_functions(x)
    interior = slice(8, -8)
    worst = 0.0
    v_vals = result.v_values
    vt_vals = result.partner_values
    if result.order == 1:
        alpha = result.intertwiner
        eps = result.seeds[0].epsilon
        for f in fs:
            f = np.asarray(f, dtype=float)
            norm = np.max(np.abs(f))
            bdag_f = -derivative(f, h) + alpha * f
            bbdag_f = derivative(bdag_f, h) + alpha * bdag_f
            r1 = (bbdag_f + eps * f) - (-second_derivative(f, h) + v_vals * f)
            b_f = derivative(f, h) + alpha * f
            bdagb_f = -derivative(b_f, h) + alpha * b_f
            r2 = (bdagb_f + eps * f) - (-second_derivative(f, h) + vt_vals * f)
            worst = max(
                worst,
                float(np.max(np.abs(r1[interior]))) / norm,
                float(np.max(np.abs(r2[interior]))) / norm,
            )
        return worst
    beta = result.intertwiner
    gamma = result.gamma
    beta_prime = 0.5 * (vt_vals - v_vals)
    e1 = result.seeds[0].epsilon
    e2 = result.seeds[1].epsilon
    for f in fs:
        f = np.asarray(f, dtype=float)
        norm = np.max(np.abs(f))
        # B = (B^dag)^adjoint = d^2 - beta d + (gamma - beta')
        b_f = second_derivative(f, h) - beta * derivative(f, h) + (gamma - beta_prime) * f
        bdagb_f = (
            second_derivative(b_f, h) + beta * derivative(b_f, h) + gamma * b_f
        )
        g = -second_derivative(f, h) + (vt_vals - e2) * f
        target = -second_derivative(g, h) + (vt_vals - e1) * g
        r = bdagb_f - target
        worst = max(worst, float(np.max(np.abs(r[interior]))) / norm)
    return worst


def apply_intertwiner(result: TransformResult, seed: SeedSolution):
    """Push an eigenfunction of H through B^dag and check the partner equation.

    `seed` is any solution of the initial equation at its energy (typically
    a band-edge eigenfunction, not in the kernel).  The image is formed with
    closed-form derivatives; the residual
    max | -phi'' + (V~ - E) phi | / max |phi| uses finite differences for
    phi'', so it genuinely tests the intertwining property of the numbers.
    """
    x = result.x
    h = x[1] - x[0]
    energy = seed.epsilon
    u, up = seed.u, seed.u_prime
    if result.order == 1:
        alpha = result.intertwiner
        phi = -up + alpha * u
    else:
        beta = result.intertwiner
        gamma = result.gamma
        upp = (result.v_values - energy) * u
        phi = upp + beta * up + gamma * u
    scale = np.max(np.abs(phi))
    residual = -second_derivative(phi, h) + (result.partner_values - energy) * phi
    interior = slice(8, -8)
    return phi, float(np.max(np.abs(residual[interior])) / scale)


def write_transform_csv(stream, result: TransformResult):
    """CSV columns: x, V, V_partner, beta_or_alpha, psi_kernel_1, psi_kernel_2."""
    stream.write("x,V,V_partner,beta_or_alpha,psi_kernel_1,psi_kernel_2\n")
    k1 = result.kernel[0].psi if len(result.kernel) > 0 else None
    k2 = result.kernel[1].psi if len(result.kernel) > 1 else None
    for i, xi in enumerate(result.x):
        row = [
            f"{xi:.12g}",
            f"{result.v_values[i]:.12g}",
            f"{result.partner_values[i]:.12g}",
            f"{result.intertwiner[i]:.12g}",
            f"{k1[i]:.12g}" if k1 is not None else "",
            f"{k2[i]:.12g}" if k2 is not None else "",
        ]
        stream.write(",".join(row) + "\n")
