import io
import math

import numpy as np
import pytest

from susyband.elliptic import jacobi_sncndn
from susyband.floquet import (
    band_edges,
    classify,
    classify_discriminant,
    discriminant,
    discriminants,
    multipliers_from_discriminant,
    propagate,
    transfer_matrices,
    transfer_matrix,
    write_discriminant_csv,
)
from susyband.potentials import ConstantPotential, lame

FREE = ConstantPotential(0.0, period=2.0)


def free_matrix(energy, length):
    if energy > 0:
        k = math.sqrt(energy)
        return np.array(
            [
                [math.cos(k * length), math.sin(k * length) / k],
                [-k * math.sin(k * length), math.cos(k * length)],
            ]
        )
    if energy == 0:
        return np.array([[1.0, length], [0.0, 1.0]])
    k = math.sqrt(-energy)
    return np.array(
        [
            [math.cosh(k * length), math.sinh(k * length) / k],
            [k * math.sinh(k * length), math.cosh(k * length)],
        ]
    )


def test_free_particle_closed_form():
    for energy in (-3.0, 0.0, 0.5, 4.0, 17.3):
        tm = transfer_matrix(FREE, energy, 0.0, 2.0)
        exact = free_matrix(energy, 2.0)
        scale = max(1.0, float(np.max(np.abs(exact))))  # growing modes: relative
        assert np.max(np.abs(tm.matrix - exact)) / scale < 1e-9
        assert tm.det == pytest.approx(1.0, abs=1e-9)


def test_free_particle_discriminant_sweep():
    es = np.linspace(0.01, 25.0, 100)
    ds = discriminants(FREE, es)
    exact = 2.0 * np.cos(np.sqrt(es) * 2.0)
    assert np.max(np.abs(ds - exact)) < 1e-8


def lame1_edge_oracle():
    """Substitution oracle: dn, cn, sn solve -u'' + 2 m sn^2 u = eps u at
    eps = m, 1, 1+m.  Closed-form second derivatives via the standard
    differentiation rules; residuals must vanish to rounding."""
    m = 0.5
    xs = np.linspace(-3.0, 7.0, 257)
    sn, cn, dn = jacobi_sncndn(xs, m)
    v = 2.0 * m * sn * sn
    cases = {
        m: (dn, -m * dn * (cn * cn - sn * sn)),
        1.0: (cn, -cn * (dn * dn - m * sn * sn)),
        1.0 + m: (sn, -sn * (dn * dn + m * cn * cn)),
    }
    out = {}
    for eps, (u, upp) in cases.items():
        out[eps] = np.max(np.abs(-upp + v * u - eps * u))
    return out


def test_lame1_edge_substitution_oracle():
    residuals = lame1_edge_oracle()
    for eps, res in residuals.items():
        assert res < 1e-13, (eps, res)


def test_lame1_discriminant_at_derived_edges():
    v = lame(1, 0.5)
    assert discriminant(v, 0.5) == pytest.approx(2.0, abs=1e-8)
    assert discriminant(v, 1.0) == pytest.approx(-2.0, abs=1e-8)
    assert discriminant(v, 1.5) == pytest.approx(-2.0, abs=1e-8)
    assert abs(discriminant(v, 0.75)) < 2.0


def test_determinant_and_composition():
    v = lame(2, 0.5)
    period = v.period
    for energy in (-1.0, 0.7, 2.2, 6.5):
        whole = transfer_matrix(v, energy, 0.0, period)
        first = transfer_matrix(v, energy, 0.0, period / 2)
        second = transfer_matrix(v, energy, period / 2, period)
        assert whole.det == pytest.approx(1.0, abs=1e-9)
        composed = second.matrix @ first.matrix
        assert np.max(np.abs(composed - whole.matrix)) < 1e-8
        both = second @ first
        assert both.x0 == 0.0 and both.x1 == period


def test_propagate_interval_validation():
    with pytest.raises(ValueError):
        propagate(FREE, 1.0, 2.0, 1.0)


def test_stiff_region_reported_with_location():
    from susyband.errors import StiffIntegrationError
    from susyband.potentials import Potential

    class Broken(Potential):
        period = 2.0

        def __call__(self, x):
            # a non-evaluable patch forces the step controller to collapse
            if np.isscalar(x):
                return math.nan if 0.9 < x < 1.1 else 0.0
            return np.where((x > 0.9) & (x < 1.1), math.nan, 0.0)

    with pytest.raises(StiffIntegrationError) as err:
        transfer_matrix(Broken(), 1.0, 0.0, 2.0)
    assert 0.5 < err.value.x < 1.2


def test_propagate_trace_columns():
    v = lame(1, 0.5)
    tm, trace = propagate(v, 0.8, 0.0, v.period, samples=64)
    assert trace.shape == (65, 2, 2)
    assert np.max(np.abs(trace[-1] - tm.matrix)) < 1e-12
    assert np.max(np.abs(trace[0] - np.eye(2))) == 0.0
    # any initial data propagates through the recorded canonical columns
    init = np.array([0.3, -1.1])
    direct = transfer_matrix(v, 0.8, 0.0, v.period / 2).matrix @ init
    assert np.max(np.abs(trace[32] @ init - direct)) < 1e-8


def test_batched_matches_scalar():
    v = lame(2, 0.5)
    es = np.array([-0.5, 1.3, 4.2])
    ms = transfer_matrices(v, es, 0.0, v.period)
    for i, e in enumerate(es):
        tm = transfer_matrix(v, e, 0.0, v.period)
        scale = max(1.0, float(np.max(np.abs(tm.matrix))))
        assert np.max(np.abs(ms[i] - tm.matrix)) / scale < 1e-9


def test_classify_trichotomy():
    ec = classify_discriminant(0.0)
    assert ec.tag == "allowed_band"
    assert ec.multipliers[0] == pytest.approx(1j)
    assert abs(ec.multipliers[0]) == pytest.approx(1.0, abs=1e-12)

    ec = classify_discriminant(2.0)
    assert ec.tag == "band_edge_periodic"
    assert ec.multipliers == (1.0, 1.0)

    ec = classify_discriminant(-2.0)
    assert ec.tag == "band_edge_antiperiodic"

    ec = classify_discriminant(3.0)
    assert ec.tag == "gap"
    golden = (3.0 + math.sqrt(5.0)) / 2.0
    assert ec.multipliers[0] == pytest.approx(golden, abs=1e-12)
    assert ec.multipliers[0] * ec.multipliers[1] == pytest.approx(1.0, abs=1e-9)


def test_classify_on_potential():
    v = lame(1, 0.5)
    assert classify(v, 0.75).tag == "allowed_band"
    assert classify(v, 1.2).tag == "gap"
    b_plus, b_minus = classify(v, 1.2).multipliers
    assert b_plus * b_minus == pytest.approx(1.0, abs=1e-9)


def test_multiplier_product_random():
    rng = np.random.default_rng(2)
    for d in rng.uniform(-6, 6, 64):
        bp, bm = multipliers_from_discriminant(float(d))
        assert bp * bm == pytest.approx(1.0, abs=1e-9)


def test_band_edges_lame1():
    bs = band_edges(lame(1, 0.5), 0.0, 3.0)
    assert len(bs.edges) == 3
    for found, exact in zip(bs.edges, (0.5, 1.0, 1.5)):
        assert found == pytest.approx(exact, abs=1e-6)
    assert bs.kinds == (
        "band_edge_periodic",
        "band_edge_antiperiodic",
        "band_edge_antiperiodic",
    )
    assert bs.gaps == ((bs.edges[1], bs.edges[2]),)
    assert bs.bands[0] == (bs.edges[0], bs.edges[1])


def test_band_edges_counts(lame_bands):
    assert len(lame_bands(2).edges) == 5
    assert len(lame_bands(3).edges) == 7


def test_band_edge_interlacing(lame_bands):
    for n in (2, 3):
        bs = lame_bands(n)
        edges = bs.edges
        assert all(a < b for a, b in zip(edges, edges[1:]))
        # kind pattern p, a, a, p, p, a, a, ...
        expected = ["band_edge_periodic"]
        flavor = "band_edge_antiperiodic"
        while len(expected) < len(edges):
            expected.extend([flavor, flavor])
            flavor = (
                "band_edge_periodic"
                if flavor == "band_edge_antiperiodic"
                else "band_edge_antiperiodic"
            )
        assert list(bs.kinds) == expected[: len(edges)]


def test_free_particle_touching_bands():
    bs = band_edges(FREE, -0.5, 26.0)
    assert [round(e, 9) for e in bs.edges] == [0.0]
    expected = [(math.pi * k / 2.0) ** 2 for k in (1, 2, 3)]
    assert len(bs.touching) == 3
    for found, exact in zip(bs.touching, expected):
        assert found == pytest.approx(exact, abs=1e-5)


def test_gap_index(lame_bands):
    bs = lame_bands(2)
    assert bs.gap_index(0.4) == 0  # below the spectrum
    assert bs.gap_index(1.6) == 1
    assert bs.gap_index(4.6) == 2
    assert bs.gap_index(2.0) in (1,)  # still first gap
    assert bs.gap_index(1.3) is None  # inside the first band


def test_discriminant_decreases_through_first_edge():
    v = lame(1, 0.5)
    es = np.linspace(0.4, 0.6, 9)
    ds = discriminants(v, es)
    assert np.all(np.diff(ds) < 0.0)


def test_discriminant_csv_format():
    buf = io.StringIO()
    write_discriminant_csv(buf, FREE, np.linspace(0.1, 2.0, 5))
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "E,D,class_tag"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert float(first[0]) == pytest.approx(0.1)
    assert first[2] in {"allowed_band", "gap", "band_edge_periodic", "band_edge_antiperiodic"}
