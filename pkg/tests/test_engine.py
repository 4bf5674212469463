import io
import math

import numpy as np
import pytest

from ogawa_lab import (
    Integrand,
    LinearField,
    RngSpec,
    SamplePath,
    TimeGrid,
    TruncationStage,
    VectorField,
    build_ensemble_ledgers,
    build_ledger,
    component_trig_basis,
    conversion_gap,
    diagonal_entries,
    diagonal_entry,
    dump_ledgers_csv,
    haar_basis,
    identity_field_1d,
    ito_integral,
    mixed_trig_basis,
    ogawa_partial_sum,
    ogawa_partial_sum_inner,
    ogawa_partial_sum_stieltjes,
    piecewise_linear_basis,
    renormalization_term,
    renormalized_sum,
    sample_brownian,
    stratonovich_integral,
    wong_zakai_sum,
)


def constant_field(dim, c):
    vec = np.full(dim, float(c))
    return VectorField(
        dim,
        lambda x: np.broadcast_to(vec, x.shape).copy(),
        lambda x: np.zeros(x.shape[:-1] + (dim, dim)),
        constant_jacobian=True,
    )


def swirl_field():
    def alpha(x):
        return np.stack([np.sin(x[..., 1]), np.cos(x[..., 0])], axis=-1)

    def jac(x):
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 1] = np.cos(x[..., 1])
        out[..., 1, 0] = -np.sin(x[..., 0])
        return out

    return VectorField(2, alpha, jac)


class TestPartialSums:
    def test_zero_integrand(self):
        f = Integrand(1, lambda t, v: np.zeros_like(v))
        path = sample_brownian(TimeGrid(128), 1, RngSpec(0), 0)
        fam = haar_basis(1)
        for n in (1, 4, 16):
            assert ogawa_partial_sum(f, path, fam, n) == 0.0

    def test_drift_path_constant_basis(self):
        # coefficient 1, pairing int_0^1 t dt = 1/2, exactly
        grid = TimeGrid(2**10)
        path = SamplePath.from_function(grid, lambda t: t)
        g1 = ogawa_partial_sum(identity_field_1d(), path, component_trig_basis(1), 1)
        assert g1 == pytest.approx(0.5, abs=1e-14)

    @pytest.mark.parametrize(
        "family,n",
        [(haar_basis(1), 8), (component_trig_basis(1), 6)],
    )
    def test_routes_agree_to_roundoff(self, family, n):
        fld = identity_field_1d()
        rng = RngSpec(17)
        grid = TimeGrid(2**10)
        for i in range(5):
            path = sample_brownian(grid, 1, rng, i)
            a = ogawa_partial_sum(fld, path, family, n)
            b = ogawa_partial_sum_stieltjes(fld, path, family, n)
            c = ogawa_partial_sum_inner(fld, path, family, n)
            assert abs(a - b) <= 1e-10
            assert abs(a - c) <= 1e-10

    def test_routes_agree_d2(self):
        fld = LinearField(0.5, -0.25, 1.0, 0.75)
        path = sample_brownian(TimeGrid(2**10), 2, RngSpec(23), 0)
        fam = mixed_trig_basis()
        a = ogawa_partial_sum(fld, path, fam, 10)
        b = ogawa_partial_sum_stieltjes(fld, path, fam, 10)
        c = ogawa_partial_sum_inner(fld, path, fam, 10)
        assert abs(a - b) <= 1e-10
        assert abs(a - c) <= 1e-10


class TestRenormalizationTerm:
    def test_constant_field_vanishes(self):
        path = sample_brownian(TimeGrid(256), 2, RngSpec(2), 0)
        fam = component_trig_basis(2)
        for n in (1, 2, 10):
            assert renormalization_term(constant_field(2, 3.0), path, fam, n) == 0.0

    @pytest.mark.parametrize("level", [1, 2, 4, 8])
    def test_piecewise_linear_trace(self, level):
        fld = LinearField(0.9, 0.2, -0.4, 1.7)
        path = sample_brownian(TimeGrid(256), 2, RngSpec(3), 0)
        fam = piecewise_linear_basis(level, 2)
        r = renormalization_term(fld, path, fam, 2 * level)
        assert abs(r - fld.divergence_value / 2) <= 1e-10

    @pytest.mark.parametrize("n", [2, 5, 9, 32])
    def test_component_trig_trace(self, n):
        fld = LinearField(0.9, 0.2, -0.4, 1.7)
        path = sample_brownian(TimeGrid(2**10), 2, RngSpec(4), 0)
        r = renormalization_term(fld, path, component_trig_basis(2), n)
        assert abs(r - fld.divergence_value / 2) <= 1e-10

    def test_path_independent_for_linear(self):
        fld = LinearField(1.0, -2.0, 0.5, 0.25)
        grid = TimeGrid(512)
        rng = RngSpec(5)
        fam = mixed_trig_basis()
        values = [
            renormalization_term(fld, sample_brownian(grid, 2, rng, i), fam, 7)
            for i in range(20)
        ]
        assert max(values) - min(values) <= 1e-10


class TestDiagonalEntries:
    def test_mixed_trig_closed_forms(self):
        fld = LinearField(0.3, -1.1, 0.7, 0.5)
        path = SamplePath.zero(TimeGrid(2**12), 2)
        fam = mixed_trig_basis()
        curl = fld.curl_value
        for m in range(1, 9):
            signs = {1: 1, 2: -1, 3: -1, 4: 1}
            for slot, sign in signs.items():
                got = diagonal_entry(fld, path, fam.element((m, slot)))
                assert got == pytest.approx(sign * curl / (4 * m * np.pi), abs=1e-12)

    def test_prefix_sum_consistency(self):
        fld = LinearField(1.0, 0.5, -0.5, 2.0)
        path = sample_brownian(TimeGrid(512), 2, RngSpec(6), 0)
        fam = mixed_trig_basis()
        entries = diagonal_entries(fld, path, fam, 10)
        singles = [diagonal_entry(fld, path, el) for el in fam.elements(10)]
        assert np.allclose(entries, singles, atol=1e-14)
        assert renormalization_term(fld, path, fam, 10) == pytest.approx(
            float(np.sum(entries)), abs=1e-14
        )


class TestRenormalizedSum:
    def test_constant_field_telescopes(self):
        c = 2.5
        fld = constant_field(1, c)
        path = sample_brownian(TimeGrid(256), 1, RngSpec(7), 0)
        fam = haar_basis(1)
        for n in (1, 4, 16):
            h = renormalized_sum(fld, path, fam, n)
            assert h == pytest.approx(c * path.values[-1, 0], abs=1e-12)

    def test_drift_path_cancellation(self):
        # g_1 = 1/2 and r_1 = int_0^1 t dt = 1/2, so h_1 = 0 exactly
        grid = TimeGrid(2**10)
        path = SamplePath.from_function(grid, lambda t: t)
        h = renormalized_sum(identity_field_1d(), path, component_trig_basis(1), 1)
        assert abs(h) <= 1e-14

    def test_basis_independence_improves_with_n(self):
        fld = LinearField(1, 0, 0, 1)
        grid = TimeGrid(2**10)
        rng = RngSpec(8)
        psi = component_trig_basis(2)
        haar = haar_basis(2)
        sq_diffs = {4: [], 64: []}
        for i in range(200):
            path = sample_brownian(grid, 2, rng, i)
            for n in sq_diffs:
                d = renormalized_sum(fld, path, psi, n) - renormalized_sum(
                    fld, path, haar, n
                )
                sq_diffs[n].append(d * d)
        assert np.mean(sq_diffs[64]) < np.mean(sq_diffs[4])


class TestWongZakai:
    def test_constant_field_exact(self):
        c = -1.25
        fld = constant_field(1, c)
        path = sample_brownian(TimeGrid(256), 1, RngSpec(9), 0)
        gp = wong_zakai_sum(fld, path, piecewise_linear_basis(4, 1), 4)
        assert gp == pytest.approx(c * path.values[-1, 0], abs=1e-12)

    @pytest.mark.parametrize("level", [1, 2, 8, 32])
    def test_chain_rule_telescoping(self, level):
        fld = identity_field_1d()
        path = sample_brownian(TimeGrid(256), 1, RngSpec(10), 1)
        gp = wong_zakai_sum(fld, path, piecewise_linear_basis(level, 1), level)
        assert abs(gp - path.values[-1, 0] ** 2 / 2) <= 1e-10

    def test_haar_complete_prefix_telescopes(self):
        fld = identity_field_1d()
        path = sample_brownian(TimeGrid(256), 1, RngSpec(11), 0)
        gp = wong_zakai_sum(fld, path, haar_basis(1), 8)
        assert abs(gp - path.values[-1, 0] ** 2 / 2) <= 1e-10

    def test_projection_gap_shrinks(self):
        # E[(g_n - g'_n)^2] decreasing along n for the Haar basis
        fld = identity_field_1d()
        grid = TimeGrid(2**10)
        rng = RngSpec(12)
        fam = haar_basis(1)
        gaps = {4: [], 64: []}
        for i in range(200):
            path = sample_brownian(grid, 1, rng, i)
            for n in gaps:
                gap = ogawa_partial_sum(fld, path, fam, n) - wong_zakai_sum(
                    fld, path, fam, n
                )
                gaps[n].append(gap * gap)
        assert np.mean(gaps[64]) < np.mean(gaps[4])


class TestReferenceIntegrals:
    def test_ito_constant_field(self):
        c = 3.0
        path = sample_brownian(TimeGrid(128), 1, RngSpec(13), 0)
        assert ito_integral(constant_field(1, c), path) == pytest.approx(
            c * path.values[-1, 0], abs=1e-12
        )

    def test_ito_martingale_mean(self):
        grid = TimeGrid(256)
        rng = RngSpec(14)
        fld = identity_field_1d()
        vals = np.array(
            [ito_integral(fld, sample_brownian(grid, 1, rng, i)) for i in range(4000)]
        )
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean()) <= 3 * se

    def test_ito_smooth_path(self):
        grid = TimeGrid(2**10)
        path = SamplePath.from_function(grid, lambda t: t)
        got = ito_integral(identity_field_1d(), path)
        assert abs(got - 0.5) <= grid.dt

    def test_strat_smooth_path(self):
        grid = TimeGrid(2**10)
        path = SamplePath.from_function(grid, lambda t: t)
        got = stratonovich_integral(identity_field_1d(), path)
        assert got == pytest.approx(0.5, abs=1e-14)

    def test_strat_telescopes_for_identity(self):
        path = sample_brownian(TimeGrid(512), 1, RngSpec(15), 0)
        got = stratonovich_integral(identity_field_1d(), path)
        assert got == pytest.approx(path.values[-1, 0] ** 2 / 2, abs=1e-12)

    def test_conversion_formula_in_mean(self):
        fld = LinearField(1, 1, 1, 1)
        grid = TimeGrid(2**10)
        rng = RngSpec(16)
        gaps = np.array(
            [conversion_gap(fld, sample_brownian(grid, 2, rng, i)) for i in range(500)]
        )
        se = gaps.std(ddof=1) / math.sqrt(len(gaps))
        assert abs(gaps.mean()) <= 3 * se


class TestLedger:
    def test_identity_h_equals_g_minus_r(self):
        fld = LinearField(1, 0.25, -0.5, 1)
        path = sample_brownian(TimeGrid(512), 2, RngSpec(17), 0)
        stages = TruncationStage.for_schedule(component_trig_basis(2), (4, 16))
        led = build_ledger(fld, path, stages)
        assert np.array_equal(led.h, led.g - led.r)
        assert led.schedule == (4, 16)

    def test_csv_dump_format(self):
        fld = identity_field_1d()
        path = sample_brownian(TimeGrid(64), 1, RngSpec(18), 0)
        stages = TruncationStage.for_schedule(haar_basis(1), (2, 4))
        led = build_ledger(fld, path, stages)
        buf = io.StringIO()
        dump_ledgers_csv([led], buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "path_index,n,g,r,h,gprime,ito,strat"
        assert len(lines) == 3
        assert lines[1].startswith("0,2,")


class TestEnsembleMatchesReference:
    @pytest.mark.parametrize(
        "field,basis_name",
        [
            (LinearField(1, 0, 0, 1), "psi"),
            (LinearField(0.5, -1.0, 0.25, 2.0), "xi"),
            (None, "haar"),  # None -> swirl (non-constant Jacobian)
        ],
    )
    def test_vectorized_equals_per_path(self, field, basis_name):
        fld = field or swirl_field()
        grid = TimeGrid(256)
        rng = RngSpec(19)
        fam = {
            "psi": component_trig_basis(2),
            "xi": mixed_trig_basis(),
            "haar": haar_basis(2),
        }[basis_name]
        stages = TruncationStage.for_schedule(fam, (4, 12))
        ensemble = build_ensemble_ledgers(fld, [stages], grid, 7, rng, chunk_size=3)[0]
        for i in range(7):
            path = sample_brownian(grid, 2, rng, i)
            ref = build_ledger(fld, path, stages)
            got = ensemble.path_ledger(i)
            assert np.abs(got.g - ref.g).max() <= 1e-10
            assert np.abs(got.r - ref.r).max() <= 1e-10
            assert np.abs(got.gprime - ref.gprime).max() <= 1e-10
            assert got.ito == pytest.approx(ref.ito, abs=1e-10)
            assert got.strat == pytest.approx(ref.strat, abs=1e-10)

    def test_plin_stages(self):
        from ogawa_lab.bases import BALANCED

        fld = identity_field_1d()
        grid = TimeGrid(64)
        rng = RngSpec(20)
        stages = [
            TruncationStage(lv, piecewise_linear_basis(lv, 1), lv, BALANCED)
            for lv in (2, 8)
        ]
        ensemble = build_ensemble_ledgers(fld, [stages], grid, 5, rng, chunk_size=2)[0]
        for i in range(5):
            path = sample_brownian(grid, 1, rng, i)
            ref = build_ledger(fld, path, stages)
            got = ensemble.path_ledger(i)
            assert np.abs(got.g - ref.g).max() <= 1e-12
            assert np.abs(got.gprime - ref.gprime).max() <= 1e-12
