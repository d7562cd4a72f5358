import numpy as np
import pytest

import gibbstriple as gt
from gibbstriple.errors import Inadmissible, NoConvergence, ShapeMismatch
from conftest import GOLDEN_RATIO, parry_mass

BERN_ENTROPY = -(0.3 * np.log(0.3) + 0.7 * np.log(0.7))


class TestTransferApply:
    def test_full_shift_zero_potential(self, full2):
        pot = gt.constant_potential(full2, 0.0)
        out = gt.transfer_apply(full2, pot, np.ones(2))
        assert np.allclose(out, 2.0, atol=0)

    def test_bernoulli_unit_function(self, full2, bernoulli_potential):
        out = gt.transfer_apply(full2, bernoulli_potential, np.ones(2))
        assert np.allclose(out, 1.0, atol=1e-15)

    def test_golden_counts_preimages(self, golden):
        pot = gt.constant_potential(golden, 0.0)
        out = gt.transfer_apply(golden, pot, np.ones(2))
        # value per word equals the in-degree of its first symbol
        indeg = golden.adjacency.sum(axis=0)
        assert np.allclose(out, [indeg[0], indeg[1]], atol=0)

    def test_shape_mismatch(self, full2, bernoulli_potential):
        with pytest.raises(ShapeMismatch):
            gt.transfer_apply(full2, bernoulli_potential, np.ones(3))

    def test_matches_brute_preimage_sum(self, golden):
        # independent oracle: sum exp(phi(v)) f(v) over r-words v with
        # v[1:] == w[:-1], enumerated directly
        rng = np.random.default_rng(1)
        pot = gt.make_potential(
            golden, 2,
            {w: v for w, v in zip(gt.enumerate_cylinders(golden, 2), rng.normal(size=3))},
        )
        words = gt.enumerate_cylinders(golden, 2)
        f = rng.normal(size=len(words))
        out = gt.transfer_apply(golden, pot, f)
        for i, w in enumerate(words):
            expected = sum(
                np.exp(pot.values[v]) * f[j]
                for j, v in enumerate(words)
                if v[1:] == w[:-1]
            )
            assert out[i] == pytest.approx(expected, abs=1e-14)


class TestSolveThermo:
    @pytest.mark.parametrize("l", [2, 3])
    def test_full_shift_maximal_entropy(self, l):
        spec = gt.build_subshift(l, np.ones((l, l), dtype=int))
        sol = gt.solve_thermo(spec, gt.constant_potential(spec, 0.0))
        assert sol.pressure == pytest.approx(np.log(l), abs=1e-12)
        assert sol.entropy == pytest.approx(np.log(l), abs=1e-12)
        assert np.allclose(sol.equilibrium_masses, 1.0 / l, atol=1e-13)

    def test_bernoulli_closed_form(self, bernoulli_solution):
        sol = bernoulli_solution
        assert abs(sol.pressure) < 1e-12
        assert sol.entropy == pytest.approx(BERN_ENTROPY, abs=1e-12)
        assert np.allclose(sol.equilibrium_masses, [0.3, 0.7], atol=1e-13)

    def test_golden_parry(self, golden_solution):
        sol = golden_solution
        assert sol.pressure == pytest.approx(np.log(GOLDEN_RATIO), abs=1e-10)
        assert sol.entropy == pytest.approx(sol.pressure, abs=1e-12)
        for word in [(1,), (2,), (1, 1), (1, 2), (2, 1), (1, 2, 1)]:
            assert sol.mass(word) == pytest.approx(
                parry_mass(sol.spec, word), abs=1e-11
            )

    def test_eigen_residuals(self, reference_solutions):
        for sol in reference_solutions.values():
            assert sol.residual < 1e-12
            assert (sol.eigenfunction > 0).all()
            assert sol.eigenmeasure.sum() == pytest.approx(1.0, abs=1e-14)
            assert float(sol.eigenfunction @ sol.eigenmeasure) == pytest.approx(1.0, abs=1e-12)

    def test_no_convergence(self, golden):
        with pytest.raises(NoConvergence):
            gt.solve_thermo(golden, gt.constant_potential(golden, 0.0), max_iter=2)

    def test_range_two_potential(self, golden):
        # a genuinely 2-range potential solves and keeps probability masses
        values = {w: -0.1 * sum(w) for w in gt.enumerate_cylinders(golden, 2)}
        sol = gt.solve_thermo(golden, gt.make_potential(golden, 2, values))
        assert sol.entropy > 0
        total = sum(sol.mass(w) for w in gt.enumerate_cylinders(golden, 2))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestCylinderMass:
    def test_empty_word(self, bernoulli_solution):
        assert gt.cylinder_mass(bernoulli_solution, ()) == 1.0

    def test_bernoulli_product(self, bernoulli_solution):
        assert gt.cylinder_mass(bernoulli_solution, (1, 2, 2)) == pytest.approx(
            0.3 * 0.7 * 0.7, abs=1e-15
        )
        deep = (1, 2, 1, 1, 2, 2, 2, 1)
        expected = np.prod([0.3 if s == 1 else 0.7 for s in deep])
        assert gt.cylinder_mass(bernoulli_solution, deep) == pytest.approx(expected, rel=1e-13)

    def test_inadmissible(self, golden_solution):
        with pytest.raises(Inadmissible):
            gt.cylinder_mass(golden_solution, (2, 2))

    @pytest.mark.parametrize("which", ["mu", "nu"])
    def test_children_sum_to_parent(self, reference_solutions, which):
        for sol in reference_solutions.values():
            for k in range(0, 6):
                for w in ([()] if k == 0 else gt.enumerate_cylinders(sol.spec, k)):
                    _, masses = sol.children_masses(w, which)
                    assert masses.sum() == pytest.approx(sol.mass(w, which), abs=1e-12)

    def test_stationarity(self, reference_solutions):
        # summing over admissible prepended symbols returns the word's mass
        for sol in reference_solutions.values():
            for k in range(1, 5):
                for w in gt.enumerate_cylinders(sol.spec, k):
                    total = sum(
                        sol.mass((a,) + w)
                        for a in sol.spec.symbols
                        if sol.spec.allows(a, w[0])
                    )
                    assert total == pytest.approx(sol.mass(w), abs=1e-10)


class TestNormalizePotential:
    def test_bernoulli_already_normalized(self, bernoulli_solution):
        ntp = gt.normalize_potential(bernoulli_solution)
        assert ntp.range == 2
        for w, v in ntp.values.items():
            expected = np.log(0.3 if w[0] == 1 else 0.7)
            assert v == pytest.approx(expected, abs=1e-13)
        assert bernoulli_solution.gamma == pytest.approx(np.log(0.3), abs=1e-13)
        assert bernoulli_solution.beta == pytest.approx(np.log(0.7) / 2, abs=1e-13)

    def test_full_shift_constant(self, uniform_solution):
        ntp = gt.normalize_potential(uniform_solution)
        assert all(v == pytest.approx(-np.log(2), abs=1e-13) for v in ntp.values.values())

    def test_golden_prepend_probabilities(self, golden_solution):
        # oracle: phi~(a.b) is the log ratio of Parry masses nu([a,b]) / nu([b])
        ntp = gt.normalize_potential(golden_solution)
        for (a, b), v in ntp.values.items():
            expected = np.log(
                parry_mass(golden_solution.spec, (a, b))
                / parry_mass(golden_solution.spec, (b,))
            )
            assert v == pytest.approx(expected, abs=1e-10)
        # forced transition (1,2) gives a zero value, so beta is 0, not < 0
        assert ntp.values[(1, 2)] == pytest.approx(0.0, abs=1e-12)
        assert golden_solution.beta == pytest.approx(0.0, abs=1e-12)

    def test_zero_pressure_and_unit_transfer(self, reference_solutions):
        for sol in reference_solutions.values():
            ntp = gt.normalize_potential(sol)
            n = len(gt.enumerate_cylinders(sol.spec, ntp.range))
            out = gt.transfer_apply(sol.spec, ntp, np.ones(n))
            assert np.allclose(out, 1.0, atol=1e-12)
            resolved = gt.solve_thermo(sol.spec, ntp)
            assert abs(resolved.pressure) < 1e-12

    def test_values_nonpositive(self, reference_solutions):
        for sol in reference_solutions.values():
            assert sol.phi_tilde_edge.max() <= 1e-12
            assert sol.gamma < 0


class TestGibbsConstant:
    def test_sandwich_to_depth_2r_plus_4(self, reference_solutions):
        for sol in reference_solutions.values():
            c = sol.gibbs_c
            assert c > 1.0
            r = sol.r
            for k in range(1, 2 * r + 5):
                for x in gt.enumerate_cylinders(sol.spec, k):
                    exts = [()] if r == 1 else [
                        e for e in gt.enumerate_cylinders(sol.spec, r - 1)
                        if gt.is_admissible(sol.spec, x + e)
                    ]
                    for e in exts:
                        s_k = sum(
                            sol.phi[sol.word_index[(x + e)[j: j + r]]] for j in range(k)
                        )
                        ratio = sol.mass(x, "mu") / np.exp(s_k - k * sol.pressure)
                        assert 1.0 / c <= ratio <= c

    def test_bernoulli_ratio_is_one(self, bernoulli_solution):
        # product measure: the sandwich ratio is exactly 1, c is the 10% floor
        assert bernoulli_solution.gibbs_c == pytest.approx(1.1, abs=1e-10)


class TestCohomology:
    def test_coboundary_leaves_equilibrium_masses(self, full2, bernoulli_potential):
        sol = gt.solve_thermo(full2, bernoulli_potential)
        # phi' = phi + g - g o sigma + const for a range-1 function g
        g = {1: 0.4, 2: -0.9}
        values = {}
        for (a, b) in gt.enumerate_cylinders(full2, 2):
            values[(a, b)] = bernoulli_potential.values[(a,)] + g[a] - g[b] + 0.25
        sol2 = gt.solve_thermo(full2, gt.make_potential(full2, 2, values))
        assert sol2.pressure == pytest.approx(sol.pressure + 0.25, abs=1e-12)
        for k in range(1, 7):
            for w in gt.enumerate_cylinders(full2, k):
                assert sol2.mass(w) == pytest.approx(sol.mass(w), abs=1e-8)

    def test_golden_constant_shift(self, golden, golden_solution):
        sol2 = gt.solve_thermo(golden, gt.constant_potential(golden, -1.5))
        assert sol2.pressure == pytest.approx(golden_solution.pressure - 1.5, abs=1e-12)
        for w in gt.enumerate_cylinders(golden, 5):
            assert sol2.mass(w) == pytest.approx(golden_solution.mass(w), abs=1e-10)


class TestEntropyDirectDefinition:
    def test_block_entropy_slope(self, reference_solutions):
        for sol in reference_solutions.values():
            ks = range(8, 15)
            h_blocks = []
            for k in ks:
                masses = np.array([sol.mass(w) for w in gt.enumerate_cylinders(sol.spec, k)])
                h_blocks.append(float(-(masses * np.log(masses)).sum()))
            slope = np.polyfit(list(ks), h_blocks, 1)[0]
            assert slope == pytest.approx(sol.entropy, rel=0.01)


class TestBirkhoffSum:
    def test_zero_terms(self, bernoulli_solution):
        assert gt.birkhoff_sum(bernoulli_solution, (1, 2), 0) == 0.0

    def test_bernoulli_direct(self, bernoulli_solution):
        assert gt.birkhoff_sum(bernoulli_solution, (1, 2), 2) == pytest.approx(
            np.log(0.3) + np.log(0.7), abs=1e-14
        )

    def test_constant_potential(self, full2):
        sol = gt.solve_thermo(full2, gt.constant_potential(full2, -0.75))
        for k in (1, 3, 6):
            assert gt.birkhoff_sum(sol, (1,), k) == pytest.approx(-0.75 * k, abs=1e-14)

    def test_periodic_extension_used(self, golden):
        values = {w: float(10 * w[0] + w[1]) for w in gt.enumerate_cylinders(golden, 2)}
        sol = gt.solve_thermo(
            golden, gt.make_potential(golden, 2, {w: np.log(v) / 10 for w, v in values.items()})
        )
        # word (1,2), k=2 needs 3 symbols: periodic extension is (1,2,1)
        expected = sol.phi[sol.word_index[(1, 2)]] + sol.phi[sol.word_index[(2, 1)]]
        assert gt.birkhoff_sum(sol, (1, 2), 2) == pytest.approx(expected, abs=1e-14)

    def test_inadmissible_periodic_extension(self, golden_solution):
        with pytest.raises(Inadmissible):
            gt.birkhoff_sum(golden_solution, (2,), 2)


class TestPressureFunction:
    def test_constant_zero_potential(self, full2):
        rows = gt.pressure_function(full2, gt.constant_potential(full2, 0.0), [-1.0, 0.0, 1.0])
        for row in rows:
            assert row["pressure"] == pytest.approx(np.log(2), abs=1e-12)
            assert row["dpressure"] == pytest.approx(0.0, abs=1e-12)

    def test_bernoulli_at_one(self, full2, bernoulli_potential):
        rows = gt.pressure_function(full2, bernoulli_potential, [0.9, 1.0, 1.1])
        mid = rows[1]
        assert mid["t"] == 1.0
        assert mid["pressure"] == pytest.approx(0.0, abs=1e-12)
        assert mid["dpressure"] == pytest.approx(-BERN_ENTROPY, abs=1e-12)

    def test_derivative_self_consistency(self, golden):
        values = {w: 0.3 * w[0] - 0.7 * w[-1] for w in gt.enumerate_cylinders(golden, 2)}
        pot = gt.make_potential(golden, 2, values)
        eps = 1e-4
        for t in (0.5, 1.0, 2.0):
            rows = gt.pressure_function(golden, pot, [t - eps, t, t + eps])
            fd = (rows[2]["pressure"] - rows[0]["pressure"]) / (2 * eps)
            assert fd == pytest.approx(rows[1]["dpressure"], abs=1e-6)

    def test_convexity_and_second_derivative(self, full2, bernoulli_potential):
        ts = np.linspace(-2.0, 2.0, 21)
        rows = gt.pressure_function(full2, bernoulli_potential, ts)
        interior = rows[1:-1]
        assert all(np.isfinite(r["d2pressure"]) for r in interior)
        assert all(r["d2pressure"] >= -1e-9 for r in interior)


class TestBirkhoffVariance:
    def test_bernoulli_iid_closed_form(self, bernoulli_solution):
        # independent summands: Var(S_k) = k * Var(phi)
        p = np.array([0.3, 0.7])
        logs = np.log(p)
        var_phi = float(p @ logs ** 2 - (p @ logs) ** 2)
        for k in (1, 3, 7):
            assert gt.birkhoff_variance(bernoulli_solution, k) == pytest.approx(
                k * var_phi, rel=1e-12
            )

    def test_ratio_matches_pressure_curvature(self, full2, bernoulli_potential):
        rows = gt.pressure_function(full2, bernoulli_potential, [0.99, 1.0, 1.01])
        sol = gt.solve_thermo(full2, bernoulli_potential)
        ratio = gt.birkhoff_variance(sol, 10) / 10
        assert ratio == pytest.approx(rows[1]["d2pressure"], rel=1e-4)

    def test_constant_potential_zero_variance(self, uniform_solution):
        assert gt.birkhoff_variance(uniform_solution, 5) == pytest.approx(0.0, abs=1e-24)


class TestRangeLift:
    def test_lifted_potential_gives_identical_masses(self, full2, bernoulli_potential):
        # phi'(a, b) := phi(a) is the same function with redundant range
        base = gt.solve_thermo(full2, bernoulli_potential)
        lifted_values = {
            (a, b): bernoulli_potential.values[(a,)]
            for (a, b) in gt.enumerate_cylinders(full2, 2)
        }
        lifted = gt.solve_thermo(full2, gt.make_potential(full2, 2, lifted_values))
        assert lifted.pressure == pytest.approx(base.pressure, abs=1e-13)
        assert lifted.entropy == pytest.approx(base.entropy, abs=1e-13)
        for k in range(1, 8):
            for w in gt.enumerate_cylinders(full2, k):
                assert lifted.mass(w) == pytest.approx(base.mass(w), abs=1e-13)
                assert lifted.mass(w, "mu") == pytest.approx(base.mass(w, "mu"), abs=1e-13)


class TestPotentialValidation:
    def test_missing_word(self, golden):
        with pytest.raises(ShapeMismatch):
            gt.make_potential(golden, 2, {(1, 1): 0.0, (1, 2): 0.0})

    def test_extra_word(self, golden):
        values = {w: 0.0 for w in gt.enumerate_cylinders(golden, 2)}
        values[(2, 2)] = 0.0
        with pytest.raises(ShapeMismatch):
            gt.make_potential(golden, 2, values)

    def test_non_finite_value(self, full2):
        with pytest.raises(ShapeMismatch):
            gt.make_potential(full2, 1, {(1,): np.nan, (2,): 0.0})
