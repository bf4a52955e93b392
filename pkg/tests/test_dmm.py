"""Flow-field tests: hand-evaluated cases and structural invariants."""

import numpy as np
import pytest

from memperc import dmm
from memperc.instances import Assignment, CdcParams, evaluate, generate_cdc, parse_dimacs

# the worked clause (y1 OR not-y2 OR y3) at v = (0.5, 0.5, -0.2):
# literal terms (1 - q v) = (0.5, 1.5, 1.2)
WORKED = parse_dimacs("p cnf 3 1\n1 -2 3 0\n")


def worked_state(x_s=0.5, x_l=1.0):
    return dmm.DmmState(np.array([0.5, 0.5, -0.2]),
                        np.array([x_s]), np.array([x_l]))


def random_state(f, rng, params):
    return dmm.DmmState(
        rng.uniform(-1, 1, f.n_vars),
        rng.uniform(0, 1, f.n_clauses),
        rng.uniform(1, params.xl_cap(f.n_clauses), f.n_clauses),
    )


class TestClauseValue:
    def test_worked_example(self):
        assert dmm.clause_value(worked_state(), WORKED, 0) == pytest.approx(0.25)

    def test_all_satisfied_rails(self):
        s = dmm.DmmState(np.array([1.0, -1.0, 1.0]), np.array([0.5]), np.array([1.0]))
        assert dmm.clause_value(s, WORKED, 0) == 0.0

    def test_all_opposing_rails(self):
        s = dmm.DmmState(np.array([-1.0, 1.0, -1.0]), np.array([0.5]), np.array([1.0]))
        assert dmm.clause_value(s, WORKED, 0) == 1.0

    def test_vectorized_matches_scalar(self):
        f, _ = generate_cdc(CdcParams(n_vars=20, ratio=5.0, seed=2))
        rng = np.random.default_rng(0)
        st = random_state(f, rng, dmm.DmmParams())
        all_c = dmm.clause_values(st, f)
        for m in range(f.n_clauses):
            assert all_c[m] == pytest.approx(dmm.clause_value(st, f, m))


class TestSemanticEquivalence:
    def test_all_sign_patterns(self):
        # C_m < 1/2 iff the clause is satisfied under v > 0 <-> TRUE, for
        # every sign pattern and non-zero voltages
        rng = np.random.default_rng(42)
        for pattern in range(8):
            signs = np.array([[1 if pattern >> k & 1 else -1 for k in range(3)]],
                             dtype=np.int8)
            f = dmm.Formula(3, np.array([[0, 1, 2]], dtype=np.int32), signs)
            for _ in range(200):
                v = rng.uniform(-1, 1, 3)
                v[v == 0.0] = 0.5
                st = dmm.DmmState(v, np.array([0.5]), np.array([1.0]))
                sat = evaluate(f, dmm.assignment_from_voltages(st)) == 0
                assert (dmm.clause_value(st, f, 0) < 0.5) == sat


class TestGradientTerm:
    def test_worked_example(self):
        # slot 0: half of min(1.5, 1.2)
        assert dmm.gradient_term(worked_state(), WORKED, 0, 0) == pytest.approx(0.6)
        assert dmm.gradient_term(worked_state(), WORKED, 0, 1) == pytest.approx(-0.25)
        assert dmm.gradient_term(worked_state(), WORKED, 0, 2) == pytest.approx(0.25)

    def test_zero_when_others_satisfied(self):
        s = dmm.DmmState(np.array([0.1, -1.0, 1.0]), np.array([0.5]), np.array([1.0]))
        assert dmm.gradient_term(s, WORKED, 0, 0) == 0.0

    def test_carries_literal_sign(self):
        st = worked_state()
        for slot in range(3):
            g = dmm.gradient_term(st, WORKED, 0, slot)
            if g != 0.0:
                assert np.sign(g) == WORKED.signs[0, slot]


class TestRigidityTerm:
    def test_worked_example(self):
        assert dmm.rigidity_term(worked_state(), WORKED, 0, 0) == pytest.approx(0.25)
        assert dmm.rigidity_term(worked_state(), WORKED, 0, 1) == 0.0
        assert dmm.rigidity_term(worked_state(), WORKED, 0, 2) == 0.0

    def test_zero_at_satisfied_rail(self):
        s = dmm.DmmState(np.array([1.0, 0.5, -0.2]), np.array([0.5]), np.array([1.0]))
        # slot 0 attains the minimum (term 0) and sits at its rail
        assert dmm.rigidity_term(s, WORKED, 0, 0) == 0.0

    def test_exactly_one_active_slot(self):
        f, _ = generate_cdc(CdcParams(n_vars=15, ratio=6.0, seed=4))
        rng = np.random.default_rng(1)
        params = dmm.DmmParams()
        for _ in range(20):
            st = random_state(f, rng, params)
            for m in range(f.n_clauses):
                active = [s for s in range(3)
                          if dmm.rigidity_term(st, f, m, s) != 0.0]
                assert len(active) <= 1
                total = sum(abs(dmm.rigidity_term(st, f, m, s)) for s in range(3))
                assert total <= 1.0

    def test_tie_goes_to_lowest_slot(self):
        # all three terms equal: only slot 0 active
        s = dmm.DmmState(np.array([0.5, -0.5, 0.5]), np.array([0.5]), np.array([1.0]))
        terms = 1.0 - WORKED.signs[0] * s.v[WORKED.var_idx[0]]
        assert np.all(terms == terms[0])
        assert dmm.rigidity_term(s, WORKED, 0, 0) != 0.0
        assert dmm.rigidity_term(s, WORKED, 0, 1) == 0.0
        assert dmm.rigidity_term(s, WORKED, 0, 2) == 0.0


class TestFlow:
    def test_single_clause_hand_computed(self):
        # weights: w_grad = x_l x_s = 1.0; w_rig = (1 + 0.1*2)(1 - 0.5) = 0.6
        st = worked_state(x_s=0.5, x_l=2.0)
        d = dmm.flow(st, WORKED, dmm.DmmParams())
        assert d.dv[0] == pytest.approx(1.0 * 0.6 + 0.6 * 0.25)   # 0.75
        assert d.dv[1] == pytest.approx(1.0 * -0.25)
        assert d.dv[2] == pytest.approx(1.0 * 0.25)
        assert d.dx_s[0] == pytest.approx(20.0 * 0.501 * (0.25 - 0.25))
        assert d.dx_l[0] == pytest.approx(5.0 * (0.25 - 0.05))

    def test_satisfied_fixed_configuration(self):
        # planted solution on the rails, short-term memory at the floor:
        # every C_m = 0, x_l decays at alpha*delta, dv is rigidity-only = 0
        f, planted = generate_cdc(CdcParams(n_vars=30, ratio=8.0, seed=9))
        params = dmm.DmmParams()
        v = np.where(planted.values, 1.0, -1.0)
        st = dmm.DmmState(v, np.zeros(f.n_clauses), np.ones(f.n_clauses))
        assert np.all(dmm.clause_values(st, f) == 0.0)
        d = dmm.flow(st, f, params)
        assert np.allclose(d.dx_l, -params.alpha * params.delta)
        assert np.all(d.dx_l < 0)
        # rigidity pins the minimum literal at its rail: q - v = 0 there
        assert np.allclose(d.dv, 0.0)

    def test_rigidity_pushes_toward_rails(self):
        f, planted = generate_cdc(CdcParams(n_vars=30, ratio=8.0, seed=9))
        v = np.where(planted.values, 0.95, -0.95)
        st = dmm.DmmState(v, np.zeros(f.n_clauses), np.ones(f.n_clauses))
        d = dmm.flow(st, f, dmm.DmmParams())
        assert np.all(d.dv * np.sign(v) >= 0)

    def test_full_short_term_memory_kills_rigidity(self):
        f, _ = generate_cdc(CdcParams(n_vars=20, ratio=6.0, seed=5))
        rng = np.random.default_rng(7)
        params = dmm.DmmParams()
        v = rng.uniform(-1, 1, f.n_vars)
        x_l = rng.uniform(1, 10, f.n_clauses)
        st = dmm.DmmState(v, np.ones(f.n_clauses), x_l)
        d = dmm.flow(st, f, params)
        # with x_s = 1 only the gradient term survives: recompute it directly
        expected = np.zeros(f.n_vars)
        for m in range(f.n_clauses):
            for slot in range(3):
                expected[f.var_idx[m, slot]] += (
                    x_l[m] * 1.0 * dmm.gradient_term(st, f, m, slot))
        assert np.allclose(d.dv, expected, atol=1e-12)

    def test_pure_and_deterministic(self):
        f, _ = generate_cdc(CdcParams(n_vars=25, ratio=6.0, seed=6))
        rng = np.random.default_rng(3)
        st = random_state(f, rng, dmm.DmmParams())
        d1 = dmm.flow(st, f, dmm.DmmParams())
        d2 = dmm.flow(st, f, dmm.DmmParams())
        assert np.array_equal(d1.dv, d2.dv)
        assert np.array_equal(d1.dx_s, d2.dx_s)
        assert np.array_equal(d1.dx_l, d2.dx_l)

    def test_out_of_bounds_rejected(self):
        st = worked_state()
        st.v[0] = 1.5
        with pytest.raises(ValueError, match="voltage"):
            dmm.flow(st, WORKED, dmm.DmmParams())

    def test_derivative_bounds(self):
        f, _ = generate_cdc(CdcParams(n_vars=40, ratio=8.0, seed=12))
        params = dmm.DmmParams()
        cap = params.xl_cap(f.n_clauses)
        deg = np.bincount(f.var_idx.ravel(), minlength=f.n_vars)
        rng = np.random.default_rng(100)
        for _ in range(10):
            st = random_state(f, rng, params)
            d = dmm.flow(st, f, params)
            assert np.all(np.isfinite(d.dv))
            assert np.all(np.abs(d.dx_l) <=
                          params.alpha * max(1 - params.delta, params.delta) + 1e-12)
            assert np.all(np.abs(d.dx_s) <=
                          params.beta * (1 + params.epsilon)
                          * max(1 - params.gamma, params.gamma) + 1e-9)
            bound = deg * (cap + (1 + params.zeta * cap))
            assert np.all(np.abs(d.dv) <= bound + 1e-6)


class TestClamp:
    def test_projection(self):
        params = dmm.DmmParams()
        st = dmm.DmmState(np.array([1.2, -3.0, 0.5]),
                          np.array([1.4, -0.1]), np.array([0.5, 1e12]))
        out = dmm.clamp(st, params)
        assert np.array_equal(out.v, [1.0, -1.0, 0.5])
        assert np.array_equal(out.x_s, [1.0, 0.0])
        assert out.x_l[0] == 1.0
        assert out.x_l[1] == params.xl_cap(2)

    def test_idempotent_and_fixes_in_bounds(self):
        rng = np.random.default_rng(5)
        params = dmm.DmmParams()
        st = dmm.DmmState(rng.uniform(-2, 2, 10), rng.uniform(-1, 2, 6),
                          rng.uniform(-5, 1e9, 6))
        once = dmm.clamp(st, params)
        twice = dmm.clamp(once, params)
        assert np.array_equal(once.v, twice.v)
        assert np.array_equal(once.x_s, twice.x_s)
        assert np.array_equal(once.x_l, twice.x_l)
        inb = dmm.DmmState(rng.uniform(-1, 1, 4), rng.uniform(0, 1, 3),
                           rng.uniform(1, 100, 3))
        out = dmm.clamp(inb, params)
        assert np.array_equal(out.v, inb.v)


class TestReadout:
    def test_sign_mapping(self):
        st = dmm.DmmState(np.array([0.3, -0.7]), np.array([0.5]), np.array([1.0]))
        a = dmm.assignment_from_voltages(st)
        assert list(a.values) == [True, False]

    def test_zero_maps_to_false(self):
        st = dmm.DmmState(np.array([0.0, 0.2]), np.array([0.5]), np.array([1.0]))
        assert list(dmm.assignment_from_voltages(st).values) == [False, True]

    def test_octant_consistency(self):
        # over all 8 sign patterns x all 8 voltage octants: boolean
        # satisfaction iff C < 1/2
        for pattern in range(8):
            signs = np.array([[1 if pattern >> k & 1 else -1 for k in range(3)]],
                             dtype=np.int8)
            f = dmm.Formula(3, np.array([[0, 1, 2]], dtype=np.int32), signs)
            for octant in range(8):
                v = np.array([0.5 if octant >> k & 1 else -0.5 for k in range(3)])
                st = dmm.DmmState(v, np.array([0.5]), np.array([1.0]))
                sat = evaluate(f, dmm.assignment_from_voltages(st)) == 0
                assert (dmm.clause_value(st, f, 0) < 0.5) == sat

    def test_is_solved(self):
        f, planted = generate_cdc(CdcParams(n_vars=20, ratio=6.0, seed=1))
        v = np.where(planted.values, 1.0, -1.0)
        st = dmm.DmmState(v, np.full(f.n_clauses, 0.5), np.ones(f.n_clauses))
        assert dmm.is_solved(st, f)
        st2 = dmm.DmmState(-v, np.full(f.n_clauses, 0.5), np.ones(f.n_clauses))
        if evaluate(f, Assignment(~planted.values)) > 0:
            assert not dmm.is_solved(st2, f)

    def test_is_solved_matches_clause_values(self):
        f, _ = generate_cdc(CdcParams(n_vars=20, ratio=6.0, seed=2))
        rng = np.random.default_rng(8)
        for _ in range(50):
            v = rng.uniform(-1, 1, f.n_vars)
            v[v == 0.0] = 0.1
            st = dmm.DmmState(v, np.full(f.n_clauses, 0.5), np.ones(f.n_clauses))
            assert dmm.is_solved(st, f) == bool(
                np.all(dmm.clause_values(st, f) < 0.5))


class TestParams:
    def test_defaults(self):
        p = dmm.DmmParams()
        assert (p.alpha, p.beta, p.gamma, p.delta, p.epsilon, p.zeta) == (
            5.0, 20.0, 0.25, 0.05, 1e-3, 0.1)
        assert p.xl_cap(800) == 8e6

    def test_validation(self):
        with pytest.raises(ValueError):
            dmm.DmmParams(alpha=-1.0)
        with pytest.raises(ValueError):
            dmm.DmmParams(gamma=0.04)  # must exceed delta
        with pytest.raises(ValueError):
            dmm.DmmParams(epsilon=0.5)


class TestFlatInterface:
    def test_pack_unpack_round_trip(self):
        f, _ = generate_cdc(CdcParams(n_vars=12, ratio=5.0, seed=3))
        rng = np.random.default_rng(2)
        st = random_state(f, rng, dmm.DmmParams())
        x = dmm.pack(st)
        back = dmm.unpack(x, f.n_vars, f.n_clauses)
        assert np.array_equal(back.v, st.v)
        assert np.array_equal(back.x_s, st.x_s)
        assert np.array_equal(back.x_l, st.x_l)

    def test_flow_field_matches_flow(self):
        f, _ = generate_cdc(CdcParams(n_vars=12, ratio=5.0, seed=3))
        params = dmm.DmmParams()
        rng = np.random.default_rng(2)
        st = random_state(f, rng, params)
        d = dmm.flow(st, f, params)
        flat = dmm.flow_field(f, params)(dmm.pack(st))
        assert np.array_equal(flat, np.concatenate([d.dv, d.dx_s, d.dx_l]))

    def test_solved_field_matches_is_solved(self):
        f, planted = generate_cdc(CdcParams(n_vars=12, ratio=5.0, seed=3))
        v = np.where(planted.values, 0.8, -0.8)
        st = dmm.DmmState(v, np.full(f.n_clauses, 0.5), np.ones(f.n_clauses))
        assert dmm.solved_field(f)(dmm.pack(st)) == dmm.is_solved(st, f)
