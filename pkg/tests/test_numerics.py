"""Linear solver and simplex: contract examples, duality, round-trips."""

import numpy as np
import pytest

from cptmdp.errors import SingularMatrixError
from cptmdp.numerics import LinearProgram, LinearSystem, solve_linear, solve_lp


class TestSolveLinear:
    def test_identity(self):
        b = np.array([3.0, -1.0, 2.5])
        x = solve_linear(LinearSystem(matrix=np.eye(3), rhs=b))
        assert np.allclose(x, b)

    def test_diagonal(self):
        x = solve_linear(LinearSystem(matrix=np.array([[2.0, 0.0], [0.0, 4.0]]),
                                      rhs=np.array([2.0, 8.0])))
        assert np.allclose(x, [1.0, 2.0])

    def test_random_residual(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.normal(size=(20, 20)) + 20.0 * np.eye(20)
            b = rng.normal(size=20)
            x = solve_linear(LinearSystem(matrix=a, rhs=b))
            assert np.max(np.abs(a @ x - b)) <= 1e-8 * (1.0 + np.max(np.abs(b)))

    def test_singular_rejected(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrixError):
            solve_linear(LinearSystem(matrix=a, rhs=np.array([1.0, 2.0])))

    def test_spd_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            m = rng.normal(size=(8, 8))
            a = m @ m.T + 8.0 * np.eye(8)
            x_true = rng.normal(size=8)
            x = solve_linear(LinearSystem(matrix=a, rhs=a @ x_true))
            assert np.allclose(x, x_true, atol=1e-7)


class TestSolveLp:
    def test_simple_bounded(self):
        lp = LinearProgram(objective=np.array([1.0]))
        lp.add_row(np.array([1.0]), "<=", 3.0)
        sol = solve_lp(lp)
        assert sol.optimal
        assert sol.value == pytest.approx(3.0, abs=1e-9)

    def test_unbounded(self):
        lp = LinearProgram(objective=np.array([1.0]))
        sol = solve_lp(lp)
        assert sol.status == "unbounded"

    def test_infeasible(self):
        lp = LinearProgram(objective=np.array([0.0]))
        lp.add_row(np.array([1.0]), "<=", 1.0)
        lp.add_row(np.array([1.0]), ">=", 2.0)
        assert solve_lp(lp).status == "infeasible"

    def test_equality_and_negative_rhs(self):
        lp = LinearProgram(objective=np.array([1.0, 2.0]))
        lp.add_row(np.array([1.0, 1.0]), "=", 1.0)
        lp.add_row(np.array([-1.0, -1.0]), "<=", -1.0)  # redundant, negative rhs
        sol = solve_lp(lp)
        assert sol.optimal
        assert sol.value == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(sol.x, [0.0, 1.0], atol=1e-9)

    def test_free_and_upper_bounded_variables(self):
        lp = LinearProgram(objective=np.array([1.0, -1.0]),
                           bounds=[(float("-inf"), 4.0), (1.0, None)])
        lp.add_row(np.array([1.0, 1.0]), "<=", 5.0)
        sol = solve_lp(lp)
        assert sol.optimal
        # x0 pushed to its upper bound 4, x1 at its lower bound 1
        assert np.allclose(sol.x, [4.0, 1.0], atol=1e-9)

    def test_reachability_example(self, running_example, identity_params):
        # P[eventually s1] from s0 under the safe action is 0.95
        from cptmdp.mc import absorption_probabilities
        from cptmdp.model import Model, ModelKind
        model, _ = running_example
        chain = Model(kind=ModelKind.MC, states=("s0", "s1", "s2"), initial="s0",
                      actions={"s0": ("a1",), "s1": ("loop",), "s2": ("loop",)},
                      transitions={"s0": {"a1": {"s1": 0.95, "s2": 0.05}},
                                   "s1": {"loop": {"s1": 1.0}},
                                   "s2": {"loop": {"s2": 1.0}}})
        probs = absorption_probabilities(chain, [("s1",), ("s2",)])
        assert probs[0] == pytest.approx(0.95, abs=1e-9)

    def test_duality_random(self):
        # bounded feasible primal: max c.x s.t. Ax <= b, 0 <= x <= u
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 5))
            a = rng.uniform(-1.0, 2.0, size=(m, n))
            b = rng.uniform(0.5, 3.0, size=m)
            c = rng.uniform(-1.0, 2.0, size=n)
            u = rng.uniform(0.5, 2.0, size=n)
            primal = LinearProgram(objective=c)
            for i in range(m):
                primal.add_row(a[i], "<=", float(b[i]))
            for j in range(n):
                row = np.zeros(n)
                row[j] = 1.0
                primal.add_row(row, "<=", float(u[j]))
            psol = solve_lp(primal)
            assert psol.optimal
            # dual: min b.y + u.w s.t. A^T y + w >= c, y, w >= 0
            a_full = np.vstack([a, np.eye(n)])
            b_full = np.concatenate([b, u])
            dual = LinearProgram(objective=-b_full)
            for j in range(n):
                dual.add_row(a_full[:, j], ">=", float(c[j]))
            dsol = solve_lp(dual)
            assert dsol.optimal
            assert psol.value == pytest.approx(-dsol.value, abs=1e-6)

    def test_determinism(self):
        rng = np.random.default_rng(6)
        a = rng.uniform(-1.0, 2.0, size=(4, 6))
        b = rng.uniform(0.5, 3.0, size=4)
        c = rng.uniform(-1.0, 2.0, size=6)

        def solve_once():
            lp = LinearProgram(objective=c.copy())
            for i in range(4):
                lp.add_row(a[i].copy(), "<=", float(b[i]))
            for j in range(6):
                row = np.zeros(6)
                row[j] = 1.0
                lp.add_row(row, "<=", 1.0)
            return solve_lp(lp)

        s1, s2 = solve_once(), solve_once()
        assert s1.value == s2.value
        assert np.array_equal(s1.x, s2.x)
