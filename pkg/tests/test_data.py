import numpy as np
import pytest

from mpadmm.data import (GroundTruth, Hyperparams, PartialMatrix, SideInfo,
                         generate_synthetic, load_dense_csv, load_partial,
                         load_side_info, save_dense_csv, save_partial,
                         save_side_info)
from mpadmm.exceptions import ParameterError, ParseError


class TestPartialMatrix:
    def test_basic_and_dense(self):
        pm = PartialMatrix(n=2, m=3, rows=[0, 1], cols=[2, 0],
                           values=[1.5, -2.0])
        A = pm.to_dense_zero_filled()
        assert A[0, 2] == 1.5 and A[1, 0] == -2.0 and A[0, 0] == 0.0
        assert pm.mask().sum() == 2
        assert pm.nnz == 2

    def test_validation(self):
        with pytest.raises(ParameterError):
            PartialMatrix(n=2, m=2, rows=[2], cols=[0], values=[1.0])
        with pytest.raises(ParameterError):
            PartialMatrix(n=2, m=2, rows=[0, 0], cols=[1, 1],
                          values=[1.0, 2.0])
        with pytest.raises(ParameterError):
            PartialMatrix(n=2, m=2, rows=[0], cols=[0], values=[np.nan])


class TestHyperparams:
    def test_defaults(self):
        hp = Hyperparams(k=3)
        assert hp.rho1 == 10.0 and hp.rho2 == 10.0
        assert hp.max_iters == 20 and hp.eps == 1e-6
        assert hp.lam == 1.0 and hp.gamma == 1.0

    @pytest.mark.parametrize("kwargs", [
        dict(k=0), dict(k=2, lam=-1.0), dict(k=2, gamma=0.0),
        dict(k=2, rho1=0.0), dict(k=2, rho2=-1.0), dict(k=2, eps=0.0),
        dict(k=2, max_iters=0), dict(k=2, threads=0),
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ParameterError):
            Hyperparams(**kwargs)


class TestGenerateSynthetic:
    def test_nothing_hidden(self):
        pm, si, gt = generate_synthetic(6, 5, 2, 3, 0.0, 0.5, seed=0)
        assert pm.nnz == 30

    def test_noiseless_side_info(self):
        pm, si, gt = generate_synthetic(8, 6, 2, 3, 0.3, 0.0, seed=1)
        assert np.max(np.abs(si.Y - gt.A_true @ gt.beta)) < 1e-12

    def test_hidden_count(self):
        pm, _, _ = generate_synthetic(10, 8, 2, 2, 0.9, 1.0, seed=2)
        assert pm.nnz == 80 - int(0.9 * 80) == 8

    def test_partition_identity(self):
        n, m, frac = 9, 7, 0.37
        pm, _, _ = generate_synthetic(n, m, 2, 2, frac, 1.0, seed=3)
        assert pm.nnz + int(frac * n * m) == n * m

    def test_deterministic(self):
        a = generate_synthetic(7, 5, 2, 3, 0.4, 1.5, seed=11)
        b = generate_synthetic(7, 5, 2, 3, 0.4, 1.5, seed=11)
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[0].rows, b[0].rows)
        assert np.array_equal(a[1].Y, b[1].Y)
        assert np.array_equal(a[2].A_true, b[2].A_true)

    def test_ground_truth_rank(self):
        _, _, gt = generate_synthetic(12, 9, 3, 2, 0.5, 1.0, seed=4)
        s = np.linalg.svd(gt.A_true, compute_uv=False)
        assert np.sum(s > 1e-8) == 3

    def test_exact_solution_when_fully_observed(self):
        pm, si, gt = generate_synthetic(6, 5, 2, 3, 0.0, 0.0, seed=5)
        X = gt.A_true
        fit = np.sum((X[pm.rows, pm.cols] - pm.values) ** 2)
        alpha = np.linalg.pinv(X) @ si.Y
        assert fit == 0.0
        assert np.linalg.norm(si.Y - X @ alpha) < 1e-8

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            generate_synthetic(5, 5, 5, 2, 0.5, 1.0, seed=0)
        with pytest.raises(ParameterError):
            generate_synthetic(5, 5, 2, 2, 1.0, 1.0, seed=0)
        with pytest.raises(ParameterError):
            generate_synthetic(5, 5, 2, 2, 0.5, -1.0, seed=0)


class TestPartialIO:
    def test_minimal_file(self, tmp_path):
        p = tmp_path / "pm.txt"
        p.write_text("2 2 1\n1 2 3.5\n")
        pm = load_partial(p)
        assert (pm.n, pm.m, pm.nnz) == (2, 2, 1)
        assert pm.rows[0] == 0 and pm.cols[0] == 1 and pm.values[0] == 3.5

    def test_empty_omega(self, tmp_path):
        p = tmp_path / "pm.txt"
        p.write_text("3 4 0\n")
        pm = load_partial(p)
        assert (pm.n, pm.m, pm.nnz) == (3, 4, 0)

    def test_round_trip_random(self, tmp_path):
        pm, _, _ = generate_synthetic(50, 40, 3, 2, 0.6, 1.0, seed=9)
        p = tmp_path / "pm.txt"
        save_partial(pm, p)
        back = load_partial(p)
        assert back.n == pm.n and back.m == pm.m
        assert np.array_equal(back.rows, pm.rows)
        assert np.array_equal(back.cols, pm.cols)
        assert np.array_equal(back.values, pm.values)  # bit-identical

    @pytest.mark.parametrize("text,line", [
        ("", 1),
        ("2 2\n", 1),
        ("2 2 1\n1 2\n", 2),
        ("2 2 1\n1 2 abc\n", 2),
        ("2 2 1\n3 1 1.0\n", 2),
        ("2 2 2\n1 1 1.0\n", 3),
    ])
    def test_parse_errors_carry_line(self, tmp_path, text, line):
        p = tmp_path / "bad.txt"
        p.write_text(text)
        with pytest.raises(ParseError) as exc:
            load_partial(p)
        assert exc.value.line == line

    def test_duplicate_index_rejected(self, tmp_path):
        p = tmp_path / "dup.txt"
        p.write_text("2 2 2\n1 1 1.0\n1 1 2.0\n")
        with pytest.raises(ParseError):
            load_partial(p)


class TestSideInfoIO:
    def test_one_by_one(self, tmp_path):
        p = tmp_path / "y.csv"
        p.write_text("2.0\n")
        si = load_side_info(p, 1, 1)
        assert si.Y[0, 0] == 2.0

    def test_identity(self, tmp_path):
        p = tmp_path / "y.csv"
        p.write_text("1,0\n0,1\n")
        si = load_side_info(p, 2, 2)
        assert np.array_equal(si.Y, np.eye(2))

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        si = SideInfo(Y=rng.standard_normal((30, 5)))
        p = tmp_path / "y.csv"
        save_side_info(si, p)
        back = load_side_info(p, 30, 5)
        assert np.array_equal(back.Y, si.Y)

    def test_shape_mismatch(self, tmp_path):
        p = tmp_path / "y.csv"
        p.write_text("1,2\n3,4\n")
        with pytest.raises(ParseError):
            load_side_info(p, 3, 2)

    def test_ragged_csv(self, tmp_path):
        p = tmp_path / "y.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(ParseError):
            load_dense_csv(p)

    def test_dense_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        M = rng.standard_normal((4, 6))
        p = tmp_path / "m.csv"
        save_dense_csv(M, p)
        assert np.array_equal(load_dense_csv(p), M)
