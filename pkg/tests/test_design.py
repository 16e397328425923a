import numpy as np
import pandas as pd
import pytest

from rhem import (
    InvalidInputError,
    LinearTerm,
    ModelSpec,
    RandomInterceptTerm,
    SmoothTerm,
    build_design,
)


def frame(n=50, seed=0, classes=None):
    rng = np.random.default_rng(seed)
    data = pd.DataFrame(
        {
            "y": rng.binomial(1, 0.4, n),
            "offset": np.zeros(n),
            "x": rng.uniform(0, 1, n),
            "z": rng.normal(size=n),
        }
    )
    if classes:
        data["class"] = rng.choice(classes, size=n)
    return data


class TestModelSpec:
    def test_duplicate_covariate_rejected(self):
        with pytest.raises(InvalidInputError):
            ModelSpec(terms=(LinearTerm("x"), SmoothTerm("x")))

    def test_unknown_family_rejected(self):
        with pytest.raises(InvalidInputError):
            ModelSpec(terms=(), family="gaussian")

    def test_num_basis_floor(self):
        with pytest.raises(InvalidInputError):
            SmoothTerm("x", num_basis=4, degree=3)

    def test_json_round_trip(self):
        spec = ModelSpec(
            terms=(LinearTerm("a"), SmoothTerm("b", 12, 3), RandomInterceptTerm("class")),
            family="censored_poisson",
            double_penalty=True,
            criterion="gcv",
        )
        assert ModelSpec.from_dict(spec.to_dict()) == spec


class TestBuildDesign:
    def test_intercept_only(self):
        d = build_design(frame(), ModelSpec(terms=()))
        assert d.X.shape[1] == 1
        assert (d.X == 1.0).all()
        assert d.penalty_blocks == [] and d.nullspace_blocks == []

    def test_smooth_drops_one_column(self):
        d = build_design(frame(), ModelSpec(terms=(SmoothTerm("x", 10, 3),)))
        smooth_cols = [t for t in d.terms if t.kind == "smooth"][0]
        assert smooth_cols.stop - smooth_cols.start == 9

    def test_centering_constraint_absorbed(self):
        d = build_design(frame(), ModelSpec(terms=(SmoothTerm("x", 10, 3),)))
        block = d.X[:, 1:]
        # every coefficient direction of the centered basis sums to zero
        assert np.abs(block.sum(axis=0)).max() < 1e-9

    def test_random_intercept_block(self):
        classes = [f"c{i}" for i in range(44)]
        f = frame(n=500, classes=classes)
        d = build_design(f, ModelSpec(terms=(RandomInterceptTerm("class"),)))
        block = [t for t in d.terms if t.kind == "random_intercept"][0]
        assert block.stop - block.start == 44
        pen = d.penalty_blocks[-1]
        assert pen.kind == "random"
        assert np.array_equal(pen.matrix, np.eye(44))

    def test_unknown_covariate(self):
        with pytest.raises(InvalidInputError):
            build_design(frame(), ModelSpec(terms=(LinearTerm("missing"),)))

    def test_double_penalty_adds_nullspace_blocks(self):
        spec = ModelSpec(terms=(SmoothTerm("x", 8, 3),), double_penalty=True)
        d = build_design(frame(), spec)
        assert len(d.penalty_blocks) == 1
        assert len(d.nullspace_blocks) == 1
        ns = d.nullspace_blocks[0].matrix
        # rank-1 projector: the centered penalty has a 1-dim null space
        assert np.linalg.matrix_rank(ns) == 1
        assert np.allclose(ns, ns.T)

    def test_penalty_total_embedding(self):
        spec = ModelSpec(terms=(SmoothTerm("x", 8, 3), RandomInterceptTerm("class")))
        f = frame(n=200, classes=["a", "b", "c"])
        d = build_design(f, spec)
        total = d.penalty_total([2.0, 3.0])
        assert total.shape == (d.n_params, d.n_params)
        assert np.allclose(total, total.T)
        assert np.allclose(total[0, :], 0.0)  # intercept unpenalized
        with pytest.raises(InvalidInputError):
            d.penalty_total([1.0])

    def test_matrix_for_reproduces_training_matrix(self):
        f = frame(n=80, classes=["a", "b"])
        spec = ModelSpec(
            terms=(LinearTerm("z"), SmoothTerm("x", 8, 3), RandomInterceptTerm("class"))
        )
        d = build_design(f, spec)
        again = d.matrix_for(f)
        assert np.allclose(d.X, again)

    def test_empty_panel_rejected(self):
        with pytest.raises(InvalidInputError):
            build_design(frame(n=50).iloc[:0], ModelSpec(terms=()))

    def test_no_intercept(self):
        d = build_design(frame(), ModelSpec(terms=(LinearTerm("x"),), include_intercept=False))
        assert d.column_names == ["x"]

    def test_matrix_for_rejects_unseen_group_level(self):
        f = frame(n=60, classes=["a", "b"])
        d = build_design(f, ModelSpec(terms=(RandomInterceptTerm("class"),)))
        new = f.head(3).copy()
        new["class"] = "zz"
        with pytest.raises(InvalidInputError):
            d.matrix_for(new)
