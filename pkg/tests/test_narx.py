import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mnarx import (
    PolynomialNarx,
    UniformSeries,
    assemble_design,
    enumerate_basis,
    load_model,
    save_model,
)
from mnarx.basis import BasisSpec
from mnarx.design import DesignMatrix
from mnarx.exceptions import (
    ChannelMissingError,
    DtMismatchError,
    LagOutOfRangeError,
    NumericBlowupError,
    UnderdeterminedError,
    ValidationError,
)


def make_series(values, name="y", dt=0.01):
    return UniformSeries(dt, 0.0, np.asarray(values, float), (name,))


def random_pair(n=500, seed=0):
    rng = np.random.default_rng(seed)
    x = make_series(rng.normal(size=n), "x")
    y = make_series(rng.normal(size=n), "y")
    return x, y


def test_exact_linear_recovery():
    # targets generated as y = 2*phi_1 - 3*phi_2 exactly
    rng = np.random.default_rng(1)
    rows = rng.normal(size=(200, 2))
    targets = 2.0 * rows[:, 0] - 3.0 * rows[:, 1]
    design = DesignMatrix(rows, targets,
                          np.column_stack([np.zeros(200, int), np.arange(200)]))
    model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)},
                           degree=1, standardize=False).fit_design(design)
    assert np.allclose(model.coefficients_, [2.0, -3.0], rtol=0, atol=1e-10)


def test_degree_two_recovery_from_forward_evaluator():
    # generate targets with an independent forward evaluator, then fit
    rng = np.random.default_rng(2)
    x, y = random_pair(seed=2)
    params = dict(ar_lags=(1, 2), exo_lags={"x": (0, 1)},
                  degree=2, interaction=2, standardize=False)
    layout = PolynomialNarx(**params)._resolved_layout()
    design = assemble_design([(x, y)], layout)
    exps = enumerate_basis(BasisSpec(4, 2, 2))
    truth = rng.normal(size=exps.shape[0])
    targets = np.array([
        sum(c * np.prod(row ** alpha) for c, alpha in zip(truth, exps))
        for row in design.rows
    ])
    design = DesignMatrix(design.rows, targets, design.provenance)
    model = PolynomialNarx(**params).fit_design(design)
    assert np.allclose(model.coefficients_, truth, rtol=1e-8, atol=1e-10)


def test_underdetermined_raises():
    rng = np.random.default_rng(3)
    rows = rng.normal(size=(3, 2))
    design = DesignMatrix(rows, rng.normal(size=3),
                          np.column_stack([np.zeros(3, int), np.arange(3)]))
    with pytest.raises(UnderdeterminedError):
        PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)},
                       degree=2, interaction=2).fit_design(design)


def test_rank_deficient_flag_and_minimum_norm():
    # duplicated column makes the basis rank deficient
    rng = np.random.default_rng(4)
    col = rng.normal(size=80)
    rows = np.column_stack([col, col])
    targets = 3.0 * col
    design = DesignMatrix(rows, targets,
                          np.column_stack([np.zeros(80, int), np.arange(80)]))
    with pytest.warns(UserWarning, match="rank-deficient"):
        model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)},
                               degree=1, standardize=False).fit_design(design)
    assert model.fit_report_["rank_deficient"]
    assert model.fit_report_["rank"] == 1
    # minimum-norm solution splits the weight across the duplicates
    assert np.allclose(model.coefficients_, [1.5, 1.5], atol=1e-10)


def test_normal_equation_residual_is_orthogonal():
    x, y = random_pair(seed=5)
    model = PolynomialNarx(ar_lags=(1, 2, 3), exo_lags={"x": (0, 1)},
                           degree=2, interaction=2).fit([(x, y)])
    layout = model.layout_
    design = assemble_design([(x, y)], layout)
    from mnarx.basis import eval_monomials

    z = (design.rows - model.scaler_mean_) / model.scaler_scale_
    psi = eval_monomials(model.exponents_, z)
    resid = (design.targets - model.target_shift_) - psi @ model.coefficients_
    grad = psi.T @ resid
    scale = np.linalg.norm(psi, axis=0) * np.linalg.norm(resid) + 1e-30
    assert np.max(np.abs(grad) / scale) < 1e-8


def test_fit_report_contents():
    x, y = random_pair(seed=6)
    model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)}).fit([(x, y)])
    report = model.fit_report_
    assert report["n_rows"] == 499
    assert report["n_coefficients"] == 2
    # solved system includes the internal intercept that accompanies
    # standardization
    assert report["rank"] == 3 and not report["rank_deficient"]
    assert report["condition"] >= 1.0
    assert report["residual_rms"] > 0
    assert model.dt_ == 0.01 and model.output_name_ == "y"


def test_one_step_trivial_cases():
    zero = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)}, degree=1,
                          standardize=False)
    rng = np.random.default_rng(7)
    rows = rng.normal(size=(10, 2))
    design = DesignMatrix(rows, np.zeros(10),
                          np.column_stack([np.zeros(10, int), np.arange(10)]))
    zero.fit_design(design)
    assert np.allclose(zero.coefficients_, 0.0, atol=1e-12)
    assert zero.predict_one_step(np.array([4.2, -1.0])) == pytest.approx(0.0, abs=1e-12)

    # single constant-term model returns its coefficient everywhere
    const = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)}, degree=1,
                           include_constant=True, standardize=False)
    design5 = DesignMatrix(rows, np.full(10, 5.0),
                           np.column_stack([np.zeros(10, int), np.arange(10)]))
    const.fit_design(design5)
    for phi in ([0.0, 0.0], [17.0, -3.0]):
        assert const.predict_one_step(np.array(phi)) == pytest.approx(5.0, abs=1e-9)


def test_one_step_matches_target_minus_residual():
    x, y = random_pair(seed=8)
    model = PolynomialNarx(ar_lags=(1, 2), exo_lags={"x": (0,)}).fit([(x, y)])
    design = assemble_design([(x, y)], model.layout_)
    from mnarx.basis import eval_monomials

    z = (design.rows - model.scaler_mean_) / model.scaler_scale_
    residuals = (design.targets - model.target_shift_) \
        - eval_monomials(model.exponents_, z) @ model.coefficients_
    k = 17
    pred = model.predict_one_step(design.rows[k])
    assert pred == pytest.approx(design.targets[k] - residuals[k], abs=1e-10)


def test_free_run_identity_recursion_holds_last_value():
    # model y(t) = y(t-1): free run keeps the last initial value forever
    n = 50
    y = make_series(np.full(n, 2.5))
    x = make_series(np.zeros(n), "x")
    model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)}, degree=1,
                           standardize=False)
    rng = np.random.default_rng(9)
    rows = rng.normal(size=(30, 2))
    design = DesignMatrix(rows, rows[:, 0],
                          np.column_stack([np.zeros(30, int), np.arange(30)]))
    model.fit_design(design)
    out = model.free_run(x, init=np.array([2.5]))
    assert np.allclose(out.values[:, 0], 2.5, atol=1e-9)


def test_free_run_pure_exogenous_pass_through():
    # model y(t) = x(t): output equals the exogenous series from step n on
    rng = np.random.default_rng(10)
    rows = rng.normal(size=(30, 2))
    design = DesignMatrix(rows, rows[:, 1],
                          np.column_stack([np.zeros(30, int), np.arange(30)]))
    model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)}, degree=1,
                           standardize=False).fit_design(design)
    x = make_series(np.sin(np.arange(40.0)), "x")
    out = model.free_run(x, init=np.array([0.0]))
    assert np.allclose(out.values[1:, 0], x.values[1:, 0], atol=1e-9)
    assert out.values[0, 0] == 0.0


def test_free_run_requires_matching_init_length():
    x, y = random_pair(seed=11)
    model = PolynomialNarx(ar_lags=(1, 2, 3), exo_lags={"x": (0,)}).fit([(x, y)])
    with pytest.raises(ValidationError):
        model.free_run(x, init=np.zeros(2))
    out = model.free_run(x, init=None)  # zeros by default
    assert np.array_equal(out.values[:3, 0], np.zeros(3))


def test_free_run_rejects_exo_lag_beyond_init_window():
    x, y = random_pair(seed=12)
    model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0, 4)}).fit([(x, y)])
    with pytest.raises(LagOutOfRangeError):
        model.free_run(x)


def test_free_run_blowup_guard():
    # y(t) = 2 y(t-1) diverges; guard must trip
    rng = np.random.default_rng(13)
    rows = rng.normal(size=(30, 1))
    design = DesignMatrix(rows, 2.0 * rows[:, 0],
                          np.column_stack([np.zeros(30, int), np.arange(30)]))
    model = PolynomialNarx(ar_lags=(1,), exo_lags=None, degree=1,
                           standardize=False, blowup_factor=1e3).fit_design(design)
    x = make_series(np.zeros(200), "x")
    with pytest.raises(NumericBlowupError, match="step"):
        model.free_run(x, init=np.array([1.0]))


def test_free_run_checks_dt_and_channels():
    x, y = random_pair(seed=14)
    model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)}).fit([(x, y)])
    with pytest.raises(DtMismatchError):
        model.free_run(make_series(np.zeros(50), "x", dt=0.02))
    with pytest.raises(ChannelMissingError):
        model.free_run(make_series(np.zeros(50), "u"))


def test_teacher_forced_reproduces_one_step_exactly():
    x, y = random_pair(seed=15)
    model = PolynomialNarx(ar_lags=(1, 2), exo_lags={"x": (0, 1)},
                           degree=2, interaction=2).fit([(x, y)])
    forced = model.teacher_forced(x, y)
    m = model.layout_.max_lag
    from mnarx import build_regressor

    for t in (m, m + 5, 100, 499):
        phi = build_regressor(x, y, model.layout_, t)
        assert forced.values[t, 0] == float(model.predict_one_step(phi))
    assert np.array_equal(forced.values[:m, 0], y.values[:m, 0])


def test_permutation_invariance_of_fit():
    x, y = random_pair(seed=16)
    params = dict(ar_lags=(1, 2), exo_lags={"x": (0,)}, degree=2, interaction=2)
    design = assemble_design([(x, y)], PolynomialNarx(**params)._resolved_layout())
    rng = np.random.default_rng(17)
    perm = rng.permutation(design.n_rows)
    shuffled = DesignMatrix(design.rows[perm], design.targets[perm],
                            design.provenance[perm])
    a = PolynomialNarx(**params).fit_design(design).coefficients_
    b = PolynomialNarx(**params).fit_design(shuffled).coefficients_
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12)


def test_standardization_transparency_under_affine_rescaling():
    # rescale the raw input channel consistently in train and test data:
    # predictions must not change (standardization absorbs the affine map)
    rng = np.random.default_rng(18)
    n = 400
    x_raw = rng.normal(size=n)
    y = np.zeros(n)
    for t in range(2, n):
        y[t] = 0.6 * y[t - 1] - 0.2 * y[t - 2] + 0.8 * x_raw[t] \
            + 0.1 * x_raw[t] ** 2
    params = dict(ar_lags=(1, 2), exo_lags={"x": (0,)}, degree=2,
                  interaction=2, standardize=True)
    ys = make_series(y)
    base = PolynomialNarx(**params).fit([(make_series(x_raw, "x"), ys)])
    scaled = PolynomialNarx(**params).fit(
        [(make_series(3.7 * x_raw - 1.2, "x"), ys)]
    )
    out_base = base.free_run(make_series(x_raw, "x"), init=y[:2])
    out_scaled = scaled.free_run(make_series(3.7 * x_raw - 1.2, "x"), init=y[:2])
    ref = np.linalg.norm(out_base.values)
    assert np.linalg.norm(out_base.values - out_scaled.values) <= 1e-8 * ref


def test_model_json_round_trip_bit_identical(tmp_path):
    x, y = random_pair(seed=19)
    model = PolynomialNarx(ar_lags=(1, 3), exo_lags={"x": (0, 2)},
                           degree=3, interaction=2).fit([(x, y)])
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    assert np.array_equal(back.coefficients_, model.coefficients_)
    assert np.array_equal(back.exponents_, model.exponents_)
    assert back.target_shift_ == model.target_shift_
    assert back.dt_ == model.dt_
    a = model.free_run(x, init=y.values[:3, 0])
    b = back.free_run(x, init=y.values[:3, 0])
    assert np.array_equal(a.values, b.values)
    # serialize again: files identical
    save_model(back, tmp_path / "model2.json")
    assert (tmp_path / "model.json").read_bytes() == (tmp_path / "model2.json").read_bytes()


def test_requires_fit_before_predict():
    model = PolynomialNarx()
    with pytest.raises(NotFittedError):
        model.predict_one_step(np.array([1.0]))


def test_sklearn_param_interface():
    model = PolynomialNarx(ar_lags=(1, 2), degree=3)
    params = model.get_params()
    assert params["degree"] == 3 and params["ar_lags"] == (1, 2)
    dup = clone(model)
    assert dup.get_params() == params


def test_subsampled_fit_uses_requested_rows():
    x, y = random_pair(seed=20)
    model = PolynomialNarx(ar_lags=(1,), exo_lags={"x": (0,)},
                           sample_count=64, seed=3).fit([(x, y)])
    assert model.fit_report_["n_rows"] == 64
