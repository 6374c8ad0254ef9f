"""Operator assembly: hand-built references, closed-form spectra, audits."""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from dbarheat import (
    ComplexField,
    ConfigError,
    GridSpec,
    PolynomialWeight,
    apply_dbar,
    apply_dbar_star,
    assemble_box,
    factorization_defect,
    get_weight,
    operator_audit,
    sample,
)


def five_point_quarter_laplacian(spec):
    """Independent -Laplacian/4 with Dirichlet closure, built from scratch."""
    n, h = spec.points, spec.h
    main = 4.0 * np.ones(n * n)
    east = np.ones(n * n - 1)
    east[np.arange(1, n) * n - 1] = 0.0  # no wrap across grid rows
    north = np.ones(n * n - n)
    mat = sp.diags(
        [main, -east, -east, -north, -north], [0, 1, -1, n, -n], format="csr"
    )
    return mat / (4.0 * h ** 2)


def test_zero_weight_matrix_is_quarter_laplacian():
    spec = GridSpec(extent=6.0, points=33)
    op = assemble_box(spec, get_weight("zero"))
    ref = five_point_quarter_laplacian(spec)
    assert abs(op.matrix - ref).max() < 1e-14


def test_modsq_potential_and_diagonal():
    spec = GridSpec(extent=6.0, points=33)
    op = assemble_box(spec, get_weight("modsq"))
    zz = spec.nodes()
    # phi = |z|^2: |phi_zbar|^2 + phi_zzbar = |z|^2 + 1 exactly
    assert np.max(np.abs(op.potential - (np.abs(zz) ** 2 + 1.0))) == 0.0
    # drift terms have empty diagonal, so diag = 1/h^2 + potential
    want = 1.0 / spec.h ** 2 + op.potential.ravel()
    assert np.max(np.abs(op.matrix.diagonal() - want)) < 1e-12


@pytest.mark.parametrize("name", ["zero", "modsq", "modquartic",
                                  "harmonic_re_z2"])
def test_hermitian_by_construction(name):
    op = assemble_box(GridSpec(extent=6.0, points=33), get_weight(name))
    defect = op.matrix - op.matrix.getH()
    assert defect.nnz == 0 or np.max(np.abs(defect.data)) == 0.0


def test_apply_dbar_star_on_monomials():
    # zero weight: Dbar* u = -d_z u; exact for quadratics
    spec = GridSpec(extent=6.0, points=65)
    zz = spec.nodes()
    w0 = get_weight("zero")
    zsq = sample(spec, lambda z: z ** 2)
    assert np.max(np.abs(apply_dbar_star(w0, zsq).values + 2.0 * zz)) < 1e-10
    zbsq = sample(spec, lambda z: np.conj(z) ** 2)
    assert np.max(np.abs(apply_dbar_star(w0, zbsq).values)) < 1e-10
    # modsq adds phi_z u = zbar u
    wm = get_weight("modsq")
    got = apply_dbar_star(wm, zsq).values
    want = -2.0 * zz + np.conj(zz) * zz ** 2
    assert np.max(np.abs(got - want)) < 1e-10


def test_apply_dbar_annihilates_weighted_holomorphic():
    # Dbar(e^{-phi} f) = 0 for holomorphic f; phi = |z|^2, f = z.
    # The discrete residual is pure truncation error, so it is small and
    # shrinks at second order under refinement
    w = get_weight("modsq")
    resid = {}
    for n in (129, 257):
        spec = GridSpec(extent=6.0, points=n)
        u = sample(spec, lambda z: z * np.exp(-np.abs(z) ** 2))
        r = apply_dbar(w, u).values
        resid[n] = np.max(np.abs(r[2:-2, 2:-2]))
    assert resid[129] < 2e-2 * 0.43  # peak of |u| is about 0.43
    assert math.log2(resid[129] / resid[257]) > 1.8


def test_factorization_defect_second_order():
    defects = []
    for n in (33, 65):
        op = assemble_box(GridSpec(extent=6.0, points=n), get_weight("modsq"))
        defects.append(factorization_defect(op))
    order = math.log2(defects[0] / defects[1])
    assert order > 1.8


def test_lambda_min_zero_weight_closed_form():
    # -Laplacian/4 with Dirichlet ring: lambda_min = (2/h^2) sin^2(pi/(2(n+1)))
    spec = GridSpec(extent=6.0, points=33)
    op = assemble_box(spec, get_weight("zero"))
    audit = operator_audit(op, trials=2)
    exact = (2.0 / spec.h ** 2) * math.sin(math.pi / (2 * 34)) ** 2
    assert audit.lambda_min_converged
    assert audit.lambda_min == pytest.approx(exact, rel=1e-9)


def test_lambda_min_frozen_values():
    # dense-solve references; modsq approaches the Landau level 2 from below
    op16 = assemble_box(GridSpec(extent=6.0, points=16), get_weight("modsq"))
    a16 = operator_audit(op16, trials=0)
    assert a16.lambda_min == pytest.approx(1.91066937, abs=1e-6)
    op33 = assemble_box(GridSpec(extent=6.0, points=33), get_weight("modsq"))
    a33 = operator_audit(op33, trials=0)
    assert a33.lambda_min == pytest.approx(1.98093536, abs=1e-6)
    assert a33.lambda_min < 2.0


def test_rayleigh_quotients_nonnegative():
    op = assemble_box(GridSpec(extent=6.0, points=33), get_weight("modquartic"))
    audit = operator_audit(op, trials=25, seed=3, compute_lambda_min=False)
    assert audit.hermitian_defect == 0.0
    assert audit.rayleigh_min >= -1e-8
    assert audit.lambda_min is None


def test_assemble_rejects_superharmonic_weight():
    sup = PolynomialWeight({(1, 1): -1.0}, name="superharmonic")
    with pytest.raises(ConfigError, match="subharmonicity"):
        assemble_box(GridSpec(extent=6.0, points=16), sup)


def test_apply_matches_matrix(op_modsq16, gaussian16):
    via_apply = op_modsq16.apply(gaussian16)
    flat = op_modsq16.matrix @ gaussian16.ravel()
    assert np.max(np.abs(via_apply.ravel() - flat)) == 0.0
