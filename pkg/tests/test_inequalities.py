import math

import numpy as np
import pytest

from isinglab.lattice import build_rect
from isinglab.exact import semi_infinite_box
from isinglab.inequalities import (
    SLACK_TOL,
    SUITES,
    audit_dvi,
    audit_extremality,
    audit_fkg,
    audit_gks,
    chain_inequality_audit,
    run_suite,
    two_site_chain_value,
)

B22 = build_rect((0, 0), (1, 1))
B23 = build_rect((0, 0), (1, 2))


def test_gks_suite():
    for rep in audit_gks(B22, 60, seed=7):
        assert rep.passed(SLACK_TOL), rep
        assert rep.n_instances > 0


def test_fkg_suite_and_variance_case():
    (rep,) = audit_fkg(B22, 60, seed=7)
    assert rep.passed(SLACK_TOL)
    # the f = g diagonal is included: slack there is a variance, >= 0


def test_dvi_suites():
    for rep in audit_dvi(B22, 60, seed=7):
        assert rep.passed(SLACK_TOL), rep
    for rep in audit_dvi(B22, 60, seed=7, plus_eta=True):
        assert rep.passed(SLACK_TOL), rep


def test_extremality_and_monotonicity():
    for name in ("extremality", "state-monotonicity", "correlation-monotonicity"):
        for rep in run_suite([name], B23, 15, seed=5):
            assert rep.passed(SLACK_TOL), rep


def test_consequence_dvi_semi_infinite():
    box = semi_infinite_box(2, 2, 2, base=1)
    for rep in run_suite(["consequence-dvi"], box, 40, seed=11):
        assert rep.passed(SLACK_TOL), rep


def test_run_suite_unknown_name():
    with pytest.raises(ValueError):
        run_suite(["nope"], B22, 1, seed=0)


def test_chain_inequality_zero_field():
    rep = chain_inequality_audit(B22, (0, 0), (1, 0), J=1.0, beta=1.0)
    assert rep["slack_first"] >= -1e-12
    assert rep["slack_second"] >= -1e-12
    assert rep["positivity"] > 0


def test_chain_requires_adjacency_and_nonnegative_field():
    with pytest.raises(ValueError):
        chain_inequality_audit(B22, (0, 0), (1, 1))
    with pytest.raises(ValueError):
        chain_inequality_audit(B22, (0, 0), (1, 0), h=[-0.1, 0, 0, 0])


def test_chain_symmetric_free_case():
    # with h = 0 and free/free duplicated layers, <t_i> vanishes by symmetry
    from isinglab.exact import DuplicatedModel, DuplicatedState
    from isinglab.model import FieldSpec, InteractionSpec, ModelInstance, FREE

    base = ModelInstance(B22, InteractionSpec(J=1.0), FieldSpec(), FREE, 1.0)
    ds = DuplicatedState(DuplicatedModel(base, field2=FieldSpec()))
    assert ds.st_moment([(0, 0)], []) == pytest.approx(0.0, abs=1e-13)


def test_chain_two_site_surrogate():
    # a huge field on the complement of {i, j} pins those sites to +1 in both
    # layers; the limit is the two-site duplicated system whose per-layer
    # effective fields follow from the 2x2 geometry: the plus layer sees
    # 2 exterior plus neighbors and 1 pinned site (3J), the minus layer
    # 2 exterior minus neighbors and 1 pinned site (-J)
    from isinglab.inequalities import two_site_duplicated_titj

    closed = two_site_duplicated_titj(1.0, 1.0, 3.0, 3.0, -1.0, -1.0)
    gaps = []
    # region points are sorted: (0,0), (0,1), (1,0), (1,1); the big field goes
    # on the complement of {i, j} = {(0,1), (1,1)}
    for mu in (8.0, 16.0):
        rep = chain_inequality_audit(
            B22, (0, 0), (1, 0), J=1.0, beta=1.0, h=[0.0, mu, 0.0, mu]
        )
        gaps.append(abs(rep["t_i_t_j"] - closed))
    assert gaps[1] <= gaps[0]
    assert gaps[1] <= 1e-6
    # an interior pair (all neighbors pinned in both layers) reproduces the
    # symmetric two-site value, which is strictly positive
    assert two_site_chain_value(d=2, J=1.0, beta=1.0) > 0


def test_all_suites_registry():
    assert set(SUITES) == {
        "gks", "fkg", "dvi", "dvi-corollary", "extremality",
        "state-monotonicity", "correlation-monotonicity", "consequence-dvi",
    }
