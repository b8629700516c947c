"""自检套件的测试"""

import pytest

from core.selftest import (GRAD_CASES, run_blend_identities, run_haze_identities, run_hde_fidelity,
                           run_metric_sanity, run_oracle_suite)


def _assert_passed(results):
    failed = [(r.name, r.value) for r in results if not r.passed]
    assert not failed, failed


def test_oracle_suite():
    results = run_oracle_suite(instances=3, max_size=12)
    assert {r.name for r in results} == {"oracle_conv2d", "oracle_softmax", "oracle_pooling", "oracle_resize",
                                         "oracle_dark_channel", "oracle_guided_filter"}
    _assert_passed(results)


def test_haze_identities():
    _assert_passed(run_haze_identities())


def test_blend_identities():
    _assert_passed(run_blend_identities())


def test_metric_sanity():
    _assert_passed(run_metric_sanity())


def test_every_differentiable_operation_is_checked():
    assert len(GRAD_CASES) == 15
    for name in ("conv2d", "softmax", "transformer", "gradient_loss", "total_loss"):
        assert any(name in key for key in GRAD_CASES)


def test_hde_fidelity_small():
    results = run_hde_fidelity(scenes=3, size=128)
    assert results[0].name == "hde_correlation"
    _assert_passed(results)


@pytest.mark.slow
def test_hde_fidelity_full():
    _assert_passed(run_hde_fidelity())
