import pytest

from macrodistinct import verify


@pytest.mark.parametrize("suite", list(verify.SUITES))
def test_suite_passes_small(suite):
    s = verify.run_suite(suite, trials=10)
    assert s.ok, s.failures


def test_trials_are_reproducible_in_isolation():
    a = verify.run_trial("which-path", verify.DEFAULT_SEED, 7)
    b = verify.run_trial("which-path", verify.DEFAULT_SEED, 7)
    c = verify.run_trial("which-path", verify.DEFAULT_SEED, 8)
    assert a == b and a != c


def test_fault_injection_detected_with_tokens():
    s = verify.run_suite("which-path", trials=3, fault="fidelity-sign")
    assert not s.ok
    tok = s.failures[0][0]
    suite, seed, trial = verify.parse_token(tok)
    assert (suite, seed) == ("which-path", verify.DEFAULT_SEED)
    checks = verify.run_trial(suite, seed, trial, fault="fidelity-sign")
    assert min(slack for _, slack in checks) < 0


def test_unknown_names():
    with pytest.raises(KeyError):
        verify.run_trial("nope", 0, 0)
    with pytest.raises(ValueError):
        verify.run_trial("which-path", 0, 0, fault="nope")
