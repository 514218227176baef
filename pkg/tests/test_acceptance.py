"""Acceptance criteria at the quick level, one test per criterion.

Each test prints its verdict line; the lines are repeated in the terminal
summary. The mutation tests check that a criterion can actually fail.
"""

import numpy as np
import pytest

import nsmild.spectral
import nsmild.stokes
from nsmild.acceptance import CRITERIA, INFO, run_criterion

from conftest import ACCEPTANCE_LINES


def _record(res):
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return res


@pytest.mark.parametrize("key", [c[0] for c in CRITERIA], ids=[f"{c[0]}-{c[1]}" for c in CRITERIA])
def test_criterion(key):
    res = _record(run_criterion(key, "quick"))
    assert res.passed, res.detail


@pytest.mark.parametrize("key", [c[0] for c in INFO], ids=[f"{c[0]}-{c[1]}" for c in INFO])
def test_informational(key):
    res = _record(run_criterion(key, "quick"))
    assert res.seconds <= res.budget
    assert np.isfinite(res.measured)


def test_flipped_projector_is_caught(monkeypatch):
    def flipped(domain, coeffs):
        ks = domain.wavenumbers
        inv = np.zeros_like(domain.ksq)
        np.divide(1.0, domain.ksq, out=inv, where=domain.ksq > 0)
        kdot = sum(k * coeffs[j] for j, k in enumerate(ks))
        return np.stack([coeffs[j] + k * kdot * inv for j, k in enumerate(ks)])

    monkeypatch.setattr(nsmild.stokes, "project_coeffs", flipped)
    assert not run_criterion("C02", "quick").passed


def test_disabled_dealiasing_is_caught(monkeypatch):
    monkeypatch.setattr(nsmild.spectral, "dealias_mask", lambda domain: np.ones(domain.spectral_shape, bool))
    # Taylor-Green has no aliasing to remove, so only the residual check notices
    assert run_criterion("C01", "quick").passed
    assert not run_criterion("S01", "quick").passed
