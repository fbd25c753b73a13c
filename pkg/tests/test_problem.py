import math

import pytest

from critreg import ProblemSpec
from critreg.errors import ValidationError


def test_defaults():
    spec = ProblemSpec()
    assert spec.n == 2 and spec.p == 2.0 and math.isinf(spec.q)


@pytest.mark.parametrize(
    "kw",
    [dict(q=2.0), dict(q=1.5), dict(p=1.4), dict(lam=0.0), dict(lam=2.0, Lam=1.0), dict(Lam_tilde=0.5), dict(n=1)],
)
def test_invalid_specs(kw):
    with pytest.raises(ValidationError):
        ProblemSpec(**kw)


def test_q_message_names_condition():
    with pytest.raises(ValidationError, match="minimal integrability condition on the source"):
        ProblemSpec(n=2, q=2.0)


@pytest.mark.parametrize(
    "n,p,inside",
    [(2, 1.6, True), (2, 1.5, False), (2, 2.0, False), (3, 2.0, True), (3, 2.9, True), (3, 3.0, False), (2, 3.0, False)],
)
def test_paper_range_flag(n, p, inside):
    if p <= 2 - 1 / n:
        with pytest.raises(ValidationError):
            ProblemSpec(n=n, p=p)
        return
    assert ProblemSpec(n=n, p=p).within_paper_range is inside
