from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class ProblemSpec:
    """Structural data of ``-div a(X, Du) = mu``.

    ``q`` is the integrability exponent of the source (``math.inf`` for a
    bounded source).  Specs with ``p`` outside ``(2 - 1/n, n)`` are accepted
    but flagged through :attr:`within_paper_range`.
    """

    n: int = 2
    p: float = 2.0
    lam: float = 1.0
    Lam: float = 1.0
    Lam_tilde: float = 1.0
    q: float = math.inf

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"dimension n must be >= 2, got {self.n}")
        if not 0 < self.lam <= self.Lam:
            raise ValidationError(f"need 0 < lambda <= Lambda, got lambda={self.lam}, Lambda={self.Lam}")
        if self.Lam_tilde < 1:
            raise ValidationError(f"LambdaTilde must be >= 1, got {self.Lam_tilde}")
        if not self.q > self.n:
            raise ValidationError(
                f"source integrability exponent q={self.q} must exceed the dimension n={self.n} "
                "(minimal integrability condition on the source: mu in L^q with q > n)"
            )
        if not self.p > 2 - 1 / self.n:
            raise ValidationError(f"growth exponent p={self.p} must exceed 2 - 1/n = {2 - 1 / self.n}")

    @property
    def within_paper_range(self) -> bool:
        return 2 - 1 / self.n < self.p < self.n

    def as_dict(self):
        return {
            "n": self.n,
            "p": self.p,
            "lambda": self.lam,
            "Lambda": self.Lam,
            "LambdaTilde": self.Lam_tilde,
            "q": "inf" if math.isinf(self.q) else self.q,
            "within_paper_range": self.within_paper_range,
        }
