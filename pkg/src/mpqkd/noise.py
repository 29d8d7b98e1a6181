"""Depolarizing-noise models and their closed-form measurement statistics.

Two scenarios are supported for an N-party GHZ resource with noise strength
``nu``:

* global depolarizing: the whole N-qubit state is mixed with the maximally
  mixed state, ``rho = (1-nu)|GHZ><GHZ| + nu I/2^N``;
* local depolarizing: an independent single-qubit depolarizing map of
  strength ``nu`` acts on each of the N-1 receiver qubits.

Both yield the same pairwise Z-disagreement probability p_ab = nu/2 but
differ in the X-parity error p_x and the any-receiver Z-disagreement p_z.
At N = 2 the two models coincide on all three probabilities.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional

__all__ = [
    "NoiseModel",
    "NoiseScenario",
    "MarginalProbabilities",
    "ObservedStats",
    "marginal_probabilities",
    "expected_observed_stats",
]


class NoiseModel(enum.Enum):
    GLOBAL_DEPOLARIZING = "global"
    LOCAL_DEPOLARIZING = "local"


@dataclass(frozen=True)
class NoiseScenario:
    """A noise model, its strength nu in [0, 1], and the party count N >= 2."""

    model: NoiseModel
    nu: float
    parties: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError(f"nu must be in [0, 1], got {self.nu}")
        if self.parties < 2:
            raise ValueError(f"parties must be >= 2, got {self.parties}")


@dataclass(frozen=True)
class MarginalProbabilities:
    """Closed-form single-round error probabilities.

    p_ab: probability that Alice and any one fixed Bob disagree in Z
          (identical for every Bob by symmetry);
    p_x:  probability of X-parity outcome -1 across all N parties;
    p_z:  probability that at least one Bob disagrees with Alice in Z.
    """

    p_ab: float
    p_x: float
    p_z: float


@dataclass(frozen=True)
class ObservedStats:
    """Parameter-estimation frequencies, one q_ab entry per Bob.

    ``m`` and ``m_prime`` record the sample sizes behind the frequencies when
    they come from actual counts; they stay None for idealized expected
    statistics.
    """

    q_ab: List[float]
    q_x: float
    q_z: Optional[float] = None
    m: Optional[int] = None
    m_prime: Optional[int] = None

    def __post_init__(self) -> None:
        for q in [*self.q_ab, self.q_x] + ([self.q_z] if self.q_z is not None else []):
            if not 0.0 <= q <= 1.0:
                raise ValueError(f"frequencies must be in [0, 1], got {q}")


def _pow_one_minus(x: float, k: int) -> float:
    # (1-x)^k without cancellation at small x
    if x >= 1.0:
        return 0.0
    return math.exp(k * math.log1p(-x))


def marginal_probabilities(scenario: NoiseScenario) -> MarginalProbabilities:
    """Closed-form (p_ab, p_x, p_z) for the given noise scenario.

    Global model::

        p_ab = nu/2,  p_x = p_ab,  p_z = (2^N - 2)/2^(N-1) * p_ab

    Local model::

        p_ab = nu/2
        p_x  = (1 - (1 - 2 p_ab)^(N-1)) / 2
        p_z  = 1 - (1 - p_ab)^(N-1)
    """
    n_parties = scenario.parties
    p_ab = scenario.nu / 2.0
    if scenario.model is NoiseModel.GLOBAL_DEPOLARIZING:
        p_x = p_ab
        p_z = (2.0**n_parties - 2.0) / 2.0 ** (n_parties - 1) * p_ab
    else:
        p_x = (1.0 - _pow_one_minus(2.0 * p_ab, n_parties - 1)) / 2.0
        p_z = 1.0 - _pow_one_minus(p_ab, n_parties - 1)
    return MarginalProbabilities(p_ab=p_ab, p_x=p_x, p_z=p_z)


def expected_observed_stats(scenario: NoiseScenario) -> ObservedStats:
    """Idealized PE frequencies: each frequency equals its probability.

    This is the standard assumption used when generating rate curves; actual
    sampled frequencies come from the simulator instead.
    """
    probs = marginal_probabilities(scenario)
    return ObservedStats(
        q_ab=[probs.p_ab] * (scenario.parties - 1),
        q_x=probs.p_x,
        q_z=probs.p_z,
    )
