#!/usr/bin/env python3
"""Cross-checks between closed forms, exact quantum states and Monte Carlo.

Three layers of evidence that the noise statistics are right:

1. the closed-form probabilities against a dense density-matrix computation
   (exact up to float arithmetic);
2. sampled protocol rounds against the closed forms, judged by binomial
   five-sigma bands;
3. the sampling-without-replacement tail bounds and the toy error-correction
   failure bound, judged against their stated epsilon levels.
"""

import math

from mpqkd import (
    LogEps,
    NoiseModel,
    NoiseScenario,
    Protocol,
    ProtocolConfig,
    ec_toy_run,
    exact_marginals,
    marginal_probabilities,
    sampling_lemma_experiment,
    simulate_rounds,
)


def main():
    print("1) closed form vs dense density matrix")
    worst = 0.0
    for model in NoiseModel:
        for parties in (2, 3, 4):
            for nu in (0.0, 0.1, 0.5, 1.0):
                scenario = NoiseScenario(model, nu, parties)
                closed = marginal_probabilities(scenario)
                dense = exact_marginals(scenario)
                worst = max(
                    worst,
                    abs(closed.p_ab - dense.p_ab),
                    abs(closed.p_x - dense.p_x),
                    abs(closed.p_z - dense.p_z),
                )
    print(f"   worst deviation over 24 scenarios: {worst:.2e}")

    print("2) Monte Carlo rounds vs closed form (N=3, nu=0.1, 1e6 PE rounds)")
    for model in NoiseModel:
        scenario = NoiseScenario(model, 0.1, 3)
        probs = marginal_probabilities(scenario)
        config = ProtocolConfig(Protocol.N_SIX_STATE, 3, 4 * 10**6, 0.25)
        report = simulate_rounds(scenario, config, seed=2024)
        sig_ab = math.sqrt(probs.p_ab * (1 - probs.p_ab) / report.ab_rounds)
        sig_x = math.sqrt(probs.p_x * (1 - probs.p_x) / report.x_rounds)
        sig_z = math.sqrt(probs.p_z * (1 - probs.p_z) / report.z_rounds)
        print(
            f"   {model.value:6s}: Q_AB dev {abs(report.q_ab[0] - probs.p_ab) / sig_ab:4.1f} sigma,"
            f" Q_X dev {abs(report.q_x - probs.p_x) / sig_x:4.1f} sigma,"
            f" Q_Z dev {abs(report.q_z - probs.p_z) / sig_z:4.1f} sigma"
        )

    print("3) tail bounds")
    eps = LogEps.from_eps(0.01)
    lemma = sampling_lemma_experiment(2000, 1000, 100, 10**5, eps, seed=7)
    print(
        f"   sampling lemma: two-sided {lemma.freq_two_sided:.4f} <= {lemma.bound_two_sided},"
        f" upper {lemma.freq_upper:.4f} <= {lemma.bound_one_sided},"
        f" lower {lemma.freq_lower:.4f} <= {lemma.bound_one_sided}"
    )
    eps_ec = LogEps.from_eps(2.0**-6)
    toy = ec_toy_run(3, 12, 0.05, eps_ec, 3, 10**5, seed=7)
    print(
        f"   EC toy: failure {toy.failure_freq:.5f} <= {eps_ec.eps:.5f},"
        f" aborts {toy.abort_freq:.5f}, hash length {toy.leakage_bits} bits"
    )


if __name__ == "__main__":
    main()
