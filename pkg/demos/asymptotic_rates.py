#!/usr/bin/env python3
"""Asymptotic key rates of the two conference-key protocols.

Sweeps the pairwise error probability P_AB under both depolarizing noise
models and prints the N-BB84 and N-six-state rates side by side.  Two things
to look for in the output:

* global model: the BB84 column is the same for every N, while the
  six-state rate grows with the party count (its P_Z grows toward 2*P_AB);
* local model: both rates decay as parties are added, because every extra
  receiver adds an independent depolarizing channel.

With matplotlib installed the curves are also written to
asymptotic_rates.png.
"""

import numpy as np

from mpqkd import (
    NoiseModel,
    NoiseScenario,
    find_rate_root,
    marginal_probabilities,
    rate_bb84_asymptotic,
    rate_sixstate_asymptotic,
)

P_AB_GRID = np.linspace(0.0, 0.14, 29)
PARTIES = (2, 5, 10)


def rates_for(model, parties, p_ab):
    probs = marginal_probabilities(NoiseScenario(model, 2.0 * p_ab, parties))
    return (
        max(rate_bb84_asymptotic(probs.p_ab, probs.p_x), 0.0),
        max(rate_sixstate_asymptotic(probs), 0.0),
    )


def main():
    curves = {}
    for model in NoiseModel:
        print(f"\n=== {model.value} depolarizing noise ===")
        header = "P_AB    " + "  ".join(
            f"bb84(N={n})  6st(N={n})" for n in PARTIES
        )
        print(header)
        for p_ab in P_AB_GRID[::4]:
            cells = []
            for parties in PARTIES:
                rb, r6 = rates_for(model, parties, float(p_ab))
                cells.append(f"{rb:9.4f}  {r6:9.4f}")
            print(f"{p_ab:6.3f}  " + "  ".join(cells))
        for parties in PARTIES:
            curves[(model, parties)] = np.array(
                [rates_for(model, parties, float(p)) for p in P_AB_GRID]
            )

    # noise thresholds: where each rate curve crosses zero
    bb84_root = find_rate_root(lambda p: rate_bb84_asymptotic(p, p), 0.05, 0.3)
    print(f"\nBB84 tolerable noise (global model, any N): P_AB* = {bb84_root:.4f}")
    for parties in PARTIES:

        def six(p, parties=parties):
            probs = marginal_probabilities(
                NoiseScenario(NoiseModel.GLOBAL_DEPOLARIZING, 2.0 * p, parties)
            )
            return rate_sixstate_asymptotic(probs)

        print(f"six-state threshold, N={parties:2d}: P_AB* = {find_rate_root(six, 0.05, 0.4):.4f}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("\nmatplotlib not available; skipping the plot")
        return
    fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    for ax, model in zip(axes, NoiseModel):
        for parties in PARTIES:
            data = curves[(model, parties)]
            ax.plot(P_AB_GRID, data[:, 1], label=f"six-state N={parties}")
            ax.plot(P_AB_GRID, data[:, 0], "--", label=f"BB84 N={parties}")
        ax.set_title(f"{model.value} noise")
        ax.set_xlabel("$P_{AB}$")
        ax.legend(fontsize=7)
    axes[0].set_ylabel("asymptotic key rate")
    fig.tight_layout()
    fig.savefig("asymptotic_rates.png", dpi=120)
    print("\nwrote asymptotic_rates.png")


if __name__ == "__main__":
    main()
