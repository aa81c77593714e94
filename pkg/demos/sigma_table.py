"""Noise scale needed so that one unlearning epoch meets each target epsilon.

Prints a table for the MNIST and CIFAR-10 binary-task constants, with the
burn-in sized per batch size and delta = 1/n. Runs in well under a second.
"""

from sglu import accountant as acc
from sglu.accountant import BoundSource, Hyperparams
from sglu.harness.config import CIFAR10, MNIST, TARGET_EPS_GRID, burn_in


def main():
    header = "workload  batch  T     " + "  ".join(f"eps={t:<5g}" for t in TARGET_EPS_GRID)
    print(header)
    print("-" * len(header))
    for w in (CIFAR10, MNIST):
        for b in (128, w.n):
            T = burn_in(b, w.n)
            base = Hyperparams.for_logistic(w.n, b, w.lam, 1.0)
            sigmas = [acc.sigma_search(base, T, 1, t, 1.0 / w.n, mode=BoundSource.NONCONVERGENT)
                      for t in TARGET_EPS_GRID]
            label = "full" if b == w.n else str(b)
            print(f"{w.name:<9} {label:<6} {T:<5} " + "  ".join(f"{s:<9.4f}" for s in sigmas))


if __name__ == "__main__":
    main()
