"""How the accountant turns noise, batch size and unlearning epochs into a guarantee.

Run with ``python3 demos/privacy_bounds.py``. Everything here is closed-form
accounting; no model is trained.
"""

import math

from sglu import accountant as acc
from sglu.accountant import BoundSource, Hyperparams


def main():
    # CIFAR-10 binary-task constants: n = 9728 rows, lambda = 1e-6 * n
    n, lam = 9728, 0.009728
    delta = 1.0 / n
    h = Hyperparams.for_logistic(n, 128, lam, sigma=0.03)
    print(f"step size 1/L = {h.eta:.4f}, contraction per step c = {acc.contraction_factor(h):.7f}")

    # The initial W-infinity budget between adjacent learning runs, for the
    # worst placement of the modified point.
    z = acc.z_convergent(h).value
    print(f"budget Z_B after converged learning: {z:.5f}")

    # Each unlearning epoch shrinks the Renyi bound by c^(2n/b).
    print("\nK   eps_RU(alpha=10)   (eps, delta)-guarantee with best alpha")
    for K in (1, 2, 4, 8):
        ru = acc.ru_bound_convergent(h, K, 10.0).epsilon
        alpha, eps = acc.converted_epsilon(h, K, delta)
        print(f"{K:<3} {ru:<18.4g} eps={eps:.4f} at alpha={alpha:.1f}")

    # Without assuming learning converged, a residual term from the burn-in
    # length T enters. Mini-batches contract n/b times per epoch, so the
    # residual fades fast at b=128; with full batches it takes far longer.
    full = h.replace(b=n)
    print("\nnon-convergent bound, one unlearning epoch:")
    for T in (5, 100, 500, 1000):
        eps_mb = acc.converted_epsilon(h, 1, delta, mode=BoundSource.NONCONVERGENT, T=T)[1]
        eps_fb = acc.converted_epsilon(full, 1, delta, mode=BoundSource.NONCONVERGENT, T=T)[1]
        print(f"  T={T:<5} b=128: eps={eps_mb:<9.4g} full batch: eps={eps_fb:.4g}")

    # Planning: the least K for a target, and the least noise for a budget.
    k = acc.least_k(h, math.inf, 0.5, delta)
    sigma = acc.sigma_search(h, 20, 1, 0.5, delta)
    print(f"\nleast K for eps=0.5 at sigma=0.03: {k}")
    print(f"least sigma so that one epoch after T=20 meets eps=0.5: {sigma:.4f}")

    # A stream of requests: the budget grows towards a fixed point and the
    # per-request cost settles.
    plan = acc.sequential_plan(h, 50, 1.0, delta)
    print(f"\n50 sequential requests at eps=1: K_s = {plan.ks[:5]} ... {plan.ks[-3:]}, "
          f"total {plan.cumulative_epochs} epochs")
    print(f"budget trace Z: {plan.zs[0]:.4f} -> {plan.zs[-1]:.4f}")


if __name__ == "__main__":
    main()
