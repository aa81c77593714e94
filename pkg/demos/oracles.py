"""Checking the accountant against quantities that can be computed exactly.

On an unprojected 1-D quadratic the learn/unlearn chain is Gaussian, so the
Renyi divergence between the unlearned and retrained laws is available in
closed form. A deliberately weakened bound is caught by the same checks.
"""

from sglu import verify


def main():
    trace = verify.oracle_unprojected_chain(1.0, 0.5, 1.0, 10, 0.05, -0.05)
    print("K   exact divergence   accountant bound")
    for k, exact, bound in zip(trace.ks, trace.exact, trace.bound):
        print(f"{k:<3} {exact:<18.4e} {bound:.4e}")
    print(f"decay rate of exact: {verify.fit_log_slope(trace.ks, trace.exact):.4f} per epoch, "
          f"of bound: {verify.fit_log_slope(trace.ks, trace.bound):.4f}")

    report = verify.run_suite(quick=True)
    print("\nverification suite:", "ok" if report["ok"] else "FAILED")
    for name, suite in report["suites"].items():
        print(f"  {name}: {suite['checks']} checks, {suite['failures']} failures")

    broken = verify.run_suite(quick=True, bound_scale=0.5)
    sandwich = broken["suites"]["oracle_sandwich"]
    print(f"\nwith the bound halved: {sandwich['failures']} failures, first: "
          f"{sandwich['first_failure']}")


if __name__ == "__main__":
    main()
