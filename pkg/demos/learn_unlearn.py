"""Train a private logistic model, then serve a stream of removal requests.

Each request replaces one training row and runs the number of unlearning
epochs the accountant asks for. Test accuracy is tracked throughout.
"""

import numpy as np

from sglu import accountant as acc
from sglu.accountant import Hyperparams
from sglu.data import UnlearnRequest, apply_request, synthetic_split
from sglu.model import LogisticModel
from sglu.optimizer import RunConfig, learn, make_schedule, make_streams, unlearn


def main():
    train, test = synthetic_split(1024, 1024, 16, 2.0, seed=0)
    model = LogisticModel(lam=0.2)
    b, sigma, T = 32, 0.03, 10
    h = Hyperparams.for_logistic(train.n, b, model.lam, sigma)

    streams = make_streams(0)
    schedule = make_schedule(train.n, b, rng=streams.schedule)
    state = learn(RunConfig(T=T, K=0, eta=h.eta, sigma=sigma, R=h.R), model, train, schedule,
                  streams)
    print(f"after {T} learning epochs: test accuracy "
          f"{model.accuracy(state.w, test.features, test.labels):.3f}")

    plan = acc.sequential_plan(h, 10, 0.01, 1.0 / train.n)
    print(f"planned epochs per request for (0.01, 1/n): {plan.ks}")

    data = train
    rows = np.random.default_rng(1).choice(train.n, size=10, replace=False)
    for s, (row, k) in enumerate(zip(rows, plan.ks), start=1):
        data = apply_request(data, UnlearnRequest([int(row)], seed=s))
        state = unlearn(state, model, data, schedule, k, eta=h.eta, sigma=sigma, R=h.R)
        accuracy = model.accuracy(state.w, test.features, test.labels)
        print(f"request {s:>2}: row {row:>4} replaced, {k} epoch(s), accuracy {accuracy:.3f}, "
              f"guarantee eps={plan.eps_dp[s - 1]:.4f}")


if __name__ == "__main__":
    main()
