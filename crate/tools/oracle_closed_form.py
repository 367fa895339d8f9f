"""Freeze 50-digit reference values for the closed-form epsilon and the
support-rank tail into crates/core/tests/fixtures/closed_form_oracle.json."""

import json
from pathlib import Path

from mpmath import binomial, mp, mpf, nstr

mp.dps = 50

K_GRID = list(range(1, 21)) + [25, 30, 40, 50, 75, 100, 150, 200]
BETAS = ["0.01", "0.1"]
AGENTS = [1, 3, 8]


def closed_form(k, beta, n, s):
    if s == k:
        return mpf(1)
    return 1 - (mpf(beta) / ((n + 1) * binomial(k, s))) ** (mpf(1) / (k - s))


def tail(k, eps, lo, hi):
    eps = mpf(eps)
    return sum(binomial(k, j) * eps**j * (1 - eps) ** (k - j) for j in range(lo, hi + 1))


def main():
    closed = []
    for k in K_GRID:
        for beta in BETAS:
            for n in AGENTS:
                for s in range(k + 1):
                    closed.append({"k": k, "beta": beta, "n": n, "s": s,
                                   "epsilon": nstr(closed_form(k, beta, n, s), 50)})
    support = []
    for k in [5, 10, 50, 200]:
        for eps in ["0.001", "0.05", "0.1", "0.3"]:
            for rho in range(1, min(k, 8) + 1):
                support.append({"k": k, "epsilon": eps, "rho": rho,
                                "printed": nstr(tail(k, eps, 1, rho), 50),
                                "conventional": nstr(tail(k, eps, 0, rho - 1), 50)})
    out = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/closed_form_oracle.json"
    def rows(items):
        return ",\n".join("  " + json.dumps(x) for x in items)

    out.write_text('{"closed_form": [\n' + rows(closed) + '\n],\n"support_rank": [\n'
                   + rows(support) + "\n]}\n")
    print(f"{len(closed)} closed-form and {len(support)} tail values -> {out}")


if __name__ == "__main__":
    main()
