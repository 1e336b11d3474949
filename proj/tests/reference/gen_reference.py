#!/usr/bin/env python3
"""Arbitrary-precision reference for schedule and stop-bound formulas.

Evaluates every formula with mpmath at 60 significant digits and emits the
correctly rounded double for each real-valued output plus exact integers for
the integer-valued ones.  The frozen output (tests/data/reference_values.json)
is the oracle the C++ implementation is compared against: reals must match to
within one ulp, integers exactly.

Run from the repository root:

    python3 tests/reference/gen_reference.py > tests/data/reference_values.json

The grid below is deterministic.  Every value that passes through a ceiling is
checked to sit at least 1e-9 (relative) away from an integer boundary so that
double-precision evaluation cannot land on the other side of the ceiling.
"""

import json
import math
import random
import sys

import mpmath as mp

mp.mp.dps = 60

# zeta(2); the series constant used to split delta across outer iterations.
C_E = mp.pi ** 2 / 6


def ceil_guarded(x, what):
    """Ceil with a guard: x must not sit on (or within 1e-9 of) an integer."""
    f = mp.floor(x)
    frac = x - f
    if frac == 0:
        raise ValueError(f"{what}: exact integer {x}, grid config is fragile")
    dist = min(frac, 1 - frac)
    if dist < max(mp.mpf("1e-9"), abs(x) * mp.mpf("1e-12")):
        raise ValueError(f"{what}: {x} too close to integer boundary")
    return int(f) + 1


def ceil_sqrt(n):
    """Exact integer ceil(sqrt(n))."""
    r = math.isqrt(n)
    return r if r * r == n else r + 1


def check_admissible(eps, delta, alpha_m, d1):
    assert 0 < eps <= mp.e ** -1, "eps must be in (0, 1/e]"
    assert 0 < delta < 1
    assert alpha_m ** 2 >= mp.mpf(1) / 10240
    assert d1 >= 1


def delta_prime(j, delta):
    return delta / (4 * C_E * j ** 4)


def log_factor(dp, d1, tau):
    """l value: 18 (ln(2/delta') + ln ln(2 d1^2 / tau))."""
    inner = 2 * d1 ** 2 / tau
    assert inner > mp.e, "ln ln argument must exceed e"
    return 18 * (mp.log(2 / dp) + mp.log(mp.log(inner)))


def schedule_a(j, n, eps, delta, L, alpha_m, d1):
    eta = 1 / (4 * L)
    B = min(j * j, n)
    K = min(j, ceil_sqrt(n))
    tau = mp.mpf(1) / j ** 3
    dp = delta_prime(j, delta)
    l = log_factor(dp, d1, tau)
    b = ceil_guarded(l, f"l at j={j}") * K
    if B < n:
        q = (128 * alpha_m ** 2 / B) * mp.log(3 / dp)
    else:
        q = mp.mpf(0)
    eps_j = 8 * L ** 2 * tau + 2 * q
    eps_tilde_sq = eps ** 2 / 5
    return {
        "j": j,
        "eta": float(eta),
        "B": B,
        "K": K,
        "b": b,
        "l": float(l),
        "q": float(q),
        "tau": float(tau),
        "delta_prime": float(dp),
        "eps_j": float(eps_j),
        "eps_tilde_sq": float(eps_tilde_sq),
        "full_batch": B == n,
    }


def schedule_b(j, n, eps, delta, L, d1):
    eta = 1 / (4 * L)
    B = n
    K = ceil_sqrt(n)
    tau = eps ** 2 / (40 * L ** 2)
    assert 0 < tau < 1, "setting B needs eps^2 < 40 L^2"
    dp = delta_prime(j, delta)
    l = log_factor(dp, d1, tau)
    b = ceil_guarded(l, f"lB at j={j}") * K
    eps_j = eps ** 2 / 10
    eps_tilde_sq = eps ** 2 / 5
    return {
        "j": j,
        "eta": float(eta),
        "B": B,
        "K": K,
        "b": b,
        "l": float(l),
        "q": 0.0,
        "tau": float(tau),
        "delta_prime": float(dp),
        "eps_j": float(eps_j),
        "eps_tilde_sq": float(eps_tilde_sq),
        "full_batch": True,
    }


def stop_bounds_a(eps, delta, n, L, delta_f, alpha_m):
    sqn = mp.sqrt(n)
    c1 = C_E * L / 4 + (16 * alpha_m ** 2 / L) * mp.log(192 * C_E / delta)
    c2 = 64 * alpha_m ** 2 / L
    c3 = 8 * L ** 2 + 256 * alpha_m ** 2 * mp.log(12 * C_E / delta)
    c4 = 1024 * alpha_m ** 2

    a1 = 320 * L * (c1 + delta_f)
    T1 = ceil_guarded(mp.sqrt(a1) / eps + a1 / (sqn * eps ** 2), "T1")

    a2 = 320 * L * c2
    r2 = mp.sqrt(a2) / eps
    T2 = ceil_guarded(
        3 * (r2 * mp.log(r2) + (2 * a2 / (sqn * eps ** 2)) * mp.log(a2 / eps ** 2) + 1),
        "T2",
    )

    T3 = ceil_guarded(2 * mp.sqrt(c3) / eps, "T3")

    r4 = 2 * mp.sqrt(c4) / eps
    T4 = ceil_guarded(3 * r4 * mp.log(r4), "T4")

    return {
        "c1": float(c1),
        "c2": float(c2),
        "c3": float(c3),
        "c4": float(c4),
        "T1": T1,
        "T2": T2,
        "T3": T3,
        "T4": T4,
        "outer_cap": 2 * max(T1, T2, T3, T4),
    }


def stop_bound_b(eps, n, L, delta_f0):
    return ceil_guarded(160 * L * (delta_f0 + 1) / (mp.sqrt(n) * eps ** 2), "T5")


def build_config(n, eps, delta, L, alpha_m, d1, delta_f, delta_f0, js):
    check_admissible(mp.mpf(eps), mp.mpf(delta), mp.mpf(alpha_m), mp.mpf(d1))
    epsm, deltam = mp.mpf(eps), mp.mpf(delta)
    Lm, am, d1m = mp.mpf(L), mp.mpf(alpha_m), mp.mpf(d1)
    dfm, df0m = mp.mpf(delta_f), mp.mpf(delta_f0)
    return {
        "inputs": {
            "n": n,
            "eps": eps,
            "delta": delta,
            "L": L,
            "alpha_M": alpha_m,
            "d1": d1,
            "delta_f": delta_f,
            "delta_f0": delta_f0,
            "js": js,
        },
        "schedule_A": [schedule_a(j, n, epsm, deltam, Lm, am, d1m) for j in js],
        "schedule_B": [schedule_b(j, n, epsm, deltam, Lm, d1m) for j in js],
        "stop_bounds_A": stop_bounds_a(epsm, deltam, n, Lm, dfm, am),
        "stop_bound_B": stop_bound_b(epsm, n, Lm, df0m),
    }


def main():
    js = [1, 2, 3, 5, 17, 64, 301]
    configs = []

    # Two pinned configs exercised directly by unit tests.
    configs.append(build_config(10000, 0.3, 0.1, 1.0, 1.0, 100.0, 1.0, 1.0, js))
    configs.append(build_config(100, 0.3, 0.1, 1.0, 1.0, 100.0, 1.0, 1.0, js))

    ns = [1, 2, 10, 100, 500, 1024, 8124, 24692, 1000000]
    epss = [0.05, 0.1, 0.25, 0.3, 0.36]
    deltas = [0.01, 0.05, 0.1, 0.3]
    Ls = [0.35, 1.0, 2.5, 7.3]
    alphas = [0.11, 1.0, 5.6, 52.0]
    d1s = [1.3, 10.0, 100.0, 640.0]
    dfs = [0.5, 1.0, 7.0, 25.0]

    rng = random.Random(20260819)
    seen = set()
    while len(configs) < 50:
        combo = (
            rng.choice(ns),
            rng.choice(epss),
            rng.choice(deltas),
            rng.choice(Ls),
            rng.choice(alphas),
            rng.choice(d1s),
            rng.choice(dfs),
            rng.choice(dfs),
        )
        if combo in seen:
            continue
        seen.add(combo)
        try:
            configs.append(build_config(*combo, js))
        except ValueError as err:
            print(f"skipping fragile combo {combo}: {err}", file=sys.stderr)

    json.dump({"generator": "tests/reference/gen_reference.py", "configs": configs},
              sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
