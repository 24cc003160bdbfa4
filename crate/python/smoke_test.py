"""Smoke test for the pyrtkrylov extension.

Build first, either with `maturin develop -m crates/python/Cargo.toml`, or:

    cargo build --release -p rtkrylov-python --features extension-module
    cp target/release/libpyrtkrylov.so python/pyrtkrylov.so

then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pyrtkrylov as rk


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    nodes, weights = rk.gauss_legendre(20)
    assert len(nodes) == 20 and close(sum(weights), 2.0, 1e-14)
    assert 0.0 not in nodes

    # a -> 0 is a unit-area Gaussian
    assert close(rk.voigt_profile(0.0, 0.0), 1.0 / math.sqrt(math.pi), 1e-12)

    op = rk.Operator(6, n_mu=4, epsilon=1.0)
    assert op.dimension == 12
    assert op.apply([1.0] * 12) == [1.0] * 12

    op = rk.Operator(40, n_mu=20)
    n = op.dimension
    a = op.assemble()
    x = [math.sin(i) for i in range(n)]
    ax = [sum(r[j] * x[j] for j in range(n)) for r in a]
    free = op.apply(x)
    assert max(abs(p - q) for p, q in zip(ax, free)) < 1e-12
    assert len(op.tau) == 40 and op.tau[0] < op.tau[-1]

    lu = op.solve("lu")
    counts = {}
    for method in ("gmres", "bicgstab", "cgs"):
        for prec in ("none", "jacobi", "ssor", "ilut"):
            r = op.solve(method, prec)
            assert r["converged"], (method, prec)
            err = math.sqrt(sum((u - v) ** 2 for u, v in zip(r["solution"], lu["solution"])))
            ref = math.sqrt(sum(v * v for v in lu["solution"]))
            assert err / ref < 1e-3, (method, prec, err / ref)
            counts[(method, prec)] = r["iterations"]
    assert counts[("gmres", "none")] == 48, counts[("gmres", "none")]
    assert counts[("gmres", "ilut")] < counts[("gmres", "jacobi")] < counts[("gmres", "none")]

    mf = op.solve("gmres", "jacobi", matrix_free=True)
    assert mf["iterations"] == counts[("gmres", "jacobi")]

    stalled = op.solve("richardson", "none", max_iterations=100)
    assert not stalled["converged"] and stalled["status"] == "MaxIterations"

    for bad in (lambda: op.solve("newton"), lambda: rk.Operator(10, n_mu=3), lambda: op.apply([0.0])):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed:", {f"{m}/{p}": c for (m, p), c in sorted(counts.items())})


if __name__ == "__main__":
    main()
