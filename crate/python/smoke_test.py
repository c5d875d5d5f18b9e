"""Smoke test for the homentropy_py extension.

Build and install first:

    pip install --no-build-isolation -e crates/py
"""

import math

import numpy as np

import homentropy_py as he


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    u = np.array(he.haar_sample("U", 3, seed=1))
    assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-12)

    # exp/log round trip and the distance identity ||u - v|| = |1 - e^{i rho}|
    x = np.array(he.logm(u.tolist()))
    assert np.allclose(np.array(he.expm(x.tolist())), u, atol=1e-10)
    v = np.array(he.haar_sample("U", 3, seed=2))
    rho = he.intrinsic_dist(u.tolist(), v.tolist())
    close(np.linalg.norm(u - v, 2), abs(1 - np.exp(1j * rho)), 1e-8)
    phases = he.eigenphases(u.tolist())
    close(max(abs(p) for p in phases), he.intrinsic_dist(np.eye(3).tolist(), u.tolist()), 1e-10)

    # U(2)/SU(2) is a circle of radius 1/2
    sp = he.HomSpace("U", 2, "special")
    assert (sp.dim_g, sp.dim_h, sp.dim_m) == (4, 3, 1)
    q = (np.exp(1j * math.pi / 4) * np.eye(2)).tolist()
    d, exact = sp.quotient_dist(np.eye(2).tolist(), q)
    close(d, math.pi / 4, 1e-9)
    close(sp.quotient_dist_upper(np.eye(2).tolist(), q), math.pi / 4, 1e-3)

    # Grassmannian G(4, 2): optimizer agrees with the largest principal angle
    gr = he.HomSpace("U", 4, "grassmann", k=2)
    a, b = gr.haar_sample(3), gr.haar_sample(4)
    d_exact, exact = gr.quotient_dist(a, b)
    assert exact
    close(gr.quotient_dist_upper(a, b), d_exact, 1e-3)
    inv = gr.invariants(seed=1, diam_samples=16)
    assert inv["kappa_known"] == 1.0 and inv["dim_m"] == 8

    # exact circle coverings on U(1)
    circle = he.HomSpace("U", 1)
    for k in range(4):
        eps = math.pi / 2**k
        assert circle.greedy_net(eps, seed=5)["count"] == math.ceil(math.pi / eps - 1e-12)

    reports = he.HomSpace("U", 2).verify_all(seed=1)
    assert all(r["passed"] for r in reports), [r["name"] for r in reports if not r["passed"]]

    try:
        he.HomSpace("SO", 3, "special")
    except ValueError:
        pass
    else:
        raise AssertionError("SO(n) has no special subgroup")

    print("smoke test passed:", sp, gr, f"{len(reports)} checks")


if __name__ == "__main__":
    main()
