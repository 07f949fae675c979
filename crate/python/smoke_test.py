"""Smoke test for the qmobius extension module.

Build and install it first, e.g. ``maturin develop -m crates/py/Cargo.toml``
or ``pip install crates/py``.
"""

import json
import math

import qmobius


def main():
    line = qmobius.Space([[0, 1, 2, 4], [1, 0, 1, 3], [2, 1, 0, 2], [4, 3, 2, 0]], labels=["o", "a", "b", "c"])
    assert len(line) == 4

    inv = line.invert("o")
    assert inv.labels == ["a", "b", "c"]
    assert inv.dist("a", "c") == 0.75
    kernel = line.inversion_kernel("o")
    assert kernel[0][2] == 0.75

    full = line.complete()
    assert full.remote == "∞"
    assert all(math.isfinite(v) for row in full.invert("a").rows() for v in row)

    sph = line.sphericalize("o")
    assert max(max(r) for r in sph.rows()) <= 1.0

    l3 = qmobius.Space([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert l3.doubling_constant() == (3, "1", 1.0)
    theta, pair, chain = l3.critical_theta()
    assert theta == 0.5 and pair == ("0", "2") and chain == ["0", "1", "2"]
    assert l3.find_theta_chain(0.49, "0", "2") is None

    pts = qmobius.Space([[abs(i - j) for j in range(4)] for i in range(4)])
    assert abs(pts.cross_ratio("0", "1", "2", "3") - 4 / 3) < 1e-15

    cantor = qmobius.cantor(2, 4, 0.5)
    assert len(cantor) == 16
    assert cantor.doubling_constant()[0] == 2
    assert cantor.critical_theta()[0] == 1.0

    again = qmobius.Space.from_document(cantor.document("c"))
    assert again.rows() == cantor.rows()

    ray = qmobius.ray(33, 0.5, 1.0)
    assert ray.labels[0] == "p" and len(ray) == 34

    g = qmobius.random_metric(5, 8, "graph")
    lo, hi = g.complete().invert("0").cross_ratio_distortion(g.complete().invert("0"))
    assert lo == hi == 1.0

    q = qmobius.random_quasi(3, 7, 1.5)
    weights = [q.rows()[0][i] for i in range(len(q))]
    kp = q.minimal_k_prime(weights, 1.0)
    t = q.lambda_transform(weights, 1.0, kp)
    assert t.k == kp * kp

    try:
        qmobius.Space([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    except ValueError as e:
        assert "triangle" in str(e) or "invalid" in str(e).lower(), e
    else:
        raise AssertionError("triangle violation accepted")

    passed, report = qmobius.verify("default", 7)
    report = json.loads(report)
    assert passed and report["seed"] == 7
    print("smoke test passed:", len(report["results"]["certificates"]), "certificates")


if __name__ == "__main__":
    main()
