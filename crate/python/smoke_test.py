"""Smoke test for the snc extension module."""

import math

import snc


def main():
    p = snc.CodeParams(10, 12, q=8, packet_bytes=100)
    assert (p.k, p.n, p.q) == (10, 12, 8)
    assert math.isclose(p.rate, 10 / 12)

    path = snc.PathProfile.homogeneous(0.1, 3)
    assert path.hops == 3
    eta = snc.rper_single_hop(p, 0.1)
    assert 0.0 < eta < 0.1
    rho = snc.reliability_nc(p, path, 3)
    assert math.isclose(rho, (1 - eta) ** 3, rel_tol=1e-12)
    assert math.isclose(snc.reliability_uncoded(path, 3), 0.9 ** 3, rel_tol=1e-12)

    codec = snc.Codec(snc.CodeParams(4, 6, q=8, packet_bytes=3))
    data = [bytes([i, i + 1, i + 2]) for i in range(4)]
    packets = codec.encode(data, 7)
    assert len(packets) == 6
    payloads, full, rank = codec.decode(packets[2:])
    assert full and rank == 4
    assert [bytes(x) for x in payloads] == data

    costs = snc.complexity(p)
    assert set(costs) == {"source", "relay", "dest"}

    opt = snc.optimize_rate(p, path, 0.9, 10_000_000)
    assert opt["n"] >= p.k

    gain = snc.connectivity_gain(p, 0.1, 0.8, 10_000_000)
    assert gain["h_nc"] >= gain["h_unc"]

    axis, feasible, _ = snc.rate_region_grid("nc", step=0.1)
    assert len(axis) == len(feasible)

    est = snc.simulate(p, snc.PathProfile.homogeneous(0.1, 1), 2000, seed=3)
    for hat, ref, se in zip(est["rho_hat"], est["analytic_rho"], est["stderr"]):
        assert abs(hat - ref) < 6 * max(se, 1e-3)

    try:
        snc.CodeParams(10, 5)
    except ValueError:
        pass
    else:
        raise AssertionError("n < k accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
