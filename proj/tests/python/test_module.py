import itertools
import math

import pytest

import ivpotts


def brute_force_log_z(volume, q, r, beta):
    sites = volume.sites
    index = {s: i for i, s in enumerate(sites)}
    bonds = [(a, b) for a in sites for b in sites
             if a < b and abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1]
    z = 0.0
    for sigma in itertools.product(range(1, q + r + 1), repeat=len(sites)):
        matched = sum(1 for a, b in bonds if sigma[index[a]] == sigma[index[b]] <= q)
        z += math.exp(beta * matched)
    return math.log(z)


def test_single_bond_partition_function():
    p = ivpotts.ModelParams(q=2, r=1, beta=math.log(2))
    # seven unmatched pairs plus two matched visible pairs of weight 2
    assert ivpotts.log_partition_free(ivpotts.Volume.rect(2, 1), p) == pytest.approx(math.log(11), abs=1e-12)


@pytest.mark.parametrize("q,r,beta", [(2, 1, 0.3), (1, 2, 1.1), (3, 0, 0.7)])
def test_partition_function_matches_brute_force(q, r, beta):
    v = ivpotts.Volume.rect(2, 2)
    p = ivpotts.ModelParams(q=q, r=r, beta=beta)
    assert ivpotts.log_partition_free(v, p) == pytest.approx(brute_force_log_z(v, q, r, beta), abs=1e-10)


def test_random_cluster_identity():
    v = ivpotts.Volume.rect(3, 2)
    p = ivpotts.ModelParams(q=2, r=1, beta=0.8)
    rc = ivpotts.rc_log_partition(v, p.p_beta, p.q, p.r)
    assert ivpotts.log_partition_free(v, p) == pytest.approx(p.beta * v.num_bonds + rc, abs=1e-10)


def test_transition_point_and_energy_crossing():
    bc = ivpotts.beta_bar_c(32)
    assert bc == pytest.approx(math.log(1 + math.sqrt(32)), abs=1e-14)
    row = ivpotts.energy_curves(2, 30, [bc])[0]
    assert row["e_order"] == pytest.approx(row["e_disorder"], abs=1e-12)
    assert ivpotts.latent_heat_asymptote(32) == pytest.approx(2 + 2 / math.sqrt(32), abs=1e-14)


def test_invalid_params_raise():
    with pytest.raises(ValueError):
        ivpotts.ModelParams(q=0, r=1, beta=1.0)


def test_chain_is_reproducible_and_bounded():
    kw = dict(q=2, r=30, beta=2.4, torus=[8, 8], sweeps=200, burn_in=20, seed=5)
    a, b = ivpotts.run_chain(**kw), ivpotts.run_chain(**kw)
    assert a["energy_per_site"] == b["energy_per_site"]
    assert len(a["energy_per_site"]) == 200
    assert len(a["colour_fractions"]) == 32
    assert all(-2.0 - 1e-12 <= e <= 0.0 for e in a["energy_per_site"])
    h = ivpotts.energy_histogram(a["energy_per_site"], a["num_sites"])
    assert sum(h["counts"]) == 200


def test_bimodality_on_synthetic_histograms():
    edges = [float(i) for i in range(21)]
    two = [50 if i in (4, 15) else 40 if i in (3, 5, 14, 16) else 1 for i in range(20)]
    one = [int(100 * math.exp(-((i - 10) / 3) ** 2)) for i in range(20)]
    assert ivpotts.detect_bimodality(edges, two)["bimodal"]
    assert not ivpotts.detect_bimodality(edges, one)["bimodal"]
