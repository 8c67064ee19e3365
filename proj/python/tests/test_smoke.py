import numpy as np
import pytest

import otoclab as ol


@pytest.fixture(scope="module")
def chain():
    n = 3
    ev = ol.Evolver(ol.ising_hamiltonian(n))
    w = ol.site_pauli(n, 1, "z")
    v = ol.site_pauli(n, n, "z")
    rho = np.eye(2**n) / 2**n
    return n, ev, w, v, rho


def test_otoc_matches_numpy(chain):
    n, ev, w, v, rho = chain
    t = 1.3
    u = ev.propagator(t)
    wt = u.conj().T @ w @ u
    direct = np.trace(rho @ wt @ v @ wt @ v)
    assert abs(ol.otoc(rho, w, v, ev, t) - direct) < 1e-12


def test_quasiprob_moments(chain):
    n, ev, w, v, rho = chain
    q = ol.coarse_quasiprob(rho, w, v, ev, 2.0)
    assert q.axis_names == ["v1", "w2", "v2", "w3"]
    assert q.values.shape == (2, 2, 2, 2)
    assert abs(q.sum() - 1) < 1e-12
    f = ol.otoc(rho, w, v, ev, 2.0)
    assert abs(ol.otoc_moment(q) - f) < 1e-10
    assert abs(ol.work_moment(ol.work_distribution(q)) - f) < 1e-10
    assert abs(q.value([1, 1, 1, 1]) - q.values[1, 1, 1, 1]) < 1e-15


def test_fine_grain_sums_to_coarse(chain):
    n, ev, w, v, rho = chain
    fine = ol.fine_quasiprob(rho, w, v, ev, 0.7)
    assert fine.fine
    coarse = ol.coarse_grain(fine)
    direct = ol.coarse_quasiprob(rho, w, v, ev, 0.7)
    assert np.max(np.abs(coarse.values - direct.values)) < 1e-12


def test_series_is_real_at_infinite_temperature(chain):
    n, ev, w, v, rho = chain
    f, q = ol.coarse_series(rho, w, v, ev, [0.0, 1.0, 2.0])
    assert abs(f[0] - 1) < 1e-12
    assert max(np.max(np.abs(a.imag)) for a in q) < 1e-12


def test_weak_measurement_inference():
    ev = ol.Evolver(ol.ising_hamiltonian(2))
    w, v = ol.site_pauli(2, 1, "z"), ol.site_pauli(2, 2, "z")
    rho = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    r = ol.infer_quasiprob(rho, w, v, ev, 1.0, [0.05, 0.1, 0.15, 0.2])
    direct = ol.coarse_quasiprob(rho, w, v, ev, 1.0)
    assert np.max(np.abs(r["quasi"].values - direct.values)) < 1e-8


def test_brownian_ensemble_shapes():
    n = 3
    w, v = ol.site_pauli(n, 1, "z"), ol.site_pauli(n, 2, "z")
    r = ol.brownian_ensemble(np.eye(8) / 8, w, v, n, steps=20, trajectories=4, sample_every=5)
    assert len(r["times"]) == 5
    assert len(r["quasi"]) == 16
    assert abs(r["series"]["F"]["mean"][0] - 1) < 1e-12
    assert r["max_unitarity_defect"] < 1e-8


def test_retrodiction_methods_agree():
    rng = np.random.default_rng(3)
    d = 4
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    f = np.zeros(d, complex)
    f[0] = 1
    chain = []
    for _ in range(3):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        chain.append(a + a.conj().T)
    g1, _ = ol.gamma_weak(chain, rho, f, "direct")
    g2, peak = ol.gamma_weak(chain, rho, f, "factored")
    assert abs(g1 - g2) < 1e-10
    assert peak > 0


def test_decomposition_reconstructs(chain):
    ev = ol.Evolver(ol.ising_hamiltonian(2))
    w, v = ol.site_pauli(2, 1, "x"), ol.site_pauli(2, 2, "y") + 0.3 * ol.site_pauli(2, 1, "z")
    rho = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    r = ol.decompose(rho, w, v, ev, 0.9)
    assert r["reconstruction_error"] < 1e-8
    assert r["trace_error"] < 1e-12


def test_run_experiment():
    assert "otoc-series" in ol.experiment_catalog()
    out = ol.run_experiment("otoc-series", n=3, t_max=1.0, t_step=0.5)
    assert out["metadata"]["version"] == ol.__version__
    assert out["columns"]["t"] == [0.0, 0.5, 1.0]
    out = ol.run_experiment("weakmeas-inference", n=2)
    assert all(isinstance(x, str) for x in out["columns"]["label"])


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        ol.run_experiment("otoc-series", n=3, state="warm")
    with pytest.raises(ol.ConfigError):
        ol.run_experiment("no-such-experiment")
    with pytest.raises(ValueError):
        ol.site_pauli(2, 1, "q")
