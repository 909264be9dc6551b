import math

import pytest

import bellscope as bs


def test_catalogue_and_local_bounds():
    rows = bs.table1()
    assert len(rows) == 19
    f = bs.table1_row(14).functional
    r = bs.local_bound(f, bs.Side.Max)
    assert r.exact and r.value == 2.0
    assert bs.local_bound(f, bs.Side.Min).value == -3.0
    assert bs.local_bound(bs.i3plus()).value == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_face_analysis():
    a = bs.face_analysis(bs.table1_row(19).functional, bs.Side.Min)
    assert a.spanned_dimension == 13
    assert bs.face_analysis(bs.table1_row(1).functional).is_facet


def test_table_round_trip_and_uniform_is_local():
    s = bs.Scenario.flagship()
    u = bs.ProbabilityTable.uniform(s)
    assert len(u.entries) == s.full_dimension == 81
    back = bs.ProbabilityTable.from_text(u.to_text())
    assert back.entries == u.entries
    assert bs.visibility_wrt_local_set(u).v_cr == 1.0
    assert bs.check_nonsignaling(u)


def test_seesaw_and_upper_bound_agree_on_row_18():
    f = bs.table1_row(18).functional
    s = bs.seesaw(f, 2, 2, restarts=10, seed=3)
    assert s.value == pytest.approx(math.sqrt(2), abs=1e-3)
    p = bs.correlation(s.realization)
    assert bs.evaluate(f, p) == pytest.approx(s.value, abs=1e-9)
    q = bs.quantum_bound(f, bs.MomentLevel.Npa1AB)
    assert q.solver.status == "optimal"
    assert q.value >= s.value - 1e-6
    assert q.value == pytest.approx(s.value, abs=5e-4)


def test_nearest_and_negativity():
    s = bs.Scenario.flagship()
    d = bs.ProbabilityTable.deterministic(s, [0, 1, 2], [2, 0, 1])
    assert abs(bs.di_negativity_bound(d).value) < 1e-6
    r = bs.nearest_quantum_correlation(bs.mix_with_white_noise(d, 0.5))
    assert r.l1_distance < 1e-6
    with pytest.raises(ValueError):
        bs.nearest_quantum_correlation(d, pin_functional=bs.i3plus())


def test_simulate_and_signaling():
    p = bs.correlation(bs.reference_i12_realization())
    bias = bs.MarginalBias(bs.Party.Alice, 0, 0, other=0, delta=0.02)
    c = bs.simulate_counts(p, shots=100000, seed=7, biases=[bias])
    assert c.total(0, 0) == 100000
    assert bs.signaling_deltas(c).flags(2.0)
    f = bs.frequencies_from_counts(bs.simulate_counts(p, shots=1000, seed=7))
    assert sum(f.entries) == pytest.approx(9.0)


def test_reference_povm_realization():
    v = bs.bell_value(bs.table1_row(12).functional, bs.reference_i12_realization())
    assert v == pytest.approx(2.5820, abs=2e-3)


def test_cli_round_trip():
    code, out, err = bs.run_cli(["--version"])
    assert code == 0 and bs.__version__ in out
    code, out, err = bs.run_cli(["local-bound", "row:14"])
    assert code == 0, err
    code, out, err = bs.run_cli(["upper-bound"])
    assert code == 2
