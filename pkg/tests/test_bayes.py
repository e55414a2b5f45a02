import json
from fractions import Fraction

import pytest
from numpy.testing import assert_allclose

from wmcvar.bayes import (BayesNet, Evidence, MarginalPipeline, brute_marginal,
                          demo_networks, enc1, enc2, marginal_moments,
                          sensitivity_sweep)
from wmcvar.errors import EvidenceError, FormatError, ValidationError
from wmcvar.oracle import enumerate_models, oracle_var
from wmcvar.sddc import compile_cnf, condition1_vtree


def conditioned_circuit(pipe, ev):
    return pipe._circuit_for(pipe._resolve(ev))


class TestBayesNet:
    def test_demo_networks_load(self):
        nets = demo_networks()
        assert set(nets) >= {'chain2', 'collider3', 'sprinkler4', 'alarm5',
                             'multival2'}
        alarm = nets['alarm5']
        got = alarm.parents[alarm.var_index('Alarm')]
        assert tuple(alarm.names[p] for p in got) \
            == ('Burglary', 'Earthquake')

    def test_cpt_columns_sum_to_one(self):
        for bn in demo_networks().values():
            for i in range(len(bn.names)):
                for c in range(bn.n_configs(i)):
                    s = sum(bn.cpts[i][j][c] for j in range(bn.k(i)))
                    assert_allclose(s, 1.0, rtol=1e-12)

    def test_bad_column_rejected(self):
        doc = {'variables': [{'name': 'A', 'values': ['t', 'f'],
                              'parents': [], 'cpt': [[0.4], [0.4]]}]}
        with pytest.raises(ValidationError):
            BayesNet.from_json(json.dumps(doc))

    def test_unknown_parent_rejected(self):
        doc = {'variables': [{'name': 'A', 'values': ['t', 'f'],
                              'parents': ['Z'], 'cpt': [[0.4], [0.6]]}]}
        with pytest.raises(FormatError):
            BayesNet.from_json(json.dumps(doc))


class TestEvidence:
    def test_lookup(self):
        bn = demo_networks()['chain2']
        ev = Evidence(bn, {'B': 't'})
        assert ev.fixed == {bn.var_index('B'): 0}

    def test_unknown_variable(self):
        bn = demo_networks()['chain2']
        with pytest.raises(EvidenceError):
            Evidence(bn, {'Q': 't'})

    def test_unknown_value(self):
        bn = demo_networks()['chain2']
        with pytest.raises(EvidenceError):
            Evidence(bn, {'B': 'perhaps'})


class TestEncodings:
    def test_enc2_model_count(self):
        # models = joint assignments, lifted once per parameter prop whose
        # parent configuration is not the realized one
        bn = demo_networks()['chain2']
        cnf, wm, layout = enc2(bn)
        c = compile_cnf(cnf, condition1_vtree(layout.var_blocks))
        # chain2: 4 joints; B leaves one of its two configs free each time
        assert len(enumerate_models(c)) == 4 * 2
        assert cnf.n_vars == 7

    def test_enc1_models_are_joints(self):
        bn = demo_networks()['multival2']
        cnf, wm, layout = enc1(bn)
        c = compile_cnf(cnf, condition1_vtree(layout.var_blocks))
        # parameters are fully determined by the indicators
        assert len(enumerate_models(c)) == 3 * 2

    def test_enc1_group_per_config(self):
        bn = demo_networks()['multival2']
        cnf, wm, layout = enc1(bn)
        # one correlated block for A, one per parent value of B
        assert len(wm.groups) == 1 + 3

    def test_parameter_names(self):
        bn = demo_networks()['chain2']
        pipe = MarginalPipeline(bn, 'enc2')
        labels = sorted(p[0] for p in pipe.parameters())
        assert labels == ['Pr(A=t)', 'Pr(B=t|A=f)', 'Pr(B=t|A=t)']


class TestMarginals:
    def test_means_match_brute_force(self):
        for name, bn in demo_networks().items():
            pipe = MarginalPipeline(bn, 'enc1' if name == 'multival2'
                                    else 'enc2')
            last = len(bn.names) - 1
            ev = Evidence(bn, {bn.names[last]: bn.values[last][0]})
            want = brute_marginal(bn, ev)
            for method in ('conjoin', 'zero_weights'):
                got = pipe.moments(ev, method)
                assert_allclose(got['mean'], want, rtol=1e-10,
                                err_msg='%s/%s' % (name, method))

    def test_methods_agree(self):
        for name, bn in demo_networks().items():
            enc = 'enc1' if name == 'multival2' else 'enc2'
            pipe = MarginalPipeline(bn, enc)
            ev = Evidence(bn, {bn.names[0]: bn.values[0][-1]})
            a = pipe.moments(ev, 'conjoin')
            b = pipe.moments(ev, 'zero_weights')
            assert_allclose(a['mean'], b['mean'], rtol=1e-12)
            assert_allclose(a['variance'], b['variance'], rtol=1e-12,
                            atol=1e-18)

    def test_encodings_agree_on_binary(self):
        for name in ('chain2', 'collider3', 'sprinkler4', 'alarm5'):
            bn = demo_networks()[name]
            last = len(bn.names) - 1
            ev = Evidence(bn, {bn.names[last]: bn.values[last][0]})
            a = marginal_moments(bn, ev, encoding='enc1')
            b = marginal_moments(bn, ev, encoding='enc2')
            assert_allclose(a['mean'], b['mean'], rtol=1e-9)
            assert_allclose(a['variance'], b['variance'], rtol=1e-9,
                            atol=1e-15)

    def test_empty_evidence_normalized(self):
        for name, bn in demo_networks().items():
            enc = 'enc1' if name == 'multival2' else 'enc2'
            got = MarginalPipeline(bn, enc).moments()
            assert_allclose(got['mean'], 1.0, atol=1e-12)
            assert abs(got['variance']) <= 1e-12

    def test_variance_against_oracle_small(self):
        # small prop counts allow the enumeration oracle as a referee
        for name, enc in (('chain2', 'enc2'), ('collider3', 'enc2'),
                          ('multival2', 'enc1')):
            bn = demo_networks()[name]
            pipe = MarginalPipeline(bn, enc)
            last = len(bn.names) - 1
            ev = Evidence(bn, {bn.names[last]: bn.values[last][0]})
            got = pipe.moments(ev, 'conjoin')
            c = conditioned_circuit(pipe, ev)
            assert_allclose(got['variance'], oracle_var(c, pipe.wm),
                            rtol=1e-9, err_msg=name)

    def test_multi_variable_evidence(self):
        bn = demo_networks()['collider3']
        ev = Evidence(bn, {'A': 't', 'C': 'f'})
        pipe = MarginalPipeline(bn, 'enc2')
        got = pipe.moments(ev)
        assert_allclose(got['mean'], brute_marginal(bn, ev), rtol=1e-10)
        c = conditioned_circuit(pipe, ev)
        assert_allclose(got['variance'], oracle_var(c, pipe.wm), rtol=1e-9)

    def test_exact_mode(self):
        bn = demo_networks()['chain2']
        got = marginal_moments(bn, Evidence(bn, {'B': 't'}), exact=True)
        assert isinstance(got['mean'], Fraction)
        assert_allclose(float(got['mean']), 0.52, rtol=1e-12)

    def test_degenerate_row_retains_agreement(self):
        # Pr(Wet=yes | off, no) = 0 exactly; that parameter must carry no
        # spread and both methods must keep agreeing around it
        bn = demo_networks()['sprinkler4']
        ev = Evidence(bn, {'Wet': 'yes'})
        pipe = MarginalPipeline(bn, 'enc2')
        got = pipe.moments(ev)
        assert_allclose(got['mean'], brute_marginal(bn, ev), rtol=1e-10)
        other = pipe.moments(ev, 'zero_weights')
        assert_allclose(got['variance'], other['variance'], rtol=1e-12)


class TestSweep:
    def test_rows_sorted_and_complete(self):
        bn = demo_networks()['chain2']
        ev = Evidence(bn, {'B': 't'})
        rows = sensitivity_sweep(bn, ev, factor=0.1)
        assert rows[-1]['parameter'] == '(none)'
        vs = [r['variance'] for r in rows]
        assert vs == sorted(vs)
        assert len(rows) == 3 + 1

    def test_factor_one_is_baseline(self):
        bn = demo_networks()['chain2']
        ev = Evidence(bn, {'B': 't'})
        base = marginal_moments(bn, ev, method='zero_weights')['variance']
        for r in sensitivity_sweep(bn, ev, factor=1.0):
            assert_allclose(r['variance'], base, rtol=1e-12)

    def test_parallel_matches_serial(self):
        bn = demo_networks()['collider3']
        ev = Evidence(bn, {'C': 't'})
        a = sensitivity_sweep(bn, ev, jobs=1)
        b = sensitivity_sweep(bn, ev, jobs=3)
        assert [r['parameter'] for r in a] == [r['parameter'] for r in b]
        assert_allclose([r['variance'] for r in a],
                        [r['variance'] for r in b], rtol=1e-12)

    def test_shrinking_reduces_variance(self):
        bn = demo_networks()['alarm5']
        ev = Evidence(bn, {'JohnCalls': 't'})
        base = marginal_moments(bn, ev, method='zero_weights')['variance']
        rows = sensitivity_sweep(bn, ev, factor=0.1)
        assert all(r['variance'] <= base * (1 + 1e-9) for r in rows)
        # at least one parameter matters
        assert rows[0]['variance'] < base * 0.999

    def test_bad_factor(self):
        bn = demo_networks()['chain2']
        with pytest.raises(ValidationError):
            sensitivity_sweep(bn, factor=0.0)
