"""Command line front end.

Every subcommand prints one JSON report per run on stdout with a stable
key order and floats at 17 significant digits, so identical invocations
are byte-identical.  Timings (milliseconds per stage) go to stderr as a
separate JSON line, keeping the stdout artifact reproducible; --timings
copies them into the report for convenience at the cost of that guarantee.

Exit codes: 0 success, 1 generic, 2 malformed input, 3 structural
validation, 4 weight mismatch, 5 vtree mismatch, 6 evidence mismatch.
"""

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from .bayes import BayesNet, Evidence, MarginalPipeline
from .circuit import parse_sdd, parse_vtree, validate
from .errors import (ValidationError, VtreeMismatchError, WeightError,
                     WmcvarError)
from .moments import MomentEngine, locate_group_vnodes
from .reductions import (count_via_variance, entails_via_cov,
                         ite_cov_identity_check)
from .sddc import Cnf, compile_cnf
from .weights import WeightModel, counting_weights


# ---- reproducible JSON ------------------------------------------------------


def _jnum(x):
    if isinstance(x, bool):
        return 'true' if x else 'false'
    if isinstance(x, float):
        return format(x, '.17g')
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return json.dumps(str(x))
    return None


def _jtext(x):
    n = _jnum(x)
    if n is not None:
        return n
    if x is None:
        return 'null'
    if isinstance(x, dict):
        return '{%s}' % ','.join('%s:%s' % (json.dumps(str(k)), _jtext(v))
                                 for k, v in x.items())
    if isinstance(x, (list, tuple)):
        return '[%s]' % ','.join(_jtext(v) for v in x)
    return json.dumps(x)


def _emit(obj, stream=None):
    (stream or sys.stdout).write(_jtext(obj) + '\n')


# ---- input plumbing ---------------------------------------------------------


def _read(path):
    try:
        with open(path, 'rb') as fh:
            return fh.read()
    except OSError as e:
        raise WmcvarError('cannot read %s: %s' % (path, e)) from None


class _Run:
    """Collects input hashes and stage timings for one invocation."""

    def __init__(self, command):
        self.command = command
        self.inputs = {}
        self.timings = {}
        self._t = time.perf_counter()

    def stage(self, name):
        now = time.perf_counter()
        self.timings[name] = self.timings.get(name, 0.0) \
            + (now - self._t) * 1e3
        self._t = now

    def read(self, role, path):
        data = _read(path)
        self.inputs[role] = {'path': path,
                             'sha256': hashlib.sha256(data).hexdigest()}
        return data.decode('utf-8')

    def report(self, results, mode=None, timings=False):
        out = {'command': self.command, 'inputs': self.inputs}
        if mode:
            out['mode'] = mode
        out['results'] = results
        if timings:
            out['timings_ms'] = self.timings
        return out


def _load_vtree(run, path, role='vtree'):
    return parse_vtree(run.read(role, path))


def _load_circuit(run, path, vt, det_limit, role='circuit'):
    c = parse_sdd(run.read(role, path), vt)
    rep = validate(c, determinism_limit=det_limit)
    if not rep.ok:
        raise ValidationError('; '.join(rep.problems) or
                              'circuit failed validation')
    return c


def _load_weights(run, path, n_vars, exact):
    wm = WeightModel.from_json(run.read('weights', path), exact=exact)
    wm.validate_for(n_vars)
    missing = [v for v in range(1, n_vars + 1) if v not in wm.vars]
    if missing:
        raise WeightError('no weights for variables %s'
                          % ', '.join(map(str, missing)))
    return wm


def _same_vtree_file(run, args, vt):
    other = getattr(args, 'vtree2', None)
    if other is None:
        return
    if other == args.vtree:
        return
    if _read(other) != _read(args.vtree):
        raise VtreeMismatchError('circuits name different vtree files')
    run.inputs['vtree2'] = {'path': other,
                            'sha256': run.inputs['vtree']['sha256']}


# ---- subcommands ------------------------------------------------------------


def _engine(vt, wm):
    gv = locate_group_vnodes(vt, wm) if wm.groups else None
    return MomentEngine(vt, wm, gv)


def cmd_expect(args):
    run = _Run('expect')
    vt = _load_vtree(run, args.vtree)
    c = _load_circuit(run, args.circuit, vt, args.validate_determinism)
    wm = _load_weights(run, args.weights, vt.n_vars, args.exact)
    run.stage('parse')
    eng = _engine(vt, wm)
    run.stage('preprocess')
    val = eng.exp(c)
    run.stage('query')
    _emit(run.report({'expect': val, 'over': 'all'},
                     {'exact': bool(args.exact)}, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


def cmd_variance(args):
    run = _Run('variance')
    vt = _load_vtree(run, args.vtree)
    c = _load_circuit(run, args.circuit, vt, args.validate_determinism)
    wm = _load_weights(run, args.weights, vt.n_vars, args.exact)
    run.stage('parse')
    eng = _engine(vt, wm)
    run.stage('preprocess')
    val = eng.var(c)
    run.stage('query')
    _emit(run.report({'variance': val, 'over': 'all'},
                     {'exact': bool(args.exact)}, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


def cmd_covariance(args):
    run = _Run('covariance')
    vt = _load_vtree(run, args.vtree)
    _same_vtree_file(run, args, vt)
    f = _load_circuit(run, args.circuit, vt, args.validate_determinism)
    g = _load_circuit(run, args.circuit2, vt, args.validate_determinism,
                      role='circuit2')
    wm = _load_weights(run, args.weights, vt.n_vars, args.exact)
    run.stage('parse')
    eng = _engine(vt, wm)
    run.stage('preprocess')
    val = eng.cov(f, g)
    run.stage('query')
    _emit(run.report({'covariance': val, 'over': 'all'},
                     {'exact': bool(args.exact)}, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


def cmd_count(args):
    run = _Run('count')
    vt = _load_vtree(run, args.vtree)
    c = _load_circuit(run, args.circuit, vt, args.validate_determinism)
    run.stage('parse')
    from .moments import var_wmc
    var = var_wmc(c, counting_weights())
    denom = 4 ** vt.n_vars - 1
    count = count_via_variance(c)
    run.stage('query')
    _emit(run.report({'count': count,
                      'variance': Fraction(var),
                      'ratio': Fraction(var, denom),
                      'over': 'all'},
                     {'exact': True}, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


def cmd_entails(args):
    run = _Run('entails')
    vt = _load_vtree(run, args.vtree)
    _same_vtree_file(run, args, vt)
    f = _load_circuit(run, args.circuit, vt, args.validate_determinism)
    g = _load_circuit(run, args.circuit2, vt, args.validate_determinism,
                      role='circuit2')
    run.stage('parse')
    ans = entails_via_cov(f, g)
    run.stage('query')
    _emit(run.report({'entails': bool(ans)}, {'exact': True}, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


def cmd_ite_check(args):
    run = _Run('ite-check')
    vt = _load_vtree(run, args.vtree)
    f = _load_circuit(run, args.circuit, vt, args.validate_determinism)
    g = _load_circuit(run, args.circuit2, vt, args.validate_determinism,
                      role='circuit2')
    wm = None
    if args.weights:
        wm = _load_weights(run, args.weights, vt.n_vars, exact=True)
    run.stage('parse')
    r = ite_cov_identity_check(f, g, wm)
    run.stage('query')
    _emit(run.report({'lhs': _frac(r['lhs']), 'rhs': _frac(r['rhs']),
                      'residual': _frac(r['residual']), 'over': 'all'},
                     {'exact': True}, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


def _frac(x):
    return x if isinstance(x, float) else Fraction(x)


def cmd_compile(args):
    run = _Run('compile')
    cnf = Cnf.from_dimacs(run.read('cnf', args.cnf))
    vt = _load_vtree(run, args.vtree)
    run.stage('parse')
    c = compile_cnf(cnf, vt, node_budget=args.budget)
    run.stage('compile')
    from .circuit import sdd_text
    text = sdd_text(c)
    with open(args.out, 'w') as fh:
        fh.write(text)
    run.stage('write')
    _emit(run.report({'nodes': len(c.reachable()), 'edges': c.n_edges,
                      'out': args.out}, None, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


def cmd_bn(args):
    run = _Run('bn')
    bn = BayesNet.from_json(run.read('network', args.network))
    evidence = Evidence(bn)
    if args.evidence:
        evidence = Evidence.from_json(bn, run.read('evidence', args.evidence))
    run.stage('parse')
    method = 'zero_weights' if args.method == 'zero' else args.method
    pipe = MarginalPipeline(bn, args.encoding, node_budget=args.budget,
                            exact=args.exact)
    run.stage('compile')
    got = pipe.moments(evidence, method)
    run.stage('query')
    results = {'mean': got['mean'], 'variance': got['variance'],
               'over': 'all', 'encoding': args.encoding, 'method': method}
    if args.sweep:
        rows = pipe.sweep(evidence, factor=args.factor, method=method,
                          jobs=args.jobs)
        run.stage('sweep')
        if args.csv:
            out = ['parameter,variance']
            out += ['%s,%s' % (json.dumps(r['parameter']),
                               _jnum(r['variance']))
                    for r in rows]
            sys.stdout.write('\n'.join(out) + '\n')
            _emit(run.timings, sys.stderr)
            return 0
        results['sweep'] = [{'parameter': r['parameter'],
                             'variance': r['variance']} for r in rows]
    _emit(run.report(results, {'exact': bool(args.exact)}, args.timings))
    _emit(run.timings, sys.stderr)
    return 0


# ---- parser -----------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(
        prog='wmcvar',
        description='Moments of weighted model counts over st-d-DNNF '
                    'circuits, counting/entailment reductions, and '
                    'Bayesian-network marginal variance.')
    sub = p.add_subparsers(dest='cmd', required=True)

    def common(sp, circuits=1, weights=True):
        sp.add_argument('circuit', help='SDD-format circuit file')
        if circuits == 2:
            sp.add_argument('circuit2', help='second circuit file')
        sp.add_argument('--vtree', required=True, help='vtree file')
        if circuits == 2:
            sp.add_argument('--vtree2',
                            help='vtree file named by the second circuit; '
                                 'must match --vtree')
        if weights:
            sp.add_argument('--weights', required=True,
                            help='weight-moment JSON')
        sp.add_argument('--exact', action='store_true',
                        help='exact rational arithmetic')
        sp.add_argument('--validate-determinism', type=int, default=20,
                        metavar='N',
                        help='exhaustively check determinism up to N '
                             'variables (default 20)')
        sp.add_argument('--timings', action='store_true',
                        help='include timings in the stdout report '
                             '(breaks byte-identical output)')

    sp = sub.add_parser('expect', help='expected weighted model count')
    common(sp)
    sp.set_defaults(func=cmd_expect)

    sp = sub.add_parser('variance', help='variance of the WMC')
    common(sp)
    sp.set_defaults(func=cmd_variance)

    sp = sub.add_parser('covariance', help='covariance of two WMCs')
    common(sp, circuits=2)
    sp.set_defaults(func=cmd_covariance)

    sp = sub.add_parser('count', help='model count via the variance '
                                      'reduction (exact)')
    common(sp, weights=False)
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser('entails', help='sentential entailment via '
                                        'covariance (exact)')
    common(sp, circuits=2, weights=False)
    sp.set_defaults(func=cmd_entails)

    sp = sub.add_parser('ite-check', help='selector covariance identity '
                                          'residual')
    common(sp, circuits=2, weights=False)
    sp.add_argument('--weights', help='weight-moment JSON '
                                      '(default: counting weights)')
    sp.set_defaults(func=cmd_ite_check)

    sp = sub.add_parser('compile', help='compile DIMACS CNF to an '
                                        'SDD-format circuit')
    sp.add_argument('cnf', help='DIMACS CNF file')
    sp.add_argument('--vtree', required=True)
    sp.add_argument('--out', required=True, help='output circuit file')
    sp.add_argument('--budget', type=int, default=10 ** 6,
                    help='node budget (default 1e6)')
    sp.add_argument('--timings', action='store_true')
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser('bn', help='Bayesian-network marginal moments')
    sp.add_argument('network', help='network JSON file')
    sp.add_argument('--evidence', help='evidence JSON file')
    sp.add_argument('--encoding', choices=('enc1', 'enc2'), default='enc2')
    sp.add_argument('--method', choices=('conjoin', 'zero', 'zero_weights'),
                    default='conjoin')
    sp.add_argument('--sweep', action='store_true',
                    help='rank parameters by variance after shrinking each')
    sp.add_argument('--factor', type=float, default=0.1,
                    help='variance shrink factor for --sweep (default 0.1)')
    sp.add_argument('--csv', action='store_true',
                    help='emit the sweep table as CSV instead of JSON')
    sp.add_argument('--jobs', type=int, default=None,
                    help='parallel sweep workers')
    sp.add_argument('--exact', action='store_true')
    sp.add_argument('--budget', type=int, default=10 ** 6)
    sp.add_argument('--timings', action='store_true')
    sp.set_defaults(func=cmd_bn)

    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except WmcvarError as e:
        sys.stderr.write('error: %s\n' % e)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
