"""Model counting and entailment recovered from weight moments.

Under the integer counting weights (both polarity means 1, both variances
3, polarity covariance -1) the weight of a total assignment has mean 1 and
variance 4^n - 1, and the weights of two distinct assignments covary by
exactly -1.  A function with m models therefore satisfies

    Var(W_f) = m (4^n - 1) - m (m - 1) = m (4^n - m),

and because 0 <= m <= 2^n the ratio Var / (4^n - 1) always lands in the
half-open interval (m - 1, m], so the count is its ceiling.  The covariance
of two counts plays the same role for the conjunction:
Cov(W_f, W_g) = |A ∩ B| 4^n - |A||B|, whose ceiling over 4^n - 1 is
|A ∩ B|; comparing it with the count of f decides f ⊨ g.

The third construction goes the other way: one fresh selector variable z
with mean-one weights of variance 3 and polarity covariance -3 turns the
pair (f, g) into the single circuit h = (z ∧ f) ∨ (¬z ∧ g), and

    Cov(W_f, W_g) = Var(W_f) + Var(W_g) - Var(W_h)/4 + 3(E[W_f]-E[W_g])²/4

holds for arbitrary weights on the original variables, so a variance
procedure already answers covariance queries.

Everything here is exact: integer weights keep the engine in integer
arithmetic, and ceilings are taken with rational floor division.  These
functions demonstrate the constructions at desk scale -- the unstructured
fallback enumerates models and is no faster than brute force.
"""

from fractions import Fraction

from .circuit import Circuit, Vtree, validate
from .errors import ValidationError
from .moments import cov_wmc, exp_wmc, locate_group_vnodes, var_wmc
from .oracle import enumerate_models, oracle_cov, oracle_exp, oracle_var
from .weights import WeightModel, counting_weights, selector_weights


def _ceil_ratio(num, den):
    return int(-((-num) // den))


def _nvars(f, n):
    if isinstance(f, Circuit):
        if n is not None and n != f.vt.n_vars:
            raise ValidationError('variable count disagrees with circuit')
        return f.vt.n_vars
    if n is None:
        raise ValidationError('model lists need an explicit variable count')
    return n


def _engine_ok(c):
    rep = validate(c)
    return rep.decomposable and rep.structured \
        and rep.determinism in ('verified', 'by-construction')


def count_via_variance(f, n=None):
    """Model count of f as ceil(Var(W_f) / (4^n - 1)) under counting
    weights.  f may be a circuit or an iterable of model bitmasks (then n
    is required)."""
    wm = counting_weights()
    n = _nvars(f, n)
    if isinstance(f, Circuit) and _engine_ok(f):
        var = var_wmc(f, wm)
    else:
        var = oracle_var(f, wm, n=n)
    denom = 4 ** n - 1
    count = _ceil_ratio(var, denom)
    # the ratio must land in (count - 1, count]; a miss means broken moments
    assert denom * (count - 1) < var <= denom * count
    return count


def entails_via_cov(f, g, n=None):
    """Decide f |= g by comparing the model count of f against the count
    of f ∧ g, the latter read off Cov(W_f, W_g) under counting weights."""
    wm = counting_weights()
    n = _nvars(f, _nvars(g, n))
    g2 = _shared_vtree(f, g) \
        if isinstance(f, Circuit) and isinstance(g, Circuit) else None
    if g2 is not None and _engine_ok(f) and _engine_ok(g2):
        var_f = var_wmc(f, wm)
        cov_fg = cov_wmc(f, g2, wm)
    else:
        var_f = oracle_var(f, wm, n=n)
        cov_fg = oracle_cov(f, g, wm, n=n)
    denom = 4 ** n - 1
    return _ceil_ratio(var_f, denom) == _ceil_ratio(cov_fg, denom)


# ---- the selector construction ---------------------------------------------


def _nested_form(vt):
    out = {}
    stack = [(vt.root, False)]
    while stack:
        u, expanded = stack.pop()
        if vt.is_leaf(u):
            out[u] = vt.var[u]
        elif expanded:
            out[u] = (out[vt.left[u]], out[vt.right[u]])
        else:
            stack.append((u, True))
            stack.append((vt.right[u], False))
            stack.append((vt.left[u], False))
    return out[vt.root]


def _copy_into(dst, src):
    m = {0: 0, 1: 1}
    for i in sorted(src.reachable()):
        k = src.kind[i]
        if k == 'L':
            m[i] = dst.literal(src.lit[i])
        elif k == 'A':
            m[i] = dst.conj(tuple(m[x] for x in src.children[i]))
        elif k == 'O':
            m[i] = dst.disj(tuple(m[x] for x in src.children[i]))
    return m[src.root]


def _shared_vtree(f, g):
    """g rebased onto f's vtree object when the trees agree, else None."""
    if f.vt is g.vt:
        return g
    if _nested_form(f.vt) != _nested_form(g.vt):
        return None
    g2 = Circuit(f.vt)
    g2.root = _copy_into(g2, g)
    g2.deterministic_by_construction = g.deterministic_by_construction
    return g2


def ite_circuit(f, g):
    """(z ∧ f) ∨ (¬z ∧ g) over the vtree extended with a fresh selector z
    as the left child of a new root.  Returns (h, z)."""
    if not (isinstance(f, Circuit) and isinstance(g, Circuit)):
        raise ValidationError('selector construction needs circuits')
    g = _shared_vtree(f, g)
    if g is None:
        raise ValidationError('circuits must share a vtree')
    z = f.vt.n_vars + 1
    vt2 = Vtree.from_nested((z, _nested_form(f.vt)))
    h = Circuit(vt2)
    rf = _copy_into(h, f)
    rg = _copy_into(h, g)
    h.root = h.disj((h.conj((h.literal(z), rf)),
                     h.conj((h.literal(-z), rg))))
    # the two branches disagree on z, so the new or-node is deterministic
    h.deterministic_by_construction = (f.deterministic_by_construction
                                       and g.deterministic_by_construction)
    return h, z


def _quarter(x):
    if isinstance(x, float):
        return x / 4
    return Fraction(x, 4)


def ite_cov_identity_check(f, g, wm=None, n=None, z=None):
    """Evaluate both sides of the selector identity and report the gap.

    lhs = Cov(W_f, W_g); rhs rebuilds it from the variances of f, g and of
    h = (z ∧ f) ∨ (¬z ∧ g) plus the squared mean gap.  With int or Fraction
    weights the residual is exactly zero.  wm defaults to counting weights;
    it covers the original variables only, the selector's moments are fixed
    by the construction.
    """
    wm = counting_weights() if wm is None else wm
    n = _nvars(f, _nvars(g, n))
    if z is not None:
        if 1 <= z <= n:
            raise ValidationError(
                'selector variable %d collides with the function variables'
                % z)
        if z != n + 1:
            raise ValidationError('selector must be the next variable id')
    z = n + 1
    wm_z = WeightModel({**wm.vars, z: selector_weights()},
                       wm.groups, wm.default)

    g2 = _shared_vtree(f, g) \
        if isinstance(f, Circuit) and isinstance(g, Circuit) else None
    if g2 is not None and _engine_ok(f) and _engine_ok(g2):
        g = g2
        gv = locate_group_vnodes(f.vt, wm) if wm.groups else None
        e_f, e_g = exp_wmc(f, wm, gv), exp_wmc(g, wm, gv)
        v_f, v_g = var_wmc(f, wm, gv), var_wmc(g, wm, gv)
        lhs = cov_wmc(f, g, wm, gv)
        h, _ = ite_circuit(f, g)
        gv2 = locate_group_vnodes(h.vt, wm_z) if wm_z.groups else None
        v_h = var_wmc(h, wm_z, gv2)
    else:
        mf = enumerate_models(f) if isinstance(f, Circuit) else list(f)
        mg = enumerate_models(g) if isinstance(g, Circuit) else list(g)
        mh = [a | (1 << n) for a in mf] + list(mg)
        e_f, e_g = oracle_exp(mf, wm, n), oracle_exp(mg, wm, n)
        v_f, v_g = oracle_var(mf, wm, n), oracle_var(mg, wm, n)
        lhs = oracle_cov(mf, mg, wm, n)
        v_h = oracle_var(mh, wm_z, n + 1)
    gap = e_f - e_g
    rhs = v_f + v_g - _quarter(v_h) + 3 * _quarter(gap * gap)
    return {'lhs': lhs, 'rhs': rhs, 'residual': lhs - rhs}
