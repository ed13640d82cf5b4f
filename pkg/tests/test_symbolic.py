import pytest
from hypothesis import given, strategies as st

from voicekex.symbolic import (
    DH,
    G,
    Atom,
    Exp,
    HashT,
    Kdf,
    Knowledge,
    Pair,
    Senc,
    Sig,
    chain,
    close_knowledge,
    depth,
    derivable,
    dh,
    parse_sexpr,
    to_sexpr,
    unchain,
)

a, b, c, k, m = (Atom(n) for n in "abckm")
ga, gb = Exp(G, a), Exp(G, b)
gab = dh(a, gb)
td = HashT(chain([ga, gb]))


# -- positive rules -------------------------------------------------------------


POSITIVE = [
    ({Pair(a, b)}, a),
    ({Pair(a, b)}, b),
    ({Senc(m, k), k}, m),
    ({Senc(m, Pair(a, b)), a, b}, m),  # key synthesized before decryption
    ({Senc(Pair(k, m), a), Senc(c, k), a}, c),  # nested: a opens k opens c
    ({Sig(m, k)}, m),
    ({a}, HashT(a)),
    ({a, b}, Pair(a, b)),
    ({m, k}, Senc(m, k)),
    ({m, k}, Sig(m, k)),
    ({a, G}, ga),
    ({a, gb}, gab),
    ({b, ga}, gab),  # commuted form
    ({a, gb, td}, Kdf("sess", gab, td)),
    ({Pair(Pair(a, b), c)}, Pair(c, a)),
]


@pytest.mark.parametrize("known, goal", POSITIVE)
def test_derivable(known, goal):
    assert derivable(goal, known)


# -- negative rules -------------------------------------------------------------


NEGATIVE = [
    ({ga, gb, G}, gab),  # computational DH: no rule builds g^ab from shares
    ({ga, gb, G, td}, Kdf("sess", gab, td)),
    ({Senc(m, k)}, m),
    ({Senc(m, k)}, k),
    ({HashT(a)}, a),
    ({Sig(m, k)}, k),
    ({ga}, a),
    ({Pair(a, b)}, c),
    ({a, b}, Kdf("sess", Pair(a, c), b)),
]


@pytest.mark.parametrize("known, goal", NEGATIVE)
def test_not_derivable(known, goal):
    assert not derivable(goal, known)


def test_post_compromise_session_key_stays_secret():
    sk_i, sk_r = Atom("sk:i"), Atom("sk:r")
    wire = {ga, gb, Sig(td, sk_i), Sig(td, sk_r), Senc(Pair(Atom("id"), Sig(td, sk_i)), Kdf("adhoc1", gab, td))}
    before = close_knowledge(wire | {G})
    after = close_knowledge(wire | {G, sk_i, sk_r})
    sess = Kdf("sess", gab, td)
    assert sess not in before
    assert sess not in after
    assert Atom("id") not in after
    # leaking an ephemeral scalar is what breaks it
    assert sess in close_knowledge(wire | {G, a})
    assert Atom("id") in close_knowledge(wire | {G, a})


def test_analysis_reaches_fixpoint_and_keeps_base():
    k = close_knowledge({Senc(Pair(k_ := Atom("k2"), m), a), a, Senc(c, k_)})
    assert {k_, m, c} <= set(k.terms)
    assert k.closed


def test_depth_bound():
    deep = a
    for _ in range(8):
        deep = Pair(deep, deep)
    assert depth(deep) == 8
    assert derivable(deep, {a}, depth_bound=8)
    assert not derivable(deep, {a}, depth_bound=7)
    with pytest.raises(ValueError):
        close_knowledge({a}, depth_bound=0)


def test_raw_knowledge_membership_is_literal():
    raw = Knowledge({Pair(a, b)})
    assert Pair(a, b) in raw and a not in raw
    assert len(raw | {c}) == 2


def test_dh_canonical_form():
    assert dh(a, gb) == dh(b, ga)
    assert dh(a, gb) == DH(a, gb)
    assert dh(b, ga) == DH(a, gb)
    assert dh(a, Atom("x")) == DH(a, Atom("x"))


def test_chain_unchain():
    items = [a, b, c]
    assert unchain(chain(items), 3) == items
    assert unchain(a, 2) is None
    with pytest.raises(ValueError):
        chain([])


# -- s-expressions ---------------------------------------------------------------

atoms = st.sampled_from([a, b, c, k, m, G, Atom("b:00ff"), Atom("x:12")])
terms = st.recursive(
    atoms,
    lambda sub: st.one_of(
        st.builds(Pair, sub, sub),
        st.builds(Senc, sub, sub),
        st.builds(Sig, sub, sub),
        st.builds(HashT, sub),
        st.builds(Exp, st.just(G), atoms),
        st.builds(dh, atoms, st.builds(Exp, st.just(G), atoms)),
        st.builds(Kdf, st.sampled_from(["sess", "sas", "adhoc1"]), sub, sub),
    ),
    max_leaves=12,
)


@given(terms)
def test_sexpr_roundtrip(t):
    assert parse_sexpr(to_sexpr(t)) == t


def test_sexpr_golden():
    assert to_sexpr(Kdf("sess", dh(b, ga), Pair(a, b))) == '(kdf "sess" (dh a (exp g b)) (pair a b))'
    for bad in ["(pair a", "(bogus a b)", "(pair a b) c", ")", '(kdf sess a b)']:
        with pytest.raises(ValueError):
            parse_sexpr(bad)


@given(st.sets(terms, max_size=4), st.sets(terms, max_size=3), terms)
def test_closure_is_monotone(base, extra, goal):
    if derivable(goal, base):
        assert derivable(goal, base | extra)


@given(st.sets(terms, max_size=4))
def test_closure_contains_initial_and_is_idempotent(base):
    k1 = close_knowledge(base)
    assert all(t in k1 for t in base)
    k2 = close_knowledge(k1)
    assert set(k2.terms) == set(k1.terms)
