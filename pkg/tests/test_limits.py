import itertools
import random

import numpy as np
import pytest

from hft import zmod
from hft.chain import build_complex, is_del_complete
from hft.fixtures import builtin_example
from hft.geometry import MOD2, ConsistencyError
from hft.limits import (InclusionPoset, LimitsError, build_homology_system,
                        chain_maps, check_chain_compatible, check_poset_directed, direct_limit,
                        quotient_check, restriction_is_chain_map, vanishing_check)

from oracles import random_family, random_subsystem, random_system

Z = zmod.FgAbelianGroup
FIG5_FAMILY = [["r"], ["r2"], ["r", "r2"], ["q_a", "q_b", "r", "r2"], ["p", "q_a", "q_b", "r", "r2"]]


def test_random_systems_are_coherent():
    rng = random.Random(1)
    for _ in range(20):
        s = random_system(rng, random_family(rng))
        assert s.coherence_failures() == []


def test_hasse_equals_all_pairs_and_absorption():
    rng = random.Random(2)
    for _ in range(60):
        fam = random_family(rng)
        s = random_system(rng, fam)
        a, b = direct_limit(s, "hasse"), direct_limit(s, "all")
        assert a.group == b.group
        m = s.poset.maximum
        assert m is not None and a.group == s.nodes[m].cokernel.group


def test_hasse_equals_all_pairs_undirected():
    rng = random.Random(3)
    for _ in range(30):
        s = random_system(rng, random_family(rng, directed=False))
        assert direct_limit(s, "hasse").group == direct_limit(s, "all").group


def test_vanishing_characterization():
    rng = random.Random(4)
    for _ in range(25):
        s = random_system(rng, random_family(rng))
        assert vanishing_check(s, bound=2) == []


def test_quotient_exchange():
    rng = random.Random(5)
    for _ in range(25):
        s = random_system(rng, random_family(rng))
        q_lim, lim_q = quotient_check(s, random_subsystem(rng, s))
        assert q_lim == lim_q


def test_directedness():
    ok, pair = check_poset_directed([["a"], ["b"]])
    assert not ok and pair == (["a"], ["b"])
    assert check_poset_directed([["a"], ["b"], ["a", "b"]])[0]
    P = InclusionPoset([["a"], ["a", "b"], ["a", "b", "c"]])
    assert P.hasse_edges() == [(0, 1), (1, 2)]
    assert P.maximum == 2
    s = random_system(random.Random(0), [["a"], ["b"]])
    with pytest.raises(LimitsError):
        vanishing_check(s)


# ---------------------------------------------------------------- chain compatibility

def test_fig6_inclusion_is_not_a_chain_map():
    d = builtin_example("fig6a")
    r = check_chain_compatible(d, ["p", "s"], ["p", "q", "r", "s"])
    assert not r.ok and r.witness == ("p", "q")
    assert r.direct == r.criterion is False
    rr = restriction_is_chain_map(d, ["p", "q", "r", "s"], ["p", "s"])
    assert not rr.ok and rr.witness == "r"


def test_fig6_no_nontrivial_chain_map():
    d = builtin_example("fig6a")
    cd, ce = build_complex(d, ["p", "s"]), build_complex(d, ["p", "q", "r", "s"])
    maps = chain_maps(cd, ce, bound=3)
    top = max(cd.degrees)
    assert maps                                     # the zero map at least
    assert all(not any(g[top].flatten()) for g in maps)


def test_chain_maps_find_identity():
    d = builtin_example("fig3b_left")
    cx = build_complex(d, ["p", "q_a", "q_b", "r"])
    maps = chain_maps(cx, cx, bound=1)
    ident = {k: zmod.identity(len(cx.gens(k))) for k in cx.degrees}
    assert any(all(zmod._to_lists(g[k]) == zmod._to_lists(ident[k]) for k in cx.degrees) for g in maps)


def test_criterion_and_direct_agree_on_small_sets():
    for name in ("fig5", "fig6a", "fig3b_left", "cascade"):
        d = builtin_example(name)
        ids = [p for p in d.ids if p != "x"]
        complete = [set(E) for k in range(1, 5) for E in itertools.combinations(ids, k)
                    if is_del_complete(build_complex(d, E)).complete]
        rng = random.Random(name)
        for _ in range(60):
            E = rng.choice(complete)
            D = set(rng.sample(sorted(E), rng.randint(1, len(E))))
            if not is_del_complete(build_complex(d, D)).complete:
                continue
            check_chain_compatible(d, D, E)        # raises if the routes disagree
            restriction_is_chain_map(d, E, D)


def test_incomplete_member_rejected():
    d = builtin_example("fig3a")
    with pytest.raises(LimitsError):
        check_chain_compatible(d, ["p"], ["p", "q", "r"])


# ---------------------------------------------------------------- homology systems

def test_fig5_homology_system():
    d = builtin_example("fig5")
    hs = build_homology_system(d, FIG5_FAMILY)
    limits = {k: hs.limit(k) for k in hs.degrees}
    assert limits == {-2: Z(1), -1: Z(0), 0: Z(0)}
    for k in hs.degrees:
        assert hs.limit(k, "all") == limits[k]
        assert vanishing_check(hs.system(k)) == []
    m2 = build_homology_system(d, FIG5_FAMILY, mode=MOD2)
    assert {k: m2.limit(k) for k in m2.degrees} == limits


def test_homology_system_rejects_incompatible():
    d = builtin_example("fig5")
    with pytest.raises(zmod.ChainMapError):
        build_homology_system(d, [["p"], ["p", "q_a", "q_b", "r", "r2"]])


def test_functoriality_fig5():
    d = builtin_example("fig5")
    hs = build_homology_system(d, FIG5_FAMILY)
    P = hs.poset
    for k in hs.degrees:
        for (i, j) in P.comparable_pairs():
            for l in range(len(P)):
                if l not in (i, j) and P.leq(j, l):
                    comp = hs.edges[k][(j, l)].compose(hs.edges[k][(i, j)])
                    assert comp.same_as(hs.edges[k][(i, l)])
