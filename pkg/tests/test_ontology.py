import random

import pytest
from hypothesis import given, settings, strategies as st

from maestrob.errors import CycleError, InheritanceAmbiguity, ParseError
from maestrob.ontology import BASE, Ontology, Value, isa_chains, load
from maestrob.random_instances import dag_ontology, equality_ontology, random_dag, random_equalities

from oracles import reachable, union_find_canonical

m = BASE.__add__


def test_three_line_fixture():
    o = load('cyl-peg is-a peg\npeg is-a object\ncyl-peg shape "cylinder"\n')
    assert len(o) == 3
    assert isa_chains(o) == [[m("cyl-peg"), m("peg"), m("object")]]
    assert o.property(m("cyl-peg"), m("shape")) == [Value("cylinder")]


def test_cycle_is_reported():
    with pytest.raises(CycleError) as info:
        load("a is-a b\nb is-a a\n")
    assert set(info.value.cycle) == {m("a"), m("b")}


def test_empty_file():
    o = load("")
    assert len(o) == 0
    assert o.property(m("x"), m("shape")) == []
    assert o.canonical(m("x")) == m("x")
    assert not o.knows(m("x"))


def test_literals_and_comments():
    o = load('# note\nx diameter 0.03m\nx count 3\nx flag true\nx label "a \\"q\\""\n')
    assert o.property(m("x"), m("diameter")) == [Value(0.03, "m")]
    assert o.property(m("x"), m("count")) == [Value(3.0)]
    assert o.property(m("x"), m("flag")) == [Value(True)]
    assert o.property(m("x"), m("label")) == [Value('a "q"')]


@pytest.mark.parametrize("text", ["a b\n", 'a is-a "x"\n', '"a" b c\n', 'a b "open\n'])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        load(text)


def test_canonical_examples():
    assert load("a equals-to b").canonical(m("b")) == m("a")
    assert load("a equals-to b\nb equals-to c").canonical(m("c")) == m("a")
    assert Ontology().canonical(m("x")) == m("x")


def test_equals_to_merges_is_a_and_properties():
    o = load("dbpedia:Dowel equals-to peg\ncyl is-a dbpedia:Dowel\npeg shape \"cylinder\"\n")
    assert o.isa(m("cyl"), m("peg"))
    assert o.property("dbpedia:Dowel", m("shape")) == [Value("cylinder")]


def test_isa_examples():
    o = load("cyl-peg is-a peg\npeg is-a object")
    assert o.isa(m("x"), m("x"))
    assert o.isa(m("cyl-peg"), m("object"))
    assert not o.isa(m("object"), m("cyl-peg"))


def test_property_inheritance():
    o = load('peg shape "cylinder"\ncyl is-a peg\nsq is-a peg\nsq shape "cuboid"\n')
    assert o.property(m("cyl"), m("shape")) == [Value("cylinder")]
    assert o.property(m("sq"), m("shape")) == [Value("cuboid")]


def test_diamond_conflict_is_ambiguous():
    o = load('x is-a a\nx is-a b\na color "red"\nb color "blue"\n')
    with pytest.raises(InheritanceAmbiguity) as info:
        o.property(m("x"), m("color"))
    assert set(info.value.candidates) == {m("a"), m("b")}


def test_diamond_agreement_is_fine():
    o = load('x is-a a\nx is-a b\na color "red"\nb color "red"\n')
    assert o.property(m("x"), m("color")) == [Value("red")]


def test_dump_round_trip():
    o = load('b is-a a\nb size 0.5m\nb name "q"\nc equals-to b\n')
    assert load(o.dump()) == o
    assert o.dump() == load(o.dump()).dump()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_isa_matches_reachability(seed):
    nodes, edges = random_dag(random.Random(seed))
    o = dag_ontology(nodes, edges)
    for a in nodes:
        for b in nodes:
            assert o.isa(m(a), m(b)) == reachable(edges, a, b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_canonical_matches_union_find(seed):
    nodes, pairs = random_equalities(random.Random(seed))
    o = equality_ontology(pairs)
    expected = union_find_canonical([m(n) for n in nodes], [(m(a), m(b)) for a, b in pairs])
    for node, rep in expected.items():
        assert o.canonical(node) == rep


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_isa_is_a_partial_order(seed):
    nodes, edges = random_dag(random.Random(seed), max_nodes=10)
    o = dag_ontology(nodes, edges)
    for a in nodes:
        for b in nodes:
            if o.isa(m(a), m(b)) and o.isa(m(b), m(a)):
                assert a == b
            for c in nodes:
                if o.isa(m(a), m(b)) and o.isa(m(b), m(c)):
                    assert o.isa(m(a), m(c))
