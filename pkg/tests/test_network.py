import json
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from kronred import ParseError, conservation_basis, dump_network, enumerate_complexes, linkage_classes, parse_network
from kronred.dsl import load_network, network_from_json, network_to_json, parse_complex_label
from kronred.errors import NetworkError
from kronred.network import exact_rank, left_null_basis

from conftest import FIG1, REACTION3
from netgen import networks

FIG1_S = [[-1, 1, 2, -2, 0], [-2, 2, 1, -1, 0], [1, -1, -1, 0, -1], [0, 0, 0, 1, 1]]
FIG1_Z = [[1, 0, 2, 0], [2, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]


def test_minimal_reversible_reaction():
    net = parse_network("reaction r1: X1 + 2 X2 <-> X3 ; massaction kf=1 kr=1")
    assert (net.m, net.c, len(net.reactions)) == (3, 2, 1)
    assert net.reactions[0].reversible
    assert enumerate_complexes(net).r == 2


def test_fig1_counts(fig1):
    net, view = fig1
    assert (net.m, net.c, view.r) == (4, 4, 5)
    assert net.species_names == ["X1", "X2", "X3", "X4"]


def test_fig1_matrices(fig1):
    _, view = fig1
    assert view.S.tolist() == FIG1_S
    assert view.Z.tolist() == FIG1_Z
    assert np.array_equal(view.Z @ view.B, view.S)


def test_reaction3_matrices():
    view = enumerate_complexes(parse_network(REACTION3))
    assert view.B.tolist() == [[-1], [1]]
    assert view.Z.tolist() == [[1, 0], [3, 0], [0, 1], [0, 3]]
    assert view.S.tolist() == [[-1], [-3], [1], [3]]


def test_complexes_are_deduplicated(fig1):
    net, _ = fig1
    # 2 X1 + X2 appears as a product of r3 and a substrate of r4
    assert net.c == 4
    assert [net.complex_label(i) for i in range(4)] == ["X1+2 X2", "X3", "2 X1+X2", "X4"]


def test_fig1_linkage(fig1):
    _, view = fig1
    partition, ell = linkage_classes(view)
    assert ell == 1 and view.rank_B == 3
    assert sorted(partition[0]) == [0, 1, 2, 3]


def test_two_disjoint_reactions_two_classes():
    view = enumerate_complexes(parse_network("reaction a: A -> B ; massaction kf=1\nreaction b: C -> D ; massaction kf=1\n"))
    assert view.ell == 2
    assert sorted(map(sorted, view.linkage_partition)) == [[0, 1], [2, 3]]


def test_single_reversible_one_class():
    view = enumerate_complexes(parse_network("reaction a: A <-> B ; massaction kf=1 kr=2"))
    assert view.ell == 1


@pytest.mark.parametrize(
    "source, needle, line",
    [
        ("reaction r1: X1 -> X1 ; massaction kf=1", "substrate equals product", 1),
        ("species A, A\nreaction r: A -> B ; massaction kf=1", "duplicate species", 1),
        ("reaction r: A -> B ; massaction kf=0", "positive", 1),
        ("reaction r: A -> B ; massaction kf=-1", "", 1),
        ("reaction r: A => B ; massaction kf=1", "", 1),
        ("\n\nreaction r: A -> B ; warp kf=1", "law", 3),
        ("reaction r: A -> B ; massaction kf=1 kr=1", "", 1),
        ("reaction r: A <-> B ; massaction kf=1", "kr", 1),
        ("reaction r: A -> B ; mm kf=1 Km(A)=0", "", 1),
        ("reaction r: 65 A -> B ; massaction kf=1", "64", 1),
        ("reaction r: A -> B ; massaction kf=1\nreaction r: B -> A ; massaction kf=1", "duplicate", 2),
        ("reaction r: A -> B ; massaction kf=1\nboundary C: constant 1", "", 2),
    ],
)
def test_parse_errors(source, needle, line):
    with pytest.raises(ParseError) as err:
        parse_network(source)
    assert err.value.line == line
    assert err.value.column >= 1
    assert needle in str(err.value)
    assert f"line {line}" in str(err.value)


def test_strict_mode_requires_declaration():
    src = "species A\nreaction r: A -> B ; massaction kf=1"
    assert parse_network(src).m == 2
    with pytest.raises(ParseError, match="B"):
        parse_network(src, strict=True)


def test_no_reactions_rejected():
    with pytest.raises((ParseError, NetworkError), match="no reactions"):
        parse_network("# empty\nspecies A, B\n")


def test_comments_and_blank_lines():
    net = parse_network("# header\n\nreaction r: A -> B ; massaction kf=2.5e-1  # trailing\n")
    assert net.reactions[0].law.k_forward == 0.25


def test_mm_groups_auto_and_explicit():
    net = parse_network(REACTION3)
    groups = net.reactions[0].law.denominator.groups
    assert len(groups) == 2
    # coefficient = multiplicity / Km, so X2 contributes 3/2 and X4 contributes 3/4
    coefs = {t.species: t.coefficient for g in groups for t in g}
    assert coefs == pytest.approx({0: 1.0, 1: 1.5, 2: 1 / 3, 3: 0.75})
    explicit = parse_network("reaction r: A <-> B ; mm kf=1 kr=1 [Km(A)=1 Km(I)=2] [Km(B)=1]")
    assert len(explicit.reactions[0].law.denominator.groups) == 2
    assert explicit.m == 3


def test_boundary_forms():
    net = parse_network(
        "reaction r: A -> B ; massaction kf=1\nboundary A: constant 0.5\nboundary B: linear B -2\n"
    )
    forms = sorted((b.complex, b.form, b.value) for b in net.boundary)
    assert forms == [(0, "constant", 0.5), (1, "linear", -2.0)]


def test_complex_label_lookup(fig1):
    net, _ = fig1
    assert parse_complex_label(net, "X1+2 X2") == 0
    assert parse_complex_label(net, " X2 + 2X1 ") == 2
    with pytest.raises(KeyError):
        parse_complex_label(net, "X1+X2")


def test_conservation_basis_examples():
    def basis(src):
        return conservation_basis(enumerate_complexes(parse_network(src)))

    assert basis("reaction r: A -> B ; massaction kf=1") == []
    w = basis("reaction r: 2 A -> B ; massaction kf=1")
    assert len(w) == 0  # Z = [[2,0],[0,1]] has full row rank
    (w,) = left_null_basis(np.array([[1], [1]]))
    assert sorted(w.tolist()) == [-1, 1]


def _sympy_left_null(Z) -> list:
    return sympy.Matrix(Z.tolist()).T.nullspace()


def test_reaction3_conservation_against_sympy():
    view = enumerate_complexes(parse_network(REACTION3))
    basis = conservation_basis(view)
    oracle = _sympy_left_null(view.Z)
    assert len(basis) == len(oracle) == 2
    for w in basis:
        assert not (w @ view.Z).any()
        assert w.dtype.kind == "i"
    # the two bases span the same space
    stacked = sympy.Matrix([list(map(int, w)) for w in basis] + [list(v.T) for v in oracle])
    assert stacked.rank() == 2
    # e.g. [3, -1, 0, 0] lies in the span
    assert sympy.Matrix([[3, -1, 0, 0]] + [list(map(int, w)) for w in basis]).rank() == 2


def test_exact_rank_is_rational():
    # rank deficiency that floating point can blur
    M = np.array([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    assert exact_rank(M) == 2
    assert exact_rank(np.zeros((3, 3), dtype=int)) == 0


def test_json_round_trip(fig1, tmp_path):
    net, _ = fig1
    text = network_to_json(net)
    assert network_from_json(text) == net
    data = json.loads(text)
    assert set(data) >= {"species", "complexes", "reactions", "boundary"}
    path = tmp_path / "net.json"
    path.write_text(text)
    assert load_network(path) == net


def test_dsl_round_trip_fig1(fig1):
    net, _ = fig1
    assert parse_network(dump_network(net)) == net


# -- generated networks --------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(networks(strongly_connected=False))
def test_structure_properties(net):
    view = enumerate_complexes(net)
    # every incidence column has one tail and one head
    assert (view.B.sum(axis=0) == 0).all()
    assert ((view.B != 0).sum(axis=0) == 2).all()
    assert np.array_equal(view.Z @ view.B, view.S)
    assert view.ell == net.c - exact_rank(view.B)
    assert sorted(i for block in view.linkage_partition for i in block) == list(range(net.c))


@settings(max_examples=200, deadline=None)
@given(networks())
def test_dsl_round_trip(net):
    assert parse_network(dump_network(net)) == net
    assert network_from_json(network_to_json(net)) == net


@settings(max_examples=100, deadline=None)
@given(networks(strongly_connected=False))
def test_conservation_basis_is_exact(net):
    view = enumerate_complexes(net)
    basis = conservation_basis(view)
    assert len(basis) == net.m - exact_rank(view.Z)
    for w in basis:
        assert not (w @ view.Z).any()
        assert not (w @ view.S).any()


@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=1, max_size=5))
def test_exact_rank_matches_sympy(rows):
    assert exact_rank(np.array(rows)) == sympy.Matrix(rows).rank()

