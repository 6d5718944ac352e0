from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from jmech import poisson
from jmech.dynamics import derive_hamilton_equations
from jmech.poisson import BracketError, BracketKind, bracket, check_axioms, coordinate_table, random_polynomial
from jmech.symcalc import Expr, HamiltonianSystem, parse

ALL_KINDS = list(BracketKind)


def _c(name, m=1):
    return parse(name, m)


def _kinds(kind):
    return [k for k in ("q", "p", "qd", "pd", "qdd", "pdd") if k in kind.admitted]


def _nonzero(table):
    return {pair: str(v) for pair, v in table.items() if not v.is_zero()}


def test_base_canonical_table():
    assert _nonzero(coordinate_table("base", 2)) == {
        ("p1", "q1"): "1",
        ("q1", "p1"): "-1",
        ("p2", "q2"): "1",
        ("q2", "p2"): "-1",
    }


def test_vertical_conjugate_pairs():
    # (q, pd) and (qd, p) are the conjugate pairs; sign follows the momentum-first rule
    assert _nonzero(coordinate_table("vertical", 1)) == {
        ("pd1", "q1"): "1",
        ("q1", "pd1"): "-1",
        ("p1", "qd1"): "1",
        ("qd1", "p1"): "-1",
    }


def test_alt_pairs_are_q_p_and_qd_pd():
    assert _nonzero(coordinate_table("alt", 1)) == {
        ("p1", "q1"): "1",
        ("q1", "p1"): "-1",
        ("pd1", "qd1"): "1",
        ("qd1", "pd1"): "-1",
    }


def test_second_bracket_pairs_and_half_factor():
    table = _nonzero(coordinate_table("second", 1))
    assert table[("pdd1", "q1")] == "1"
    assert table[("p1", "qdd1")] == "1"
    assert table[("pd1", "qd1")] == "(1/2)"
    assert len(table) == 6
    s2 = math.sqrt(2)
    P, Q = _c("pd1").scale(s2), _c("qd1").scale(s2)
    assert bracket("second", P, Q, 1).equiv(Expr.const(1))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_self_bracket_vanishes(kind):
    f = random_polynomial(random.Random(11), _kinds(kind), 2)
    assert bracket(kind, f, f, 2).is_zero()


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_constants_are_central(kind):
    g = random_polynomial(random.Random(5), _kinds(kind), 2)
    assert bracket(kind, Expr.const(7), g, 2).is_zero()


def test_base_bracket_of_q_only_functions_vanishes():
    assert bracket("base", parse("q1^2*q2", 2), parse("q1 + q2^3", 2), 2).is_zero()


def test_disallowed_coordinates_raise():
    with pytest.raises(BracketError):
        bracket("base", _c("qd1"), _c("q1"), 1)
    with pytest.raises(BracketError):
        bracket("vertical", _c("qdd1"), _c("q1"), 1)
    with pytest.raises(BracketError):
        bracket("base", parse("q2", 2), parse("p1", 2), 1)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("m", [1, 2])
def test_axioms_hold(kind, m):
    report = check_axioms(kind, trials=25, seed=m, m=m)
    assert report.ok, report.failures[:1]


def test_axiom_check_catches_a_broken_bracket(monkeypatch):
    real = poisson.bracket

    def broken(kind, f, g, m):
        # drop the Leibniz property by adding a quadratic term
        return real(kind, f, g, m) + real(kind, f, g, m) * real(kind, f, g, m)

    monkeypatch.setattr(poisson, "bracket", broken)
    report = check_axioms("base", trials=20, seed=0, m=1)
    laws = {f["law"] for f in report.failures}
    assert {"bilinearity", "leibniz"} <= laws


def test_axiom_report_is_deterministic():
    a = check_axioms("vertical", trials=10, seed=42, m=2).to_json()
    b = check_axioms("vertical", trials=10, seed=42, m=2).to_json()
    assert a == b
    assert json.loads(a)["seed"] == 42


def test_zero_trials_rejected():
    with pytest.raises(ValueError):
        check_axioms("base", trials=0, seed=0, m=1)


@given(st.integers(0, 2**31), st.sampled_from(ALL_KINDS))
def test_antisymmetry_property(seed, kind):
    rng = random.Random(seed)
    f, g = (random_polynomial(rng, _kinds(kind), 2) for _ in range(2))
    assert (bracket(kind, f, g, 2) + bracket(kind, g, f, 2)).is_zero()


@given(st.integers(0, 2**31))
def test_vertical_jacobi_property(seed):
    rng = random.Random(seed)
    f, g, h = (random_polynomial(rng, ["q", "p", "qd", "pd"], 2) for _ in range(3))

    def br(a, b):
        return bracket("vertical", a, b, 2)

    assert (br(f, br(g, h)) + br(g, br(h, f)) + br(h, br(f, g))).is_zero()


@pytest.mark.parametrize("source", ["0.5*(p1^2 + w^2*q1^2)", "q1^2*p1/2", "0.5*p1^2 + q1^3 + sin(t)*q1*p1"])
def test_extended_hamilton_equations_are_vertical_brackets(source):
    sysm = HamiltonianSystem.from_string(source, 1, {"w": 1.7})
    field = derive_hamilton_equations(sysm, extended=True)
    coords = [_c(n) for n in ("q1", "p1", "qd1", "pd1")]
    for rhs, x in zip(field, coords):
        assert rhs == bracket("vertical", sysm.H_V, x, 1)


def test_base_hamilton_equations_are_base_brackets():
    sysm = HamiltonianSystem.from_string("0.5*(p1^2 + p2^2) + q1^2*q2", 2)
    field = derive_hamilton_equations(sysm)
    for rhs, name in zip(field, ("q1", "q2", "p1", "p2")):
        assert rhs == bracket("base", sysm.H, parse(name, 2), 2)
