"""Desk-scale benchmark networks.

``mm_chain`` builds ``C1 <-> C2 <-> ... <-> Cn`` where every complex is a
pair of species, ``C_i = X{2i-1} + X{2i}``, and every step follows reversible
Michaelis-Menten kinetics with the two-group denominator.  Optional boundary
fluxes make the chain open: a constant influx into ``C1`` and an efflux from
``Cn`` proportional to its first species.

A complex is made *fast* by multiplying the rate constants of the edges that
leave it by ``factor``: its species then relax quickly and stay at low
concentration, which is the regime where freezing them is justified.
"""

from __future__ import annotations

from .dsl import parse_network
from .network import Network
from .reduction import ChainParameters


def chain_species(n_complexes: int) -> list[tuple[str, str]]:
    return [(f"X{2 * i + 1}", f"X{2 * i + 2}") for i in range(n_complexes)]


def mm_chain_source(
    n_complexes: int,
    fast: tuple[int, ...] = (),
    factor: float = 100.0,
    k: float = 1.0,
    km: float = 1.0,
    influx: float | None = None,
    efflux: float | None = None,
) -> str:
    """DSL text for the chain; ``fast`` holds 0-based complex positions."""
    pairs = chain_species(n_complexes)
    km = float(km)
    lines = ["species " + ", ".join(s for pair in pairs for s in pair)]
    for i in range(n_complexes - 1):
        kf = float(k * (factor if i in fast else 1.0))
        kr = float(k * (factor if i + 1 in fast else 1.0))
        (a, b), (c, d) = pairs[i], pairs[i + 1]
        lines.append(
            f"reaction v{i + 1}: {a} + {b} <-> {c} + {d} ; mm kf={kf!r} kr={kr!r} "
            f"Km({a})={km!r} Km({b})={km!r} Km({c})={km!r} Km({d})={km!r}"
        )
    if influx is not None:
        a, b = pairs[0]
        lines.append(f"boundary {a} + {b}: constant {float(influx)!r}")
    if efflux is not None:
        a, b = pairs[-1]
        lines.append(f"boundary {a} + {b}: linear {a} {-abs(float(efflux))!r}")
    return "\n".join(lines) + "\n"


def mm_chain(n_complexes: int, **kwargs) -> Network:
    return parse_network(mm_chain_source(n_complexes, **kwargs))


def three_complex_chain(params: ChainParameters) -> Network:
    """``X1+X2 <-> X3+X4 <-> X5+X6`` with arbitrary parameters."""
    a1, a2, a3, a4 = params.km1
    b3, b4, b5, b6 = params.km2
    src = (
        "species X1, X2, X3, X4, X5, X6\n"
        f"reaction v1: X1 + X2 <-> X3 + X4 ; mm kf={params.k1f!r} kr={params.k1r!r} "
        f"Km(X1)={a1!r} Km(X2)={a2!r} Km(X3)={a3!r} Km(X4)={a4!r}\n"
        f"reaction v2: X3 + X4 <-> X5 + X6 ; mm kf={params.k2f!r} kr={params.k2r!r} "
        f"Km(X3)={b3!r} Km(X4)={b4!r} Km(X5)={b5!r} Km(X6)={b6!r}\n"
    )
    return parse_network(src)
