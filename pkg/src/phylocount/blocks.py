"""Reusable generating-function building blocks, as marker jets.

The unary-binary tree series M satisfies M = z + z*Y*M + (z/2)*M^2, where
Y marks unary vertices.  We use the closed form

    M(z, Y) = (1 - z*Y - sqrt(1 + (Y^2 - 2) z^2 - 2 z Y)) / z

directly, which keeps every jet coefficient inside Q(z)[s]; the quadratic
is demoted to a verification test (check_functional_equation).  The
formal marker slot is substituted by a sum of declared markers: the
presence of a marker in a slot grants the corresponding pointer vertex
permission to point there.

Blocks:

* motzkin_M(space, S): M with the unary mark replaced by sum(S).
* motzkin_Mtilde(space, i, S): (1 - z*y_i) * M(z, S) - the variant whose
  root vertex is shielded from pointer i.
* path_P(space, A, B, C): (1 - z*sum(A) + z*sum(C)) / (1 - z*(sum(A) +
  M(z, B))) - paths of vertices with attached trees; A marks the path
  vertices, B the attached-tree vertices, C the path's first vertex.
* path_Pstar: P - 1, a nonempty path.
* quasi_inverse(space, power, S): 1 / (1 - z*M(z, S))**power.

A "space" is the ordered tuple of (marker name, cap) shared by every jet
of one expression.
"""

from __future__ import annotations

from .algebra import AF_ONE, AF_S2, AF_Z, AlgFun, MarkerJet, SeriesZ

__all__ = [
    "check_functional_equation",
    "motzkin_M",
    "motzkin_Mtilde",
    "path_P",
    "path_Pstar",
    "quasi_inverse",
]

_M_CACHE: dict = {}
_Q_CACHE: dict = {}


def _key(space, names):
    return (space, frozenset(names))


def _marker_sum(space, names) -> MarkerJet:
    declared = [n for n, _ in space]
    for n in names:
        if n not in declared:
            raise ValueError(f"marker {n!r} not declared in {declared}")
    return MarkerJet.marker_sum(space, names)


def motzkin_M(space, names) -> MarkerJet:
    """M(z, Y) with Y = sum of the given markers."""
    key = _key(space, names)
    jet = _M_CACHE.get(key)
    if jet is not None:
        return jet
    one = MarkerJet.constant(space, AF_ONE)
    z = MarkerJet.constant(space, AF_Z)
    y = _marker_sum(space, names)
    zy = z * y
    # radicand 1 + (Y^2 - 2) z^2 - 2 z Y; base is 1 - 2 z^2 as required
    radicand = one.scale(AF_S2) + zy * zy - zy.scale_frac(2)
    jet = (one - zy - radicand.sqrt()).scale(AF_Z.inv())
    _M_CACHE[key] = jet
    return jet


def motzkin_Mtilde(space, root_marker: str, names) -> MarkerJet:
    """(1 - z*y_i) M(z, Y): tree whose root may not be pointed at by i."""
    one = MarkerJet.constant(space, AF_ONE)
    yi = MarkerJet.marker(space, root_marker).scale(AF_Z)
    return (one - yi) * motzkin_M(space, names)


def quasi_inverse(space, power: int, names) -> MarkerJet:
    """1 / (1 - z M(z, Y))**power - sequences of path vertices with trees."""
    key = (space, frozenset(names), power)
    jet = _Q_CACHE.get(key)
    if jet is not None:
        return jet
    one = MarkerJet.constant(space, AF_ONE)
    base = (one - motzkin_M(space, names).scale(AF_Z)).inv()
    jet = base ** power
    _Q_CACHE[key] = jet
    return jet


def path_P(space, path_names, tree_names, first_names) -> MarkerJet:
    """P(z, y, ytilde, yhat) with each slot a sum of markers."""
    one = MarkerJet.constant(space, AF_ONE)
    za = _marker_sum(space, path_names).scale(AF_Z)
    zc = _marker_sum(space, first_names).scale(AF_Z)
    m = motzkin_M(space, tree_names)
    denom = one - za - m.scale(AF_Z)
    return (one - za + zc) * denom.inv()


def path_Pstar(space, path_names, tree_names, first_names) -> MarkerJet:
    """P - 1: the path is not allowed to be empty."""
    one = MarkerJet.constant(space, AF_ONE)
    return path_P(space, path_names, tree_names, first_names) - one


def check_functional_equation(order: int, names=("y1",), caps=None):
    """Residual of M - z - z*Y*M - (z/2) M^2, expanded through z**order.

    Returns the residual as a dict multi-index -> SeriesZ; the contract is
    that every series is identically zero.  (The jet residual is exact, so
    this holds at any truncation order; expanding merely produces the
    checkable artifact.)
    """
    caps = caps or tuple(1 for _ in names)
    space = tuple(zip(names, caps))
    m = motzkin_M(space, names)
    y = _marker_sum(space, names)
    z = MarkerJet.constant(space, AF_Z)
    residual = m - z - (z * y * m) - (m * m).scale(AF_Z).scale_frac("1/2")
    out = {}
    zero_keys = [tuple(idx) for idx in _all_indices(caps)]
    for idx in zero_keys:
        coeff = residual.coeffs.get(idx, None)
        out[idx] = coeff.series(order) if coeff is not None else SeriesZ(order, [])
    return out


def _all_indices(caps):
    if not caps:
        yield ()
        return
    for head in range(caps[0] + 1):
        for tail in _all_indices(caps[1:]):
            yield (head,) + tail
