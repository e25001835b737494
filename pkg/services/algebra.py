"""
Álgebra de Lie hamiltoniana H_N = H_N' ⋊ h

Elementos en forma dispersa canónica, el corchete de Lie, operadores adjuntos
y la inmersión en el álgebra de Witt W_N, que sirve como oráculo independiente
para comprobar el corchete.

Base:
- h_r (r ≠ 0) genera la componente graduada de grado r de H_N'.
- D(u, 0) con u ∈ Q^N recorre la subálgebra de Cartan h.
"""

import logging
from fractions import Fraction
from functools import partial
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from services.errors import DimensionMismatchError, InvalidDocumentError, InvalidElementError, InvalidVectorError
from services.lattice_core import (
    LatticeVector,
    add,
    bar,
    check_even,
    dot,
    format_scalar,
    is_zero,
    pairing,
    parse_scalar,
    parse_vector,
    vector,
)

logger = logging.getLogger(__name__)

ScalarLike = Union[int, Fraction]
TermsInput = Union[Mapping[LatticeVector, ScalarLike], Iterable[Tuple[LatticeVector, ScalarLike]]]


def _pairs(terms: TermsInput) -> Iterable[Tuple[LatticeVector, ScalarLike]]:
    return terms.items() if isinstance(terms, Mapping) else terms


class HamiltonianElement:
    """
    Elemento Σ a_r h_r + D(u, 0) de H_N

    La forma canónica (términos ordenados lexicográficamente, sin coeficientes
    nulos, sin clave cero) se impone en el constructor, de modo que la igualdad
    es igualdad estructural.
    """

    __slots__ = ("n", "terms", "cartan", "_index")

    def __init__(self, n: int, terms: TermsInput = (), cartan: Optional[Sequence[ScalarLike]] = None):
        check_even(n)
        acumulado: Dict[LatticeVector, Fraction] = {}
        for deg, coef in _pairs(terms):
            deg = vector(deg)
            if len(deg) != n:
                raise DimensionMismatchError(f"Grado {list(deg)} no tiene longitud N = {n}")
            if is_zero(deg):
                raise InvalidElementError("h_0 no es un símbolo de la base: clave cero rechazada")
            acumulado[deg] = acumulado.get(deg, 0) + Fraction(coef)
        self.n = n
        self.terms: Tuple[Tuple[LatticeVector, Fraction], ...] = tuple(
            sorted((d, c) for d, c in acumulado.items() if c != 0)
        )
        if cartan is None:
            cartan = (0,) * n
        if len(cartan) != n:
            raise DimensionMismatchError(f"Parte de Cartan de longitud {len(cartan)}, se esperaba {n}")
        self.cartan: Tuple[Fraction, ...] = tuple(Fraction(c) for c in cartan)
        self._index = None

    # ------------------------------------------------------------------
    # Constructores
    # ------------------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "HamiltonianElement":
        return cls(n)

    @classmethod
    def basis(cls, r: LatticeVector, coef: ScalarLike = 1) -> "HamiltonianElement":
        """coef · h_r"""
        return cls(len(r), [(tuple(r), coef)])

    @classmethod
    def cartan_element(cls, u: Sequence[ScalarLike]) -> "HamiltonianElement":
        """D(u, 0)"""
        return cls(len(u), (), u)

    # ------------------------------------------------------------------
    # Consultas
    # ------------------------------------------------------------------

    @property
    def support(self) -> Tuple[LatticeVector, ...]:
        return tuple(d for d, _ in self.terms)

    def coefficient(self, r: LatticeVector) -> Fraction:
        if self._index is None:
            self._index = dict(self.terms)
        return self._index.get(tuple(r), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms and not any(self.cartan)

    def is_derived(self) -> bool:
        """True si la parte de Cartan es nula (elemento de H_N')"""
        return not any(self.cartan)

    # ------------------------------------------------------------------
    # Aritmética
    # ------------------------------------------------------------------

    def _check(self, other: "HamiltonianElement") -> None:
        if self.n != other.n:
            raise DimensionMismatchError(f"Elementos de dimensiones distintas: {self.n} vs {other.n}")

    def __add__(self, other: "HamiltonianElement") -> "HamiltonianElement":
        self._check(other)
        return HamiltonianElement(
            self.n,
            list(self.terms) + list(other.terms),
            [a + b for a, b in zip(self.cartan, other.cartan)],
        )

    def __neg__(self) -> "HamiltonianElement":
        return HamiltonianElement(self.n, [(d, -c) for d, c in self.terms], [-c for c in self.cartan])

    def __sub__(self, other: "HamiltonianElement") -> "HamiltonianElement":
        return self + (-other)

    def __mul__(self, k: ScalarLike) -> "HamiltonianElement":
        k = Fraction(k)
        return HamiltonianElement(self.n, [(d, k * c) for d, c in self.terms], [k * c for c in self.cartan])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HamiltonianElement)
            and self.n == other.n
            and self.terms == other.terms
            and self.cartan == other.cartan
        )

    def __hash__(self) -> int:
        return hash((self.n, self.terms, self.cartan))

    def __repr__(self) -> str:
        partes = [f"{format_scalar(c)}·h{list(d)}" for d, c in self.terms]
        if any(self.cartan):
            partes.append(f"D({[format_scalar(c) for c in self.cartan]}, 0)")
        return " + ".join(partes) if partes else "0"

    # ------------------------------------------------------------------
    # JSON
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "cartan": [format_scalar(c) for c in self.cartan],
            "terms": [{"deg": list(d), "coef": format_scalar(c)} for d, c in self.terms],
        }

    @classmethod
    def from_dict(cls, data: Dict, n: Optional[int] = None) -> "HamiltonianElement":
        """
        Lee un elemento en formato JSON estricto

        Se rechazan términos desordenados, repetidos, con coeficiente cero o
        con grado cero.
        """
        if not isinstance(data, dict):
            raise InvalidDocumentError("Un elemento debe ser un objeto JSON")
        declarado = data.get("n", n)
        if declarado is None:
            raise InvalidDocumentError("Falta el campo 'n'")
        if n is not None and declarado != n:
            raise DimensionMismatchError(f"Elemento con n = {declarado}, se esperaba N = {n}")
        if isinstance(declarado, bool) or not isinstance(declarado, int):
            raise InvalidDocumentError(f"Campo 'n' inválido: {declarado!r}")
        try:
            check_even(declarado)
        except InvalidVectorError as e:
            raise InvalidDocumentError(e.detail)

        cartan_raw = data.get("cartan", ["0"] * declarado)
        if not isinstance(cartan_raw, list) or len(cartan_raw) != declarado:
            raise InvalidDocumentError(f"'cartan' debe ser un array de {declarado} escalares")
        cartan = [parse_scalar(c) for c in cartan_raw]

        terms_raw = data.get("terms", [])
        if not isinstance(terms_raw, list):
            raise InvalidDocumentError("'terms' debe ser un array")
        terms: List[Tuple[LatticeVector, Fraction]] = []
        for t in terms_raw:
            if not isinstance(t, dict) or "deg" not in t or "coef" not in t:
                raise InvalidDocumentError("Cada término necesita 'deg' y 'coef'")
            deg = parse_vector(t["deg"], declarado)
            coef = parse_scalar(t["coef"])
            if is_zero(deg):
                raise InvalidDocumentError("Término con grado cero")
            if coef == 0:
                raise InvalidDocumentError(f"Término {list(deg)} con coeficiente cero")
            if terms and terms[-1][0] >= deg:
                raise InvalidDocumentError(f"Términos no ordenados lexicográficamente en {list(deg)}")
            terms.append((deg, coef))
        return cls(declarado, terms, cartan)


# ============================================================================
# CORCHETE
# ============================================================================

def bracket(x: HamiltonianElement, y: HamiltonianElement) -> HamiltonianElement:
    """
    [x, y] extendido bilinealmente desde:
      [h_r, h_s] = ω(r, s) h_{r+s}
      [D(u,0), h_r] = (u·r) h_r
      [D(u,0), D(v,0)] = 0
    """
    if x.n != y.n:
        raise DimensionMismatchError(f"Elementos de dimensiones distintas: {x.n} vs {y.n}")
    acc: Dict[LatticeVector, Fraction] = {}
    for r, a in x.terms:
        for s, b in y.terms:
            w = pairing(r, s)
            if w:
                t = add(r, s)
                acc[t] = acc.get(t, 0) + w * a * b
    if any(x.cartan):
        for s, b in y.terms:
            w = dot(x.cartan, s)
            if w:
                acc[s] = acc.get(s, 0) + w * b
    if any(y.cartan):
        for r, a in x.terms:
            w = dot(y.cartan, r)
            if w:
                acc[r] = acc.get(r, 0) - w * a
    return HamiltonianElement(x.n, acc)


def ad(x: HamiltonianElement) -> Callable[[HamiltonianElement], HamiltonianElement]:
    """Operador adjunto y ↦ [x, y]"""
    return partial(bracket, x)


# ============================================================================
# ORÁCULO: ÁLGEBRA DE WITT
# ============================================================================

class WittElement:
    """
    Elemento Σ D(u_r, r) de W_N; los vectores de coeficientes nulos se descartan
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Union[Mapping, Iterable] = ()):
        acumulado: Dict[LatticeVector, List[Fraction]] = {}
        for deg, u in _pairs(terms):
            deg = vector(deg)
            if len(deg) != n or len(u) != n:
                raise DimensionMismatchError(f"Término D(u, r) fuera de dimensión N = {n}")
            actual = acumulado.setdefault(deg, [Fraction(0)] * n)
            for i, c in enumerate(u):
                actual[i] += Fraction(c)
        self.n = n
        self.terms: Tuple[Tuple[LatticeVector, Tuple[Fraction, ...]], ...] = tuple(
            sorted((d, tuple(u)) for d, u in acumulado.items() if any(u))
        )

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, WittElement) and self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n, self.terms))

    def __repr__(self) -> str:
        partes = [f"D({[format_scalar(c) for c in u]}, {list(d)})" for d, u in self.terms]
        return " + ".join(partes) if partes else "0"

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "terms": [{"deg": list(d), "u": [format_scalar(c) for c in u]} for d, u in self.terms],
        }


def witt_bracket(x: WittElement, y: WittElement) -> WittElement:
    """[D(u,r), D(v,s)] = D((u·s)v − (v·r)u, r+s)"""
    if x.n != y.n:
        raise DimensionMismatchError(f"Elementos de dimensiones distintas: {x.n} vs {y.n}")
    resultado: List[Tuple[LatticeVector, List[Fraction]]] = []
    for r, u in x.terms:
        for s, v in y.terms:
            us = dot(u, s)
            vr = dot(v, r)
            if us == 0 and vr == 0:
                continue
            w = [us * vi - vr * ui for ui, vi in zip(u, v)]
            resultado.append((add(r, s), w))
    return WittElement(x.n, resultado)


def embed_to_witt(x: HamiltonianElement) -> WittElement:
    """h_r ↦ D(bar(r), r); D(u, 0) ↦ D(u, 0)"""
    terms: List[Tuple[LatticeVector, List[Fraction]]] = [
        (r, [a * c for c in bar(r)]) for r, a in x.terms
    ]
    if any(x.cartan):
        terms.append(((0,) * x.n, list(x.cartan)))
    return WittElement(x.n, terms)


def witt_divergence_check(x: WittElement) -> bool:
    """True si todo término D(u, r) cumple (u, r) = 0, es decir x ∈ S_N"""
    return all(dot(u, r) == 0 for r, u in x.terms)
