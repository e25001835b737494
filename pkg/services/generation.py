"""
Generación constructiva de H_N'

- Árboles de corchetes (testigos) que expresan cada h_r como corchete anidado
  de generadores h_g con g ∈ S = {±e_i, ±e_j ± e_k : j < k}.
- Reducción en ideales: a partir de un x ≠ 0 se llega a un múltiplo de
  h_target aplicando ad(h_s) sucesivamente, lo que certifica la simplicidad.
- Marco primitivo: el testigo de h_r con r no primitivo se obtiene transportando
  el de gcd(r)·e_1 con σ_Q, Q·e_1 = r/gcd(r).
- Centro trivial y perfección de H_N' comprobados sobre una caja.

Los testigos guardan (escalar, grado) en caché, pero la evaluación siempre
recalcula los corchetes y nunca confía en la caché.
"""

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import numpy as np

from services.algebra import HamiltonianElement, bracket
from services.automorphism import TorusAutomorphism, apply, natural_q
from services.errors import (
    DimensionMismatchError,
    InvalidDocumentError,
    InvalidElementError,
    InvalidVectorError,
    InvalidWitnessError,
)
from services.lattice_core import (
    LatticeVector,
    add,
    bar,
    box_vectors,
    check_even,
    format_scalar,
    gcd_of,
    is_collinear,
    is_zero,
    neg,
    pairing,
    parse_scalar,
    parse_vector,
    scale,
    sub,
    sup_norm,
    unit,
)
from services.linear_algebra import reduced_row_echelon
from services.symplectic import GspMatrix, primitive_frame

logger = logging.getLogger(__name__)

# Por encima de esta norma los testigos se construyen por mitades
_BALANCED_ABOVE = 8


@lru_cache(maxsize=None)
def generators(n: int) -> FrozenSet[LatticeVector]:
    """S = {±e_i, ±e_j ± e_k : j < k}"""
    check_even(n)
    conjunto: Set[LatticeVector] = set()
    for i in range(n):
        conjunto.add(unit(n, i))
        conjunto.add(neg(unit(n, i)))
    for j, k in itertools.combinations(range(n), 2):
        for a in (1, -1):
            for b in (1, -1):
                v = [0] * n
                v[j], v[k] = a, b
                conjunto.add(tuple(v))
    return frozenset(conjunto)


# ============================================================================
# TESTIGOS DE CORCHETE
# ============================================================================

@dataclass(frozen=True)
class BracketWitness(ABC):
    scalar: Fraction = field(init=False, compare=False)
    degree: LatticeVector = field(init=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.degree)

    @abstractmethod
    def to_dict(self) -> Dict:
        ...


@dataclass(frozen=True)
class WitnessLeaf(BracketWitness):
    generator: LatticeVector = ()

    def __post_init__(self):
        object.__setattr__(self, "scalar", Fraction(1))
        object.__setattr__(self, "degree", tuple(self.generator))

    def to_dict(self) -> Dict:
        return {"leaf": list(self.generator)}


@dataclass(frozen=True)
class WitnessNode(BracketWitness):
    """[izquierda, derecha]; un nodo con ω = 0 se detecta al evaluar"""

    left: BracketWitness = None
    right: BracketWitness = None

    def __post_init__(self):
        if self.left.n != self.right.n:
            raise DimensionMismatchError(f"Hijos de dimensiones distintas: {self.left.n} vs {self.right.n}")
        w = pairing(self.left.degree, self.right.degree)
        object.__setattr__(self, "scalar", w * self.left.scalar * self.right.scalar)
        object.__setattr__(self, "degree", add(self.left.degree, self.right.degree))

    def to_dict(self) -> Dict:
        return {
            "node": [self.left.to_dict(), self.right.to_dict()],
            "scalar": format_scalar(self.scalar),
            "deg": list(self.degree),
        }


def witness_from_dict(data: Dict) -> BracketWitness:
    """
    Lee un testigo y contrasta los escalares y grados declarados

    Raises:
        InvalidDocumentError: si el documento está mal formado o anidado
            por encima del límite de recursión
    """
    try:
        return _witness_from_dict(data)
    except RecursionError:
        raise InvalidDocumentError("Testigo anidado demasiado profundo")


def _witness_from_dict(data: Dict) -> BracketWitness:
    if not isinstance(data, dict):
        raise InvalidDocumentError("Un testigo debe ser un objeto JSON")
    if "leaf" in data:
        return WitnessLeaf(parse_vector(data["leaf"]))
    if "node" not in data or not isinstance(data["node"], list) or len(data["node"]) != 2:
        raise InvalidDocumentError("Se esperaba {'leaf': [...]} o {'node': [w, w], ...}")
    nodo = WitnessNode(left=_witness_from_dict(data["node"][0]), right=_witness_from_dict(data["node"][1]))
    if "scalar" in data and parse_scalar(data["scalar"]) != nodo.scalar:
        raise InvalidWitnessError(f"Escalar declarado {data['scalar']} no coincide con {format_scalar(nodo.scalar)}")
    if "deg" in data and parse_vector(data["deg"]) != nodo.degree:
        raise InvalidWitnessError(f"Grado declarado {data['deg']} no coincide con {list(nodo.degree)}")
    return nodo


def _fold(w: BracketWitness, leaf_value: Callable[[LatticeVector], HamiltonianElement]) -> HamiltonianElement:
    """Evalúa el árbol en post-orden con una pila explícita"""
    valores: Dict[int, HamiltonianElement] = {}
    pila: List[Tuple[BracketWitness, bool]] = [(w, False)]
    while pila:
        nodo, visitado = pila.pop()
        if isinstance(nodo, WitnessLeaf):
            valores[id(nodo)] = leaf_value(nodo.generator)
        elif not visitado:
            pila.append((nodo, True))
            pila.append((nodo.right, False))
            pila.append((nodo.left, False))
        else:
            izquierda = valores[id(nodo.left)]
            derecha = valores[id(nodo.right)]
            valor = bracket(izquierda, derecha)
            if valor.is_zero():
                raise InvalidWitnessError(
                    f"Nodo con ω({list(nodo.left.degree)}, {list(nodo.right.degree)}) = 0"
                )
            valores[id(nodo)] = valor
    return valores[id(w)]


def evaluate_witness(w: BracketWitness) -> HamiltonianElement:
    """Recalcula el corchete anidado y lo contrasta con la caché"""
    n = w.n
    s = generators(n)

    def hoja(g: LatticeVector) -> HamiltonianElement:
        if g not in s:
            raise InvalidWitnessError(f"La hoja {list(g)} no pertenece al conjunto generador")
        return HamiltonianElement.basis(g)

    valor = _fold(w, hoja)
    esperado = HamiltonianElement.basis(w.degree, w.scalar) if not is_zero(w.degree) else None
    if esperado is None or valor != esperado:
        raise InvalidWitnessError(
            f"El testigo evalúa a {valor!r}, se esperaba {format_scalar(w.scalar)}·h{list(w.degree)}"
        )
    return valor


def transport_witness(w: BracketWitness, sigma: TorusAutomorphism) -> HamiltonianElement:
    """Evalúa el árbol sustituyendo cada hoja h_g por σ(h_g)"""
    if sigma.n != w.n:
        raise DimensionMismatchError(f"Automorfismo de dimensión {sigma.n} sobre testigo de dimensión {w.n}")
    return _fold(w, lambda g: apply(sigma, HamiltonianElement.basis(g)))


# ----------------------------------------------------------------------------
# Construcción
# ----------------------------------------------------------------------------

def _sign_vector_witness(eps: LatticeVector) -> BracketWitness:
    """Testigo de Σ ε_i e_i con ε_i ∈ {±1}"""
    n = len(eps)
    m = n // 2
    if n == 2:
        return WitnessLeaf(tuple(eps))

    def parcial(*indices: int) -> LatticeVector:
        v = [0] * n
        for i in indices:
            v[i] = eps[i]
        return tuple(v)

    actual: BracketWitness = WitnessLeaf(parcial(0))
    for i in range(1, m):
        actual = WitnessNode(left=actual, right=WitnessLeaf(parcial(i, m + i - 1)))
    return WitnessNode(left=actual, right=WitnessLeaf(parcial(n - 1)))


def _nonzero_coordinates_witness(r: LatticeVector) -> BracketWitness:
    """r sin coordenadas nulas: vector de signos y luego ±e_i coordenada a coordenada"""
    if r in generators(len(r)):
        return WitnessLeaf(r)
    n = len(r)
    eps = tuple(1 if c > 0 else -1 for c in r)
    actual = _sign_vector_witness(eps)
    for i, c in enumerate(r):
        paso = tuple(eps[i] if j == i else 0 for j in range(n))
        for _ in range(abs(c) - 1):
            actual = WitnessNode(left=actual, right=WitnessLeaf(paso))
    return actual


def _auxiliary_shift(r: LatticeVector) -> LatticeVector:
    """
    Primer s (cota b = 1, 2, …; orden lexicográfico) con coordenadas en
    [−b, b] \\ {0}, r + s sin coordenadas nulas y ω(r, s) ≠ 0
    """
    n = len(r)
    b = 1
    while True:
        valores = [v for v in range(-b, b + 1) if v]
        for s in itertools.product(valores, repeat=n):
            if sup_norm(s) != b:
                continue
            if all(add(r, s)) and pairing(r, s):
                return s
        b += 1


def _halving_split(r: LatticeVector) -> Tuple[LatticeVector, LatticeVector]:
    """
    (u, r − u) con u = ⌊r/2⌋ + δ, δ el primero de 0, e_1, …, e_N, −e_1, …, −e_N
    que deja ambas mitades no nulas y ω(u, r) ≠ 0
    """
    n = len(r)
    mitad = tuple(c // 2 for c in r)
    for delta in [(0,) * n] + [unit(n, i) for i in range(n)] + [neg(unit(n, i)) for i in range(n)]:
        u = add(mitad, delta)
        v = sub(r, u)
        if any(u) and any(v) and pairing(u, r):
            return u, v
    raise RuntimeError(f"No hay partición equilibrada para {list(r)}")


def generation_witness(r: LatticeVector) -> BracketWitness:
    """
    Testigo de corchetes cuyo grado es r y cuyo escalar es no nulo

    Si |r|∞ > _BALANCED_ABOVE, r se parte en dos mitades de norma menor y la
    profundidad del árbol crece como log |r|∞.

    Raises:
        InvalidVectorError: si r = 0
    """
    r = tuple(r)
    check_even(len(r))
    if is_zero(r):
        raise InvalidVectorError("El vector cero no tiene testigo: h_0 no existe")
    if sup_norm(r) > _BALANCED_ABOVE:
        u, v = _halving_split(r)
        return WitnessNode(left=generation_witness(u), right=generation_witness(v))
    if r in generators(len(r)):
        return WitnessLeaf(r)
    if all(r):
        return _nonzero_coordinates_witness(r)
    s = _auxiliary_shift(r)
    return WitnessNode(
        left=_nonzero_coordinates_witness(add(r, s)),
        right=_nonzero_coordinates_witness(neg(s)),
    )


def generated_support(gens: Iterable[LatticeVector], radius: int) -> Set[LatticeVector]:
    """
    Saturación de L_S dentro de la caja |r|∞ <= radius:
    r, s ∈ L, ω(r, s) ≠ 0 y r + s en la caja ⇒ r + s ∈ L
    """
    soporte = {tuple(g) for g in gens if any(g) and sup_norm(g) <= radius}
    pendientes = list(soporte)
    while pendientes:
        r = pendientes.pop()
        for s in list(soporte):
            if not pairing(r, s):
                continue
            t = add(r, s)
            if any(t) and sup_norm(t) <= radius and t not in soporte:
                soporte.add(t)
                pendientes.append(t)
    return soporte


def frame_witness(r: LatticeVector) -> Tuple[GspMatrix, BracketWitness]:
    """
    (Q, w) con Q·e_1 = r/gcd(r) y w testigo de gcd(r)·e_1

    Transportar w con σ_Q da un múltiplo no nulo de h_r construido solo con
    las imágenes h_{Qg} de los generadores; vale para r no primitivo.
    """
    r = tuple(r)
    tau, q = primitive_frame(r)
    return q, generation_witness(scale(tau, unit(len(r), 0)))


def check_frame_witness(r: LatticeVector) -> bool:
    """σ_Q aplicado al testigo de gcd(r)·e_1 da escalar·h_r"""
    q, w = frame_witness(r)
    return transport_witness(w, natural_q(q)) == HamiltonianElement.basis(r, w.scalar)


# ============================================================================
# REDUCCIÓN EN IDEALES
# ============================================================================

@dataclass(frozen=True)
class IdealWitness:
    start: HamiltonianElement
    steps: Tuple[LatticeVector, ...]
    target: LatticeVector

    def to_dict(self) -> Dict:
        return {
            "start": self.start.to_dict(),
            "steps": [list(s) for s in self.steps],
            "target": list(self.target),
        }

    @classmethod
    def from_dict(cls, data: Dict, n: Optional[int] = None) -> "IdealWitness":
        if not isinstance(data, dict) or not {"start", "steps", "target"} <= set(data):
            raise InvalidDocumentError("Un IdealWitness necesita 'start', 'steps' y 'target'")
        start = HamiltonianElement.from_dict(data["start"], n)
        if not isinstance(data["steps"], list):
            raise InvalidDocumentError("'steps' debe ser un array de vectores")
        steps = tuple(parse_vector(s, start.n) for s in data["steps"])
        return cls(start, steps, parse_vector(data["target"], start.n))


def evaluate_ideal_witness(w: IdealWitness) -> HamiltonianElement:
    """Aplica X ↦ [h_s, X] por cada paso y exige un múltiplo no nulo de h_target"""
    actual = w.start
    for s in w.steps:
        if is_zero(s):
            raise InvalidWitnessError("Paso con vector cero")
        actual = bracket(HamiltonianElement.basis(s), actual)
    if not actual.is_derived() or len(actual.terms) != 1 or actual.terms[0][0] != tuple(w.target):
        raise InvalidWitnessError(f"La reducción termina en {actual!r}, no en un múltiplo de h{list(w.target)}")
    return actual


def _annihilating_step(r1: LatticeVector, rj: LatticeVector) -> LatticeVector:
    """s con ω(s, r_j) = 0 y ω(s, r_1) ≠ 0 (r_1, r_j no colineales)"""
    a = bar(rj)
    n = len(a)
    for i, k in itertools.combinations(range(n), 2):
        s = [0] * n
        s[i], s[k] = a[k], -a[i]
        if not any(s):
            continue
        g = gcd_of(s)
        s = [c // g for c in s]
        if next(c for c in s if c) < 0:
            s = [-c for c in s]
        s = tuple(s)
        if pairing(s, r1):
            return s
    raise RuntimeError(f"No hay paso aniquilador para {list(r1)}, {list(rj)}")


def _bridge(r: LatticeVector, target: LatticeVector) -> LatticeVector:
    """Primer t (radio creciente, orden lexicográfico) con ω(t, r) ≠ 0 y ω(t, target) ≠ 0"""
    radio = 1
    while True:
        for t in box_vectors(len(r), radio):
            if sup_norm(t) == radio and pairing(t, r) and pairing(t, target):
                return t
        radio += 1


def simplicity_reduce(x: HamiltonianElement, target: LatticeVector) -> IdealWitness:
    """
    Pasos s_1, …, s_k tales que [h_{s_k}, …, [h_{s_1}, x]] es un múltiplo no
    nulo de h_target

    Primero se reduce el soporte de x a un solo término (aniquilando términos
    no colineales, o rompiendo la colinealidad con un e_i) y después se
    persigue el objetivo en uno o dos pasos.
    """
    target = tuple(target)
    if x.is_zero():
        raise InvalidElementError("El elemento de partida es cero")
    if not x.is_derived():
        raise InvalidElementError("El elemento de partida tiene parte de Cartan")
    if len(target) != x.n:
        raise DimensionMismatchError(f"Objetivo de longitud {len(target)}, se esperaba N = {x.n}")
    if is_zero(target):
        raise InvalidVectorError("El objetivo no puede ser el vector cero")

    pasos: List[LatticeVector] = []
    actual = x
    while len(actual.terms) > 1:
        r1 = actual.terms[0][0]
        rj = next((r for r, _ in actual.terms[1:] if not is_collinear(r1, r)), None)
        if rj is not None:
            s = _annihilating_step(r1, rj)
        else:
            s = next(unit(x.n, i) for i in range(x.n) if pairing(unit(x.n, i), r1))
        pasos.append(s)
        actual = bracket(HamiltonianElement.basis(s), actual)

    r = actual.terms[0][0]
    if r != target:
        if pairing(target, r):
            pasos.append(sub(target, r))
        else:
            t = _bridge(r, target)
            pasos.extend([sub(t, r), sub(target, t)])

    testigo = IdealWitness(x, tuple(pasos), target)
    evaluate_ideal_witness(testigo)
    logger.debug(f"✅ Reducción a h{list(target)} en {len(pasos)} pasos")
    return testigo


# ============================================================================
# CENTRO TRIVIAL Y PERFECCIÓN
# ============================================================================

@dataclass
class CenterReport:
    n: int
    radius: int
    central_degrees: List[LatticeVector]
    cartan_rank: int

    @property
    def trivial(self) -> bool:
        """Ningún h_r conmuta con toda la caja y los grados generan Q^N"""
        return not self.central_degrees and self.cartan_rank == self.n

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "radius": self.radius,
            "central_degrees": [list(r) for r in self.central_degrees],
            "cartan_rank": self.cartan_rank,
            "trivial": self.trivial,
        }


def center_check(n: int, radius: int) -> CenterReport:
    """
    Centro de H_N' visto en la caja |r|∞ <= radius

    [h_r, h_s] = ω(r, s)·h_{r+s}, así que h_r es central solo si ω(r, ·) se
    anula en la caja; D(u, 0) conmuta con todo h_r solo si (u, r) = 0, lo
    que fuerza u = 0 cuando los grados tienen rango N.
    """
    check_even(n)
    if radius < 1:
        raise InvalidVectorError(f"El radio debe ser >= 1 (recibido {radius})")
    caja = box_vectors(n, radius)
    b = np.array(caja, dtype=np.int64)
    m = n // 2
    barra = np.concatenate([b[:, m:], -b[:, :m]], axis=1)
    centrales = np.nonzero(~(barra.dot(b.T) != 0).any(axis=1))[0]
    informe = CenterReport(
        n=n,
        radius=radius,
        central_degrees=[caja[i] for i in centrales],
        cartan_rank=len(reduced_row_echelon(caja)),
    )
    logger.debug(f"🔍 Centro en la caja N={n}, radio {radius}: {informe.to_dict()}")
    return informe


@dataclass
class PerfectReport:
    n: int
    radius: int
    checked: int
    failures: List[LatticeVector]

    @property
    def perfect(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "radius": self.radius,
            "checked": self.checked,
            "failures": [list(r) for r in self.failures],
            "perfect": self.perfect,
        }


def perfect_split(r: LatticeVector) -> Tuple[LatticeVector, LatticeVector]:
    """(s, r − s) con s ∈ S, r − s ≠ 0 y ω(s, r) ≠ 0; se prueban antes los ±e_i"""
    n = len(r)
    candidatos = [unit(n, i) for i in range(n)] + [neg(unit(n, i)) for i in range(n)]
    candidatos += sorted(generators(n) - set(candidatos))
    for s in candidatos:
        if pairing(s, r) and sub(r, s) != (0,) * n:
            return s, sub(r, s)
    raise RuntimeError(f"h_{list(r)} no se expresa como corchete de un generador")


def perfect_check(n: int, radius: int) -> PerfectReport:
    """[H_N', H_N'] = H_N': cada h_r de la caja es múltiplo no nulo de un corchete"""
    check_even(n)
    if radius < 1:
        raise InvalidVectorError(f"El radio debe ser >= 1 (recibido {radius})")
    caja = box_vectors(n, radius)
    fallos = []
    for r in caja:
        s, t = perfect_split(r)
        valor = bracket(HamiltonianElement.basis(s), HamiltonianElement.basis(t))
        if valor != HamiltonianElement.basis(r, pairing(s, t)):
            fallos.append(r)
    if fallos:
        logger.info(f"❌ {len(fallos)} grados sin corchete en la caja N={n}, radio {radius}")
    return PerfectReport(n=n, radius=radius, checked=len(caja), failures=fallos)
