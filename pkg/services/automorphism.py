"""
Automorfismos de H_N' y H_N

Un automorfismo queda determinado por un par (Q, λ) con Q ∈ GSp_N(Z) y
λ ∈ (Q^×)^N:

    h_r ↦ c_r · h_{Qr}        c_r = λ^r                  si λ(Q) = +1
                              c_r = (−1)^{|r|−1} λ^r     si λ(Q) = −1
    D(u, 0) ↦ D(Q^{−⊤}u, 0)

El signo anti-simpléctico es el único que cumple c_{r+s} = −c_r·c_s, que es
lo que exige el corchete cuando ω(Qr, Qs) = −ω(r, s).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from services.algebra import HamiltonianElement, bracket
from services.errors import DimensionMismatchError, InvalidDocumentError, InvalidElementError
from services.lattice_core import (
    LatticeVector,
    add,
    dot,
    box_vectors,
    format_scalar,
    neg,
    parse_scalar,
    unit,
)
from services.linear_algebra import solve_exact
from services.symplectic import GspMatrix, gsp_from_dict, inverse as gsp_inverse, multiply

logger = logging.getLogger(__name__)

# Filas de la caja por bloque en verify_homomorphism
_BLOCK = 256
_INT64_SAFE = 2 ** 20


class SignConvention(str, Enum):
    COCYCLE = "cocycle"    # (−1)^{|r|−1}, el que usa apply
    LITERAL = "literal"    # (−1)^{|r|}, solo para la prueba de regresión


def _sign(multiplier: int, total: int, convention: SignConvention) -> int:
    """Signo de c_r a partir de |r| = Σ r_i: solo cambia si el multiplicador es −1"""
    if multiplier == 1:
        return 1
    exponente = total - 1 if convention == SignConvention.COCYCLE else total
    return -1 if exponente % 2 else 1


def _signs(multiplier: int, totals: np.ndarray, convention: SignConvention) -> np.ndarray:
    """_sign vectorizado sobre un array de sumas |r|"""
    if multiplier == 1:
        return np.ones_like(totals)
    exponente = totals - 1 if convention == SignConvention.COCYCLE else totals
    return np.where(exponente % 2 == 1, -1, 1)


def _power(lam: Sequence[Fraction], r: LatticeVector) -> Fraction:
    """λ^r = Π λ_i^{r_i}"""
    resultado = Fraction(1)
    for base, e in zip(lam, r):
        if e:
            resultado *= base ** e
    return resultado


class TorusAutomorphism:
    """Par (Q, λ) que define un automorfismo de H_N"""

    __slots__ = ("q", "scaling", "_q_inv")

    def __init__(self, q: GspMatrix, scaling: Sequence):
        escala = tuple(Fraction(c) for c in scaling)
        if len(escala) != q.n:
            raise DimensionMismatchError(f"λ tiene {len(escala)} coordenadas, se esperaban {q.n}")
        if any(c == 0 for c in escala):
            raise InvalidElementError("Todas las coordenadas de λ deben ser no nulas")
        self.q = q
        self.scaling: Tuple[Fraction, ...] = escala
        self._q_inv: Optional[GspMatrix] = None

    @classmethod
    def identity(cls, n: int) -> "TorusAutomorphism":
        return cls(GspMatrix.identity(n), (1,) * n)

    @property
    def n(self) -> int:
        return self.q.n

    @property
    def q_inverse(self) -> GspMatrix:
        """Q⁻¹, calculada una sola vez"""
        if self._q_inv is None:
            self._q_inv = gsp_inverse(self.q)
        return self._q_inv

    def coefficient(self, r: LatticeVector, convention: SignConvention = SignConvention.COCYCLE) -> Fraction:
        """c_r tal que σ(h_r) = c_r·h_{Qr}"""
        return _sign(self.q.multiplier, sum(r), convention) * _power(self.scaling, r)

    def __eq__(self, other) -> bool:
        return isinstance(other, TorusAutomorphism) and self.q == other.q and self.scaling == other.scaling

    def __hash__(self) -> int:
        return hash((self.q, self.scaling))

    def __repr__(self) -> str:
        return f"TorusAutomorphism(q={self.q.to_dict()['matrix']}, lambda={[format_scalar(c) for c in self.scaling]})"

    def to_dict(self) -> Dict:
        return {
            "q": self.q.to_dict()["matrix"],
            "multiplier": self.q.multiplier,
            "lambda": [format_scalar(c) for c in self.scaling],
        }

    @classmethod
    def from_dict(cls, data: Dict, n: Optional[int] = None) -> "TorusAutomorphism":
        if not isinstance(data, dict) or "q" not in data or "lambda" not in data:
            raise InvalidDocumentError("Un automorfismo necesita los campos 'q' y 'lambda'")
        q = gsp_from_dict({"matrix": data["q"], "multiplier": data.get("multiplier")}, n)
        if not isinstance(data["lambda"], list):
            raise InvalidDocumentError("'lambda' debe ser un array de escalares")
        try:
            return cls(q, [parse_scalar(c) for c in data["lambda"]])
        except InvalidElementError as e:
            raise InvalidDocumentError(e.detail)


# ============================================================================
# APLICACIÓN Y LEY DE GRUPO
# ============================================================================

def apply(
    sigma: TorusAutomorphism,
    x: HamiltonianElement,
    convention: SignConvention = SignConvention.COCYCLE,
) -> HamiltonianElement:
    if sigma.n != x.n:
        raise DimensionMismatchError(f"Automorfismo de dimensión {sigma.n} sobre elemento de dimensión {x.n}")
    terms = [(sigma.q.act(r), sigma.coefficient(r, convention) * a) for r, a in x.terms]
    cartan = None
    if any(x.cartan):
        # Q^{−⊤}u = (Q⁻¹)ᵀ u
        inv = sigma.q_inverse.matrix
        cartan = [sum((inv[j, i] * x.cartan[j] for j in range(x.n)), Fraction(0)) for i in range(x.n)]
    return HamiltonianElement(x.n, terms, cartan)


def compose(s1: TorusAutomorphism, s2: TorusAutomorphism) -> TorusAutomorphism:
    """
    σ con σ(x) = s1(s2(x))

    La matriz es Q1·Q2; λ_i se lee del coeficiente de s1(s2(h_{e_i})), ya que
    el signo de e_i es 1 en ambos casos. Se valida después en e_i + e_j.
    """
    if s1.n != s2.n:
        raise DimensionMismatchError(f"Automorfismos de dimensiones distintas: {s1.n} vs {s2.n}")
    q = multiply(s1.q, s2.q)
    n = s1.n
    escala = []
    for i in range(n):
        imagen = apply(s1, apply(s2, HamiltonianElement.basis(unit(n, i))))
        escala.append(imagen.coefficient(q.act(unit(n, i))))
    resultado = TorusAutomorphism(q, escala)
    _validate_extensional(n, lambda x: apply(resultado, x) == apply(s1, apply(s2, x)), "compose")
    return resultado


def inverse(sigma: TorusAutomorphism) -> TorusAutomorphism:
    """σ⁻¹ con matriz Q⁻¹ y Λ_i = 1 / coeficiente de σ(h_{Q⁻¹e_i})"""
    q_inv = sigma.q_inverse
    n = sigma.n
    escala = []
    for i in range(n):
        preimagen = q_inv.act(unit(n, i))
        escala.append(1 / apply(sigma, HamiltonianElement.basis(preimagen)).coefficient(unit(n, i)))
    resultado = TorusAutomorphism(q_inv, escala)
    _validate_extensional(n, lambda x: apply(sigma, apply(resultado, x)) == x, "inverse")
    return resultado


def _validate_extensional(n: int, holds: Callable[[HamiltonianElement], bool], nombre: str) -> None:
    pruebas = [unit(n, i) for i in range(n)] + [add(unit(n, i), unit(n, j)) for i, j in combinations(range(n), 2)]
    for r in pruebas:
        if not holds(HamiltonianElement.basis(r)):
            raise RuntimeError(f"{nombre} no supera la validación extensional en h_{list(r)}")


def natural_q(q: GspMatrix) -> TorusAutomorphism:
    """σ_Q: escalado trivial"""
    return TorusAutomorphism(q, (1,) * q.n)


def natural_scaling(n: int, lam: Sequence) -> TorusAutomorphism:
    """σ_λ: matriz identidad"""
    return TorusAutomorphism(GspMatrix.identity(n), lam)


def decompose(sigma: TorusAutomorphism) -> Tuple[TorusAutomorphism, TorusAutomorphism]:
    """(σ_Q, σ_λ) con σ = σ_Q ∘ σ_λ"""
    return natural_q(sigma.q), natural_scaling(sigma.n, sigma.scaling)


def conjugate_scaling(theta: TorusAutomorphism, lam: Sequence) -> Tuple[Fraction, ...]:
    """μ_i = λ^{Q e_i}, de modo que θ⁻¹ σ_λ θ = σ_μ"""
    lam = tuple(Fraction(c) for c in lam)
    if len(lam) != theta.n:
        raise DimensionMismatchError(f"λ tiene {len(lam)} coordenadas, se esperaban {theta.n}")
    if any(c == 0 for c in lam):
        raise InvalidElementError("Todas las coordenadas de λ deben ser no nulas")
    return tuple(_power(lam, theta.q.column(i)) for i in range(theta.n))


# ============================================================================
# VERIFICACIÓN DEL HOMOMORFISMO
# ============================================================================

def check_pair(
    sigma: TorusAutomorphism,
    x: HamiltonianElement,
    y: HamiltonianElement,
    convention: SignConvention = SignConvention.COCYCLE,
) -> bool:
    """σ([x, y]) == [σ(x), σ(y)]"""
    return apply(sigma, bracket(x, y), convention) == bracket(apply(sigma, x, convention), apply(sigma, y, convention))


@dataclass
class HomomorphismReport:
    passed: bool
    checked: int
    failures: int
    counterexample: Optional[Tuple[LatticeVector, LatticeVector]] = None

    def to_dict(self) -> Dict:
        ejemplo = None
        if self.counterexample is not None:
            ejemplo = {"r": list(self.counterexample[0]), "s": list(self.counterexample[1])}
        return {
            "passed": self.passed,
            "checked": self.checked,
            "failures": self.failures,
            "counterexample": ejemplo,
        }


def verify_homomorphism(
    sigma: TorusAutomorphism,
    box_radius: int,
    convention: SignConvention = SignConvention.COCYCLE,
) -> HomomorphismReport:
    """
    Comprueba σ([h_r, h_s]) = [σ(h_r), σ(h_s)] para todos los pares de la caja
    |r|∞, |s|∞ <= box_radius, y [D(e_i,0), h_r] para los generadores de Cartan

    Como λ^{r+s} = λ^r·λ^s, cada par se reduce a
    ω(r, s)·ε(r+s) = ω(Qr, Qs)·ε(r)·ε(s), con ε el signo de c_r; los pares se
    evalúan por bloques de filas con numpy. El contraejemplo es el primer par
    fallido en orden lexicográfico.

    Un fallo es un resultado del informe, nunca una excepción.
    """
    if box_radius < 1:
        raise InvalidElementError(f"El radio debe ser >= 1 (recibido {box_radius})")
    n = sigma.n
    m = n // 2
    caja = box_vectors(n, box_radius)
    ncols = len(caja)
    cota = n * box_radius * max(abs(int(x)) for x in sigma.q.matrix.flat)
    dtype = np.int64 if cota < _INT64_SAFE else object

    b = np.array(caja, dtype=dtype)
    qb = b.dot(sigma.q.matrix.T).astype(dtype)
    barra = np.concatenate([b[:, m:], -b[:, :m]], axis=1)
    barra_q = np.concatenate([qb[:, m:], -qb[:, :m]], axis=1)
    totales = np.array([sum(r) for r in caja], dtype=np.int64)
    multiplicador = sigma.q.multiplier
    eps = _signs(multiplicador, totales, convention)
    columnas = np.arange(ncols)

    fallos = 0
    primero: Optional[Tuple[LatticeVector, LatticeVector]] = None
    for inicio in range(0, ncols, _BLOCK):
        fin = min(inicio + _BLOCK, ncols)
        w = barra[inicio:fin].dot(b.T)
        wq = barra_q[inicio:fin].dot(qb.T)
        eps_suma = _signs(multiplicador, totales[inicio:fin, np.newaxis] + totales[np.newaxis, :], convention)
        distintos = w * eps_suma != wq * eps[inicio:fin, np.newaxis] * eps[np.newaxis, :]
        distintos &= columnas[np.newaxis, :] > np.arange(inicio, fin)[:, np.newaxis]
        fallos += int(np.count_nonzero(distintos))
        if primero is None and distintos.any():
            i, j = np.argwhere(distintos)[0]
            primero = (caja[inicio + i], caja[j])

    # [D(v_i, 0), c_r·h_{Qr}] = (v_i, Qr)·c_r·h_{Qr} debe ser r_i·c_r·h_{Qr}
    v = np.array(
        [apply(sigma, HamiltonianElement.cartan_element(unit(n, i)), convention).cartan for i in range(n)],
        dtype=object,
    )
    distintos = v.dot(qb.T) != b.T
    fallos_cartan = int(np.count_nonzero(distintos))
    if primero is None and fallos_cartan:
        _, j = np.argwhere(distintos)[0]
        primero = ((0,) * n, caja[j])
    fallos += fallos_cartan

    revisados = ncols * (ncols - 1) // 2 + n * ncols
    informe = HomomorphismReport(passed=fallos == 0, checked=revisados, failures=fallos, counterexample=primero)
    if informe.passed:
        logger.debug(f"✅ Homomorfismo verificado en {revisados} pares (radio {box_radius})")
    else:
        logger.info(f"❌ Homomorfismo falla en {fallos}/{revisados} pares; primero {primero}")
    return informe


# ============================================================================
# GRADOS OPUESTOS Y EXTENSIÓN A LA SUBÁLGEBRA DE CARTAN
# ============================================================================

def _image_degree(sigma: TorusAutomorphism, r: LatticeVector) -> LatticeVector:
    (grado, _), = apply(sigma, HamiltonianElement.basis(r)).terms
    return grado


def check_odd_degrees(sigma: TorusAutomorphism, radius: int) -> bool:
    """Si σ(h_r) ∈ Q·h_s entonces σ(h_{−r}) ∈ Q·h_{−s}, para todo r de la caja"""
    return all(
        _image_degree(sigma, neg(r)) == neg(_image_degree(sigma, r))
        for r in box_vectors(sigma.n, radius)
        if r > neg(r)
    )


def cartan_extension(sigma: TorusAutomorphism, u: Sequence) -> Tuple[Fraction, ...]:
    """
    Imagen de D(u, 0) determinada solo por σ restringido a H_N'

    El v con σ(D(u, 0)) = D(v, 0) cumple (v, grado de σ(h_r)) = (u, r) para
    todo r. Con r = e_i las filas son los grados de σ(h_{e_i}) y el sistema
    tiene solución única v = Q^{−⊤}u.
    """
    if len(u) != sigma.n:
        raise DimensionMismatchError(f"u tiene {len(u)} coordenadas, se esperaban {sigma.n}")
    filas = [list(_image_degree(sigma, unit(sigma.n, i))) for i in range(sigma.n)]
    v = solve_exact(filas, [Fraction(c) for c in u])
    if v is None:
        raise RuntimeError("Los grados de σ(h_{e_i}) no determinan la extensión a la subálgebra de Cartan")
    return tuple(v)


def check_cartan_extension(sigma: TorusAutomorphism, radius: int = 2) -> bool:
    """
    σ(H_N') ⊆ H_N', σ(D(u, 0)) ⊆ subálgebra de Cartan, y la imagen de cada
    D(e_i, 0) es la extensión única calculada desde H_N'
    """
    n = sigma.n
    caja = box_vectors(n, radius)
    if not all(apply(sigma, HamiltonianElement.basis(r)).is_derived() for r in caja):
        return False
    for i in range(n):
        imagen = apply(sigma, HamiltonianElement.cartan_element(unit(n, i)))
        v = cartan_extension(sigma, unit(n, i))
        if imagen.terms or imagen.cartan != v:
            return False
        if any(dot(v, _image_degree(sigma, r)) != r[i] for r in caja):
            return False
    return True
