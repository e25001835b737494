"""
Derivaciones graduadas de H_N' sobre truncamientos del retículo

Para un grado d y la caja B = {r : 0 < |r|∞ <= radio}, las incógnitas son los
escalares v[r] con ∂(h_r) = v[r]·h_{r+d}. Cada par r < s con r, s, r+s ∈ B
aporta la ecuación de Leibniz

    ω(r, s)·v[r+s] − ω(r+d, s)·v[r] − ω(r, s+d)·v[s] = 0

y v[−d] = 0 porque h_0 no existe. El núcleo del sistema se calcula de forma
exacta y se compara con las derivaciones internas ad(h_d) (d ≠ 0) o
ad(D(e_i, 0)) (d = 0).

La tabla de pares (t, r, s) no depende del grado: se construye una vez por
caja como arrays de numpy y se desplaza con ω(r+d, s) = ω(r, s) + ω(d, s).

Certificado triangular: si cada incógnita salvo k semillas queda despejada
por una fila cuya única incógnita pendiente es ella, esas filas son
independientes y dim(núcleo) <= k. Si además las k derivaciones predichas
cumplen todas las filas, el núcleo es exactamente su span.
"""

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import repeat
from math import lcm
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from services.algebra import HamiltonianElement
from services.errors import BoxTooSmallError, DimensionMismatchError, NonHomogeneousError
from services.lattice_core import (
    LatticeVector,
    bar,
    box_vectors,
    check_even,
    dot,
    format_scalar,
    is_zero,
    neg,
    pairing,
    sup_norm,
    unit,
)
from services.linear_algebra import ExactKernel, reduced_row_echelon, same_span
from services.symplectic import primitive_frame

logger = logging.getLogger(__name__)

# Enteros por debajo de esta cota se operan en int64 sin desbordamiento
_INT64_SAFE = 2 ** 40


def graded_key(r: LatticeVector) -> Tuple:
    """Orden graduado: norma del supremo, norma L1 y lexicográfico"""
    return (sup_norm(r), sum(abs(c) for c in r), r)


@lru_cache(maxsize=32)
def _box(n: int, radius: int) -> Tuple[LatticeVector, ...]:
    return tuple(box_vectors(n, radius))


@lru_cache(maxsize=32)
def _box_index(n: int, radius: int) -> Dict[LatticeVector, int]:
    return {r: i for i, r in enumerate(_box(n, radius))}


@lru_cache(maxsize=32)
def _box_array(n: int, radius: int) -> np.ndarray:
    caja = np.array(_box(n, radius), dtype=np.int64).reshape(-1, n)
    caja.flags.writeable = False
    return caja


@lru_cache(maxsize=32)
def _graded_order(n: int, radius: int) -> np.ndarray:
    caja = _box(n, radius)
    return np.array(sorted(range(len(caja)), key=lambda i: graded_key(caja[i])), dtype=np.int64)


def _box_positions(vectors: np.ndarray, radius: int) -> np.ndarray:
    """Índice en la caja de cada fila; −1 si la fila no está en la caja"""
    n = vectors.shape[1]
    base = 2 * radius + 1
    pesos = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    codigo = (vectors + radius) @ pesos
    cero = radius * int(pesos.sum())
    dentro = (np.abs(vectors) <= radius).all(axis=1) & (vectors != 0).any(axis=1)
    return np.where(dentro, codigo - (codigo > cero), -1)


class PairTable:
    """Ternas de índices (t, r, s) con r < s, t = r + s, las tres en la caja, y ω(r, s)"""

    __slots__ = ("t", "r", "s", "omega")

    def __init__(self, t: np.ndarray, r: np.ndarray, s: np.ndarray, omega: np.ndarray):
        self.t = t
        self.r = r
        self.s = s
        self.omega = omega

    def __len__(self) -> int:
        return len(self.t)


@lru_cache(maxsize=8)
def _pair_table(n: int, radius: int) -> PairTable:
    caja = _box_array(n, radius)
    m = n // 2
    barra = np.concatenate([caja[:, m:], -caja[:, :m]], axis=1)
    partes: Dict[str, List[np.ndarray]] = {"t": [], "r": [], "s": [], "omega": []}
    for i in range(len(caja) - 1):
        resto = caja[i + 1:]
        destino = _box_positions(caja[i] + resto, radius)
        j = np.nonzero(destino >= 0)[0]
        partes["t"].append(destino[j])
        partes["r"].append(np.full(len(j), i, dtype=np.int64))
        partes["s"].append(j + i + 1)
        # ω(r, s) = (bar(r), s)
        partes["omega"].append(resto[j] @ barra[i])
    tabla = PairTable(*(np.concatenate(partes[k]) for k in ("t", "r", "s", "omega")))
    logger.debug(f"📊 Tabla de pares N={n}, radio {radius}: {len(tabla)} ternas")
    return tabla


# ============================================================================
# TIPOS
# ============================================================================

@dataclass(frozen=True)
class TruncationBox:
    n: int
    radius: int

    def __post_init__(self):
        check_even(self.n)
        if self.radius < 2:
            raise BoxTooSmallError(f"El radio de truncamiento debe ser >= 2 (recibido {self.radius})")

    def vectors(self) -> Tuple[LatticeVector, ...]:
        return _box(self.n, self.radius)

    def index(self) -> Dict[LatticeVector, int]:
        return _box_index(self.n, self.radius)

    def array(self) -> np.ndarray:
        return _box_array(self.n, self.radius)

    def pairs(self) -> PairTable:
        return _pair_table(self.n, self.radius)

    def graded_order(self) -> np.ndarray:
        return _graded_order(self.n, self.radius)

    def contains(self, r: LatticeVector) -> bool:
        return any(r) and sup_norm(r) <= self.radius


@dataclass(frozen=True)
class GradedDerivation:
    """∂(h_r) = values[i]·h_{r+degree} con r = box.vectors()[i]"""

    degree: LatticeVector
    box: TruncationBox
    values: Tuple[Fraction, ...] = field(repr=False)

    def value(self, r: LatticeVector) -> Fraction:
        return self.values[self.box.index()[tuple(r)]]

    def to_dict(self) -> Dict:
        return {
            "degree": list(self.degree),
            "values": [
                {"deg": list(r), "coef": format_scalar(v)}
                for r, v in zip(self.box.vectors(), self.values)
                if v
            ],
        }


@dataclass
class DerivationReport:
    n: int
    degree: LatticeVector
    radius: int
    dimension: int
    expected: int
    match: bool
    basis: List[GradedDerivation]
    residuals: int = 0

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "degree": list(self.degree),
            "radius": self.radius,
            "dimension": self.dimension,
            "expected": self.expected,
            "match": self.match,
            "residuals": self.residuals,
            "basis": [d.to_dict()["values"] for d in self.basis],
        }


# ============================================================================
# SISTEMA DE LEIBNIZ
# ============================================================================

@dataclass(frozen=True)
class _SparseSystem:
    """Filas de tres entradas: Σ_q coefs[f, q]·x[cols[f, q]] = 0, más x[forced_zero] = 0"""

    cols: np.ndarray
    coefs: np.ndarray
    forced_zero: Optional[int] = None

    def rows(self) -> Iterator[Dict[int, Fraction]]:
        for cols, coefs in zip(self.cols.tolist(), self.coefs.tolist()):
            yield {c: Fraction(a) for c, a in zip(cols, coefs) if a}


def _check_degree(degree: LatticeVector, box: TruncationBox) -> LatticeVector:
    d = tuple(degree)
    if len(d) != box.n:
        raise DimensionMismatchError(f"Grado de longitud {len(d)}, se esperaba N = {box.n}")
    if sup_norm(d) > box.radius:
        raise BoxTooSmallError(
            f"|grado|∞ = {sup_norm(d)} supera el radio {box.radius}: no hay restricciones en la caja"
        )
    return d


def _pairing_with(d: LatticeVector, box: TruncationBox) -> np.ndarray:
    """ω(d, r) para cada r de la caja"""
    return box.array() @ np.array(bar(d), dtype=np.int64)


def _leibniz_system(d: LatticeVector, box: TruncationBox) -> _SparseSystem:
    tabla = box.pairs()
    pw = _pairing_with(d, box)
    a = tabla.omega + pw[tabla.s]     # ω(r+d, s)
    b = tabla.omega - pw[tabla.r]     # ω(r, s+d)
    cols = np.stack([tabla.t, tabla.r, tabla.s], axis=1)
    coefs = np.stack([tabla.omega, -a, -b], axis=1)
    vivas = (coefs != 0).any(axis=1)
    forzada = None if is_zero(d) else box.index()[neg(d)]
    return _SparseSystem(cols[vivas], coefs[vivas], forzada)


def _character_system(box: TruncationBox) -> _SparseSystem:
    tabla = box.pairs()
    vivas = tabla.omega != 0
    cols = np.stack([tabla.t, tabla.r, tabla.s], axis=1)[vivas]
    coefs = np.tile(np.array([1, -1, -1], dtype=np.int64), (len(cols), 1))
    return _SparseSystem(cols, coefs)


def constraint_rows(degree: LatticeVector, box: TruncationBox) -> Iterator[Dict[int, Fraction]]:
    """Filas de Leibniz no nulas (sin la fila v[−d] = 0)"""
    yield from _leibniz_system(_check_degree(degree, box), box).rows()


def _to_integers(values: Sequence) -> Tuple[np.ndarray, int]:
    """(enteros, escala) con values = enteros / escala"""
    escala = lcm(*(Fraction(x).denominator for x in values)) if len(values) else 1
    enteros = [int(Fraction(x) * escala) for x in values]
    dtype = np.int64 if max(map(abs, enteros), default=0) < _INT64_SAFE else object
    return np.array(enteros, dtype=dtype), escala


def _residuals(system: _SparseSystem, values: np.ndarray) -> np.ndarray:
    """Residuo de cada fila para cada vector: values (k, ncols) → (k, filas)"""
    return sum(system.coefs[:, q] * values[:, system.cols[:, q]] for q in range(3))


def _residual_matrix(system: _SparseSystem, vectors: Sequence[Sequence]) -> Tuple[np.ndarray, List[int]]:
    """Residuos de varios vectores racionales, con v[−d] anulado, en una sola pasada"""
    enteros, escalas = [], []
    for v in vectors:
        valores = list(v)
        if system.forced_zero is not None:
            valores[system.forced_zero] = 0
        arr, escala = _to_integers(valores)
        enteros.append(arr)
        escalas.append(escala)
    return _residuals(system, np.stack(enteros)), escalas


def leibniz_residuals(derivation: GradedDerivation) -> List[Tuple[LatticeVector, LatticeVector, Fraction]]:
    """Residuos no nulos de la identidad de Leibniz; vacío si ∂ es derivación en la caja"""
    box = derivation.box
    sistema = _leibniz_system(derivation.degree, box)
    residuos, (escala,) = _residual_matrix(sistema, [derivation.values])
    filas = np.nonzero(residuos[0])[0]
    caja = box.vectors()
    return [
        (caja[int(sistema.cols[f, 1])], caja[int(sistema.cols[f, 2])], Fraction(int(residuos[0, f]), escala))
        for f in filas
    ]


def inner_derivation(x: HamiltonianElement, degree: LatticeVector, box: TruncationBox) -> GradedDerivation:
    """
    Restricción de ad(x) a la caja

    Raises:
        NonHomogeneousError: si x no es homogéneo del grado indicado
    """
    d = tuple(degree)
    if x.n != box.n or len(d) != box.n:
        raise DimensionMismatchError(f"Dimensiones incompatibles con la caja N = {box.n}")
    caja = box.vectors()
    if is_zero(d):
        if x.terms:
            raise NonHomogeneousError("Para grado 0 el elemento debe estar en la subálgebra de Cartan")
        valores = tuple(Fraction(dot(x.cartan, r)) for r in caja)
    else:
        if not x.is_derived() or any(r != d for r in x.support):
            raise NonHomogeneousError(f"El elemento no es homogéneo de grado {list(d)}")
        a = x.coefficient(d)
        valores = tuple(a * pairing(d, r) for r in caja)
    return GradedDerivation(d, box, valores)


def predicted_derivations(degree: LatticeVector, box: TruncationBox) -> List[GradedDerivation]:
    """ad(h_d) si d ≠ 0; ad(D(e_i, 0)) para cada i si d = 0"""
    d = _check_degree(degree, box)
    if is_zero(d):
        return [inner_derivation(HamiltonianElement.cartan_element(unit(box.n, i)), d, box) for i in range(box.n)]
    return [inner_derivation(HamiltonianElement.basis(d), d, box)]


def _predicted_array(d: LatticeVector, box: TruncationBox) -> np.ndarray:
    """Las mismas predicciones como enteros: ω(d, r), o las coordenadas r_i si d = 0"""
    if is_zero(d):
        return np.ascontiguousarray(box.array().T)
    return _pairing_with(d, box)[np.newaxis, :]


def _seed_hint(d: LatticeVector, box: TruncationBox) -> List[int]:
    idx = box.index()
    if is_zero(d):
        return [idx[unit(box.n, i)] for i in range(box.n)]
    pw = _pairing_with(d, box)
    return [int(next(c for c in box.graded_order() if pw[c]))]


# ============================================================================
# RESOLUCIÓN EXACTA
# ============================================================================

def _propagate(
    system: _SparseSystem,
    ncols: int,
    seeds: Sequence[int],
    order: np.ndarray,
) -> Tuple[List[int], List[Tuple[np.ndarray, np.ndarray]]]:
    """
    Cierre triangular: una fila cuya única incógnita pendiente (con
    coeficiente no nulo) es x_c determina x_c. Si el cierre se detiene, la
    primera columna pendiente en `order` pasa a ser semilla.

    Returns:
        (semillas, rondas); cada ronda es (filas, posición de la incógnita)
    """
    conocida = np.zeros(ncols, dtype=bool)
    semillas = [int(c) for c in seeds]
    conocida[semillas] = True
    if system.forced_zero is not None:
        conocida[system.forced_zero] = True
    presentes = system.coefs != 0
    activas = np.arange(len(system.cols))
    rondas: List[Tuple[np.ndarray, np.ndarray]] = []
    while not conocida.all():
        cols = system.cols[activas]
        pendientes = presentes[activas] & ~conocida[cols]
        cuenta = pendientes.sum(axis=1)
        unicas = np.nonzero(cuenta == 1)[0]
        if len(unicas) == 0:
            libre = int(order[~conocida[order]][0])
            semillas.append(libre)
            conocida[libre] = True
        else:
            posiciones = pendientes[unicas].argmax(axis=1)
            nuevas, primera = np.unique(cols[unicas, posiciones], return_index=True)
            rondas.append((activas[unicas[primera]], posiciones[primera]))
            conocida[nuevas] = True
        activas = activas[cuenta > 0]
    return semillas, rondas


def _seed_kernel(
    system: _SparseSystem,
    ncols: int,
    seeds: List[int],
    rounds: List[Tuple[np.ndarray, np.ndarray]],
    stop_rank: Optional[int],
) -> List[List[Fraction]]:
    """
    Núcleo exacto reducido a las semillas: cada columna se expresa en las
    semillas siguiendo las rondas, y el resto de filas restringe las semillas
    """
    k = len(seeds)
    expr = [[Fraction(0)] * k for _ in range(ncols)]
    for j, c in enumerate(seeds):
        expr[c][j] = Fraction(1)
    for filas, posiciones in rounds:
        for fila, pos in zip(filas.tolist(), posiciones.tolist()):
            cols = system.cols[fila].tolist()
            coefs = system.coefs[fila].tolist()
            acumulado = [Fraction(0)] * k
            for q in range(3):
                if q != pos and coefs[q]:
                    origen = expr[cols[q]]
                    acumulado = [x + coefs[q] * y for x, y in zip(acumulado, origen)]
            expr[cols[pos]] = [-x / coefs[pos] for x in acumulado]

    escala = lcm(*(x.denominator for fila in expr for x in fila))
    enteros = [[int(x * escala) for x in fila] for fila in expr]
    dtype = np.int64 if max((abs(x) for fila in enteros for x in fila), default=0) < _INT64_SAFE else object
    matriz = np.array(enteros, dtype=dtype).reshape(ncols, k)
    restricciones = sum(system.coefs[:, q, np.newaxis] * matriz[system.cols[:, q]] for q in range(3))
    restricciones = restricciones[(restricciones != 0).any(axis=1)]
    if dtype is np.int64 and len(restricciones):
        restricciones = np.unique(restricciones, axis=0)

    kernel = ExactKernel(k)
    for fila in restricciones.tolist():
        kernel.add_row({j: Fraction(a) for j, a in enumerate(fila) if a})
        if kernel.rank == k or kernel.rank == stop_rank:
            break
    base = []
    for u in kernel.kernel_basis():
        base.append([sum((e * c for e, c in zip(fila, u) if c), Fraction(0)) for fila in expr])
    return reduced_row_echelon(base)


def _full_elimination(system: _SparseSystem, box: TruncationBox) -> List[List[Fraction]]:
    """Eliminación completa fila a fila; referencia para el certificado triangular"""
    claves = [graded_key(r) for r in box.vectors()]
    kernel = ExactKernel(len(claves), column_key=claves.__getitem__)
    if system.forced_zero is not None:
        kernel.add_row({system.forced_zero: Fraction(1)})
    for fila in system.rows():
        kernel.add_row(fila)
    return reduced_row_echelon(kernel.kernel_basis())


def _solve(
    system: _SparseSystem,
    box: TruncationBox,
    predicted: np.ndarray,
    seeds: List[int],
    early_exit: bool,
) -> List[List[Fraction]]:
    if len(system.cols) == 0 and system.forced_zero is None:
        raise BoxTooSmallError(f"No hay restricciones en la caja de radio {box.radius}")
    if not early_exit:
        return _full_elimination(system, box)

    ncols = len(box.vectors())
    prediccion = reduced_row_echelon(predicted.tolist())
    valida = not _residuals(system, predicted).any()
    if system.forced_zero is not None:
        valida = valida and not predicted[:, system.forced_zero].any()
    semillas, rondas = _propagate(system, ncols, seeds, box.graded_order())
    if valida and len(semillas) == len(prediccion):
        logger.debug(f"📊 Certificado triangular con {len(semillas)} semillas")
        return prediccion
    logger.warning(
        f"⚠️ Cierre triangular con {len(semillas)} semillas para {len(prediccion)} predicciones; "
        "se resuelve el sistema reducido"
    )
    objetivo = len(semillas) - len(prediccion) if valida else None
    return _seed_kernel(system, ncols, semillas, rondas, objetivo)


def solve_graded_derivations(
    degree: LatticeVector,
    box: TruncationBox,
    early_exit: bool = True,
) -> List[GradedDerivation]:
    """
    Base del espacio de soluciones del sistema de Leibniz en la caja

    Los vectores se devuelven en forma escalonada reducida: la primera
    coordenada no nula (orden lexicográfico de B) vale 1. Con
    early_exit=False se hace la eliminación completa sin certificado.
    """
    d = _check_degree(degree, box)
    base = _solve(_leibniz_system(d, box), box, _predicted_array(d, box), _seed_hint(d, box), early_exit)
    logger.debug(f"🔍 Grado {list(d)}, radio {box.radius}: dimensión {len(base)}")
    return [GradedDerivation(d, box, tuple(v)) for v in base]


def certify_inner(degree: LatticeVector, box: TruncationBox, early_exit: bool = True) -> DerivationReport:
    """
    Comprueba que toda derivación graduada en la caja es interna

    Un fallo es un resultado del informe, no una excepción.
    """
    d = _check_degree(degree, box)
    sistema = _leibniz_system(d, box)
    valores = _solve(sistema, box, _predicted_array(d, box), _seed_hint(d, box), early_exit)
    base = [GradedDerivation(d, box, tuple(v)) for v in valores]
    prediccion = predicted_derivations(d, box)
    esperado = box.n if is_zero(d) else 1
    residuos = 0
    if base:
        matriz, _ = _residual_matrix(sistema, valores)
        residuos = int(np.count_nonzero(matriz))
    coincide = (
        len(base) == esperado
        and residuos == 0
        and same_span([b.values for b in base], [p.values for p in prediccion])
    )
    if coincide:
        logger.info(f"✅ Grado {list(d)} (N={box.n}, radio {box.radius}): dimensión {len(base)}")
    else:
        logger.info(f"❌ Grado {list(d)} (N={box.n}, radio {box.radius}): dimensión {len(base)}, esperada {esperado}")
    return DerivationReport(
        n=box.n,
        degree=d,
        radius=box.radius,
        dimension=len(base),
        expected=esperado,
        match=coincide,
        basis=base,
        residuals=residuos,
    )


def _certify_batch(n: int, radius: int, degrees: List[LatticeVector]) -> List[DerivationReport]:
    box = TruncationBox(n, radius)
    return [certify_inner(d, box) for d in degrees]


def certify_degrees(
    box: TruncationBox,
    degrees: Sequence[LatticeVector],
    workers: int = 4,
) -> List[DerivationReport]:
    """
    certify_inner por lotes en procesos separados; el resultado sigue el
    orden de `degrees`. Con workers <= 1 todo se hace en este proceso.
    """
    grados = [_check_degree(d, box) for d in degrees]
    if workers <= 1 or len(grados) <= 1:
        return _certify_batch(box.n, box.radius, grados)
    tamano = max(1, -(-len(grados) // (workers * 4)))
    lotes = [grados[i:i + tamano] for i in range(0, len(grados), tamano)]
    logger.info(f"🔍 Certificando {len(grados)} grados en {len(lotes)} lotes ({workers} procesos)")
    contexto = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=contexto) as executor:
        resultados = executor.map(_certify_batch, repeat(box.n), repeat(box.radius), lotes)
        return [informe for lote in resultados for informe in lote]


# ============================================================================
# PARTE INTERNA SOBRE UN MARCO PRIMITIVO
# ============================================================================

def inner_coefficient(derivation: GradedDerivation) -> Fraction:
    """
    c tal que ∂ − c·ad(h_d) se anula en h_a, con a = Q·e_{m+1} y Q·e_1 = d/gcd(d)

    Como ω(d, Q·e_{m+1}) = −gcd(d) ≠ 0, el ancla siempre fija c. Si el ancla
    cae fuera de la caja se usa el primer r (orden graduado) con ω(d, r) ≠ 0.
    """
    d = derivation.degree
    box = derivation.box
    if is_zero(d):
        raise NonHomogeneousError("El grado 0 no tiene parte ad(h_d)")
    tau, q = primitive_frame(d)
    ancla = q.column(box.n // 2)
    if not box.contains(ancla):
        ancla = next(r for r in sorted(box.vectors(), key=graded_key) if pairing(d, r))
    return derivation.value(ancla) / pairing(d, ancla)


def remove_inner_part(derivation: GradedDerivation) -> GradedDerivation:
    """∂ − c·ad(h_d) con c = inner_coefficient(∂); nula si ∂ es interna"""
    c = inner_coefficient(derivation)
    interna = inner_derivation(HamiltonianElement.basis(derivation.degree, c), derivation.degree, derivation.box)
    valores = tuple(a - b for a, b in zip(derivation.values, interna.values))
    return GradedDerivation(derivation.degree, derivation.box, valores)


# ============================================================================
# CARACTERES ADITIVOS EN GRADO CERO
# ============================================================================

def character_rows(box: TruncationBox) -> Iterator[Dict[int, Fraction]]:
    """c_{r+s} − c_r − c_s = 0 para r < s con ω(r, s) ≠ 0 y r, s, r+s ∈ B"""
    yield from _character_system(box).rows()


def degree_zero_character_solve(box: TruncationBox, early_exit: bool = True) -> List[GradedDerivation]:
    """Base de las soluciones de las ecuaciones de aditividad solamente"""
    zero = (0,) * box.n
    base = _solve(_character_system(box), box, _predicted_array(zero, box), _seed_hint(zero, box), early_exit)
    return [GradedDerivation(zero, box, tuple(v)) for v in base]


def is_linear_character(values: Union[GradedDerivation, Sequence[Fraction]], box: TruncationBox) -> bool:
    """True si existe c ∈ Q^N con values[r] = Σ r_i c_i en toda la caja"""
    if isinstance(values, GradedDerivation):
        values = values.values
    idx = box.index()
    c = [values[idx[unit(box.n, i)]] for i in range(box.n)]
    return all(values[idx[r]] == dot(c, r) for r in box.vectors())
