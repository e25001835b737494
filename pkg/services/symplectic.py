"""
Matrices enteras simplécticas y conformes-simplécticas

Clasificación en Sp_N(Z) / GSp_N(Z), operaciones de grupo exactas y una
construcción explícita de la transitividad sobre vectores primitivos:
dado r primitivo se obtiene Q ∈ Sp_N(Z) con Q·e_1 = r.

Las matrices son numpy.ndarray con dtype=object: las entradas son enteros
Python, así que no existe desbordamiento.
"""

import logging
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from services.errors import InvalidDocumentError, InvalidMatrixError, NotPrimitiveError
from services.lattice_core import (
    LatticeVector,
    check_even,
    gcd_of,
    is_zero,
    scale,
    unit,
)

logger = logging.getLogger(__name__)


class GspClass(str, Enum):
    SYMPLECTIC = "symplectic"
    ANTI_SYMPLECTIC = "anti_symplectic"
    NOT_IN_GSP = "not_in_gsp"


# ============================================================================
# MATRICES ENTERAS
# ============================================================================

def as_matrix(data) -> np.ndarray:
    """
    Convierte filas de enteros en una IntegerMatrix (ndarray de objetos)

    Args:
        data: lista de filas o ndarray cuadrado

    Returns:
        ndarray N×N con enteros Python
    """
    try:
        rows = [list(row) for row in data]
    except TypeError:
        raise InvalidMatrixError("La matriz debe ser una lista de filas")
    n = len(rows)
    if n == 0 or any(len(row) != n for row in rows):
        raise InvalidMatrixError("La matriz debe ser cuadrada y no vacía")
    for row in rows:
        for x in row:
            if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
                raise InvalidMatrixError(f"Entrada no entera: {x!r}")
    matrix = np.empty((n, n), dtype=object)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            matrix[i, j] = int(x)
    return matrix


def identity_matrix(n: int) -> np.ndarray:
    return as_matrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])


def standard_j(n: int) -> np.ndarray:
    """J = [[O, I_m], [−I_m, O]]"""
    check_even(n)
    m = n // 2
    j = identity_matrix(n) * 0
    for i in range(m):
        j[i, m + i] = 1
        j[m + i, i] = -1
    return j


def determinant(matrix: np.ndarray) -> int:
    """Determinante exacto por eliminación de Bareiss (sin fracciones)"""
    a = [list(row) for row in matrix]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def to_rows(matrix: np.ndarray) -> List[List[int]]:
    return [[int(x) for x in row] for row in matrix]


def classify(matrix) -> GspClass:
    """
    Clasifica M como simpléctica, anti-simpléctica o fuera de GSp_N(Z)

    Primero se comprueba |det| = 1 y después la conjugación de J.
    """
    m = as_matrix(matrix)
    n = m.shape[0]
    if n % 2:
        raise InvalidMatrixError(f"Dimensión impar: {n}")
    if abs(determinant(m)) != 1:
        return GspClass.NOT_IN_GSP
    j = standard_j(n)
    form = m.T.dot(j).dot(m)
    if np.array_equal(form, j):
        return GspClass.SYMPLECTIC
    if np.array_equal(form, -j):
        return GspClass.ANTI_SYMPLECTIC
    return GspClass.NOT_IN_GSP


# ============================================================================
# GSp_N(Z)
# ============================================================================

class GspMatrix:
    """
    Matriz Q ∈ GSp_N(Z) junto con su multiplicador λ(Q) ∈ {+1, −1}

    El invariante QᵀJQ = λ(Q)·J se comprueba en la construcción.
    """

    __slots__ = ("matrix", "multiplier", "_rows")

    def __init__(self, matrix):
        m = as_matrix(matrix)
        n = m.shape[0]
        if n % 2:
            raise InvalidMatrixError(f"Dimensión impar: {n}")
        clase = classify(m)
        if clase == GspClass.NOT_IN_GSP:
            raise InvalidMatrixError(
                f"La matriz no pertenece a GSp_{n}(Z) (det = {determinant(m)})"
            )
        m.flags.writeable = False
        self.matrix = m
        self.multiplier = 1 if clase == GspClass.SYMPLECTIC else -1
        self._rows = tuple(tuple(int(x) for x in row) for row in m)

    @classmethod
    def identity(cls, n: int) -> "GspMatrix":
        return cls(identity_matrix(n))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def act(self, r: LatticeVector) -> LatticeVector:
        """Q·r"""
        return tuple(sum(a * b for a, b in zip(row, r)) for row in self._rows)

    def column(self, i: int) -> LatticeVector:
        return tuple(row[i] for row in self._rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, GspMatrix) and self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __repr__(self) -> str:
        return f"GspMatrix({to_rows(self.matrix)}, multiplier={self.multiplier})"

    def to_dict(self) -> Dict:
        return {"matrix": to_rows(self.matrix), "multiplier": self.multiplier}


def multiplier(q: GspMatrix) -> int:
    return q.multiplier


def multiply(q1: GspMatrix, q2: GspMatrix) -> GspMatrix:
    """Producto Q1·Q2, re-validado como elemento de GSp_N(Z)"""
    if q1.n != q2.n:
        raise InvalidMatrixError(f"Dimensiones distintas: {q1.n} vs {q2.n}")
    return GspMatrix(q1.matrix.dot(q2.matrix))


def inverse(q: GspMatrix) -> GspMatrix:
    """Q⁻¹ = −λ(Q)·J·Qᵀ·J, entera porque λ(Q) = ±1"""
    j = standard_j(q.n)
    inv = GspMatrix(-q.multiplier * j.dot(q.matrix.T).dot(j))
    if not np.array_equal(q.matrix.dot(inv.matrix), identity_matrix(q.n)):
        raise RuntimeError("La inversa calculada no verifica Q·Q⁻¹ = I")
    return inv


# ============================================================================
# GENERADORES ELEMENTALES
# ============================================================================

def plane_matrix(n: int, i: int, a: int, b: int, c: int, d: int) -> np.ndarray:
    """[[a, b], [c, d]] ∈ SL_2(Z) actuando en el plano (e_i, e_{m+i})"""
    check_even(n)
    if a * d - b * c != 1:
        raise InvalidMatrixError("El bloque 2×2 debe tener determinante 1")
    m = n // 2
    mat = identity_matrix(n)
    mat[i, i], mat[i, m + i] = a, b
    mat[m + i, i], mat[m + i, m + i] = c, d
    return mat


def shear(n: int, i: int, k: int) -> np.ndarray:
    return plane_matrix(n, i, 1, k, 0, 1)


def lower_shear(n: int, i: int, k: int) -> np.ndarray:
    return plane_matrix(n, i, 1, 0, k, 1)


def plane_rotation(n: int, i: int) -> np.ndarray:
    return plane_matrix(n, i, 0, 1, -1, 0)


def block_elementary(n: int, i: int, j: int, k: int) -> np.ndarray:
    """diag(A, A^{-T}) con A = I + k·E_ij (i ≠ j, ambos en la primera mitad)"""
    check_even(n)
    m = n // 2
    if i == j or not (0 <= i < m and 0 <= j < m):
        raise InvalidMatrixError(f"Índices inválidos para el bloque elemental: {i}, {j}")
    mat = identity_matrix(n)
    mat[i, j] = k
    mat[m + j, m + i] = -k
    return mat


def anti_symplectic_flip(n: int) -> np.ndarray:
    """diag(I_m, −I_m), multiplicador −1"""
    check_even(n)
    m = n // 2
    mat = identity_matrix(n)
    for i in range(m, n):
        mat[i, i] = -1
    return mat


# ============================================================================
# TRANSITIVIDAD SOBRE VECTORES PRIMITIVOS
# ============================================================================

def symplectic_complete(r: LatticeVector) -> GspMatrix:
    """
    Construye Q ∈ Sp_N(Z) con Q·e_1 = r para r primitivo

    Se reduce r a e_1 con generadores elementales (Euclides en cada plano
    (e_i, e_{m+i}) y luego entre las coordenadas de la primera mitad) y se
    acumulan los inversos. El resultado se valida antes de devolverlo.

    Raises:
        NotPrimitiveError: si r es cero o gcd(r) != 1
    """
    n = len(r)
    check_even(n)
    if is_zero(r):
        raise NotPrimitiveError("El vector cero no es primitivo (gcd = 0)", gcd=0)
    g = gcd_of(r)
    if g != 1:
        raise NotPrimitiveError(f"El vector {list(r)} no es primitivo (gcd = {g})", gcd=g)

    m = n // 2
    v = np.array(list(r), dtype=object)
    q = identity_matrix(n)

    def aplicar(f: np.ndarray, f_inv: np.ndarray) -> None:
        nonlocal v, q
        v = f.dot(v)
        q = q.dot(f_inv)

    # 1. Euclides en cada plano simpléctico: (v_i, v_{m+i}) → (g_i, 0)
    for i in range(m):
        while v[m + i] != 0:
            cociente = v[i] // v[m + i]
            aplicar(plane_matrix(n, i, 0, 1, -1, cociente), plane_matrix(n, i, cociente, -1, 1, 0))

    # 2. Euclides entre v_0 y v_j usando diag(A, A^{-T})
    for j in range(1, m):
        while v[j] != 0:
            cociente = v[0] // v[j]
            aplicar(block_elementary(n, 0, j, -cociente), block_elementary(n, 0, j, cociente))
            if v[0] == 0:
                aplicar(block_elementary(n, 0, j, 1), block_elementary(n, 0, j, -1))
                aplicar(block_elementary(n, j, 0, -1), block_elementary(n, j, 0, 1))
                break
            cociente = v[j] // v[0]
            aplicar(block_elementary(n, j, 0, -cociente), block_elementary(n, j, 0, cociente))

    # 3. Signo: −e_1 → e_1
    if v[0] == -1:
        aplicar(plane_matrix(n, 0, -1, 0, 0, -1), plane_matrix(n, 0, -1, 0, 0, -1))

    resultado = GspMatrix(q)
    if resultado.multiplier != 1 or resultado.act(unit(n, 0)) != tuple(r):
        raise RuntimeError(f"symplectic_complete no certificó Q·e_1 = {list(r)}")
    logger.debug(f"✅ Completado simpléctico para {list(r)}")
    return resultado


def primitive_frame(r: LatticeVector) -> Tuple[int, GspMatrix]:
    """
    (τ, Q) con τ = gcd(r) y Q ∈ Sp_N(Z) tal que τ·Q·e_1 = r

    Sirve para vectores no primitivos: Q completa la dirección r/τ.

    Raises:
        NotPrimitiveError: si r es cero
    """
    if is_zero(r):
        raise NotPrimitiveError("El vector cero no tiene dirección primitiva (gcd = 0)", gcd=0)
    tau = gcd_of(r)
    q = symplectic_complete(tuple(a // tau for a in r))
    if scale(tau, q.column(0)) != tuple(r):
        raise RuntimeError(f"primitive_frame no certificó τ·Q·e_1 = {list(r)}")
    return tau, q


def transitivity_map(r: LatticeVector, s: LatticeVector) -> GspMatrix:
    """Q ∈ Sp_N(Z) con Q·r = s para r, s primitivos: Q = C_s·C_r⁻¹"""
    q = multiply(symplectic_complete(s), inverse(symplectic_complete(r)))
    if q.act(tuple(r)) != tuple(s):
        raise RuntimeError(f"transitivity_map no certificó Q·{list(r)} = {list(s)}")
    return q


def gsp_from_dict(data: Dict, n: Optional[int] = None) -> GspMatrix:
    """Lee {"matrix": [[...]], "multiplier": ±1}; el multiplicador debe coincidir"""
    if not isinstance(data, dict) or "matrix" not in data:
        raise InvalidDocumentError("Se esperaba un objeto con campo 'matrix'")
    q = GspMatrix(data["matrix"])
    if n is not None and q.n != n:
        raise InvalidDocumentError(f"Matriz de dimensión {q.n}, se esperaba N = {n}")
    declared = data.get("multiplier")
    if declared is not None and declared != q.multiplier:
        raise InvalidDocumentError(
            f"Multiplicador declarado {declared} no coincide con el calculado {q.multiplier}"
        )
    return q
