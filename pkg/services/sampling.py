"""
Generadores aleatorios con semilla

Compartidos por los tests y por la autoverificación: todo recibe un
random.Random explícito para que las ejecuciones sean reproducibles.
"""

import random
from fractions import Fraction
from typing import Optional

from services.algebra import HamiltonianElement
from services.automorphism import TorusAutomorphism
from services.lattice_core import LatticeVector, check_even, gcd_of
from services.symplectic import (
    GspMatrix,
    anti_symplectic_flip,
    block_elementary,
    identity_matrix,
    lower_shear,
    plane_rotation,
    shear,
)


def random_scalar(rng: random.Random, bound: int = 9) -> Fraction:
    """Racional no nulo con |numerador|, |denominador| <= bound"""
    num = 0
    while num == 0:
        num = rng.randint(-bound, bound)
    return Fraction(num, rng.randint(1, bound))


def random_vector(rng: random.Random, n: int, radius: int, nonzero: bool = True) -> LatticeVector:
    while True:
        r = tuple(rng.randint(-radius, radius) for _ in range(n))
        if any(r) or not nonzero:
            return r


def random_primitive_vector(rng: random.Random, n: int, bound: int = 20) -> LatticeVector:
    while True:
        r = random_vector(rng, n, bound)
        if gcd_of(r) == 1:
            return r


def random_element(
    rng: random.Random,
    n: int,
    radius: int = 5,
    max_terms: int = 5,
    bound: int = 9,
    with_cartan: bool = False,
) -> HamiltonianElement:
    terms = [(random_vector(rng, n, radius), random_scalar(rng, bound)) for _ in range(rng.randint(1, max_terms))]
    cartan = None
    if with_cartan:
        cartan = [random_scalar(rng, bound) if rng.random() < 0.5 else 0 for _ in range(n)]
    return HamiltonianElement(n, terms, cartan)


def random_symplectic(rng: random.Random, n: int, steps: int = 6) -> GspMatrix:
    """Producto de generadores elementales de Sp_N(Z); simpléctica por construcción"""
    check_even(n)
    m = n // 2
    q = identity_matrix(n)
    for _ in range(steps):
        tipo = rng.randrange(4 if m > 1 else 3)
        i = rng.randrange(m)
        k = rng.choice((-2, -1, 1, 2))
        if tipo == 0:
            g = shear(n, i, k)
        elif tipo == 1:
            g = lower_shear(n, i, k)
        elif tipo == 2:
            g = plane_rotation(n, i)
        else:
            j = rng.choice([x for x in range(m) if x != i])
            g = block_elementary(n, i, j, k)
        q = q.dot(g)
    return GspMatrix(q)


def random_gsp(rng: random.Random, n: int, anti: Optional[bool] = None) -> GspMatrix:
    """Elemento de GSp_N(Z); anti=None decide el multiplicador al azar"""
    q = random_symplectic(rng, n).matrix
    if anti is None:
        anti = rng.random() < 0.5
    if anti:
        q = q.dot(anti_symplectic_flip(n))
    return GspMatrix(q)


def random_automorphism(
    rng: random.Random,
    n: int,
    anti: Optional[bool] = None,
    bound: int = 5,
) -> TorusAutomorphism:
    return TorusAutomorphism(random_gsp(rng, n, anti), [random_scalar(rng, bound) for _ in range(n)])
