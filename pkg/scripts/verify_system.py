#!/usr/bin/env python3
"""
Autoverificación del álgebra hamiltoniana

Ejecuta las suites de propiedades (Jacobi y oráculo de Witt, automorfismos,
transitividad simpléctica, generación, simplicidad, derivaciones,
round-trip JSON y estructura del álgebra) y produce un informe JSON
determinista para una semilla.
"""

import argparse
import json
import logging
import random
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Callable, Dict, List, Optional

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from services.algebra import HamiltonianElement, bracket, embed_to_witt, witt_bracket, witt_divergence_check
from services.automorphism import (
    SignConvention,
    TorusAutomorphism,
    apply,
    check_cartan_extension,
    check_odd_degrees,
    check_pair,
    conjugate_scaling,
    inverse,
    natural_scaling,
    verify_homomorphism,
)
from services.config_loader import load_config, profile_settings
from services.derivations import (
    TruncationBox,
    certify_degrees,
    degree_zero_character_solve,
    is_linear_character,
    remove_inner_part,
    solve_graded_derivations,
)
from services.errors import HamiltonianError
from services.generation import (
    IdealWitness,
    center_check,
    check_frame_witness,
    evaluate_ideal_witness,
    evaluate_witness,
    generation_witness,
    perfect_check,
    simplicity_reduce,
    witness_from_dict,
)
from services.lattice_core import box_vectors, unit
from services.sampling import (
    random_automorphism,
    random_element,
    random_primitive_vector,
    random_vector,
)
from services.symplectic import GspClass, GspMatrix, classify, gsp_from_dict, symplectic_complete

logger = logging.getLogger(__name__)

MAX_FAILURES = 5

SUITES = (
    "jacobi",
    "automorphisms",
    "transitivity",
    "generation",
    "simplicity",
    "derivations",
    "roundtrip",
    "structure",
)


class SuiteResult:
    """Acumulador de comprobaciones de una suite"""

    def __init__(self, name: str):
        self.name = name
        self.checked = 0
        self.failed = 0
        self.failures: List[Dict] = []

    def check(self, ok: bool, **detalle) -> None:
        self.checked += 1
        if not ok:
            self.failed += 1
            if len(self.failures) < MAX_FAILURES:
                self.failures.append(detalle)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "passed": self.failed == 0,
            "checked": self.checked,
            "failures": self.failures,
        }


def _por_n(valor, n: int):
    """Los tamaños por dimensión vienen indexados por str(n) en el JSON"""
    return valor[str(n)] if isinstance(valor, dict) else valor


class SelfCheckVerifier:
    """Verificador de las propiedades del álgebra a escala de escritorio"""

    def __init__(
        self,
        config: Optional[Dict] = None,
        seed: Optional[int] = None,
        profile: Optional[str] = None,
        n_values: Optional[List[int]] = None,
    ):
        self.config = config or load_config()
        self.seed = self.config["seed"] if seed is None else seed
        self.profile = profile or self.config["profile"]
        self.settings = profile_settings(self.config, self.profile)
        self.n_values = n_values
        self.workers = self.config["workers"]

    def _dims(self, suite: str) -> List[int]:
        dims = self.settings[suite]["n_values"]
        if self.n_values is not None:
            dims = [n for n in dims if n in self.n_values]
        return dims

    def _rng(self, suite: str) -> random.Random:
        return random.Random(self.seed * 1000 + SUITES.index(suite))

    # ------------------------------------------------------------------
    # Suites
    # ------------------------------------------------------------------

    def verificar_jacobi(self) -> SuiteResult:
        """Jacobi exacto y equivalencia con el corchete de Witt"""
        cfg = self.settings["jacobi"]
        rng = self._rng("jacobi")
        resultado = SuiteResult("jacobi")
        for n in self._dims("jacobi"):
            for i in range(cfg["triples"]):
                x, y, z = (
                    random_element(rng, n, cfg["radius"], cfg["max_terms"], cfg["bound"], with_cartan=i % 2 == 1)
                    for _ in range(3)
                )
                jacobi = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))
                resultado.check(jacobi.is_zero(), n=n, case=i, check="jacobi")
                oraculo = embed_to_witt(bracket(x, y)) == witt_bracket(embed_to_witt(x), embed_to_witt(y))
                resultado.check(oraculo, n=n, case=i, check="witt_oracle")
                resultado.check(witt_divergence_check(embed_to_witt(x)), n=n, case=i, check="divergence")
        return resultado

    def verificar_automorfismos(self) -> SuiteResult:
        """Homomorfismo en la caja, regresión del signo literal y ley de conjugación"""
        cfg = self.settings["automorphisms"]
        rng = self._rng("automorphisms")
        resultado = SuiteResult("automorphisms")
        for n in self._dims("automorphisms"):
            radio = _por_n(cfg["radius"], n)
            for i in range(cfg["cases"]):
                sigma = random_automorphism(rng, n, anti=i % 2 == 1)
                informe = verify_homomorphism(sigma, radio)
                resultado.check(informe.passed, n=n, case=i, automorphism=sigma.to_dict(), report=informe.to_dict())

            for i in range(cfg["conjugation"]):
                theta = random_automorphism(rng, n)
                lam = random_automorphism(rng, n).scaling
                mu = conjugate_scaling(theta, lam)
                theta_inv = inverse(theta)
                r = random_vector(rng, n, 4)
                h = HamiltonianElement.basis(r)
                izquierda = apply(theta_inv, apply(natural_scaling(n, lam), apply(theta, h)))
                resultado.check(izquierda == apply(natural_scaling(n, mu), h), n=n, case=i, check="conjugation")

        if 2 in self._dims("automorphisms"):
            flip = TorusAutomorphism(GspMatrix([[1, 0], [0, -1]]), (1, 1))
            x, y = HamiltonianElement.basis((1, 0)), HamiltonianElement.basis((0, 1))
            resultado.check(check_pair(flip, x, y), n=2, check="cocycle_sign")
            resultado.check(not check_pair(flip, x, y, SignConvention.LITERAL), n=2, check="literal_sign_regression")
        return resultado

    def verificar_transitividad(self) -> SuiteResult:
        """symplectic_complete: QᵀJQ = J y Q·e_1 = r"""
        cfg = self.settings["transitivity"]
        rng = self._rng("transitivity")
        resultado = SuiteResult("transitivity")
        for n in self._dims("transitivity"):
            for i in range(cfg["vectors"]):
                r = random_primitive_vector(rng, n, cfg["bound"])
                q = symplectic_complete(r)
                ok = classify(q.matrix) == GspClass.SYMPLECTIC and q.act(unit(n, 0)) == r
                resultado.check(ok, n=n, vector=list(r))
        return resultado

    def verificar_generacion(self) -> SuiteResult:
        """Testigo válido para todo r de la caja"""
        cfg = self.settings["generation"]
        resultado = SuiteResult("generation")
        for n in self._dims("generation"):
            for r in box_vectors(n, _por_n(cfg["radius"], n)):
                try:
                    w = generation_witness(r)
                    evaluate_witness(w)
                    ok = w.degree == r and w.scalar != 0
                except HamiltonianError as e:
                    ok = False
                    logger.debug(f"❌ Generación de {list(r)}: {e.detail}")
                resultado.check(ok, n=n, vector=list(r))
        return resultado

    def verificar_simplicidad(self) -> SuiteResult:
        """Toda reducción en ideal termina en un múltiplo de h_target"""
        cfg = self.settings["simplicity"]
        rng = self._rng("simplicity")
        resultado = SuiteResult("simplicity")
        for n in self._dims("simplicity"):
            for i in range(cfg["cases"]):
                x = random_element(rng, n, cfg["radius"], cfg["max_terms"])
                while x.is_zero():
                    x = random_element(rng, n, cfg["radius"], cfg["max_terms"])
                target = random_vector(rng, n, cfg["target_radius"])
                try:
                    evaluate_ideal_witness(simplicity_reduce(x, target))
                    ok = True
                except HamiltonianError as e:
                    ok = False
                    logger.debug(f"❌ Reducción hacia {list(target)}: {e.detail}")
                resultado.check(ok, n=n, case=i, element=x.to_dict(), target=list(target))
        return resultado

    def verificar_derivaciones(self) -> SuiteResult:
        """Toda derivación graduada en la caja es interna; caracteres lineales en grado 0"""
        cfg = self.settings["derivations"]
        resultado = SuiteResult("derivations")
        for n in self._dims("derivations"):
            box = TruncationBox(n, _por_n(cfg["radius"], n))
            radio_grados = _por_n(cfg["degree_radius"], n)
            grados = [(0,) * n] + (box_vectors(n, radio_grados) if radio_grados else [])
            for informe in certify_degrees(box, grados, self.workers):
                resultado.check(
                    informe.match,
                    n=n,
                    degree=list(informe.degree),
                    dimension=informe.dimension,
                    expected=informe.expected,
                )
            caracteres = degree_zero_character_solve(box)
            ok = len(caracteres) == n and all(is_linear_character(c, box) for c in caracteres)
            resultado.check(ok, n=n, check="additive_characters", dimension=len(caracteres))
        return resultado

    def verificar_roundtrip(self) -> SuiteResult:
        """Todo documento JSON vuelve a leerse como un valor igual"""
        cfg = self.settings["roundtrip"]
        rng = self._rng("roundtrip")
        resultado = SuiteResult("roundtrip")

        def ida_y_vuelta(valor, lector: Callable) -> bool:
            return lector(json.loads(json.dumps(valor.to_dict(), sort_keys=True))) == valor

        for n in self._dims("roundtrip"):
            for i in range(cfg["cases"]):
                x = random_element(rng, n, with_cartan=True)
                resultado.check(ida_y_vuelta(x, HamiltonianElement.from_dict), n=n, case=i, kind="element")
                sigma = random_automorphism(rng, n)
                resultado.check(ida_y_vuelta(sigma, TorusAutomorphism.from_dict), n=n, case=i, kind="automorphism")
                resultado.check(ida_y_vuelta(sigma.q, gsp_from_dict), n=n, case=i, kind="matrix")
                w = generation_witness(random_vector(rng, n, 3))
                resultado.check(ida_y_vuelta(w, witness_from_dict), n=n, case=i, kind="witness")
                y = random_element(rng, n, 3, 3)
                if not y.is_zero():
                    iw = simplicity_reduce(y, random_vector(rng, n, 3))
                    resultado.check(ida_y_vuelta(iw, IdealWitness.from_dict), n=n, case=i, kind="ideal_witness")
        return resultado

    def verificar_estructura(self) -> SuiteResult:
        """Centro trivial, perfección, grados opuestos, extensión a Cartan y marcos primitivos"""
        cfg = self.settings["structure"]
        rng = self._rng("structure")
        resultado = SuiteResult("structure")
        for n in self._dims("structure"):
            radio = _por_n(cfg["radius"], n)
            centro = center_check(n, radio)
            resultado.check(centro.trivial, n=n, check="trivial_center", report=centro.to_dict())
            perfecta = perfect_check(n, radio)
            resultado.check(perfecta.perfect, n=n, check="perfect", failures=[list(r) for r in perfecta.failures])

            box = TruncationBox(n, 2)
            for i in range(cfg["cases"]):
                sigma = random_automorphism(rng, n, anti=i % 2 == 1)
                resultado.check(check_odd_degrees(sigma, 2), n=n, case=i, check="odd_degrees")
                resultado.check(check_cartan_extension(sigma), n=n, case=i, check="cartan_extension")

                tau = rng.randint(1, 4)
                r = tuple(tau * c for c in random_vector(rng, n, 3))
                resultado.check(check_frame_witness(r), n=n, case=i, check="frame_witness", vector=list(r))

                d = random_vector(rng, n, 1)
                base = solve_graded_derivations(d, box)
                ok = len(base) == 1 and not any(remove_inner_part(base[0]).values)
                resultado.check(ok, n=n, case=i, check="inner_part", degree=list(d))
        return resultado

    # ------------------------------------------------------------------
    # Ejecución
    # ------------------------------------------------------------------

    def run(self) -> Dict:
        logger.info(f"🔍 AUTOVERIFICACIÓN (semilla {self.seed}, perfil {self.profile})")
        metodos = {
            "jacobi": self.verificar_jacobi,
            "automorphisms": self.verificar_automorfismos,
            "transitivity": self.verificar_transitividad,
            "generation": self.verificar_generacion,
            "simplicity": self.verificar_simplicidad,
            "derivations": self.verificar_derivaciones,
            "roundtrip": self.verificar_roundtrip,
            "structure": self.verificar_estructura,
        }
        resultados: Dict[str, SuiteResult] = {}
        with ThreadPoolExecutor(max_workers=max(1, self.workers)) as executor:
            futuros = {executor.submit(metodos[nombre]): nombre for nombre in SUITES}
            for futuro in as_completed(futuros):
                nombre = futuros[futuro]
                resultados[nombre] = futuro.result()
                estado = "✅" if resultados[nombre].failed == 0 else "❌"
                logger.info(f"  {estado} {nombre}: {resultados[nombre].checked} comprobaciones")

        suites = [resultados[nombre].to_dict() for nombre in SUITES]
        aprobado = all(s["passed"] for s in suites)
        logger.info("📊 " + ("SISTEMA VERIFICADO" if aprobado else "HAY PROPIEDADES QUE FALLAN"))
        return {
            "v": 1,
            "seed": self.seed,
            "profile": self.profile,
            "passed": aprobado,
            "suites": suites,
        }


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal"""
    parser = argparse.ArgumentParser(description="Autoverificación del álgebra hamiltoniana")
    parser.add_argument("--seed", type=int, help="Semilla (por defecto la de la configuración)")
    parser.add_argument("--profile", choices=["quick", "full"], help="Tamaño de las suites")
    parser.add_argument("--config", type=str, help="Archivo de configuración")
    args = parser.parse_args(argv)

    config = load_config(args.config)
    logging.basicConfig(
        level=getattr(logging, config["log_level"], logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    informe = SelfCheckVerifier(config, seed=args.seed, profile=args.profile).run()
    print(json.dumps(informe, sort_keys=True, indent=2))
    return 0 if informe["passed"] else 2


if __name__ == "__main__":
    sys.exit(main())
