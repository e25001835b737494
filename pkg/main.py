"""
CLI del álgebra hamiltoniana H_N

Cada subcomando lee un documento JSON (--in o entrada estándar) y escribe un
documento JSON (--out o salida estándar). Todo documento lleva "v": 1.

Códigos de salida:
- 0: correcto
- 1: entrada inválida ({"error": código, "detail": texto})
- 2: la autoverificación encontró propiedades que fallan
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from services.algebra import HamiltonianElement, bracket
from services.automorphism import SignConvention, TorusAutomorphism, apply, compose, verify_homomorphism
from services.config_loader import load_config
from services.derivations import TruncationBox, certify_inner, predicted_derivations, solve_graded_derivations
from services.errors import HamiltonianError, InvalidDocumentError, InvalidRequestError
from services.generation import generation_witness, simplicity_reduce
from services.lattice_core import is_zero, parse_vector
from services.linear_algebra import same_span
from services.symplectic import GspClass, as_matrix, classify, symplectic_complete

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class CommandRequest:
    command: str
    n: Optional[int] = None
    payload: Dict = field(default_factory=dict)
    seed: Optional[int] = None
    radius: Optional[int] = None
    profile: Optional[str] = None
    config: Optional[Dict] = None


def _require(payload: Dict, *keys: str) -> List:
    faltan = [k for k in keys if k not in payload]
    if faltan:
        raise InvalidRequestError(f"Faltan campos en el documento de entrada: {', '.join(faltan)}")
    return [payload[k] for k in keys]


def _check_version(payload: Dict) -> None:
    version = payload.get("v")
    if version is None:
        raise InvalidDocumentError(f"Falta la versión del documento: se esperaba \"v\": {SCHEMA_VERSION}")
    if isinstance(version, bool) or version != SCHEMA_VERSION:
        raise InvalidDocumentError(f"Versión de documento no soportada: {version!r} (se esperaba {SCHEMA_VERSION})")


def _radius(request: CommandRequest) -> int:
    if request.radius is not None:
        return request.radius
    return (request.config or {}).get("radius", 3)


# ============================================================================
# COMANDOS
# ============================================================================

def cmd_bracket(request: CommandRequest) -> Dict:
    x, y = _require(request.payload, "x", "y")
    return bracket(HamiltonianElement.from_dict(x, request.n), HamiltonianElement.from_dict(y, request.n)).to_dict()


def cmd_gsp_classify(request: CommandRequest) -> Dict:
    (matrix,) = _require(request.payload, "matrix")
    m = as_matrix(matrix)
    if request.n is not None and m.shape[0] != request.n:
        raise InvalidDocumentError(f"Matriz de dimensión {m.shape[0]}, se esperaba N = {request.n}")
    clase = classify(m)
    multiplicador = {GspClass.SYMPLECTIC: 1, GspClass.ANTI_SYMPLECTIC: -1}.get(clase)
    return {"class": clase.value, "multiplier": multiplicador}


def cmd_sp_complete(request: CommandRequest) -> Dict:
    (vector,) = _require(request.payload, "vector")
    return symplectic_complete(parse_vector(vector, request.n)).to_dict()


def cmd_aut_apply(request: CommandRequest) -> Dict:
    sigma, x = _require(request.payload, "automorphism", "element")
    sigma = TorusAutomorphism.from_dict(sigma, request.n)
    return apply(sigma, HamiltonianElement.from_dict(x, sigma.n)).to_dict()


def cmd_aut_compose(request: CommandRequest) -> Dict:
    first, second = _require(request.payload, "first", "second")
    return compose(TorusAutomorphism.from_dict(first, request.n), TorusAutomorphism.from_dict(second, request.n)).to_dict()


def cmd_aut_verify(request: CommandRequest) -> Dict:
    (sigma,) = _require(request.payload, "automorphism")
    convencion = request.payload.get("convention", SignConvention.COCYCLE.value)
    try:
        convencion = SignConvention(convencion)
    except ValueError:
        raise InvalidRequestError(f"Convención de signo desconocida: {convencion!r}")
    informe = verify_homomorphism(TorusAutomorphism.from_dict(sigma, request.n), _radius(request), convencion)
    return {"radius": _radius(request), "convention": convencion.value, **informe.to_dict()}


def cmd_gen_witness(request: CommandRequest) -> Dict:
    (vector,) = _require(request.payload, "vector")
    return generation_witness(parse_vector(vector, request.n)).to_dict()


def cmd_simplicity_probe(request: CommandRequest) -> Dict:
    x, target = _require(request.payload, "element", "target")
    x = HamiltonianElement.from_dict(x, request.n)
    return simplicity_reduce(x, parse_vector(target, x.n)).to_dict()


def _degree_and_box(request: CommandRequest) -> Tuple:
    (degree,) = _require(request.payload, "degree")
    d = parse_vector(degree, request.n)
    return d, TruncationBox(len(d), _radius(request))


def cmd_der_solve(request: CommandRequest) -> Dict:
    d, box = _degree_and_box(request)
    base = solve_graded_derivations(d, box)
    esperado = box.n if is_zero(d) else 1
    prediccion = [p.values for p in predicted_derivations(d, box)]
    return {
        "n": box.n,
        "degree": list(d),
        "radius": box.radius,
        "dimension": len(base),
        "expected": esperado,
        "match": len(base) == esperado and same_span([b.values for b in base], prediccion),
        "basis": [b.to_dict()["values"] for b in base],
    }


def cmd_der_certify(request: CommandRequest) -> Dict:
    d, box = _degree_and_box(request)
    return certify_inner(d, box).to_dict()


def cmd_selfcheck(request: CommandRequest) -> Dict:
    from scripts.verify_system import SelfCheckVerifier

    n_values = [request.n] if request.n is not None else None
    return SelfCheckVerifier(request.config, seed=request.seed, profile=request.profile, n_values=n_values).run()


COMMANDS: Dict[str, Callable[[CommandRequest], Dict]] = {
    "bracket": cmd_bracket,
    "gsp-classify": cmd_gsp_classify,
    "sp-complete": cmd_sp_complete,
    "aut-apply": cmd_aut_apply,
    "aut-compose": cmd_aut_compose,
    "aut-verify": cmd_aut_verify,
    "gen-witness": cmd_gen_witness,
    "simplicity-probe": cmd_simplicity_probe,
    "der-solve": cmd_der_solve,
    "der-certify": cmd_der_certify,
    "selfcheck": cmd_selfcheck,
}


def run(request: CommandRequest) -> Tuple[int, Dict]:
    """
    Ejecuta un comando y devuelve (código de salida, documento JSON)

    Los errores de entrada se convierten en {"error", "detail"} con código 1;
    cualquier otra excepción se registra y se propaga.
    """
    handler = COMMANDS.get(request.command)
    try:
        if handler is None:
            raise InvalidRequestError(f"Comando desconocido: {request.command!r}")
        if request.n is not None and (request.n < 2 or request.n % 2):
            raise InvalidRequestError(f"N debe ser par y >= 2 (recibido {request.n})")
        if not isinstance(request.payload, dict):
            raise InvalidDocumentError("El documento de entrada debe ser un objeto JSON")
        if request.command != "selfcheck" or request.payload:
            _check_version(request.payload)
        documento = handler(request)
    except HamiltonianError as e:
        logger.error(f"❌ {request.command}: {e.detail}")
        return 1, {"v": SCHEMA_VERSION, **e.to_dict()}
    except Exception:
        logger.exception(f"❌ Error inesperado en {request.command}")
        raise

    documento = {"v": SCHEMA_VERSION, **documento}
    if request.command == "selfcheck" and not documento["passed"]:
        return 2, documento
    return 0, documento


def render(documento: Dict, pretty: bool = False) -> str:
    return json.dumps(documento, sort_keys=True, indent=2 if pretty else None, ensure_ascii=False)


def _read_payload(path: Optional[str], command: str) -> Dict:
    if command == "selfcheck" and path is None:
        return {}
    try:
        if path:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        return json.load(sys.stdin)
    except json.JSONDecodeError as e:
        raise InvalidDocumentError(f"JSON mal formado: {e}")
    except RecursionError:
        raise InvalidDocumentError("JSON anidado demasiado profundo")
    except OSError as e:
        raise InvalidRequestError(f"No se puede leer {path}: {e}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Álgebra de Lie hamiltoniana H_N sobre el toro cuántico")
    parser.add_argument("command", choices=sorted(COMMANDS), help="Subcomando")
    parser.add_argument("--n", type=int, help="Dimensión N (par)")
    parser.add_argument("--radius", type=int, help="Radio de la caja de truncamiento")
    parser.add_argument("--seed", type=int, help="Semilla de las suites aleatorias")
    parser.add_argument("--profile", choices=["quick", "full"], help="Tamaño de las suites de selfcheck")
    parser.add_argument("--in", dest="input", type=str, help="Documento JSON de entrada (por defecto stdin)")
    parser.add_argument("--out", type=str, help="Archivo de salida (por defecto stdout)")
    parser.add_argument("--pretty", action="store_true", help="JSON indentado")
    parser.add_argument("--config", type=str, help="Archivo de configuración")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except HamiltonianError as e:
        print(render({"v": SCHEMA_VERSION, **e.to_dict()}, args.pretty))
        return 1

    logging.basicConfig(
        level=getattr(logging, config["log_level"], logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    try:
        payload = _read_payload(args.input, args.command)
    except HamiltonianError as e:
        status, documento = 1, {"v": SCHEMA_VERSION, **e.to_dict()}
    else:
        status, documento = run(
            CommandRequest(
                command=args.command,
                n=args.n,
                payload=payload,
                seed=args.seed,
                radius=args.radius,
                profile=args.profile,
                config=config,
            )
        )

    salida = render(documento, args.pretty)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(salida + "\n")
    else:
        print(salida)
    return status


if __name__ == "__main__":
    sys.exit(main())
