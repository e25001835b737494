"""
Jerarquía de errores del servicio

Cada error lleva un código estable (para el documento JSON de la CLI)
y un detalle legible, igual que el par (status, detail) de las respuestas HTTP.
"""

from typing import Dict


class HamiltonianError(ValueError):
    """Error base: entrada inválida para alguna operación del álgebra"""

    code = "invalid_input"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def to_dict(self) -> Dict:
        return {"error": self.code, "detail": self.detail}


class DimensionMismatchError(HamiltonianError):
    code = "dimension_mismatch"


class InvalidVectorError(HamiltonianError):
    code = "invalid_vector"


class NotPrimitiveError(HamiltonianError):
    code = "not_primitive"

    def __init__(self, detail: str, gcd: int):
        super().__init__(detail)
        self.gcd = gcd


class InvalidMatrixError(HamiltonianError):
    code = "invalid_matrix"


class InvalidElementError(HamiltonianError):
    code = "invalid_element"


class InvalidDocumentError(HamiltonianError):
    code = "invalid_document"


class InvalidWitnessError(HamiltonianError):
    code = "invalid_witness"


class NonHomogeneousError(HamiltonianError):
    code = "non_homogeneous"


class BoxTooSmallError(HamiltonianError):
    code = "box_too_small"


class InvalidRequestError(HamiltonianError):
    code = "invalid_request"
