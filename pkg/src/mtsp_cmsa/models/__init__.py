from mtsp_cmsa.models.model_instance import Instance, angdist, tour_length
from mtsp_cmsa.models.model_qmatrix import QMatrix
from mtsp_cmsa.models.model_route import Route, Signature, Solution, signature

__all__ = [
    "Instance",
    "QMatrix",
    "Route",
    "Signature",
    "Solution",
    "angdist",
    "signature",
    "tour_length",
]
