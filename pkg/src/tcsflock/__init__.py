"""Simulation and flocking certificates for thermomechanical Cucker-Smale ensembles on digraphs."""
from .certificates import CertificateInputs, FlockingCertificate, check_theorem31, check_theorem41
from .dynamics import EnsembleState, ModelSpec, Trajectory, simulate_continuous, simulate_discrete
from .graph import Digraph, from_edge_list, roots, smallest_depth
from .kernels import CommKernel

__version__ = "0.1.0"

__all__ = [
    "CertificateInputs",
    "CommKernel",
    "Digraph",
    "EnsembleState",
    "FlockingCertificate",
    "ModelSpec",
    "Trajectory",
    "check_theorem31",
    "check_theorem41",
    "from_edge_list",
    "roots",
    "simulate_continuous",
    "simulate_discrete",
    "smallest_depth",
]
