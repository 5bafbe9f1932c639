# Local
from .conjugates import (
    ConjugateBundle,
    assemble_A_cusp,
    assemble_A_funnel,
    assemble_A_glued,
)
from .graphs import FiniteGraphSpec, GeometrySpec, build_from_spec
from .lap import LapScanConfig, lap_scan
from .models import ModelFactory, SpectralModel, build_model
from .operators import OperatorMatrix, assemble_hamiltonian, assemble_laplacian
from .perturbations import PerturbationSpec
from .reports import ScanReport
from .spectral import SpectralWindow, eigendecompose
from .workbench import Workbench
