"""Impact-impulse prediction for serial manipulators hitting a rigid surface."""

from .chain import (
    ChainModel,
    body_jacobian,
    build_chain,
    centroidal_state,
    forward_kinematics,
    joint_space_inertia,
    velocity_decomposition,
)
from .contact import (
    ContactModel,
    ImpactTrace,
    SimulationSettings,
    predicted_cor,
    simulate,
    spring_deficiency_check,
)
from .errors import ImpactError, InputError, NumericalError
from .identification import FitResult, ForceProfile, fit_maxwell, fit_viscoelastic
from .iim import InverseInertiaMatrix, algebraic_impulse, all_iims, em_matrix, iim_crb, iim_crb_flex, iim_gm
from .impulse import ContactScenario, compression_end_impulse, restitution_end_impulse
from .io import Scenario, load_example_chain, read_chain, read_scenario, write_chain
from .spatial import SpatialInertia, SpatialTransform, Twist, Wrench

__version__ = "0.1.0"

__all__ = [
    "ChainModel", "body_jacobian", "build_chain", "centroidal_state", "forward_kinematics",
    "joint_space_inertia", "velocity_decomposition",
    "ContactModel", "ImpactTrace", "SimulationSettings", "predicted_cor", "simulate",
    "spring_deficiency_check",
    "ImpactError", "InputError", "NumericalError",
    "FitResult", "ForceProfile", "fit_maxwell", "fit_viscoelastic",
    "InverseInertiaMatrix", "algebraic_impulse", "all_iims", "em_matrix", "iim_crb", "iim_crb_flex", "iim_gm",
    "ContactScenario", "compression_end_impulse", "restitution_end_impulse",
    "Scenario", "load_example_chain", "read_chain", "read_scenario", "write_chain",
    "SpatialInertia", "SpatialTransform", "Twist", "Wrench",
]
