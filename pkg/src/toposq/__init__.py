"""Finite-dimensional topos quantum logic: contexts, the spectral presheaf,
daseinisation, sieve-valued truth, and states as measures."""

from .contexts import Context, ContextPoset, Sieve, build_poset, enumerate_subalgebras, generate_context
from .daseinisation import daseinise, daseinise_at
from .errors import ToposqError
from .measures import (
    AntitoneValuation,
    measure,
    measure_from_family,
    reconstruct_state,
    support_of_measure,
    truth_object_family,
    verify_measure_axioms,
)
from .propositions import parse_expression, proposition
from .scenario_io import Model, Scenario, build_model, load_model, load_scenario, preset, preset_model, save_model
from .spectrum import Character, SpectralPresheaf, spectral_presheaf
from .subobjects import ClopenSubobject, bottom, implies, join, meet, negate, top
from .truth import (
    TruthValue,
    count_global_sections,
    global_section_search,
    is_totally_true,
    pseudo_state,
    truth_object_component,
    truth_value,
)

__version__ = "0.1.0"

__all__ = [
    "AntitoneValuation",
    "Character",
    "ClopenSubobject",
    "Context",
    "ContextPoset",
    "Model",
    "Scenario",
    "Sieve",
    "SpectralPresheaf",
    "ToposqError",
    "TruthValue",
    "bottom",
    "build_model",
    "build_poset",
    "count_global_sections",
    "daseinise",
    "daseinise_at",
    "enumerate_subalgebras",
    "generate_context",
    "global_section_search",
    "implies",
    "is_totally_true",
    "join",
    "load_model",
    "load_scenario",
    "measure",
    "measure_from_family",
    "meet",
    "negate",
    "parse_expression",
    "preset",
    "preset_model",
    "proposition",
    "pseudo_state",
    "reconstruct_state",
    "save_model",
    "spectral_presheaf",
    "support_of_measure",
    "top",
    "truth_object_component",
    "truth_object_family",
    "truth_value",
    "verify_measure_axioms",
]
