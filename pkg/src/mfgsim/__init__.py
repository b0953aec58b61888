"""Order-sorted information modeling and deterministic manufacturing
simulation toolkit."""

from .abstraction import (
    ModeMapping,
    ModePair,
    SortMap,
    SortMapEntry,
    abstract_entity,
    check_abstraction_pair,
    check_refinement_pair,
    coordinate_modes,
    external_refs,
    project_view,
    refine_entity,
)
from .dsl import (
    Demand,
    Expansion,
    ParseResult,
    ScenarioConfig,
    SourceSpan,
    Workspace,
    parse,
    parse_file,
    print_workspace,
)
from .engine import Engine, new_engine
from .entities import (
    Attribute,
    Collection,
    DataParameter,
    EntityRef,
    EntitySpec,
    ExternalRef,
    Functor,
    FunctorFunction,
    InformationModel,
    check_wellformed,
    evaluate_rules,
    structure_graph,
)
from .lattice import ConceptualLattice, build_conceptual_lattice, lattice_subsumes
from .manufacturing import (
    ExecutableScenario,
    SimReport,
    compare_modes,
    estimate_transfer_capacity,
    instantiate,
    simulate,
    with_fleet,
)
from .ontology import Commitment, Ontology, Requirement, verify_model
from .pilot import build_pilot_workspace, manufacturing_profile, pilot_text
from .sorts import Alphabet, SortSet, SortSystem

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
