"""Persistence analysis and simulation for delayed mass-action reaction networks."""

from .balance import (
    Equilibrium,
    deficiency,
    find_complex_balanced_equilibrium,
    is_complex_balanced_at,
    is_weakly_reversible,
    linkage_classes,
)
from .compose import (
    Case,
    PersistenceCertificate,
    Rule,
    Verdict,
    apply_rules,
    case_label,
    certify_persistence,
    decompose,
    restrict_semilocking,
    verify_record,
)
from .dde import (
    HistoryFunction,
    RunReport,
    TrajectoryState,
    compute_g,
    lyapunov_value,
    persistence_probe,
    simulate,
)
from .model import Complex, Reaction, ReactionNetwork, Species, species_of_block, validate_network
from .parser import load_network, parse_network, serialize_network
from .reduce import is_reduced_conservative, reduce_on, reduced_rhs
from .siphon import (
    classify_boundary,
    enumerate_semilocking,
    is_semilocking,
    minimal_semilocking,
    partition_complement,
    semilocking_report,
)
from .stoich import (
    conservation_basis,
    face_dimension,
    face_kernel,
    projected_dimension,
    stoich_matrix,
    subspace_basis,
)

__version__ = "0.1.0"
