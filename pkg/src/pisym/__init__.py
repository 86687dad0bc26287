"""pisym: a workbench for electoral and symmetric process networks in the
pi-calculus, its asynchronous fragment, and CCS."""

from .syntax import (
    Name,
    name,
    num,
    fresh_name,
    OUTPUT_CHANNEL,
    InputPfx,
    OutputPfx,
    TauPfx,
    Sum,
    OutputAtom,
    Restriction,
    Parallel,
    Replication,
    NIL,
    parse,
    pretty,
    free_names,
    substitute,
    alpha_equiv,
    normal_form,
    struct_congruent,
    Renaming,
    apply_renaming,
)
from .lts import (
    InputAct,
    FreeOutput,
    BoundOutput,
    TauAct,
    Dialect,
    DialectError,
    dialect_check,
    transitions,
    TransitionStep,
)
from .network import (
    Network,
    NetworkStep,
    Computation,
    network_transitions,
    project,
    Hypergraph,
    hypergraph_of,
    Automorphism,
    automorphisms,
    orbit,
    orbits,
    single_orbit,
    is_well_balanced,
    is_symmetric,
)
from .electoral import (
    ExploreBounds,
    Electoral,
    NotElectoral,
    Inconclusive,
    announcements,
    is_electoral,
)
from .adversary import (
    confluence_diamond,
    run_adversary,
    reduce_well_balanced,
    ccs_applicable,
    AdversaryState,
    DiamondResult,
)
from .protocols import (
    HypergraphSpec,
    two_node_election,
    two_node_swap,
    election_network,
    ccs_ring,
    async_ring,
)
from .encoding import (
    Encoding,
    check_uniform,
    observables_on_o,
    separation_demo,
)

__version__ = "0.1.0"
