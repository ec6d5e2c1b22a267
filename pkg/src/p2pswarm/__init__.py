"""Exact simulation and analysis of a seeded peer-to-peer swarm with random contacts.

Peers arrive at rate ``lam`` wanting a file split into ``K`` pieces, pull
pieces from uniformly contacted peers at rate ``mu``, receive pieces from a
permanent seed at rate ``Us`` and leave once complete.
"""

from .core import (
    Diagnostics,
    ModelParams,
    SwarmState,
    Transition,
    apply_arrival,
    apply_download,
    diagnostics,
    full_set,
    generator_row,
    pieces_of,
    pieceset,
)
from .errors import ContractError, DivergenceError, DomainError, ResourceCapError, TruncationError
from .policies import (
    POLICIES,
    RANDOM_USEFUL,
    RAREST_FIRST,
    SEQUENTIAL,
    Policy,
    get_policy,
    select_piece_random_useful,
    select_piece_rarest_first,
    select_piece_sequential,
)
from .simulator import (
    SimConfig,
    Trajectory,
    piece_presence_profile,
    rare_piece_signature,
    run_replicas,
    simulate,
    slope_estimate,
    step,
    time_average,
)

__version__ = "0.1.0"
