"""Truncated-Pivot correlation clustering with streaming and MPC simulators."""

from ._backend import BACKEND
from .adversary import AdaptiveAdversary, FixedPermutationAdversary, greedy_memory_adversary
from .errors import (
    CapacityError,
    InvalidInputError,
    InvalidTopologyError,
    SpecError,
    StreamConsumedError,
)
from .generators import complete, er, generate, planted, star
from .graph import Clustering, SignedGraph, disagreements, read_graph, write_graph
from .mpc import MpcRunReport, MpcTopology, measure_gstore, mpc_truncated_pivot
from .oracles import BadTriangle, brute_force_opt, enumerate_bad_triangles, triangle_packing_lower_bound
from .pivot import (
    Permutation,
    PivotOutcome,
    TruncationParams,
    classic_pivot,
    classify_singleton_edges,
    monte_carlo_costs,
    tau,
    truncated_pivot_parallel,
    truncated_pivot_sequential,
)
from .stream import (
    DegreeClassState,
    EdgeStream,
    MemoryTrace,
    StreamEvent,
    StreamOutcome,
    fixed_order,
    random_order,
    stream_adaptive,
    stream_fixed_permutation,
)

__version__ = "0.1.0"
