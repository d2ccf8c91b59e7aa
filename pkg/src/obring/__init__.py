"""Leader election on content-oblivious oriented rings.

Pulse-only asynchronous message passing under adversarial delivery order:
protocol state machines, a deterministic simulator with pluggable
schedulers, exhaustive interleaving exploration for tiny instances, and a
seeded Monte Carlo harness for the randomized election.
"""

from .analysis import (
    Judgement,
    MonteCarloReport,
    SolitudePattern,
    binomial_sigma,
    exact_collision_probability,
    expected_log_counts,
    judge_const_direction,
    judge_log_election,
    mc_collision,
    mc_randomized_success,
    mc_scatteredness,
    solitude_pattern,
)
from .codec import (
    EncodedId,
    active_sets,
    bit,
    bits_of,
    encode,
    from_int,
    is_0_ended,
    is_d_scattered,
    is_strongly_prefix_free,
    min_id_index,
    prefix_value,
)
from .errors import (
    AlreadyTerminatedError,
    BadParamError,
    ConfigMismatchError,
    EmptyLinkError,
    InvalidIdError,
    NoUniqueMinError,
    ObringError,
    OutOfRangeError,
    ScenarioError,
    StateCapExceededError,
    StepCapExceededError,
)
from .kernels import backend_name, run_const_fast, run_log_fast
from .protocols import (
    ConstDirection,
    KillRelayState,
    LogElection,
    ProtocolMachine,
    RandomizedParams,
    ceil_mul_log2,
    const_direction_new,
    kill_and_relay_step,
    log_election_new,
    randomized_election_new,
    randomized_make_id,
)
from .ring import (
    BlockedOn,
    DeliveryEvent,
    LinkState,
    Return,
    RingConfig,
    SendPulse,
    apply_delivery,
    apply_send,
    neighbors,
)
from .rng import SplitMix64, derive_seed
from .scheduler import (
    AdversarialScript,
    CwPriority,
    RoundRobin,
    RunResult,
    SeededRandom,
    Signature,
    enabled_events,
    explore_all,
    explore_with_witnesses,
    make_strategy,
    run,
)

__version__ = "0.1.0"
