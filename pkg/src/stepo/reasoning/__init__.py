from stepo.reasoning.adapter import ExternalPolicy, FallbackEvent, HttpTransport, SubprocessTransport, external_policy
from stepo.reasoning.policy import DeterministicPolicy, deterministic_policy, policy_factors
from stepo.reasoning.tree import (
    DEFAULT_SEQUENCE,
    ActionSpace,
    Context,
    DecisionNode,
    DecisionPath,
    EmptyActionSpace,
    NoFeasibleOutfit,
    SearchConfig,
    SearchResult,
    StylingRequest,
    build_context,
    enumerate_actions,
    root_node,
    run_tree_search,
    transition,
)

__all__ = [
    "DEFAULT_SEQUENCE",
    "ActionSpace",
    "Context",
    "DecisionNode",
    "DecisionPath",
    "DeterministicPolicy",
    "EmptyActionSpace",
    "ExternalPolicy",
    "FallbackEvent",
    "HttpTransport",
    "NoFeasibleOutfit",
    "SearchConfig",
    "SearchResult",
    "StylingRequest",
    "SubprocessTransport",
    "build_context",
    "deterministic_policy",
    "enumerate_actions",
    "external_policy",
    "policy_factors",
    "root_node",
    "run_tree_search",
    "transition",
]
