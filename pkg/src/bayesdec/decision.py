"""Finite decision problems, sequential trees and value of information.

Utilities are unit-agnostic: currency, percentages or abstract utils all
work as long as one problem uses one unit throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence, Union

import numpy as np

from .errors import DomainError
from .probvector import SUM_TOL, ProbVector

__all__ = [
    "TIE_TOL",
    "DecisionProblem",
    "expected_utility",
    "expected_utilities",
    "optimal_actions",
    "admissible_actions",
    "Terminal",
    "Chance",
    "Decision",
    "PolicyValue",
    "solve_tree",
    "with_cost",
    "chance_update",
    "opportunity_loss",
    "evpi",
    "value_of_data",
    "value_of_experiment",
    "portfolio_problem",
    "optimal_portfolio_weight",
]

#: Absolute tolerance under which two expected utilities count as tied.
TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """Actions x states utility matrix plus state probabilities.

    ``probs`` is either one vector over states or one row per action, the
    latter for problems where the chosen action changes the state
    probabilities.
    """

    actions: tuple[Hashable, ...]
    states: tuple[Hashable, ...]
    utility: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        actions, states = tuple(self.actions), tuple(self.states)
        u = np.array(self.utility, dtype=float)
        p = np.array(self.probs, dtype=float)
        if not actions or not states:
            raise DomainError("a decision problem needs at least one action and one state")
        if len(set(actions)) != len(actions) or len(set(states)) != len(states):
            raise DomainError("action and state labels must be distinct")
        if u.shape != (len(actions), len(states)):
            raise DomainError(f"utility matrix is {u.shape}, expected {(len(actions), len(states))}")
        if not np.all(np.isfinite(u)):
            raise DomainError("utilities must be finite")
        if p.shape not in ((len(states),), (len(actions), len(states))):
            raise DomainError(f"probabilities have shape {p.shape}; expected one entry per state")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=-1) - 1.0) > SUM_TOL):
            raise DomainError("state probabilities must be nonnegative and sum to 1")
        u.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "utility", u)
        object.__setattr__(self, "probs", p)

    @property
    def per_action(self) -> bool:
        return self.probs.ndim == 2

    def action_index(self, action: Hashable) -> int:
        try:
            return self.actions.index(action)
        except ValueError:
            raise DomainError(f"unknown action {action!r}") from None

    def state_index(self, state: Hashable) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise DomainError(f"unknown state {state!r}") from None

    def with_probs(self, probs) -> "DecisionProblem":
        return DecisionProblem(self.actions, self.states, self.utility, probs)

    def with_utility(self, utility) -> "DecisionProblem":
        return DecisionProblem(self.actions, self.states, utility, self.probs)


def expected_utilities(p: DecisionProblem) -> np.ndarray:
    if p.per_action:
        return np.einsum("ij,ij->i", p.utility, p.probs)
    return p.utility @ p.probs


def expected_utility(p: DecisionProblem, action: Hashable) -> float:
    """``sum_j u(a, E_j) P(E_j)``."""
    return float(expected_utilities(p)[p.action_index(action)])


def _argmax_set(values: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    return np.flatnonzero(values >= values.max() - tol)


def optimal_actions(p: DecisionProblem, tol: float = TIE_TOL) -> tuple[Hashable, ...]:
    """Every action whose expected utility is within ``tol`` of the maximum."""
    return tuple(p.actions[i] for i in _argmax_set(expected_utilities(p), tol))


def admissible_actions(p: DecisionProblem) -> tuple[Hashable, ...]:
    """Actions not dominated by another (no worse in every state, better in one)."""
    u = p.utility
    keep = []
    for i in range(len(p.actions)):
        dominated = any(
            np.all(u[k] >= u[i]) and np.any(u[k] > u[i]) for k in range(len(p.actions)) if k != i
        )
        if not dominated:
            keep.append(p.actions[i])
    return tuple(keep)


# Sequential trees.


@dataclass(frozen=True)
class Terminal:
    utility: float
    name: str | None = None


@dataclass(frozen=True)
class Chance:
    """Random node: ``branches`` are ``(event label, child)`` pairs with matching ``probs``."""

    branches: tuple[tuple[str, "Node"], ...]
    probs: tuple[float, ...]
    name: str | None = None

    def __post_init__(self):
        branches = tuple(self.branches.items()) if isinstance(self.branches, Mapping) else tuple(self.branches)
        probs = tuple(float(v) for v in self.probs)
        if len(branches) != len(probs) or not branches:
            raise DomainError("chance node needs one probability per branch")
        if any(v < 0 for v in probs) or abs(sum(probs) - 1.0) > SUM_TOL:
            raise DomainError(f"chance node probabilities must be nonnegative and sum to 1, got {probs}")
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class Decision:
    """Decision node: ``branches`` are ``(action label, child)`` pairs."""

    branches: tuple[tuple[str, "Node"], ...]
    name: str | None = None

    def __post_init__(self):
        branches = tuple(self.branches.items()) if isinstance(self.branches, Mapping) else tuple(self.branches)
        if not branches:
            raise DomainError("decision node needs at least one branch")
        labels = [b[0] for b in branches]
        if len(set(labels)) != len(labels):
            raise DomainError("decision branch labels must be distinct")
        object.__setattr__(self, "branches", branches)


Node = Union[Terminal, Chance, Decision]


@dataclass(frozen=True)
class PolicyValue:
    """Solved tree: root ``value``, chosen branches per decision node, and every node's value."""

    value: float
    policy: dict[str, tuple[str, ...]] = field(default_factory=dict)
    values: dict[str, float] = field(default_factory=dict)


def _node_id(node: Node, path: str) -> str:
    return node.name if node.name is not None else path


def solve_tree(tree: Node, tol: float = TIE_TOL) -> PolicyValue:
    """Backward induction: chance nodes average, decision nodes maximize.

    Nodes are identified by their ``name`` or, if unnamed, by the path of
    branch labels from the root (``"root/study/X=1"``).
    """
    policy: dict[str, tuple[str, ...]] = {}
    values: dict[str, float] = {}

    def visit(node: Node, path: str) -> float:
        nid = _node_id(node, path)
        if isinstance(node, Terminal):
            v = float(node.utility)
        elif isinstance(node, Chance):
            v = float(
                sum(prob * visit(child, f"{path}/{lab}") for (lab, child), prob in zip(node.branches, node.probs))
            )
        else:
            child_vals = np.array([visit(child, f"{path}/{lab}") for lab, child in node.branches])
            best = _argmax_set(child_vals, tol)
            policy[nid] = tuple(node.branches[i][0] for i in best)
            v = float(child_vals.max())
        values[nid] = v
        return v

    root = visit(tree, "root")
    return PolicyValue(root, policy, values)


def with_cost(node: Node, cost: float) -> Node:
    """Copy of ``node`` with ``cost`` subtracted from every terminal beneath it."""
    if isinstance(node, Terminal):
        return Terminal(node.utility - cost, node.name)
    if isinstance(node, Chance):
        return Chance(tuple((lab, with_cost(c, cost)) for lab, c in node.branches), node.probs, node.name)
    return Decision(tuple((lab, with_cost(c, cost)) for lab, c in node.branches), node.name)


# Information and value.


def chance_update(prior, likelihood) -> tuple[ProbVector, float]:
    """Bayes over a finite state set.

    ``likelihood[j]`` is the probability of the observation under state ``j``.
    Returns the posterior over states and the marginal probability of the
    observation.
    """
    labels = prior.labels if isinstance(prior, ProbVector) else ()
    w = np.asarray(prior.weights if isinstance(prior, ProbVector) else prior, dtype=float)
    lik = np.asarray(likelihood, dtype=float)
    if lik.shape != w.shape:
        raise DomainError(f"{lik.size} likelihood values for {w.size} states")
    if np.any(lik < 0) or np.any(lik > 1):
        raise DomainError("likelihood values must lie in [0, 1]")
    joint = w * lik
    marginal = float(joint.sum())
    if marginal <= 0:
        raise DomainError("the observation has zero marginal probability")
    return ProbVector(joint / marginal, labels), marginal


def _single_probs(p: DecisionProblem) -> np.ndarray:
    if p.per_action:
        raise DomainError("value of information needs one state distribution shared by all actions")
    return p.probs


def opportunity_loss(p: DecisionProblem, action: Hashable, state: Hashable) -> float:
    """``max_i u(a_i, E) - u(a, E)``: regret of ``action`` once ``state`` is known."""
    j = p.state_index(state)
    col = p.utility[:, j]
    return float(col.max() - col[p.action_index(action)])


def evpi(p: DecisionProblem) -> float:
    """Expected value of perfect information: expected opportunity loss of the prior-optimal action."""
    probs = _single_probs(p)
    star = _argmax_set(p.utility @ probs)[0]
    loss = p.utility.max(axis=0) - p.utility[star]
    return float(loss @ probs)


CostSpec = Union[float, Sequence[float], Callable[[int], float]]


def _cost_of(cost: CostSpec, i: int) -> float:
    if callable(cost):
        return float(cost(i))
    if np.ndim(cost) == 0:
        return float(cost)
    return float(cost[i])


def _likelihood_table(base: DecisionProblem, likelihood) -> np.ndarray:
    lik = np.asarray(likelihood, dtype=float)
    if lik.ndim != 2 or lik.shape[0] != len(base.states):
        raise DomainError(f"experiment table must be states x outcomes, got shape {lik.shape}")
    if np.any(np.abs(lik.sum(axis=1) - 1.0) > 1e-9):
        raise DomainError("each state's outcome probabilities must sum to 1")
    return lik


def value_of_data(base: DecisionProblem, likelihood, datum: int, cost: CostSpec = 0.0) -> float:
    """Expected value of observing outcome ``datum`` of an experiment.

    ``likelihood[j, i]`` is ``P(D_i | E_j)``. Costs are additive, so running
    the experiment and seeing ``D_i`` changes every utility by
    ``-cost(D_i)``. The value is
    ``sum_j [u(a_i*, E_j) - c_i - u(a_0*, E_j)] P(E_j | D_i)``
    with ``a_i*`` optimal after the datum and ``a_0*`` optimal before.
    """
    probs = _single_probs(base)
    lik = _likelihood_table(base, likelihood)
    post, _ = chance_update(probs, lik[:, datum])
    a0 = _argmax_set(base.utility @ probs)[0]
    ai = _argmax_set(base.utility @ post.weights)[0]
    gain = base.utility[ai] - _cost_of(cost, datum) - base.utility[a0]
    return float(gain @ post.weights)


def value_of_experiment(base: DecisionProblem, likelihood, cost: CostSpec = 0.0) -> float:
    """``v(e) = sum_i v(e, D_i) P(D_i)``, skipping outcomes of zero probability."""
    probs = _single_probs(base)
    lik = _likelihood_table(base, likelihood)
    marg = probs @ lik
    return float(
        sum(marg[i] * value_of_data(base, lik, i, cost) for i in range(lik.shape[1]) if marg[i] > 0)
    )


# Portfolio with a quadratic risk penalty.


def portfolio_problem(
    scenarios: Sequence[float],
    probs: Sequence[float],
    rate: float,
    weights: Sequence[float],
    risk_aversion: float = 0.0,
    actions: Sequence[Hashable] = (),
) -> DecisionProblem:
    """Mix of a risky asset and a fixed rate, one action per risky weight.

    Utility ``u_ij = w_i x_j + (1 - w_i) r`` minus the risk penalty
    ``w_i^2 A (xbar - x_j)^2``, where ``xbar`` is the unweighted scenario mean.
    """
    x = np.asarray(scenarios, dtype=float)
    w = np.asarray(weights, dtype=float)
    if risk_aversion < 0:
        raise DomainError("risk aversion must be >= 0")
    u = np.outer(w, x) + np.outer(1.0 - w, np.full_like(x, rate))
    u -= np.outer(w**2, risk_aversion * (x.mean() - x) ** 2)
    labels = tuple(actions) or tuple(f"a{i + 1}" for i in range(w.size))
    states = tuple(f"E{j + 1}" for j in range(x.size))
    return DecisionProblem(labels, states, u, probs)


def optimal_portfolio_weight(
    scenarios: Sequence[float], probs: Sequence[float], rate: float, risk_aversion: float
) -> tuple[float, float]:
    """Closed-form optimal risky weight and its expected utility.

    ``a* = rho / (2 A delta)`` and ``w(a*) = rho^2 / (4 A delta) + r`` with
    ``rho = E[X] - r`` and ``delta = Var[X] + (xbar - E[X])^2``.
    """
    if risk_aversion <= 0:
        if risk_aversion == 0:
            raise DomainError("A = 0 leaves a linear utility in the weight, which has no finite maximizer")
        raise DomainError("risk aversion must be positive")
    x = np.asarray(scenarios, dtype=float)
    p = ProbVector(np.asarray(probs, dtype=float)).weights
    if x.shape != p.shape:
        raise DomainError("one probability per scenario is required")
    ex = float(p @ x)
    var = float(p @ (x - ex) ** 2)
    delta = var + (x.mean() - ex) ** 2
    if not delta > 0:
        raise DomainError("the risky asset has no spread (delta = 0)")
    rho = ex - rate
    return rho / (2.0 * risk_aversion * delta), rho * rho / (4.0 * risk_aversion * delta) + rate
