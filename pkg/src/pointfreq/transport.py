"""Equal-size optimal assignment (earth mover's distance) and derived losses.

The exact solver delegates to a shortest-augmenting-path assignment routine.
The approximate solver is an auction with epsilon scaling: it always returns a
valid bijection whose cost is at least the optimum and at most the optimum
plus n * epsilon_final, and it can be capped to a fixed round budget.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import ValidationError
from .sampling import fps
from .validation import check_points

EXACT_SIZE_LIMIT = 4096


@dataclass(frozen=True)
class AssignmentPlan:
    """A bijection between two equal-size clouds and its total cost."""

    mapping: np.ndarray      # target index assigned to each source index
    total_cost: float
    optimality: str          # "exact" or "approximate"
    epsilon_bound: float | None = None  # cost excess bound when approximate

    def recompute_cost(self, source, target):
        src = check_points(source, "source")
        dst = check_points(target, "target")
        return float(np.linalg.norm(src - dst[self.mapping], axis=1).sum())

    def to_csv(self):
        lines = ["source,target"]
        lines += [f"{i},{j}" for i, j in enumerate(self.mapping)]
        return "\n".join(lines) + "\n"


def _check_pair(p, q):
    src = check_points(p, "P")
    dst = check_points(q, "Q")
    if src.shape[0] != dst.shape[0]:
        raise ValidationError(
            f"size mismatch: {src.shape[0]} vs {dst.shape[0]} points"
        )
    return src, dst


def exact_emd(p, q):
    """Minimum-cost perfect matching under Euclidean ground cost."""
    src, dst = _check_pair(p, q)
    n = src.shape[0]
    if n > EXACT_SIZE_LIMIT:
        raise ValidationError(
            f"exact solver is limited to {EXACT_SIZE_LIMIT} points, got {n}"
        )
    cost = cdist(src, dst)
    rows, cols = linear_sum_assignment(cost)
    mapping = np.empty(n, dtype=np.int64)
    mapping[rows] = cols
    return AssignmentPlan(
        mapping=mapping,
        total_cost=float(cost[rows, cols].sum()),
        optimality="exact",
    )


def approx_emd(p, q, epsilon_scale=1e-4, max_rounds=200_000, scaling_factor=5.0):
    """Auction assignment with epsilon scaling.

    ``epsilon_scale`` fixes the terminal bid increment relative to the largest
    pairwise cost; the returned plan's cost exceeds the optimum by at most
    n * epsilon_final (recorded as ``epsilon_bound``). If ``max_rounds``
    bidding rounds run out, the best partial assignment is completed greedily
    and the bound is reported as infinite.
    """
    src, dst = _check_pair(p, q)
    n = src.shape[0]
    if epsilon_scale <= 0:
        raise ValidationError("epsilon_scale must be positive")
    cost = cdist(src, dst)
    if n == 1:
        return AssignmentPlan(np.zeros(1, dtype=np.int64), float(cost[0, 0]),
                              "approximate", epsilon_bound=0.0)

    benefit = -cost
    cost_span = float(cost.max())
    if cost_span == 0.0:
        return AssignmentPlan(np.arange(n, dtype=np.int64), 0.0,
                              "approximate", epsilon_bound=0.0)
    eps_final = epsilon_scale * cost_span
    eps = max(cost_span / 4.0, eps_final)

    prices = np.zeros(n)
    person_to_obj = np.full(n, -1, dtype=np.int64)
    rounds_left = max_rounds
    capped = False

    while True:
        person_to_obj.fill(-1)
        obj_to_person = np.full(n, -1, dtype=np.int64)
        while True:
            unassigned = np.flatnonzero(person_to_obj < 0)
            if unassigned.size == 0:
                break
            if rounds_left <= 0:
                capped = True
                break
            rounds_left -= 1
            values = benefit[unassigned] - prices
            best = np.argmax(values, axis=1)
            take = np.arange(unassigned.size)
            best_val = values[take, best]
            values[take, best] = -np.inf
            second_val = values.max(axis=1)
            bids = prices[best] + (best_val - second_val) + eps

            # highest bid wins each object; ties to the lowest bidder index
            order = np.lexsort((unassigned, -bids))
            objs, first = np.unique(best[order], return_index=True)
            winners = unassigned[order][first]
            prices[objs] = bids[order][first]
            displaced = obj_to_person[objs]
            person_to_obj[displaced[displaced >= 0]] = -1
            obj_to_person[objs] = winners
            person_to_obj[winners] = objs
        if capped or eps <= eps_final:
            break
        eps = max(eps / scaling_factor, eps_final)

    if capped:
        free_objs = np.setdiff1d(np.arange(n), person_to_obj[person_to_obj >= 0])
        person_to_obj[person_to_obj < 0] = free_objs
        bound = np.inf
    else:
        bound = n * eps_final

    total = float(cost[np.arange(n), person_to_obj].sum())
    return AssignmentPlan(person_to_obj.copy(), total, "approximate",
                          epsilon_bound=float(bound))


def _solve(p, q, solver):
    if solver == "exact":
        return exact_emd(p, q)
    if solver == "auction":
        return approx_emd(p, q)
    if solver == "auto":
        if len(p) <= EXACT_SIZE_LIMIT:
            return exact_emd(p, q)
        return approx_emd(p, q)
    raise ValidationError(f"solver: expected exact, auction or auto, got {solver!r}")


def reconstruction_loss(upsampled, reference, solver="exact"):
    """Total assignment cost between equal-size clouds (no normalization)."""
    return _solve(upsampled, reference, solver).total_cost


def identity_distribution_loss(upsampled, original, solver="exact"):
    """Assignment cost between the FPS-downsampled output and its input.

    The upsampled cloud must hold an integer multiple of the original count;
    it is reduced to that count by deterministic farthest point sampling
    before matching.
    """
    up = check_points(upsampled, "upsampled")
    ori = check_points(original, "original")
    if up.shape[0] % ori.shape[0] != 0:
        raise ValidationError(
            f"upsampled size {up.shape[0]} is not an integer multiple of "
            f"original size {ori.shape[0]}"
        )
    reduced = up[fps(up, ori.shape[0], start="centroid")]
    return _solve(reduced, ori, solver).total_cost
