"""Power allocation for the shared channel: maximize the worst link's SNR.

Because delay is strictly decreasing in SNR, maximizing the minimum SNR and
minimizing the maximum delay are the same problem.  Constraints: every
directed link gets at least p_min_w and at most p_max_w, and each vehicle's
total transmit power may not exceed p_max_w.

Four strategies:
  default_pa  - split the budget evenly over a vehicle's outgoing links.
  greedy_pa   - iteratively shift power from the best link to the worst one,
                reprojecting onto the constraints each epoch.
  genetic_pa  - real-coded GA over the off-diagonal power vector with
                fitness = minimum SNR.
  oracle_pa   - exhaustive grid search for tiny instances; a ground-truth
                reference for testing and the `verify` command.
"""

from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelParams,
    DistanceMatrix,
    LinkMetrics,
    PowerMatrix,
    compute_snr_batch,
    compute_snr_matrix,
    link_metrics,
    offdiag_mask,
    offdiag_values,
)
from .errors import CapacityError, DomainError, FeasibilityError

# Absolute slack, in watts, used by every constraint check.
FEASIBILITY_SLACK_W = 1e-9

ORACLE_MAX_VEHICLES = 3
ORACLE_MAX_POINTS = 1e8


@dataclass(frozen=True)
class AllocationProblem:
    """One solvable instance: channel constants plus a scene's distances."""

    params: ChannelParams
    dist: DistanceMatrix

    def __post_init__(self):
        n = self.dist.n
        if (n - 1) * self.params.p_min_w > self.params.p_max_w:
            raise FeasibilityError(
                f"row budget unsatisfiable: ({n} - 1) * p_min_w exceeds p_max_w"
            )

    @property
    def n(self) -> int:
        return self.dist.n


@dataclass(frozen=True)
class GreedyConfig:
    """Knobs for greedy_pa.

    learn_rate is the multiplicative step applied to the worst and best
    links' powers each epoch.  The plateau detector stops early once the
    best objective improves by less than convergence_tol (relative) for
    convergence_window consecutive epochs.
    """

    learn_rate: float = 0.05
    max_epochs: int = 5000
    convergence_tol: float = 1e-6
    convergence_window: int = 20

    def __post_init__(self):
        if not (0 < self.learn_rate < 1):
            raise DomainError(f"learn_rate must be in (0, 1), got {self.learn_rate}")
        if self.max_epochs < 1:
            raise DomainError("max_epochs must be at least 1")
        if not (self.convergence_tol > 0):
            raise DomainError("convergence_tol must be positive")
        if self.convergence_window < 1:
            raise DomainError("convergence_window must be at least 1")


@dataclass(frozen=True)
class GeneticConfig:
    """Knobs for genetic_pa.

    Individuals whose fitness falls below fitness_threshold are discarded
    and redrawn; the default of 0 never fires because min-SNR is always
    positive.  The run stops at max_generations or after stagnation_limit
    generations without improvement, whichever comes first.
    """

    population_size: int = 50
    crossover_rate: float = 0.8
    mutation_rate: float = 0.05
    max_generations: int = 100_000
    fitness_threshold: float = 0.0
    rng_seed: int = 0
    stagnation_limit: int = 500
    creep_sigma: float = 0.25

    def __post_init__(self):
        if self.population_size < 2:
            raise DomainError("population_size must be at least 2")
        if not (0 <= self.crossover_rate <= 1):
            raise DomainError("crossover_rate must be in [0, 1]")
        if not (0 <= self.mutation_rate <= 1):
            raise DomainError("mutation_rate must be in [0, 1]")
        if self.max_generations < 1:
            raise DomainError("max_generations must be at least 1")
        if self.stagnation_limit < 1:
            raise DomainError("stagnation_limit must be at least 1")
        if not (self.creep_sigma > 0):
            raise DomainError("creep_sigma must be positive")


@dataclass(frozen=True)
class AllocationResult:
    """Outcome of one solver run; all constraints re-verified post-solve."""

    power: PowerMatrix
    metrics: LinkMetrics
    objective_min_snr: float
    objective_max_delay_s: float
    epochs_used: int
    converged: bool
    strategy_name: str
    history: tuple = ()  # best-so-far objective after each epoch/generation


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violations: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


def check_feasible(power: PowerMatrix, params: ChannelParams) -> FeasibilityReport:
    """Verify per-link bounds and per-vehicle budgets within absolute slack.

    Total function: never raises, reports every violated constraint.
    """
    p = power.p
    n = power.n
    mask = offdiag_mask(n)
    violations = []
    low = mask & (p < params.p_min_w - FEASIBILITY_SLACK_W)
    for i, j in np.argwhere(low):
        violations.append(
            f"P[{i}][{j}]={p[i, j]:.6g} W below per-link minimum {params.p_min_w:.6g} W"
        )
    high = mask & (p > params.p_max_w + FEASIBILITY_SLACK_W)
    for i, j in np.argwhere(high):
        violations.append(
            f"P[{i}][{j}]={p[i, j]:.6g} W above per-link maximum {params.p_max_w:.6g} W"
        )
    row_sums = p.sum(axis=1)
    for i in np.flatnonzero(row_sums > params.p_max_w + FEASIBILITY_SLACK_W):
        violations.append(
            f"row {i} sum {row_sums[i]:.6g} W exceeds budget {params.p_max_w:.6g} W"
        )
    return FeasibilityReport(ok=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# projection onto the constraint set
# ---------------------------------------------------------------------------


def _cap_rows_to_budget(rows: np.ndarray, budget: float) -> np.ndarray:
    """Lower each row's largest entries to a common level so it sums to budget.

    Entries below the level are untouched.  Rows already within budget come
    back unchanged.  Shape (..., m).
    """
    u = np.sort(rows, axis=-1)[..., ::-1]
    m = rows.shape[-1]
    csum = np.cumsum(u, axis=-1)
    total = csum[..., -1:]
    tail = total - csum  # sum of entries strictly after the k-th largest
    ks = np.arange(1, m + 1, dtype=np.float64)
    level = (budget - tail) / ks
    # smallest k whose level lands at or above the next entry down
    nxt = np.concatenate(
        [u[..., 1:], np.full((*u.shape[:-1], 1), -np.inf)], axis=-1
    )
    first_ok = np.argmax(level >= nxt, axis=-1)
    w = np.take_along_axis(level, first_ok[..., np.newaxis], axis=-1)
    return np.minimum(rows, w)


def _project_offdiag_rows(rows: np.ndarray, p_min: float, p_max: float) -> np.ndarray:
    """Project rows of outgoing-link powers onto the constraint set.

    Clamp to the per-link bounds; rows over budget are rescaled
    multiplicatively, entries pushed under the floor are clamped back up,
    and the residual excess is absorbed by capping the largest entries.
    Feasible rows pass through bit-identically.
    """
    out = np.clip(rows, p_min, p_max)
    sums = out.sum(axis=-1)
    over = sums > p_max
    if np.any(over):
        scaled = out[over] * (p_max / sums[over])[..., np.newaxis]
        scaled = np.maximum(scaled, p_min)
        out[over] = _cap_rows_to_budget(scaled, p_max)
    return out


def project_to_feasible(power: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Project raw power matrices (n, n) or a stack (m, n, n) onto the
    constraint set, keeping diagonals at zero."""
    power = np.asarray(power, dtype=np.float64)
    square = power.ndim == 2
    stack = power[np.newaxis] if square else power
    n = stack.shape[-1]
    mask = offdiag_mask(n)
    rows = stack[:, mask].reshape(stack.shape[0], n, n - 1)
    rows = _project_offdiag_rows(rows, params.p_min_w, params.p_max_w)
    out = np.zeros_like(stack)
    out[:, mask] = rows.reshape(stack.shape[0], n * (n - 1))
    return out[0] if square else out


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


def _uniform_power(problem: AllocationProblem) -> np.ndarray:
    n = problem.n
    share = problem.params.p_max_w / (n - 1)
    p = np.full((n, n), share)
    np.fill_diagonal(p, 0.0)
    return p


def _finish(
    problem: AllocationProblem,
    p: np.ndarray,
    *,
    epochs_used: int,
    converged: bool,
    strategy_name: str,
    history: tuple = (),
) -> AllocationResult:
    power = PowerMatrix(p)
    report = check_feasible(power, problem.params)
    if not report:
        raise FeasibilityError(
            f"{strategy_name} produced an infeasible allocation: {report.violations[0]}"
        )
    metrics = link_metrics(problem.params, problem.dist, power)
    return AllocationResult(
        power=power,
        metrics=metrics,
        objective_min_snr=metrics.min_snr(),
        objective_max_delay_s=metrics.max_delay_s(),
        epochs_used=epochs_used,
        converged=converged,
        strategy_name=strategy_name,
        history=history,
    )


def default_pa(problem: AllocationProblem) -> AllocationResult:
    """Even split: every vehicle divides its budget over its n-1 links."""
    return _finish(
        problem,
        _uniform_power(problem),
        epochs_used=0,
        converged=True,
        strategy_name="default",
    )


def _extreme_links(snr: np.ndarray):
    """Worst and best off-diagonal links, ties broken lexicographically."""
    n = snr.shape[0]
    lo = snr.copy()
    np.fill_diagonal(lo, np.inf)
    c, d = divmod(int(np.argmin(lo)), n)
    hi = snr.copy()
    np.fill_diagonal(hi, -np.inf)
    a, b = divmod(int(np.argmax(hi)), n)
    return (c, d), (a, b)


def greedy_pa(problem: AllocationProblem, cfg: GreedyConfig | None = None) -> AllocationResult:
    """Shift power toward the worst link, away from the best, epoch by epoch.

    Starts from the even split.  Each epoch multiplies the minimum-SNR
    link's power by (1 + learn_rate) and the maximum-SNR link's by
    (1 - learn_rate), then reprojects onto the constraints.  The best
    allocation seen so far (by min-SNR) is returned, so the objective
    history is non-decreasing.  Fully deterministic.
    """
    cfg = cfg or GreedyConfig()
    params = problem.params
    p = _uniform_power(problem)
    snr = compute_snr_matrix(params, problem.dist, PowerMatrix(p))
    best_obj = float(offdiag_values(snr).min())
    best_p = p.copy()
    history = []
    stall = 0
    converged = False
    epochs_used = 0
    for epoch in range(1, cfg.max_epochs + 1):
        epochs_used = epoch
        (c, d), (a, b) = _extreme_links(snr)
        p[c, d] *= 1.0 + cfg.learn_rate
        p[a, b] *= 1.0 - cfg.learn_rate
        p = project_to_feasible(p, params)
        snr = compute_snr_matrix(params, problem.dist, PowerMatrix(p))
        obj = float(offdiag_values(snr).min())
        if obj > best_obj:
            rel_gain = (obj - best_obj) / best_obj
            best_obj = obj
            best_p = p.copy()
            stall = 0 if rel_gain >= cfg.convergence_tol else stall + 1
        else:
            stall += 1
        history.append(best_obj)
        if stall >= cfg.convergence_window:
            converged = True
            break
    return _finish(
        problem,
        best_p,
        epochs_used=epochs_used,
        converged=converged,
        strategy_name="greedy",
        history=tuple(history),
    )


def _genes_to_rows(genes: np.ndarray, n: int) -> np.ndarray:
    # chromosome = off-diagonal powers, row-major, so each consecutive block
    # of n-1 genes is one vehicle's outgoing row
    return genes.reshape(genes.shape[0], n, n - 1)


def _rows_to_matrices(rows: np.ndarray, n: int) -> np.ndarray:
    mask = offdiag_mask(n)
    out = np.zeros((rows.shape[0], n, n))
    out[:, mask] = rows.reshape(rows.shape[0], n * (n - 1))
    return out


def genetic_pa(problem: AllocationProblem, cfg: GeneticConfig | None = None) -> AllocationResult:
    """Real-coded GA over the off-diagonal power vector, fitness = min SNR.

    Tournament selection (size 3), per-gene uniform crossover, per-gene
    mutation that either resamples log-uniformly over [p_min_w, p_max_w]
    or creeps multiplicatively (50/50), elitism of one, and projection onto
    the constraints after every variation.  Deterministic for a fixed seed.
    """
    cfg = cfg or GeneticConfig()
    params = problem.params
    dist = problem.dist
    n = problem.n
    n_genes = n * (n - 1)
    pop_size = cfg.population_size
    rng = np.random.default_rng(cfg.rng_seed)
    ln_lo = np.log(params.p_min_w)
    ln_hi = np.log(params.p_max_w)
    mask = offdiag_mask(n)

    def project(genes: np.ndarray) -> np.ndarray:
        rows = _project_offdiag_rows(
            _genes_to_rows(genes, n), params.p_min_w, params.p_max_w
        )
        return rows.reshape(genes.shape[0], n_genes)

    def fitness(genes: np.ndarray) -> np.ndarray:
        snr = compute_snr_batch(params, dist, _rows_to_matrices(_genes_to_rows(genes, n), n))
        return snr[:, mask].min(axis=1)

    def random_genes(count: int) -> np.ndarray:
        return project(np.exp(rng.uniform(ln_lo, ln_hi, size=(count, n_genes))))

    def evaluate(genes: np.ndarray) -> np.ndarray:
        fit = fitness(genes)
        # below-threshold individuals are discarded and redrawn (bounded retry)
        for _ in range(50):
            bad = fit < cfg.fitness_threshold
            if not np.any(bad):
                break
            genes[bad] = random_genes(int(bad.sum()))
            fit[bad] = fitness(genes[bad])
        return fit

    pop = random_genes(pop_size)
    fit = evaluate(pop)
    best_idx = int(np.argmax(fit))
    best_fit = float(fit[best_idx])
    best_genes = pop[best_idx].copy()
    history = [best_fit]
    stagnation = 0
    converged = False
    generations = 0

    for _ in range(cfg.max_generations):
        generations += 1
        # tournament selection, size 3
        entrants = rng.integers(0, pop_size, size=(pop_size, 3))
        winners = entrants[np.arange(pop_size), np.argmax(fit[entrants], axis=1)]
        children = pop[winners].copy()
        # uniform crossover on consecutive pairs
        n_pairs = pop_size // 2
        do_cross = rng.random(n_pairs) < cfg.crossover_rate
        swap = rng.random((n_pairs, n_genes)) < 0.5
        swap &= do_cross[:, np.newaxis]
        first = children[0 : 2 * n_pairs : 2]
        second = children[1 : 2 * n_pairs : 2]
        tmp = first[swap]
        first[swap] = second[swap]
        second[swap] = tmp
        # mutation: log-uniform reset or multiplicative creep, half and half
        mutate = rng.random((pop_size, n_genes)) < cfg.mutation_rate
        use_reset = rng.random((pop_size, n_genes)) < 0.5
        resets = np.exp(rng.uniform(ln_lo, ln_hi, size=(pop_size, n_genes)))
        creeps = children * np.exp(rng.normal(0.0, cfg.creep_sigma, size=(pop_size, n_genes)))
        mutated = np.where(use_reset, resets, creeps)
        children = np.where(mutate, mutated, children)
        children = project(np.clip(children, params.p_min_w, params.p_max_w))
        children[0] = best_genes  # elitism
        pop = children
        fit = evaluate(pop)
        gen_best = int(np.argmax(fit))
        if float(fit[gen_best]) > best_fit:
            best_fit = float(fit[gen_best])
            best_genes = pop[gen_best].copy()
            stagnation = 0
        else:
            stagnation += 1
        history.append(best_fit)
        if stagnation >= cfg.stagnation_limit:
            converged = True
            break

    best_rows = _project_offdiag_rows(
        best_genes[np.newaxis].reshape(1, n, n - 1), params.p_min_w, params.p_max_w
    )
    best_matrix = _rows_to_matrices(best_rows, n)[0]
    return _finish(
        problem,
        best_matrix,
        epochs_used=generations,
        converged=converged,
        strategy_name="genetic",
        history=tuple(history),
    )


# ---------------------------------------------------------------------------
# exhaustive grid oracle
# ---------------------------------------------------------------------------


def _oracle_levels(problem: AllocationProblem, grid_points: int) -> np.ndarray:
    """Log-spaced power levels plus the even-split point, sorted unique."""
    params = problem.params
    levels = np.geomspace(params.p_min_w, params.p_max_w, grid_points)
    share = params.p_max_w / (problem.n - 1)
    return np.unique(np.concatenate([levels, [share]]))


def oracle_pa(problem: AllocationProblem, grid_points_per_link: int = 20) -> AllocationResult:
    """Exhaustive grid search over feasible power matrices for n <= 3.

    Evaluates every combination of log-spaced per-link power levels (the
    even-split level is always in the grid), discards combinations that
    break a row budget, and returns the best surviving point by min-SNR.
    Intended for testing and the `verify` command, not production solving.
    """
    if grid_points_per_link < 2:
        raise DomainError("need at least 2 grid points per link")
    n = problem.n
    if n > ORACLE_MAX_VEHICLES:
        raise CapacityError(f"oracle supports n <= {ORACLE_MAX_VEHICLES}, got n = {n}")
    levels = _oracle_levels(problem, grid_points_per_link)
    n_links = n * (n - 1)
    total = float(len(levels)) ** n_links
    if total > ORACLE_MAX_POINTS:
        raise CapacityError(
            f"{len(levels)}^{n_links} = {total:.3g} grid points exceeds the "
            f"{ORACLE_MAX_POINTS:.0e} cap"
        )
    if n == 2:
        p = _oracle_search_n2(problem, levels)
    else:
        p = _oracle_search_n3(problem, levels)
    return _finish(
        problem,
        p,
        epochs_used=int(total),
        converged=True,
        strategy_name="oracle",
    )


def _oracle_search_n2(problem: AllocationProblem, levels: np.ndarray) -> np.ndarray:
    a, b = np.meshgrid(levels, levels, indexing="ij")
    stack = np.zeros((a.size, 2, 2))
    stack[:, 0, 1] = a.ravel()
    stack[:, 1, 0] = b.ravel()
    snr = compute_snr_batch(problem.params, problem.dist, stack)
    objective = np.minimum(snr[:, 0, 1], snr[:, 1, 0])
    return stack[int(np.argmax(objective))]


def _oracle_search_n3(problem: AllocationProblem, levels: np.ndarray) -> np.ndarray:
    """Grid search for n = 3, organized by receiver.

    A receiver's SNRs depend only on the powers addressed to it (its column
    of the power matrix), so each column's level pairs can be scored once;
    the scan over column combinations then only has to check row budgets
    and take minima.  This is an exact reorganization of the full
    level**6 enumeration.
    """
    params = problem.params
    d = problem.dist.d
    noise = params.noise_w
    budget = params.p_max_w + FEASIBILITY_SLACK_W
    la, lb = np.meshgrid(levels, levels, indexing="ij")
    pa, pb = la.ravel(), lb.ravel()  # powers of a column's two senders

    senders = [[k for k in range(3) if k != j] for j in range(3)]
    col_score = []
    for j in range(3):
        s0, s1 = senders[j]
        g0 = pa / d[s0, j] ** params.alpha
        g1 = pb / d[s1, j] ** params.alpha
        col_score.append(np.minimum(g0 / (g1 + noise), g1 / (g0 + noise)))
    f0, f1, f2 = col_score

    # row budget masks; column j's combo contributes pa to its first sender's
    # row and pb to its second sender's row
    row0 = pa[:, np.newaxis] + pa[np.newaxis, :] <= budget  # P[0,1] + P[0,2]
    row1_c0 = pa  # P[1,0]
    row1_c2 = pb  # P[1,2]
    row2_c0 = pb  # P[2,0]
    row2_c1 = pb  # P[2,1]

    f12 = np.minimum(f1[:, np.newaxis], f2[np.newaxis, :])
    best_obj = -1.0
    best_combo = None
    order = np.argsort(f0)[::-1]
    for c0 in order:
        if f0[c0] <= best_obj:
            break  # f0 sorted descending; nothing better remains
        feasible = (
            row0
            & (row1_c0[c0] + row1_c2[np.newaxis, :] <= budget)
            & (row2_c0[c0] + row2_c1[:, np.newaxis] <= budget)
        )
        obj = np.where(feasible, np.minimum(f0[c0], f12), -1.0)
        flat = int(np.argmax(obj))
        if obj.ravel()[flat] > best_obj:
            best_obj = float(obj.ravel()[flat])
            c1, c2 = divmod(flat, obj.shape[1])
            best_combo = (int(c0), int(c1), int(c2))
    if best_combo is None:
        raise FeasibilityError("no grid point satisfied the row budgets")
    p = np.zeros((3, 3))
    for j, c in zip(range(3), best_combo):
        s0, s1 = senders[j]
        p[s0, j] = pa[c]
        p[s1, j] = pb[c]
    return p
