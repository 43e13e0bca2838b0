"""
Douglas–Rachford splitting, its subspace form and the parallel proximal
algorithm (PPXA).

All three share the SolverConfig stopping rule: stop once the relative
step ‖x_{n+1} − x_n‖ / max(‖x_n‖, ε) drops to ``config.tolerance``,
otherwise run ``config.max_iterations`` iterations and return the iterate
with the lowest logged objective (status MAX_ITERATIONS, logged warning).
That selection only has something to compare when the objective is
finite: with indicator terms every infeasible iterate logs +inf, and if
no logged iterate is feasible the last one is returned as is.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext

import numpy as np

from Main.exceptions import ProxEvaluationError, ShapeError, SolverConfigError
from .product import DiagonalProjector, ProductSeparable, product_norm, stack, weighted_sum
from .qualification import qualification_advisory
from .state import IterationLog, IterationRecord, RunStatus, SolverResult, SolverState

logger = logging.getLogger(__name__)

STEP_FLOOR = 1e-12


def relative_step(new, old, norm=np.linalg.norm):
    return float(norm(new - old)) / max(float(norm(old)), STEP_FLOOR)


def total_objective(functions, x):
    """Σ f_i(x), or None as soon as one term cannot be evaluated."""
    total = 0.0
    for f in functions:
        value = f.objective(x)
        if value is None:
            return None
        total += float(value)
    return total


def _with_error(value, error):
    if error is None:
        return value
    return value + np.asarray(error, dtype=float)


class _BestIterate:
    """Remembers the iterate with the smallest finite objective; never fires while every value is +inf."""

    def __init__(self):
        self.x = None
        self.value = np.inf

    def offer(self, x, value):
        if value is not None and value < self.value:
            self.x, self.value = x.copy(), value

    def pick(self, x, value):
        if self.x is not None and (value is None or self.value < value):
            return self.x
        return x


def _finish(name, status, log, config):
    if status == RunStatus.MAX_ITERATIONS:
        last = log.last
        logger.warning(
            f"{name} hit the iteration cap ({config.max_iterations}); last relative step {last.residual:.3e}"
        )
    else:
        logger.info(f"{name} converged after {len(log)} iterations")


# ============================================================
#   DOUGLAS–RACHFORD
# ============================================================

def fixed_point_residual(f1, f2, y, gamma):
    """‖Ty − y‖ for T = (2prox_{γf1} − Id)∘(2prox_{γf2} − Id)."""
    half = f2.prox(y, gamma)
    return 2.0 * float(np.linalg.norm(f1.prox(2.0 * half - y, gamma) - half))


def douglas_rachford(f1, f2, config, y0, callback=None):
    """
    Minimize f1 + f2.

    y_{n+½} = prox_{γf2} y_n + a_n
    y_{n+1} = y_n + λ_n (prox_{γf1}(2y_{n+½} − y_n) + b_n − y_{n+½})

    a_n is ``config.errors(0, n)`` and b_n is ``config.errors(1, n)``.
    The step is measured on the shadow sequence y_{n+½}. The minimizer is
    prox_{γf2} of the limit y, not y itself; it is returned as
    ``solution`` and y as ``fixed_point``.
    """
    gamma = config.gamma
    y = np.array(y0, dtype=float)
    log = IterationLog()
    best = _BestIterate()
    status = RunStatus.MAX_ITERATIONS
    half = _evaluate(f2, y, gamma, 2, 0, config.error_at(0, 0))
    state = SolverState(x=half, y=[y])
    logger.info(f"douglas_rachford: γ={gamma:g}, λ={config.relaxation!r}, cap={config.max_iterations}")

    for n in range(config.max_iterations):
        start = time.perf_counter()
        relaxation = config.relaxation_at(n)
        p = _evaluate(f1, 2.0 * half - y, gamma, 1, n, config.error_at(1, n))
        y_next = y + relaxation * (p - half)
        half_next = _evaluate(f2, y_next, gamma, 2, n + 1, config.error_at(0, n + 1))

        record = IterationRecord(
            n=n,
            objective=total_objective((f1, f2), half) if config.track_objective else None,
            residual=relative_step(half_next, half),
            relaxation=relaxation,
            millis=1000.0 * (time.perf_counter() - start),
            fixed_point_residual=2.0 * float(np.linalg.norm(p - half)),
        )
        log.append(record)
        best.offer(half, record.objective)
        y, half = y_next, half_next
        state = SolverState(x=half, y=[y], p=[p], p_mean=p, n=n + 1)
        if callback is not None:
            callback(state, record)
        logger.debug(f"dr n={n} step={record.residual:.3e} ‖Ty−y‖={record.fixed_point_residual:.3e}")
        if record.residual <= config.tolerance:
            status = RunStatus.CONVERGED
            break

    solution = f2.prox(y, gamma)
    if status == RunStatus.MAX_ITERATIONS and config.track_objective:
        solution = best.pick(solution, total_objective((f1, f2), solution))
    _finish("douglas_rachford", status, log, config)
    return SolverResult(solution=solution, log=log, status=status, state=state, fixed_point=y)


def _evaluate(f, x, gamma, index, n, error=None):
    try:
        value = f.prox(x, gamma)
    except ProxEvaluationError:
        raise
    except Exception as exc:
        raise ProxEvaluationError(index, n, exc) from exc
    return _with_error(value, error)


# ============================================================
#   SUBSPACE DOUGLAS–RACHFORD
# ============================================================

def _product_error(f, config, n, y):
    if config.errors is None:
        return None
    if isinstance(f, ProductSeparable):
        errors = [config.error_at(i, n) for i in range(f.m)]
        if all(e is None for e in errors):
            return None
        return np.stack([np.zeros(y.shape[1:]) if e is None else np.asarray(e, dtype=float) for e in errors])
    return config.error_at(0, n)


def subspace_dr(f, projector, config, y0, callback=None):
    """
    Minimize f over the closed subspace D with projector P_D.

    x_0 = P_D y_0
    y_{n+½} = prox_{γf} y_n + a_n,  p_n = P_D y_{n+½}
    y_{n+1} = y_n + λ_n (2p_n − x_n − y_{n+½})
    x_{n+1} = x_n + λ_n (p_n − x_n)

    x_n equals P_D y_n throughout and is returned directly. On the
    product space the step is measured in the weighted norm.
    """
    gamma = config.gamma
    weights = getattr(projector, "weights", None)
    norm = np.linalg.norm if weights is None else (lambda a: product_norm(weights, a))

    y = np.array(y0, dtype=float)
    x = projector.project(y)
    log = IterationLog()
    best = _BestIterate()
    status = RunStatus.MAX_ITERATIONS
    state = SolverState(x=x, y=[y])
    logger.info(f"subspace_dr: γ={gamma:g}, λ={config.relaxation!r}, cap={config.max_iterations}")

    for n in range(config.max_iterations):
        start = time.perf_counter()
        relaxation = config.relaxation_at(n)
        half = _evaluate(f, y, gamma, 0, n, _product_error(f, config, n, y))
        p = projector.project(half)
        y = y + relaxation * (2.0 * p - x - half)
        x_next = x + relaxation * (p - x)

        record = IterationRecord(
            n=n,
            objective=f.objective(x_next) if config.track_objective else None,
            residual=relative_step(x_next, x, norm),
            relaxation=relaxation,
            millis=1000.0 * (time.perf_counter() - start),
        )
        x = x_next
        state = SolverState(x=x, y=[y], p=[half], p_mean=p, n=n + 1)
        log.append(record)
        best.offer(x, record.objective)
        if callback is not None:
            callback(state, record)
        if record.residual <= config.tolerance:
            status = RunStatus.CONVERGED
            break

    solution = x
    if status == RunStatus.MAX_ITERATIONS and config.track_objective:
        solution = best.pick(x, log.last.objective)
    _finish("subspace_dr", status, log, config)
    return SolverResult(solution=solution, log=log, status=status, state=state)


def product_problem(functions, weights):
    """The (f, P_D) pair on which subspace_dr reproduces ppxa."""
    return ProductSeparable(functions, weights), DiagonalProjector(weights)


# ============================================================
#   PPXA
# ============================================================

def _initial_list(y0, m):
    if isinstance(y0, (list, tuple)):
        if len(y0) != m:
            raise ShapeError(f"{len(y0)} initial points for {m} functions")
        ys = [np.array(y, dtype=float) for y in y0]
    else:
        ys = [np.array(y0, dtype=float) for _ in range(m)]
    shapes = {y.shape for y in ys}
    if len(shapes) != 1:
        raise ShapeError(f"initial points disagree in shape: {sorted(shapes)}")
    return ys


def _timed_prox(f, y, gamma):
    start = time.perf_counter()
    value = f.prox(y, gamma)
    return value, 1000.0 * (time.perf_counter() - start)


def _evaluate_all(pool, functions, scales, ys, n, config):
    """p_{i,n} = prox_{γf_i/ω_i} y_{i,n} + a_{i,n}, collected in index order."""
    if pool is None:
        jobs = [None] * len(functions)
    else:
        jobs = [pool.submit(_timed_prox, f, y, scale) for f, y, scale in zip(functions, ys, scales)]

    ps, timings = [], []
    for index, (f, y, scale) in enumerate(zip(functions, ys, scales)):
        try:
            value, millis = _timed_prox(f, y, scale) if jobs[index] is None else jobs[index].result()
        except ProxEvaluationError:
            raise
        except Exception as exc:
            for job in jobs[index + 1:]:
                if job is not None:
                    job.cancel()
            raise ProxEvaluationError(index, n, exc) from exc
        ps.append(_with_error(value, config.error_at(index, n)))
        timings.append(millis)
    return ps, tuple(timings)


def ppxa(functions, config, y0, callback=None, interior_point=None, common_point=None):
    """
    Parallel proximal algorithm for min Σ f_i.

    ``y0`` is one array (copied to every y_{i,0}) or a list of m arrays.
    The m prox evaluations of an iteration run on up to
    ``config.max_workers`` threads; the weighted mean p_n is always
    reduced in index order so results do not depend on the thread count.
    """
    functions = list(functions)
    m = len(functions)
    if m == 0:
        raise SolverConfigError("ppxa needs at least one function")
    weights = config.weights_for(m)
    scales = [config.gamma / w for w in weights]
    advisory = qualification_advisory(functions, interior_point=interior_point, common_point=common_point)

    ys = _initial_list(y0, m)
    x = weighted_sum(weights, ys)
    state = SolverState(x=x, y=ys)
    log = IterationLog()
    best = _BestIterate()
    status = RunStatus.MAX_ITERATIONS
    workers = min(config.max_workers, m)
    logger.info(
        f"ppxa: m={m}, γ={config.gamma:g}, λ={config.relaxation!r}, ω={np.round(weights, 6).tolist()}, "
        f"workers={workers}, cap={config.max_iterations}"
    )

    with ThreadPoolExecutor(max_workers=workers) if workers > 1 else nullcontext() as pool:
        for n in range(config.max_iterations):
            start = time.perf_counter()
            ps, timings = _evaluate_all(pool, functions, scales, ys, n, config)
            p_mean = weighted_sum(weights, ps)
            relaxation = config.relaxation_at(n)
            ys = [y + relaxation * (2.0 * p_mean - x - p) for y, p in zip(ys, ps)]
            x_next = x + relaxation * (p_mean - x)

            record = IterationRecord(
                n=n,
                objective=total_objective(functions, x_next) if config.track_objective else None,
                residual=relative_step(x_next, x),
                relaxation=relaxation,
                millis=1000.0 * (time.perf_counter() - start),
                prox_millis=timings,
            )
            x = x_next
            state = SolverState(x=x, y=ys, p=ps, p_mean=p_mean, n=n + 1)
            log.append(record)
            best.offer(x, record.objective)
            if callback is not None:
                callback(state, record)
            logger.debug(f"ppxa n={n} step={record.residual:.3e} objective={record.objective}")
            if record.residual <= config.tolerance:
                status = RunStatus.CONVERGED
                break

    solution = x
    if status == RunStatus.MAX_ITERATIONS and config.track_objective:
        solution = best.pick(x, log.last.objective)
    _finish("ppxa", status, log, config)
    return SolverResult(solution=solution, log=log, status=status, state=state, advisory=advisory)


def ppxa_as_subspace_dr(functions, config, y0, callback=None):
    """Run subspace_dr on the product-space reformulation of a ppxa problem."""
    functions = list(functions)
    weights = config.weights_for(len(functions))
    f, projector = product_problem(functions, weights)
    return subspace_dr(f, projector, config, stack(_initial_list(y0, len(functions))), callback=callback)
