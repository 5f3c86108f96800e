"""Joint bias/power solver: inner convexification with outer refresh.

The weighted problem is nonconvex because the harvested energy is convex
in the bias while the rate is concave in the powers.  The solver fixes an
estimated bias vector, which turns the energy utility and the energy
constraints into linear functions of the message powers, solves the
resulting concave program through its KKT system (closed-form powers plus
dual ascent on the coupling multipliers), then refreshes the estimate
with the bias induced by the new powers and repeats until the bias
settles.  The best feasible iterate seen along the way is returned, which
makes the reported objective monotone over the trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import PhysParams, QosSpec
from .precoding import PrecoderSet, linearized_map
from .utility import (Allocation, bias_from_powers, harvested_energies,
                      min_powers, sum_rate, total_energy, weighted_objective)
from .numerics import LpProblem, solve_lp

_LN2 = math.log(2.0)


class UnboundedPowerError(RuntimeError):
    """Dual state makes the stationarity denominator nonnegative."""


@dataclass(frozen=True, eq=False)
class LinearizedModel:
    """Constants of the convex inner problem at one bias expansion point.

    ``voltage_logs`` holds the per-EHU open-circuit log factors frozen at
    the expansion point; ``energy_rows`` the resulting per-EHU linear
    energy gradients over APs.  ``energy_const`` minus ``energy_weights @
    powers`` is the linearized total harvested energy.
    """

    voltage_logs: np.ndarray    # (n_ehu,)
    energy_rows: np.ndarray     # (n_ehu, n_ap)
    energy_const: float
    energy_weights: np.ndarray  # (n_iu,), summed over EHUs
    user_weights: np.ndarray    # (n_ehu, n_iu), one row per EHU
    energy_margins: np.ndarray  # (n_ehu,)
    bias_map: np.ndarray        # (n_ap, n_iu)
    b_hat: np.ndarray           # (n_ap,)


@dataclass
class DualState:
    """Multipliers for the rate floors, energy floors and power caps."""

    lam: np.ndarray
    mu: np.ndarray
    d: np.ndarray
    step_mu: float
    step_d: float

    @classmethod
    def zeros(cls, n_iu, n_ehu, n_ap, step_mu=1e-2, step_d=1e-2):
        return cls(np.zeros(n_iu), np.zeros(n_ehu), np.zeros(n_ap), step_mu, step_d)


@dataclass
class SolverOptions:
    max_iter: int = 200
    tol: float = 1e-6               # relative change of the bias vector
    step_scale: float = 1e-2        # base subgradient step, scaled per instance
    subgrad_iters: int = 60         # dual-ascent phase cap before refinement
    polish: bool = True             # finish with exact inner solves
    random_duals: bool = False      # randomized positive initial duals
    dual_seed: int = 0
    collect_trace: bool = True


@dataclass
class SolverReport:
    allocation: Allocation | None
    objective: float
    sum_rate: float
    total_energy: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)   # (best objective, |b - b_hat|)
    status: str = "ok"                          # ok | infeasible | max_iter
    duals: DualState | None = None
    infeasible_reason: str = ""


def linearize(precoder: PrecoderSet, h_ehu: np.ndarray, b_hat: np.ndarray,
              qos: QosSpec, params: PhysParams) -> LinearizedModel:
    """Freeze the energy nonlinearities at the expansion bias ``b_hat``."""
    h_ehu = np.asarray(h_ehu, dtype=float).reshape(-1, precoder.n_ap)
    b_hat = np.asarray(b_hat, dtype=float)
    bias_map = linearized_map(precoder, b_hat, params)
    i_dc = params.conv_factor * params.led_power * (h_ehu @ b_hat)
    logs = np.log1p(i_dc / params.dark_current)
    rows = (params.fill_factor * params.conv_factor * params.led_power
            * params.thermal_voltage) * logs[:, None] * h_ehu
    const = params.bias_max * float(rows.sum())
    user_w = rows @ bias_map
    return LinearizedModel(
        voltage_logs=logs,
        energy_rows=rows,
        energy_const=const,
        energy_weights=user_w.sum(axis=0) if user_w.size else np.zeros(precoder.n_iu),
        user_weights=user_w,
        energy_margins=params.bias_max * rows.sum(axis=1) - qos.energy_thresholds[:h_ehu.shape[0]],
        bias_map=bias_map,
        b_hat=b_hat.copy(),
    )


def _stationarity_denoms(duals: DualState, model: LinearizedModel,
                         precoder: PrecoderSet, qos: QosSpec) -> np.ndarray:
    return ((1.0 - qos.alpha) / qos.omega * model.energy_weights
            + model.user_weights.T @ duals.mu
            + precoder.squared.T @ duals.d
            - duals.lam)


def kkt_power(duals: DualState, model: LinearizedModel, precoder: PrecoderSet,
              qos: QosSpec, params: PhysParams) -> np.ndarray:
    """Closed-form stationary powers of the inner problem, floored at the
    per-user rate minimum so inner iterates stay rate-feasible."""
    s = _stationarity_denoms(duals, model, precoder, qos)
    if np.any(s <= 0.0):
        raise UnboundedPowerError("dual state yields unbounded power")
    k_rate = qos.alpha * params.rate_prefactor / _LN2
    powers = k_rate / s - 1.0 / params.snr_coeff
    return np.maximum(powers, min_powers(qos, params))


def update_duals(state: DualState, powers: np.ndarray, model: LinearizedModel,
                 precoder: PrecoderSet, qos: QosSpec, params: PhysParams,
                 iteration: int) -> DualState:
    """One projected subgradient step on the cap/energy multipliers with
    diminishing steps, then the rate multipliers set from the stationarity
    equality at the rate floor."""
    n = max(int(iteration), 1)
    mu = state.mu + state.step_mu / math.sqrt(n) * (
        model.user_weights @ powers - model.energy_margins)
    mu = np.maximum(mu, 0.0)
    d = state.d + state.step_d / math.sqrt(n) * (
        precoder.squared @ powers - params.p_max)
    d = np.maximum(d, 0.0)

    k_rate = qos.alpha * params.rate_prefactor / _LN2
    p_min = min_powers(qos, params)
    lam = ((1.0 - qos.alpha) / qos.omega * model.energy_weights
           + model.user_weights.T @ mu
           + precoder.squared.T @ d
           - k_rate / (p_min + 1.0 / params.snr_coeff))
    lam = np.maximum(lam, 0.0)
    return DualState(lam=lam, mu=mu, d=d, step_mu=state.step_mu, step_d=state.step_d)


def feasibility_precheck(channel, precoder: PrecoderSet, qos: QosSpec,
                         params: PhysParams):
    """Certify the instance before iterating.

    Rate side: the minimum powers must fit under every per-AP cap.
    Energy side: the harvested energy at the corresponding (highest
    admissible) bias must meet every threshold.
    """
    p_min = min_powers(qos, params)
    load = precoder.squared @ p_min
    if load.size and np.max(load) > params.p_max * (1.0 + 1e-9):
        return False, "rate thresholds exceed the per-AP power caps"
    b_hi = params.bias_max - np.sqrt(load) / params.led_power
    h_ehu = channel.ehu_gains
    if h_ehu.shape[0]:
        energies = harvested_energies(b_hi, h_ehu, params)
        if np.any(energies < qos.energy_thresholds * (1.0 - 1e-9)):
            return False, "energy thresholds unreachable at maximum bias"
    return True, ""


def _project_candidate(powers, channel, precoder, qos, params, p_min):
    """Pull an iterate onto the truly feasible set along its own ray.

    Scales down to respect the per-AP caps, then, if needed, shrinks
    toward the minimum-power corner until every harvested-energy floor
    holds.  Returns None when no feasible point exists on the ray.
    """
    powers = np.maximum(np.asarray(powers, dtype=float), p_min)
    gbar = precoder.squared
    for _ in range(4):
        load = gbar @ powers
        worst = float(np.max(load)) / params.p_max if load.size else 0.0
        if worst <= 1.0 + 1e-12:
            break
        powers = np.maximum(p_min, powers / worst)
    load = gbar @ powers
    if load.size and np.max(load) > params.p_max * (1.0 + 1e-9):
        return None

    h_ehu = channel.ehu_gains

    def energy_ok(p):
        bias = params.bias_max - np.sqrt(gbar @ p) / params.led_power
        if h_ehu.shape[0] == 0:
            return True
        energies = harvested_energies(bias, h_ehu, params)
        return bool(np.all(energies >= qos.energy_thresholds * (1.0 - 1e-9)))

    if not energy_ok(powers):
        if not energy_ok(p_min):
            return None
        t_lo, t_hi = 0.0, 1.0
        for _ in range(60):
            t = 0.5 * (t_lo + t_hi)
            if energy_ok(np.maximum(p_min, t * powers)):
                t_lo = t
            else:
                t_hi = t
        powers = np.maximum(p_min, t_lo * powers)
    bias = bias_from_powers(powers, precoder, params, check=False)
    return Allocation(bias=bias, powers=powers)


def _capacity_dual_scale(precoder: PrecoderSet, qos: QosSpec,
                         params: PhysParams, p_min: np.ndarray) -> float:
    """Order-of-magnitude estimate of the cap multipliers at the optimum,
    used to start and to scale the dual ascent at physical magnitudes."""
    gbar = precoder.squared
    n_iu = max(precoder.n_iu, 1)
    col_max = np.maximum(gbar.max(axis=0), 1e-300)
    p_ref = np.maximum(params.p_max / (n_iu * col_max), p_min)
    k_rate = max(qos.alpha, 1e-3) * params.rate_prefactor / _LN2
    s_ref = k_rate / (p_ref + 1.0 / params.snr_coeff)
    col_sum = np.maximum(gbar.sum(axis=0), 1e-300)
    return float(np.mean(s_ref / col_sum))


def _inner_exact(model: LinearizedModel, precoder: PrecoderSet, qos: QosSpec,
                 params: PhysParams, p_min: np.ndarray):
    """Solve the inner concave problem to machine accuracy.

    Primal-from-dual active-set method: the stationarity closed form maps
    active-row multipliers to powers, and a damped Newton iteration drives
    the active residuals to zero.  Rows with negative multipliers leave
    the set, violated rows enter, mirroring the dual ascent but solved
    exactly.  Returns None if the method stalls (caller keeps the best
    subgradient iterate instead).
    """
    alpha = qos.alpha
    if alpha <= 0.0 or precoder.n_iu == 0:
        return None
    k_rate = alpha * params.rate_prefactor / _LN2
    gamma = params.snr_coeff
    base = (1.0 - alpha) / qos.omega * model.energy_weights
    rows = np.vstack([model.user_weights, precoder.squared])
    rhs = np.concatenate([model.energy_margins,
                          np.full(precoder.n_ap, params.p_max)])
    if np.any(rows @ p_min > rhs * (1.0 + 1e-9) + 1e-300):
        return None
    rhs_scale = np.maximum(np.abs(rhs), 1e-12 * params.p_max)

    col_max = np.maximum(precoder.squared.max(axis=0), 1e-300)
    p_cap = 2.0 * params.p_max / col_max
    s_at_cap = k_rate / (p_cap + 1.0 / gamma)
    cap_slope = -k_rate / s_at_cap ** 2

    def powers_slopes(s):
        # hyperbola for s above the cap knee, linear C1 extension below so
        # the Jacobian never vanishes while iterates are far out of range
        in_ext = s <= s_at_cap
        s_safe = np.maximum(s, s_at_cap)
        p_unc = np.where(in_ext, p_cap + cap_slope * (s - s_at_cap),
                         k_rate / s_safe - 1.0 / gamma)
        slope = np.where(in_ext, cap_slope, -k_rate / s_safe ** 2)
        floored = p_unc <= p_min
        return np.where(floored, p_min, p_unc), np.where(floored, 0.0, slope)

    def newton(active, theta):
        sub = rows[active]
        target = rhs[active]
        scale = rhs_scale[active]
        p = None
        for _ in range(100):
            s = base + sub.T @ theta
            p, slope = powers_slopes(s)
            resid = sub @ p - target
            err = np.max(np.abs(resid) / scale)
            if err < 1e-12:
                return theta, p, True
            jac = (sub * slope[None, :]) @ sub.T
            diag_mag = float(np.max(np.abs(np.diag(jac))))
            if diag_mag <= 0.0 or not np.isfinite(diag_mag):
                return theta, p, False
            reg = 1e-13 * diag_mag
            try:
                delta = np.linalg.solve(jac - reg * np.eye(len(active)), -resid)
            except np.linalg.LinAlgError:
                delta = np.linalg.lstsq(jac, -resid, rcond=None)[0]
            if not np.all(np.isfinite(delta)):
                return theta, p, False
            step = 1.0
            improved = False
            for _ in range(60):
                cand = theta + step * delta
                p_new, _ = powers_slopes(base + sub.T @ cand)
                err_new = np.max(np.abs(sub @ p_new - target) / scale)
                if err_new < err * (1.0 - 1e-4 * step) or err_new < 1e-12:
                    theta = cand
                    improved = True
                    break
                step *= 0.5
            if not improved:
                p, _ = powers_slopes(base + sub.T @ theta)
                return theta, p, np.max(np.abs(sub @ p - target) / scale) < 1e-9
        p, _ = powers_slopes(base + sub.T @ theta)
        return theta, p, np.max(np.abs(sub @ p - target) / scale) < 1e-9

    active: list[int] = []
    theta = np.zeros(0)
    powers, _ = powers_slopes(base)
    for _ in range(80):
        if active:
            theta, powers, ok = newton(active, theta)
            if not ok:
                return None
            drop_tol = 1e-12 * max(1.0, float(np.max(np.abs(theta))))
            most_negative = int(np.argmin(theta))
            if theta[most_negative] < -drop_tol:
                active.pop(most_negative)
                theta = np.delete(theta, most_negative)
                continue
        violation = (rows @ powers - rhs) / rhs_scale
        worst = int(np.argmax(violation)) if violation.size else -1
        if worst < 0 or violation[worst] <= 1e-10:
            s = base + (rows[active].T @ theta if active else 0.0)
            if np.any((s <= s_at_cap) & (powers > p_min)):
                return None  # stationarity not reached on the hyperbola branch
            return powers
        if worst in active:
            return None
        active.append(worst)
        theta = np.append(theta, 0.0)
    return None


def _report_from(alloc, qos, channel, precoder, params, iterations, converged,
                 trace, status, duals=None):
    rate = sum_rate(alloc.powers, params) if alloc.powers.size else 0.0
    energy = total_energy(alloc.bias, channel.ehu_gains, params)
    return SolverReport(
        allocation=alloc,
        objective=qos.alpha * rate + (1.0 - qos.alpha) / qos.omega * energy,
        sum_rate=rate,
        total_energy=energy,
        iterations=iterations,
        converged=converged,
        trace=trace,
        status=status,
        duals=duals,
    )


def _infeasible_report(reason: str) -> SolverReport:
    return SolverReport(allocation=None, objective=float("-inf"), sum_rate=0.0,
                        total_energy=0.0, iterations=0, converged=False,
                        trace=[], status="infeasible", infeasible_reason=reason)


def _all_ehu_report(channel, precoder, qos, params) -> SolverReport:
    # with no information users the coupling pins every AP at maximum bias
    alloc = Allocation(bias=np.full(precoder.n_ap, params.bias_max),
                       powers=np.zeros(0))
    return _report_from(alloc, qos, channel, precoder, params,
                        iterations=0, converged=True, trace=[], status="ok")


def solve_weighted(channel, precoder: PrecoderSet, qos: QosSpec,
                   params: PhysParams, opts: SolverOptions | None = None) -> SolverReport:
    """Maximize the alpha-weighted sum of rate and scaled harvested energy.

    Runs the convexify/solve/refresh loop: closed-form powers from the
    current duals, exact bias from the coupling, relinearization at the
    new bias, subgradient dual update, until the bias settles.  A final
    exact-inner-solve refinement drives the fixed point to the requested
    tolerance.  Returns the best truly feasible iterate.
    """
    opts = opts or SolverOptions()
    if precoder.n_iu == 0:
        return _all_ehu_report(channel, precoder, qos, params)
    if qos.alpha == 0.0:
        return solve_max_energy(channel, precoder, qos, params, opts)
    ok, why = feasibility_precheck(channel, precoder, qos, params)
    if not ok:
        return _infeasible_report(why)

    p_min = min_powers(qos, params)
    h_ehu = channel.ehu_gains
    mid = params.bias_mid
    b_hat = np.full(precoder.n_ap, mid)
    model = linearize(precoder, h_ehu, b_hat, qos, params)

    dual_scale = _capacity_dual_scale(precoder, qos, params, p_min)
    step_d = opts.step_scale * dual_scale / params.p_max
    if model.user_weights.size:
        # a binding energy multiplier has the scale of the cap multipliers
        # translated through the relative row magnitudes
        mu_scale = (dual_scale * float(np.mean(precoder.squared.sum(axis=0)))
                    / max(float(np.mean(np.abs(model.user_weights))), 1e-300))
        step_mu = opts.step_scale * mu_scale / max(
            float(np.mean(np.abs(model.energy_margins))), 1e-300)
    else:
        step_mu = 0.0
    duals = DualState.zeros(precoder.n_iu, h_ehu.shape[0], precoder.n_ap,
                            step_mu=step_mu, step_d=step_d)
    if opts.random_duals:
        rng = np.random.default_rng(opts.dual_seed)
        duals.d = rng.uniform(0.0, 2.0 * dual_scale, size=precoder.n_ap)
    else:
        # deterministic warm start keeps the first iterates at physical scale
        duals.d = np.full(precoder.n_ap, dual_scale)

    best_alloc = None
    best_obj = float("-inf")
    trace = []
    iterations = 0
    converged = False

    subgrad_cap = min(opts.subgrad_iters, opts.max_iter)
    for n in range(1, subgrad_cap + 1):
        iterations = n
        powers = None
        for _ in range(60):
            try:
                powers = kkt_power(duals, model, precoder, qos, params)
                break
            except UnboundedPowerError:
                bumped = np.where(duals.d > 0, duals.d * 2.0, dual_scale)
                duals = DualState(duals.lam, duals.mu, bumped,
                                  duals.step_mu, duals.step_d)
        if powers is None:
            break
        cand = _project_candidate(powers, channel, precoder, qos, params, p_min)
        if cand is not None:
            obj = weighted_objective(cand, qos, channel, precoder, params)
            if obj > best_obj:
                best_obj, best_alloc = obj, cand
        bias = bias_from_powers(powers, precoder, params, check=False)
        bias = np.clip(bias, mid, params.bias_max * (1.0 - 1e-12))
        delta = float(np.linalg.norm(bias - b_hat))
        rel = delta / max(float(np.linalg.norm(b_hat)), 1e-300)
        if opts.collect_trace:
            trace.append((best_obj, delta))
        model = linearize(precoder, h_ehu, bias, qos, params)
        duals = update_duals(duals, powers, model, precoder, qos, params, n)
        b_hat = bias
        if rel < opts.tol:
            converged = True
            break
        if opts.polish and n >= 5 and rel < 1e-2:
            break

    if opts.polish:
        for _ in range(30):
            if iterations >= opts.max_iter:
                break
            powers = _inner_exact(model, precoder, qos, params, p_min)
            if powers is None:
                break
            iterations += 1
            cand = _project_candidate(powers, channel, precoder, qos, params, p_min)
            if cand is not None:
                obj = weighted_objective(cand, qos, channel, precoder, params)
                if obj > best_obj:
                    best_obj, best_alloc = obj, cand
            bias = bias_from_powers(powers, precoder, params, check=False)
            bias = np.clip(bias, mid, params.bias_max * (1.0 - 1e-12))
            delta = float(np.linalg.norm(bias - b_hat))
            rel = delta / max(float(np.linalg.norm(b_hat)), 1e-300)
            if opts.collect_trace:
                trace.append((best_obj, delta))
            model = linearize(precoder, h_ehu, bias, qos, params)
            b_hat = bias
            if rel < opts.tol:
                converged = True
                break

    if best_alloc is None:
        return _infeasible_report("no feasible iterate found")
    status = "ok" if converged else "max_iter"
    return _report_from(best_alloc, qos, channel, precoder, params,
                        iterations, converged, trace, status, duals)


def solve_max_energy(channel, precoder: PrecoderSet, qos: QosSpec,
                     params: PhysParams, opts: SolverOptions | None = None) -> SolverReport:
    """Maximize the total harvested energy under the same constraints.

    With the energy linearized at the expansion bias the inner problem is
    a plain LP, so each outer iteration is one simplex solve followed by
    the exact bias map and a relinearization.
    """
    opts = opts or SolverOptions()
    if precoder.n_iu == 0:
        return _all_ehu_report(channel, precoder, qos, params)
    ok, why = feasibility_precheck(channel, precoder, qos, params)
    if not ok:
        return _infeasible_report(why)

    p_min = min_powers(qos, params)
    h_ehu = channel.ehu_gains
    mid = params.bias_mid
    b_hat = np.full(precoder.n_ap, mid)
    best_alloc = None
    best_obj = float("-inf")
    trace = []
    iterations = 0
    converged = False

    for n in range(1, opts.max_iter + 1):
        iterations = n
        model = linearize(precoder, h_ehu, b_hat, qos, params)
        if h_ehu.shape[0] == 0 or not np.any(model.energy_weights > 0):
            # no energy gradient: tie-break at the minimum-power corner
            powers = p_min.copy()
        else:
            lp = LpProblem(
                c=-model.energy_weights,
                A=np.vstack([model.user_weights, precoder.squared]),
                b=np.concatenate([model.energy_margins,
                                  np.full(precoder.n_ap, params.p_max)]),
                lo=p_min,
                hi=np.full(precoder.n_iu, np.inf),
            )
            sol = solve_lp(lp)
            if sol.status == "optimal":
                powers = sol.x
            else:
                # a coarse expansion point can make the surrogate infeasible
                # even though the precheck certified the instance; fall back
                # to the certified minimum-power corner and relinearize there
                powers = p_min.copy()
        cand = _project_candidate(powers, channel, precoder, qos, params, p_min)
        if cand is not None:
            obj = weighted_objective(cand, qos, channel, precoder, params)
            if obj > best_obj:
                best_obj, best_alloc = obj, cand
        bias = bias_from_powers(powers, precoder, params, check=False)
        bias = np.clip(bias, mid, params.bias_max * (1.0 - 1e-12))
        delta = float(np.linalg.norm(bias - b_hat))
        rel = delta / max(float(np.linalg.norm(b_hat)), 1e-300)
        if opts.collect_trace:
            trace.append((best_obj, delta))
        b_hat = bias
        if rel < opts.tol:
            converged = True
            break

    if best_alloc is None:
        return _infeasible_report("no feasible iterate found")
    status = "ok" if converged else "max_iter"
    return _report_from(best_alloc, qos, channel, precoder, params,
                        iterations, converged, trace, status)
