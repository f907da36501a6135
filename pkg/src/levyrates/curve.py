"""Bond prices, rates, and risk diagnostics by rho-weighted quadrature.

Everything here evaluates ratios of integrals of the form

    int_L^inf rho_s M(t, s, xi) ds,

truncated at the horizon S_max where the initial curve has decayed to
tail_epsilon of its starting value. The integrand is a product of an
exponentially decaying density and an exponential tilt in phi_s * xi, so
all sums run in log space with a max-exponent shift; the realized driver
value never overflows a price.

A KernelEvaluator owns the panelization for one (model, valuation time)
pair. Panels only ever split, so refinement is monotone and evaluations
are deterministic for a fixed call sequence; the critical-level solver
relies on that by freezing the panelization while it brackets.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, NumericalError, QuadratureError
from .levy import LevyFamily
from .martingales import ModelState, PhiFunction
from .quadrature import gauss_legendre_nodes
from .termstructure import TermStructure

__all__ = [
    "QuadratureSettings",
    "RateModel",
    "KernelEvaluator",
    "kernel_integral",
    "bond_price",
    "short_rate",
    "forward_rate",
    "phi_average",
    "bond_volatility",
    "risk_aversion",
    "risk_premium",
]


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances of the quadrature core.

    rel_tol is the per-integral relative error target; tail_epsilon sets
    the truncation horizon (neglected rho-mass relative to P0(0));
    max_subdivisions caps the number of panels per evaluator.
    """

    rel_tol: float = 1e-10
    tail_epsilon: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.tail_epsilon > 0.0 and self.max_subdivisions > 0):
            raise DomainError("quadrature settings must all be positive")


def _phi_tail_values(phi: PhiFunction, horizon: float) -> np.ndarray:
    """Representative phi values over [horizon, inf) for the tail estimate.

    For the decaying classes the tail range of phi runs monotonically from
    phi(horizon) down to 0, so geometric subsamples of phi(horizon) cover
    it; a constant phi contributes the single value it takes.
    """
    edge = float(phi(horizon))
    if phi.monotonicity == "constant":
        return np.array([edge])
    sup = phi.tail_sup_abs(horizon)
    base = math.copysign(max(abs(edge), sup), edge if edge != 0.0 else 1.0)
    return np.concatenate([base * np.power(0.5, np.arange(0, 44)), [0.0]])


@dataclass(frozen=True)
class RateModel:
    """A rational term-structure model: initial curve, driver, tilt.

    The triple (rho, family, phi) determines every price in the model.
    Construction validates that phi stays inside the family's exponent
    domain across [0, S_max] and that the curve decays.
    """

    ts: TermStructure
    fam: LevyFamily
    phi: PhiFunction
    quad: QuadratureSettings = field(default_factory=QuadratureSettings)
    _evaluators: OrderedDict = field(
        default_factory=OrderedDict, repr=False, compare=False, hash=False
    )

    def __post_init__(self):
        S = self.s_max  # raises DomainError for curves that never decay
        lo, hi = self.phi.range_bounds(S)
        self.fam.require_admissible(lo)
        self.fam.require_admissible(hi)

    @property
    def s_max(self) -> float:
        return self.ts.truncation_horizon(self.quad.tail_epsilon)

    def evaluator(self, t: float) -> "KernelEvaluator":
        """Panelization cache, keyed by valuation time (small LRU)."""
        key = float(t)
        ev = self._evaluators.get(key)
        if ev is None:
            ev = KernelEvaluator(self, key)
            self._evaluators[key] = ev
            if len(self._evaluators) > 32:
                self._evaluators.popitem(last=False)
        else:
            self._evaluators.move_to_end(key)
        return ev


class KernelEvaluator:
    """Adaptive panelization of s -> rho_s M(t, s, xi) over [t, S_max].

    Node data (log rho, phi, psi(phi)) is cached per panel, so changing
    xi costs one fused multiply-add plus exponentials per node. Panels
    split monotonically; integrals over [lower, S_max] require `lower` to
    be registered as a breakpoint first.
    """

    def __init__(self, model: RateModel, t: float):
        if t < 0.0:
            raise DomainError(f"valuation time must be nonnegative, got {t}")
        self.model = model
        self.t = float(t)
        self.S = model.s_max
        if self.t >= self.S:
            raise DomainError(
                f"valuation time {t} is beyond the truncation horizon {self.S:.1f}; "
                "the initial curve carries no mass there"
            )
        x16, w16 = gauss_legendre_nodes(16)
        x8, w8 = gauss_legendre_nodes(8)
        self._nodes = np.concatenate([x16, x8])
        self._w16 = w16
        self._w8 = w8

        # tail estimate ingredients: sup over s >= S of log M(t, s, xi)
        tail_phi = _phi_tail_values(model.phi, self.S)
        model.fam.require_admissible(tail_phi[np.abs(tail_phi) > 0])
        self._tail_phi = tail_phi
        self._tail_psi = np.asarray(model.fam._exponent_impl(tail_phi), dtype=float)
        self._log_tail_mass = math.log(float(model.ts.discount_factor(self.S)))

        # dyadically widening panels from t capture the density's decay
        # scale no matter where it sits between t and the horizon
        bks: List[float] = [self.t]
        width = 0.25
        while bks[-1] + width < self.S:
            bks.append(bks[-1] + width)
            width *= 2.0
        bks.append(self.S)
        self._los: List[float] = []
        self._his: List[float] = []
        self._node_s: List[np.ndarray] = []
        self._node_base: List[np.ndarray] = []  # log rho - t psi(phi)
        self._node_phi: List[np.ndarray] = []
        for lo, hi in zip(bks[:-1], bks[1:]):
            self._append_panel(lo, hi)

    # -- panel bookkeeping -------------------------------------------------

    def _build_nodes(self, lo: float, hi: float):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        s = mid + half * self._nodes
        phi_vals = np.asarray(self.model.phi(s), dtype=float)
        self.model.fam.require_admissible(phi_vals)
        psi_vals = np.asarray(self.model.fam._exponent_impl(phi_vals), dtype=float)
        base = np.asarray(self.model.ts.log_density(s), dtype=float) - self.t * psi_vals
        return s, base, phi_vals

    def _append_panel(self, lo: float, hi: float):
        s, base, phi_vals = self._build_nodes(lo, hi)
        self._los.append(lo)
        self._his.append(hi)
        self._node_s.append(s)
        self._node_base.append(base)
        self._node_phi.append(phi_vals)

    def _split(self, k: int):
        lo, hi = self._los[k], self._his[k]
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise QuadratureError(
                f"panel [{lo}, {hi}] at floating-point resolution", panels=len(self._los)
            )
        s, base, phi_vals = self._build_nodes(lo, mid)
        self._los[k], self._his[k] = lo, mid
        self._node_s[k], self._node_base[k], self._node_phi[k] = s, base, phi_vals
        s2, base2, phi2 = self._build_nodes(mid, hi)
        self._los.insert(k + 1, mid)
        self._his.insert(k + 1, hi)
        self._node_s.insert(k + 1, s2)
        self._node_base.insert(k + 1, base2)
        self._node_phi.insert(k + 1, phi2)

    def ensure_breakpoint(self, x: float) -> None:
        """Split so that x is a panel edge (needed before integrating from x)."""
        x = float(x)
        if x <= self.t or x >= self.S:
            return
        k = int(np.searchsorted(np.asarray(self._los), x, side="right")) - 1
        if self._los[k] == x:
            return
        lo, hi = self._los[k], self._his[k]
        s, base, phi_vals = self._build_nodes(lo, x)
        self._los[k], self._his[k] = lo, x
        self._node_s[k], self._node_base[k], self._node_phi[k] = s, base, phi_vals
        s2, base2, phi2 = self._build_nodes(x, hi)
        self._los.insert(k + 1, x)
        self._his.insert(k + 1, hi)
        self._node_s.insert(k + 1, s2)
        self._node_base.insert(k + 1, base2)
        self._node_phi.insert(k + 1, phi2)

    def _first_panel(self, lower: float) -> int:
        if lower <= self.t:
            return 0
        if lower >= self.S:
            return len(self._los)
        self.ensure_breakpoint(lower)
        return int(np.searchsorted(np.asarray(self._los), lower, side="left"))

    # -- tail --------------------------------------------------------------

    def log_tail_bound(self, xi: float) -> float:
        """log of (neglected mass beyond S_max) x (estimated sup of M there)."""
        g = self._tail_phi * xi - self.t * self._tail_psi
        return self._log_tail_mass + float(np.max(g))

    # -- scalar evaluation and refinement -----------------------------------

    def _panel_sums(self, k: int, xi: float, shift: float, weighted: bool):
        half = 0.5 * (self._his[k] - self._los[k])
        e = self._node_base[k] + self._node_phi[k] * xi - shift
        vals = np.exp(e)
        if weighted:
            vals = vals * self._node_phi[k]
        hi_sum = half * float(vals[:16] @ self._w16)
        lo_sum = half * float(vals[16:] @ self._w8)
        return hi_sum, abs(hi_sum - lo_sum)

    def _global_shift(self, xi: float) -> float:
        m = max(float(np.max(base + ph * xi)) for base, ph in zip(self._node_base, self._node_phi))
        return m

    def refine(self, xi: float, lower: Optional[float] = None, weighted: bool = False) -> None:
        """Split panels on [lower, S_max] until the integral for this xi
        meets rel_tol. Safe to call repeatedly; panels never merge.

        rel_tol governs the quadrature error on the truncated interval;
        the neglected tail beyond S_max is bounded separately (see
        log_tail_bound) and cannot be reduced by splitting.
        """
        lower = self.t if lower is None else float(lower)
        rel_tol = self.model.quad.rel_tol
        shift = self._global_shift(xi)
        start = self._first_panel(lower)
        sums = {}
        for k in range(start, len(self._los)):
            sums[k] = self._panel_sums(k, xi, shift, weighted)
        if not sums:
            return
        for _ in range(self.model.quad.max_subdivisions):
            total = sum(v for v, _ in sums.values())
            err = sum(e for _, e in sums.values())
            if err <= rel_tol * abs(total):
                return
            if len(self._los) >= self.model.quad.max_subdivisions:
                raise QuadratureError(
                    f"kernel quadrature stalled at {len(self._los)} panels "
                    f"(t={self.t}, lower={lower}, xi={xi}): err={err:.3e}, total={total:.3e}",
                    panels=len(self._los),
                    rel_err=err / max(abs(total), 1e-300),
                )
            worst = max(sums, key=lambda k: sums[k][1])
            if sums[worst][1] <= 0.0:
                return  # estimates exhausted at floating-point resolution
            self._split(worst)
            shifted = {}
            for k, v in sums.items():
                shifted[k if k <= worst else k + 1] = v
            sums = shifted
            sums[worst] = self._panel_sums(worst, xi, shift, weighted)
            sums[worst + 1] = self._panel_sums(worst + 1, xi, shift, weighted)
        raise QuadratureError(
            f"kernel quadrature did not converge within the subdivision budget "
            f"(t={self.t}, lower={lower}, xi={xi})",
            panels=len(self._los),
        )

    def log_integral(self, xi: float, lower: Optional[float] = None) -> float:
        """log of int_lower^S rho_s M(t,s,xi) ds on the current panels."""
        lower = self.t if lower is None else float(lower)
        start = self._first_panel(lower)
        if start >= len(self._los):
            return -math.inf
        shift = self._global_shift(xi)
        total = 0.0
        for k in range(start, len(self._los)):
            v, _ = self._panel_sums(k, xi, shift, weighted=False)
            total += v
        if total <= 0.0:
            return -math.inf
        return math.log(total) + shift

    def weighted_ratio(self, xi: float, lower: Optional[float] = None) -> float:
        """Phi average: int phi rho M / int rho M over [lower, S_max]."""
        lower = self.t if lower is None else float(lower)
        start = self._first_panel(lower)
        if start >= len(self._los):
            raise DomainError(f"no mass beyond lower={lower}")
        shift = self._global_shift(xi)
        num = 0.0
        den = 0.0
        for k in range(start, len(self._los)):
            v, _ = self._panel_sums(k, xi, shift, weighted=False)
            w, _ = self._panel_sums(k, xi, shift, weighted=True)
            den += v
            num += w
        if den <= 0.0:
            raise NumericalError(f"kernel integral vanished at xi={xi}, lower={lower}")
        return num / den

    # -- vectorized evaluation over many driver values ----------------------

    def _flat_arrays(self, lowers: Sequence[float]):
        for L in lowers:
            self._first_panel(L)  # registers breakpoints
        halves = np.asarray(self._his) - np.asarray(self._los)
        w_full = np.concatenate(
            [0.5 * h * self._w16 for h in halves]
        )
        base = np.concatenate([b[:16] for b in self._node_base])
        phiv = np.concatenate([p[:16] for p in self._node_phi])
        offsets = {}
        for L in lowers:
            start = self._first_panel(L)
            offsets[float(L)] = 16 * start
        return w_full, base, phiv, offsets

    def prepare(self, xi_probes, lowers: Sequence[float]) -> None:
        """Refine panels for a batch: every probe xi at every lower bound.

        Probes should cover the extremes and the bulk of the draws (min,
        max, a central value); the exponent is linear in xi, so panels
        that resolve the extreme tilts resolve everything between.
        """
        for L in lowers:
            for p in np.atleast_1d(np.asarray(xi_probes, dtype=float)):
                self.refine(float(p), float(L))

    def log_integral_batch(
        self, xi: np.ndarray, lowers: Sequence[float], chunk: int = 20000
    ) -> Dict[float, np.ndarray]:
        """log kernel integrals for an array of xi at several lower bounds.

        Panels are used as-is: call prepare() with representative probe
        xi values first; the 16-point rule on panels refined to rel_tol
        leaves bias far below Monte Carlo resolution.
        """
        xi = np.asarray(xi, dtype=float)
        w_full, base, phiv, offsets = self._flat_arrays(lowers)
        out = {L: np.empty(xi.shape, dtype=float) for L in offsets}
        for i0 in range(0, xi.size, chunk):
            x = xi[i0 : i0 + chunk, None]
            E = x * phiv[None, :] + base[None, :]
            shift = E.max(axis=1)
            M = np.exp(E - shift[:, None])
            for L, off in offsets.items():
                vals = M[:, off:] @ w_full[off:]
                with np.errstate(divide="ignore"):
                    out[L][i0 : i0 + chunk] = np.log(vals) + shift
        return out

    def phi_average_batch(
        self, xi: np.ndarray, lowers: Sequence[float], chunk: int = 20000
    ) -> Dict[float, np.ndarray]:
        """Phi_tT for an array of xi at several lower bounds T."""
        xi = np.asarray(xi, dtype=float)
        w_full, base, phiv, offsets = self._flat_arrays(lowers)
        wphi = w_full * phiv
        out = {L: np.empty(xi.shape, dtype=float) for L in offsets}
        for i0 in range(0, xi.size, chunk):
            x = xi[i0 : i0 + chunk, None]
            E = x * phiv[None, :] + base[None, :]
            shift = E.max(axis=1)
            M = np.exp(E - shift[:, None])
            for L, off in offsets.items():
                den = M[:, off:] @ w_full[off:]
                num = M[:, off:] @ wphi[off:]
                out[L][i0 : i0 + chunk] = num / den
        return out


# -- public operations ------------------------------------------------------


def _state_for(model: RateModel, state: ModelState) -> ModelState:
    from .martingales import _check_state_support

    _check_state_support(model.fam, state)
    return state


def kernel_integral(model: RateModel, state: ModelState, lower: Optional[float] = None) -> float:
    """int_lower^inf rho_s M(t, s, xi) ds, truncated at S_max.

    With lower = t this is the pricing kernel pi_t itself (its expectation
    over driver draws recovers P0(t)); with lower = T it is the
    numerator of the bond price.
    """
    _state_for(model, state)
    lower = state.t if lower is None else float(lower)
    if lower < state.t:
        raise DomainError(f"kernel lower bound {lower} must be >= state time {state.t}")
    ev = model.evaluator(state.t)
    if lower >= ev.S:
        return 0.0
    ev.refine(state.xi, lower)
    return math.exp(ev.log_integral(state.xi, lower))


def bond_price(model: RateModel, state: ModelState, T: float) -> float:
    """P_tT = kernel(T) / kernel(t); equals 1 at T = t, decreasing in T."""
    _state_for(model, state)
    if T < state.t:
        raise DomainError(f"bond maturity {T} before valuation time {state.t}")
    if T == state.t:
        return 1.0
    ev = model.evaluator(state.t)
    if T >= ev.S:
        return 0.0
    ev.refine(state.xi, state.t)
    ev.refine(state.xi, T)
    log_num = ev.log_integral(state.xi, T)
    log_den = ev.log_integral(state.xi, state.t)
    return math.exp(log_num - log_den)


def short_rate(model: RateModel, state: ModelState) -> float:
    """r_t = rho_t M(t,t,xi) / kernel(t); strictly positive by construction."""
    from .martingales import log_martingale_value

    _state_for(model, state)
    ev = model.evaluator(state.t)
    ev.refine(state.xi, state.t)
    log_num = float(model.ts.log_density(state.t)) + float(
        log_martingale_value(model.fam, model.phi, state, state.t)
    )
    r = math.exp(log_num - ev.log_integral(state.xi, state.t))
    if not (r > 0.0) or not math.isfinite(r):
        raise NumericalError(f"short rate came out non-positive ({r}); quadrature inconsistency")
    return r


def forward_rate(model: RateModel, state: ModelState, T: float) -> float:
    """f_tT = rho_T M(t,T,xi) / kernel(T) = -d/dT log P_tT; positive."""
    from .martingales import log_martingale_value

    _state_for(model, state)
    if T < state.t:
        raise DomainError(f"forward maturity {T} before valuation time {state.t}")
    ev = model.evaluator(state.t)
    if T >= ev.S:
        raise DomainError(f"forward maturity {T} beyond truncation horizon {ev.S:.1f}")
    ev.refine(state.xi, T)
    log_num = float(model.ts.log_density(T)) + float(
        log_martingale_value(model.fam, model.phi, state, T)
    )
    f = math.exp(log_num - ev.log_integral(state.xi, T))
    if not (f > 0.0) or not math.isfinite(f):
        raise NumericalError(f"forward rate came out non-positive ({f}); quadrature inconsistency")
    return f


def phi_average(model: RateModel, state: ModelState, T: Optional[float] = None) -> float:
    """Phi_tT: the rho M-weighted average of phi over maturities >= T.

    Lies between the extremes of phi on [T, S_max]. T defaults to t,
    giving the market-price-of-risk building block Phi_tt.
    """
    _state_for(model, state)
    T = state.t if T is None else float(T)
    if T < state.t:
        raise DomainError(f"phi average maturity {T} before valuation time {state.t}")
    ev = model.evaluator(state.t)
    ev.refine(state.xi, T)
    ev.refine(state.xi, T, weighted=True)
    return ev.weighted_ratio(state.xi, T)


def bond_volatility(model: RateModel, state: ModelState, T: float) -> float:
    """Omega_tT = Phi_tT - Phi_tt; vanishes at T = t."""
    return phi_average(model, state, T) - phi_average(model, state, state.t)


def risk_aversion(model: RateModel, state: ModelState) -> float:
    """Market price of risk lambda_t = -Phi_tt (sign convention as stated)."""
    return -phi_average(model, state, state.t)


def risk_premium(model: RateModel, state: ModelState, T: float) -> float:
    """lambda_t Omega_tT = Phi_tt (Phi_tt - Phi_tT).

    The product is positive for the admissible monotone phi classes even
    though the factors individually change sign with the class.
    """
    phi_tt = phi_average(model, state, state.t)
    phi_tT = phi_average(model, state, T)
    return phi_tt * (phi_tt - phi_tT)
