"""Feasible-side EVOP as a deterministic ask-tell state machine.

A session repeatedly suggests experiments and ingests their measured values.
Each cycle consists of the reference point (measured in cycle 1, carried
forward afterwards) plus axis perturbations of the scaled reference by the
current excitation radius, one at +delta and one at -delta per axis, skipping
any that would leave the unit box. Once every suggestion is measured the
cycle advances:

1. fit affine models to the cost and each constraint column,
2. turn the constraint gradients into Lipschitz vectors (noise-inflated),
3. flag constraints that come within their back-off of zero anywhere in the
   cycle's data (nearly active),
4. fit nonnegative multipliers that best cancel the cost gradient against
   the nearly active constraint gradients,
5. move the reference to the measured point with the lowest approximate
   Lagrangian value among those whose robust constraint bounds clear the
   back-off (threshold zero when back-offs are disabled); keep the current
   reference if no point qualifies.

The chosen point's measurements seed the next cycle, so the reference is
never re-measured. With annealing enabled, the radius and the standard
deviations used internally shrink by 1/sqrt(cycle); the session exposes the
same factor so a simulated plant can attenuate its actual noise identically.

Sessions contain no randomness: identical configurations fed identical
measurement sequences produce identical suggestions and reports.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .backoff import (
    ExcitationBall,
    LipschitzVector,
    NoiseModel,
    SafetyCertificate,
    certify_ball,
    estimate_lipschitz,
    required_backoff,
    robust_multiplier,
    shrink_delta,
)
from .errors import (
    DimensionMismatchError,
    DuplicateMeasurementError,
    InfeasibleAtCenterError,
    InvalidConfigError,
    NoCycleCompletedError,
    NonFiniteError,
    NotReachedError,
    NotReadyError,
    SessionFinishedError,
    UnknownSuggestionError,
)
from .linalg import LagrangeSolution, least_squares_fit, solve_lagrange
from .space import DecisionSpace, ScaledPoint, scale_point, unscale_point

# Ties in the reference-selection score closer than this prefer the
# incumbent reference (avoids chattering between equivalent points).
TIE_TOLERANCE = 1e-12

# Halving budget when auto-shrink is enabled.
SHRINK_MAX_HALVINGS = 20

REFERENCE = "reference"


def perturb_purpose(axis: int, sign: int) -> str:
    return f"perturb{'+' if sign > 0 else '-'}{axis}"


class SessionState(str, Enum):
    AWAITING_MEASUREMENT = "awaiting_measurement"
    CYCLE_READY = "cycle_ready"
    FINISHED = "finished"


@dataclass(frozen=True)
class EvopConfig:
    """Everything a session needs up front.

    ``delta_e`` is the excitation radius in scaled units, at most 0.5 (a
    larger ball cannot fit in the unit box). ``backoff_enabled=False``
    substitutes a zero threshold for the back-off in the nearly-active and
    reference-selection checks, for ablation runs; nothing else changes.
    """

    space: DecisionSpace
    initial_reference: np.ndarray
    noise: NoiseModel
    delta_e: float
    anneal: bool = False
    backoff_enabled: bool = True
    max_cycles: int = 40
    auto_shrink: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "initial_reference", np.asarray(self.initial_reference, dtype=float)
        )


@dataclass(frozen=True)
class Suggestion:
    """One experiment the session wants run, in both coordinate systems."""

    id: str
    u_raw: np.ndarray
    u_scaled: ScaledPoint
    purpose: str

    @property
    def is_reference(self) -> bool:
        return self.purpose == REFERENCE


@dataclass(frozen=True)
class Measurement:
    """Measured values for one suggestion."""

    suggestion_id: str
    phi_hat: float
    g_hat: np.ndarray


@dataclass(frozen=True)
class CycleData:
    """The matrices a cycle accumulates: scaled points, costs, constraints."""

    U_tilde: np.ndarray
    phi: np.ndarray
    G: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class CycleReport:
    """Everything computed when a cycle advances."""

    k: int
    grad_phi: np.ndarray
    grad_g: tuple[np.ndarray, ...]
    kappa: tuple[LipschitzVector, ...]
    active_set: tuple[int, ...]
    lam: LagrangeSolution
    new_reference: ScaledPoint
    reference_changed: bool
    certificate: SafetyCertificate

    def to_dict(self) -> dict:
        cert = self.certificate
        return {
            "k": self.k,
            "grad_phi": list(self.grad_phi),
            "grad_g": [list(g) for g in self.grad_g],
            "kappa": [list(k.kappa) for k in self.kappa],
            "active_set": list(self.active_set),
            "lambda": list(self.lam.lam),
            "stationarity_norm": self.lam.stationarity_norm,
            "new_reference_scaled": list(self.new_reference.coords),
            "reference_changed": self.reference_changed,
            "certificate": {
                "center_scaled": list(cert.ball.center.coords),
                "radius": cert.ball.radius,
                "safe": cert.safe,
                "per_constraint": [
                    {
                        "kappa": list(e.kappa.kappa),
                        "backoff": e.backoff,
                        "robust_value": e.robust_value,
                        "margin": e.margin,
                    }
                    for e in cert.per_constraint
                ],
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "CycleReport":
        cert = d["certificate"]
        certificate = SafetyCertificate(
            ball=ExcitationBall(
                center=ScaledPoint(np.asarray(cert["center_scaled"], float)),
                radius=cert["radius"],
            ),
            per_constraint=tuple(
                _certificate_entry(e) for e in cert["per_constraint"]
            ),
            safe=cert["safe"],
        )
        return CycleReport(
            k=d["k"],
            grad_phi=np.asarray(d["grad_phi"], float),
            grad_g=tuple(np.asarray(g, float) for g in d["grad_g"]),
            kappa=tuple(LipschitzVector(np.asarray(k, float)) for k in d["kappa"]),
            active_set=tuple(d["active_set"]),
            lam=LagrangeSolution(
                lam=np.asarray(d["lambda"], float),
                stationarity_norm=d["stationarity_norm"],
            ),
            new_reference=ScaledPoint(np.asarray(d["new_reference_scaled"], float)),
            reference_changed=d["reference_changed"],
            certificate=certificate,
        )


def _certificate_entry(e: dict):
    from .backoff import ConstraintBackoff

    return ConstraintBackoff(
        kappa=LipschitzVector(np.asarray(e["kappa"], float)),
        backoff=e["backoff"],
        robust_value=e["robust_value"],
        margin=e["margin"],
    )


class EvopSession:
    """Single-owner ask-tell state machine for one optimization campaign."""

    def __init__(self, config: EvopConfig):
        if not (0.0 < config.delta_e <= 0.5):
            raise InvalidConfigError(f"delta_e must be in (0, 0.5], got {config.delta_e!r}")
        if config.max_cycles < 1:
            raise InvalidConfigError("max_cycles must be at least 1")
        if config.initial_reference.shape != config.space.lower.shape:
            raise InvalidConfigError("initial reference has wrong length")
        if not config.space.contains(config.initial_reference):
            raise InvalidConfigError("initial reference outside the decision space")
        self.config = config
        self._k = 1
        self._shrink = 1.0
        self._finished = False
        self._reference = scale_point(config.space, config.initial_reference)
        self._carry: tuple[float, np.ndarray, str] | None = None
        self._pending: deque[Suggestion] = deque()
        self._measured_ids: set[str] = set()
        self._exp_counter = 0
        self._rows_u: list[np.ndarray] = []
        self._rows_phi: list[float] = []
        self._rows_g: list[np.ndarray] = []
        self._row_ids: list[str] = []
        self._s = np.zeros(config.space.n_u, dtype=int)
        self._last_report: CycleReport | None = None
        self._build_queue()

    # -- schedule ----------------------------------------------------------

    @property
    def k(self) -> int:
        """Index of the cycle currently being collected (1-based)."""
        return self._k

    @property
    def delta_e(self) -> float:
        """Current excitation radius (after annealing and auto-shrink)."""
        base = self.config.delta_e * self._shrink
        return base / math.sqrt(self._k) if self.config.anneal else base

    @property
    def noise_scale(self) -> float:
        """Factor by which the session's sigmas are attenuated this cycle.

        Simulated plants should multiply their actual noise by the same
        factor when annealing, so belief and reality shrink together.
        """
        return 1.0 / math.sqrt(self._k) if self.config.anneal else 1.0

    @property
    def _sigma_now(self) -> np.ndarray:
        return self.config.noise.sigma_g * self.noise_scale

    @property
    def state(self) -> SessionState:
        if self._finished:
            return SessionState.FINISHED
        if self._pending:
            return SessionState.AWAITING_MEASUREMENT
        return SessionState.CYCLE_READY

    @property
    def reference(self) -> ScaledPoint:
        return self._reference

    @property
    def reference_raw(self) -> np.ndarray:
        return unscale_point(self.config.space, self._reference)

    @property
    def reference_measurement_id(self) -> str | None:
        """Suggestion id whose measurements currently stand for the reference."""
        if self._carry is not None:
            return self._carry[2]
        return self._row_ids[0] if self._row_ids else None

    @property
    def last_report(self) -> CycleReport | None:
        return self._last_report

    # -- suggestion queue ---------------------------------------------------

    def _next_id(self) -> str:
        self._exp_counter += 1
        return f"exp-{self._exp_counter:05d}"

    def _build_queue(self) -> None:
        space = self.config.space
        delta = self.delta_e
        ref = self._reference.coords
        self._rows_u, self._rows_phi, self._rows_g, self._row_ids = [], [], [], []
        self._pending.clear()

        if self._carry is None:
            self._pending.append(
                Suggestion(
                    id=self._next_id(),
                    u_raw=unscale_point(space, self._reference),
                    u_scaled=self._reference,
                    purpose=REFERENCE,
                )
            )
        else:
            phi, g, carry_id = self._carry
            self._rows_u.append(ref.copy())
            self._rows_phi.append(phi)
            self._rows_g.append(g.copy())
            self._row_ids.append(carry_id)

        s = np.ones(space.n_u, dtype=int)
        for i in range(space.n_u):
            plus_ok = ref[i] + delta <= 1.0
            minus_ok = ref[i] - delta >= 0.0
            s[i] = 2 if (plus_ok and minus_ok) else 1
            for sign, ok in ((1, plus_ok), (-1, minus_ok)):
                if not ok:
                    continue
                coords = ref.copy()
                coords[i] += sign * delta
                point = ScaledPoint(coords)
                self._pending.append(
                    Suggestion(
                        id=self._next_id(),
                        u_raw=unscale_point(space, point),
                        u_scaled=point,
                        purpose=perturb_purpose(i, sign),
                    )
                )
        self._s = s

    def next_suggestion(self) -> Suggestion | None:
        """Pending suggestion, or None once the cycle is fully measured.

        Idempotent: the same suggestion is returned until its measurement is
        ingested.
        """
        if self._finished:
            raise SessionFinishedError("session has finished")
        if self._pending:
            return self._pending[0]
        return None

    def ingest_measurement(self, m: Measurement) -> None:
        """Record measured values for the pending suggestion, in order."""
        if self._finished:
            raise SessionFinishedError("session has finished")
        if not self._pending:
            if m.suggestion_id in self._measured_ids:
                raise DuplicateMeasurementError(f"{m.suggestion_id} already measured")
            raise UnknownSuggestionError("no measurement outstanding; advance the cycle")
        g_hat = np.asarray(m.g_hat, dtype=float)
        if g_hat.shape != (self.config.noise.n_g,):
            raise DimensionMismatchError(
                f"expected {self.config.noise.n_g} constraint values, got {g_hat.shape}"
            )
        if not (np.isfinite(m.phi_hat) and np.all(np.isfinite(g_hat))):
            raise NonFiniteError("measurements must be finite")
        head = self._pending[0]
        if m.suggestion_id != head.id:
            if m.suggestion_id in self._measured_ids:
                raise DuplicateMeasurementError(f"{m.suggestion_id} already measured")
            raise UnknownSuggestionError(
                f"{m.suggestion_id!r} does not match pending suggestion {head.id!r}"
            )
        self._rows_u.append(head.u_scaled.coords.copy())
        self._rows_phi.append(float(m.phi_hat))
        self._rows_g.append(g_hat.copy())
        self._row_ids.append(head.id)
        self._measured_ids.add(head.id)
        self._pending.popleft()

    def cycle_data(self) -> CycleData:
        """Snapshot of the matrices accumulated so far this cycle."""
        return CycleData(
            U_tilde=np.array(self._rows_u),
            phi=np.array(self._rows_phi),
            G=np.array(self._rows_g).reshape(len(self._rows_g), self.config.noise.n_g),
            s=self._s.copy(),
        )

    # -- cycle advance ------------------------------------------------------

    def advance_cycle(self) -> CycleReport:
        """Run the per-cycle computation and move (or keep) the reference."""
        if self._finished:
            raise SessionFinishedError("session has finished")
        if self._pending:
            raise NotReadyError(f"{len(self._pending)} measurements still outstanding")

        noise = self.config.noise
        n_g = noise.n_g
        delta = self.delta_e
        sigma = self._sigma_now
        mult = robust_multiplier(noise.bound_policy)

        U = np.array(self._rows_u)
        phi = np.array(self._rows_phi)
        G = np.array(self._rows_g).reshape(len(self._rows_g), n_g)

        grad_phi = least_squares_fit(U, phi).gradient
        grad_g = tuple(least_squares_fit(U, G[:, j]).gradient for j in range(n_g))
        kappas = tuple(
            estimate_lipschitz(grad_g[j], float(sigma[j]), self._s, delta)
            for j in range(n_g)
        )
        backoffs = np.array([required_backoff(k, delta) for k in kappas])
        thresholds = backoffs if self.config.backoff_enabled else np.zeros(n_g)

        robust_G = G + mult * sigma  # row-wise robust upper bounds, per column
        active = tuple(
            j for j in range(n_g) if bool(np.any(robust_G[:, j] >= -thresholds[j]))
        )
        lam = solve_lagrange(grad_phi, list(grad_g), active)
        grad_L = grad_phi + sum(lam.lam[j] * grad_g[j] for j in range(n_g))

        scores = U @ grad_L
        row_safe = np.all(robust_G <= -thresholds, axis=1)
        chosen = 0
        changed = False
        if row_safe.any():
            best = np.min(scores[row_safe])
            tied = np.flatnonzero(row_safe & (scores <= best + TIE_TOLERANCE))
            chosen = 0 if (row_safe[0] and scores[0] <= best + TIE_TOLERANCE) else int(tied[0])
            changed = chosen != 0
        elif self.config.auto_shrink:
            self._try_shrink(robust_G[0], kappas, delta)

        new_reference = ScaledPoint(U[chosen].copy())
        certificate = certify_ball(
            ExcitationBall(center=new_reference, radius=delta),
            robust_G[chosen],
            list(kappas),
        )
        report = CycleReport(
            k=self._k,
            grad_phi=grad_phi,
            grad_g=grad_g,
            kappa=kappas,
            active_set=active,
            lam=lam,
            new_reference=new_reference,
            reference_changed=changed,
            certificate=certificate,
        )
        self._last_report = report
        self._reference = new_reference
        self._carry = (float(phi[chosen]), G[chosen].copy(), self._row_ids[chosen])
        self._k += 1
        if self._k > self.config.max_cycles:
            self._finished = True
            self._pending.clear()
        else:
            self._build_queue()
        return report

    def _try_shrink(
        self, robust_ref: np.ndarray, kappas: tuple[LipschitzVector, ...], delta: float
    ) -> None:
        # the reference itself failed its back-off check; halve the radius
        # until its robust values clear it (keeps kappas, valid on subsets)
        try:
            new_delta = min(
                shrink_delta(float(robust_ref[j]), kappas[j], delta, SHRINK_MAX_HALVINGS)
                for j in range(len(kappas))
            )
        except (InfeasibleAtCenterError, NotReachedError):
            return
        if new_delta < delta:
            self._shrink *= new_delta / delta

    def session_certificate(self) -> SafetyCertificate:
        """Certificate for the current reference's ball at the current radius.

        Uses the latest cycle's Lipschitz vectors and the reference's robust
        bounds under the current (possibly annealed) sigmas. Always computed
        with the true back-off, even when the session runs with back-offs
        disabled, so an ablation's unsafety is visible.
        """
        if self._last_report is None or self._carry is None:
            raise NoCycleCompletedError("no cycle completed yet")
        mult = robust_multiplier(self.config.noise.bound_policy)
        robust = self._carry[1] + mult * self._sigma_now
        return certify_ball(
            ExcitationBall(center=self._reference, radius=self.delta_e),
            robust,
            list(self._last_report.kappa),
        )

    # -- persistence --------------------------------------------------------

    def to_state(self) -> dict:
        """JSON-safe snapshot; feeding it to :meth:`from_state` resumes exactly."""
        return {
            "k": self._k,
            "shrink": self._shrink,
            "finished": self._finished,
            "reference": list(self._reference.coords),
            "carry": None
            if self._carry is None
            else {
                "phi": self._carry[0],
                "g": list(self._carry[1]),
                "id": self._carry[2],
            },
            "pending": [
                {
                    "id": s.id,
                    "u_raw": list(s.u_raw),
                    "u_scaled": list(s.u_scaled.coords),
                    "purpose": s.purpose,
                }
                for s in self._pending
            ],
            "measured_ids": sorted(self._measured_ids),
            "exp_counter": self._exp_counter,
            "rows": {
                "u": [list(r) for r in self._rows_u],
                "phi": list(self._rows_phi),
                "g": [list(r) for r in self._rows_g],
                "ids": list(self._row_ids),
            },
            "s": [int(x) for x in self._s],
            "last_report": None if self._last_report is None else self._last_report.to_dict(),
        }

    @classmethod
    def from_state(cls, config: EvopConfig, state: dict) -> "EvopSession":
        session = cls.__new__(cls)
        session.config = config
        session._k = state["k"]
        session._shrink = state["shrink"]
        session._finished = state["finished"]
        session._reference = ScaledPoint(np.asarray(state["reference"], float))
        carry = state["carry"]
        session._carry = (
            None
            if carry is None
            else (carry["phi"], np.asarray(carry["g"], float), carry["id"])
        )
        session._pending = deque(
            Suggestion(
                id=p["id"],
                u_raw=np.asarray(p["u_raw"], float),
                u_scaled=ScaledPoint(np.asarray(p["u_scaled"], float)),
                purpose=p["purpose"],
            )
            for p in state["pending"]
        )
        session._measured_ids = set(state["measured_ids"])
        session._exp_counter = state["exp_counter"]
        rows = state["rows"]
        session._rows_u = [np.asarray(r, float) for r in rows["u"]]
        session._rows_phi = [float(x) for x in rows["phi"]]
        session._rows_g = [np.asarray(r, float) for r in rows["g"]]
        session._row_ids = list(rows["ids"])
        session._s = np.asarray(state["s"], dtype=int)
        session._last_report = (
            None
            if state["last_report"] is None
            else CycleReport.from_dict(state["last_report"])
        )
        return session


def new_session(config: EvopConfig) -> EvopSession:
    """Validate the configuration and start a session at cycle 1."""
    return EvopSession(config)
