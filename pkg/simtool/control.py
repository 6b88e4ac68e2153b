"""Controladores en tiempo discreto.

* Ley de caída angular discretizada con Euler hacia adelante y ángulo
  nominal reducido módulo 2π.
* Modulación directa a partir del ángulo inducido.
* Control en cascada del elevador (voltaje DC → corriente de inductor).
* Esquema indirecto: lazos PI de voltaje y corriente en el marco dq.

Todas las integraciones discretas son Euler hacia adelante; la política
anti-windup es de integración condicional (integradores congelados mientras
la salida está saturada).
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, NamedTuple, Tuple

import numpy as np

from .errors import ErrorConfiguracion, exigir_finito, exigir_positivo
from .frames import ThreePhase, inverse_park, park, synth_three_phase, wrap_angle
from .plant import V_MIN, AcFilterParams, BoostParams

logger = logging.getLogger(__name__)

OMEGA_NOMINAL = 2.0 * math.pi * 50.0
V_ESTRELLA = 230.0 * math.sqrt(2.0)
J = np.array([[0.0, -1.0], [1.0, 0.0]])


# ---------------------------------------------------------------------------
# Caída angular
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DroopGains:
    """Ganancias de la ley de caída angular de un convertidor."""

    alpha: float = 2000.0
    gamma: float = 5e4
    omega_star: float = OMEGA_NOMINAL
    P_star: float = 2880.0
    theta_star_0: float = 0.0

    def __post_init__(self) -> None:
        exigir_positivo("alpha", self.alpha)
        exigir_positivo("gamma", self.gamma)
        exigir_positivo("omega_star", self.omega_star)
        exigir_finito("P_star", self.P_star)
        exigir_finito("theta_star_0", self.theta_star_0)


@dataclass(frozen=True)
class DroopState:
    """Ángulo nominal envuelto y coordenada de error ``Δθ``.

    ``saturation_count`` cuenta las muestras con ``|Δθ| ≥ π``; ``alarma``
    indica que la última muestra estuvo en esa condición.
    """

    theta_star: float
    delta_theta: float = 0.0
    saturation_count: int = 0
    alarma: bool = False

    @classmethod
    def inicial(cls, g: DroopGains) -> "DroopState":
        return cls(theta_star=wrap_angle(g.theta_star_0))


def droop_step(
    g: DroopGains, s: DroopState, P_measured: float, Ts: float
) -> Tuple[DroopState, float, float]:
    """Un paso de la ley de caída angular.

    Regresa el nuevo estado, el ángulo de modulación ``θ`` y la frecuencia
    interna del controlador ``ω = ω* + u_d``.
    """

    if not Ts > 0.0:
        raise ErrorConfiguracion(f"se requiere Ts > 0 (recibido {Ts!r})", ruta="Ts")
    u_d = -(g.gamma * s.delta_theta + P_measured - g.P_star) / (2.0 * g.alpha)
    delta_theta = s.delta_theta + Ts * u_d
    theta_star = wrap_angle(s.theta_star + Ts * g.omega_star)

    alarma = abs(delta_theta) >= math.pi
    if alarma and not s.alarma:
        logger.warning("|Δθ| = %.3f rad alcanzó π: riesgo de perder la condición de seguridad", abs(delta_theta))
    estado = DroopState(
        theta_star=theta_star,
        delta_theta=delta_theta,
        saturation_count=s.saturation_count + int(alarma),
        alarma=alarma,
    )
    return estado, wrap_angle(theta_star + delta_theta), g.omega_star + u_d


def direct_modulation(theta: float, A: float) -> ThreePhase:
    """``ū = A·(sin θ, sin(θ−2π/3), sin(θ+2π/3))``."""

    if not 0.0 < A < 1.0:
        raise ErrorConfiguracion(f"se requiere 0 < A < 1 (recibido {A!r})", ruta="A")
    return synth_three_phase(A, theta)


def ac_duty_from_modulation(u_bar):
    """Ciclo de trabajo del puente AC: ``½ + ū/2``."""

    resultado = 0.5 + 0.5 * np.clip(u_bar, -1.0, 1.0)
    return float(resultado) if np.ndim(resultado) == 0 else resultado


class FiltroPromedioMovil:
    """Promedio móvil de la potencia medida antes de la ley de caída.

    Con ``muestras <= 1`` el filtro es transparente.
    """

    def __init__(self, muestras: int) -> None:
        if muestras < 0:
            raise ErrorConfiguracion("la ventana del filtro debe ser no negativa", ruta="ventana_potencia")
        self.muestras = max(1, int(muestras))
        self._historia: Deque[float] = deque(maxlen=self.muestras)

    @classmethod
    def desde_ventana(cls, ventana: float, Ts: float) -> "FiltroPromedioMovil":
        return cls(int(round(ventana / Ts)))

    def agregar(self, valor: float) -> float:
        self._historia.append(valor)
        return math.fsum(self._historia) / len(self._historia)


# ---------------------------------------------------------------------------
# PI discretos
# ---------------------------------------------------------------------------


class PiState(NamedTuple):
    integral: float = 0.0
    anti_windup_frozen: bool = False


@dataclass(frozen=True)
class BoostControlGains:
    """Ganancias del control en cascada del elevador."""

    k_P: float = 0.3
    k_I: float = 12.0
    k_BP: float = 10.0
    k_BI: float = 200.0
    V_dc_star: float = 750.0
    d_max: float = 0.95

    def __post_init__(self) -> None:
        for nombre in ("k_P", "k_I", "k_BP", "k_BI", "V_dc_star"):
            exigir_positivo(nombre, getattr(self, nombre))
        if not 0.0 < self.d_max <= 1.0:
            raise ErrorConfiguracion(f"se requiere 0 < d_max <= 1 (recibido {self.d_max!r})", ruta="d_max")


class MedicionBoost(NamedTuple):
    V_dc: float
    I_b: float
    V_b: float


def boost_control_step(
    g: BoostControlGains,
    s: Tuple[PiState, PiState],
    meas: MedicionBoost,
    Ts: float,
    *,
    planta: BoostParams,
) -> Tuple[Tuple[PiState, PiState], float]:
    """Lazo externo de voltaje DC y lazo interno de corriente del elevador.

    ``planta`` aporta ``G_dc`` (prealimentación del lazo de voltaje) y
    ``R_b`` (prealimentación del lazo de corriente).
    """

    pi_v, pi_i = s
    V_dc, I_b, V_b = meas
    V = max(V_dc, V_MIN)

    error_v = V_dc - g.V_dc_star
    I_ref = (V / V_b) * (planta.G_dc * V - g.k_P * error_v - g.k_I * pi_v.integral)
    error_i = I_b - I_ref
    V_l = planta.R_b * I_b - g.k_BP * error_i - g.k_BI * pi_i.integral

    d_libre = 1.0 - (V_b - V_l) / V
    d = min(max(d_libre, 0.0), g.d_max)
    if d != d_libre:
        return (PiState(pi_v.integral, True), PiState(pi_i.integral, True)), d
    return (
        PiState(pi_v.integral + Ts * error_v, False),
        PiState(pi_i.integral + Ts * error_i, False),
    ), d


# ---------------------------------------------------------------------------
# Esquema indirecto
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndirectGains:
    """Ganancias del control vectorial en cascada (voltaje externo, corriente interna)."""

    k_VP: float = 0.05
    k_VI: float = 0.4
    k_IP: float = 10.0
    k_II: float = 240.0
    V_star: float = V_ESTRELLA

    def __post_init__(self) -> None:
        for nombre in ("k_VP", "k_VI", "k_IP", "k_II", "V_star"):
            exigir_positivo(nombre, getattr(self, nombre))


class MedicionAc(NamedTuple):
    v: ThreePhase
    i: ThreePhase
    i_o: ThreePhase
    V_dc: float


class ReferenciasIndirectas(NamedTuple):
    i_ref: np.ndarray
    v_m: np.ndarray
    error_v: np.ndarray
    error_i: np.ndarray


def referencias_indirectas(
    g: IndirectGains,
    s: Tuple[PiState, PiState],
    v_dq: np.ndarray,
    i_dq: np.ndarray,
    io_dq: np.ndarray,
    filter: AcFilterParams,
    omega_star: float,
) -> ReferenciasIndirectas:
    """Corriente de referencia del lazo de voltaje y voltaje del puente del lazo de corriente."""

    Y = filter.G * np.eye(2) + filter.C * omega_star * J
    Z = filter.R * np.eye(2) + filter.L * omega_star * J
    error_v = v_dq - np.array([g.V_star, 0.0])
    i_ref = Y @ v_dq + io_dq - g.k_VP * error_v - g.k_VI * np.asarray(s[0].integral)
    error_i = i_dq - i_ref
    v_m = Z @ i_dq + v_dq - g.k_IP * error_i - g.k_II * np.asarray(s[1].integral)
    return ReferenciasIndirectas(i_ref, v_m, error_v, error_i)


def indirect_control_step(
    g: IndirectGains,
    s: Tuple[PiState, PiState],
    theta: float,
    meas: MedicionAc,
    filter: AcFilterParams,
    Ts: float,
    *,
    omega_star: float = OMEGA_NOMINAL,
) -> Tuple[Tuple[PiState, PiState], ThreePhase]:
    """Control indirecto: lleva ``v`` a ``(V*, 0)`` en el marco del ángulo de caída."""

    v_dq = np.array(park(theta, meas.v))
    i_dq = np.array(park(theta, meas.i))
    io_dq = np.array(park(theta, meas.i_o))
    ref = referencias_indirectas(g, s, v_dq, i_dq, io_dq, filter, omega_star)

    u_dq = 2.0 * ref.v_m / max(meas.V_dc, V_MIN)
    u_libre = np.array(inverse_park(theta, u_dq))
    u_bar = np.clip(u_libre, -1.0, 1.0)
    if np.any(u_bar != u_libre):
        congelados = (PiState(s[0].integral, True), PiState(s[1].integral, True))
        return congelados, ThreePhase(*u_bar)

    estados = (
        PiState(np.asarray(s[0].integral) + Ts * ref.error_v, False),
        PiState(np.asarray(s[1].integral) + Ts * ref.error_i, False),
    )
    return estados, ThreePhase(*u_bar)


def estado_pi_vectorial() -> Tuple[PiState, PiState]:
    """Integradores dq en cero para el esquema indirecto."""

    return PiState(np.zeros(2)), PiState(np.zeros(2))


__all__ = [
    "OMEGA_NOMINAL",
    "V_ESTRELLA",
    "DroopGains",
    "DroopState",
    "droop_step",
    "direct_modulation",
    "ac_duty_from_modulation",
    "FiltroPromedioMovil",
    "PiState",
    "BoostControlGains",
    "MedicionBoost",
    "boost_control_step",
    "IndirectGains",
    "MedicionAc",
    "ReferenciasIndirectas",
    "referencias_indirectas",
    "indirect_control_step",
    "estado_pi_vectorial",
]
