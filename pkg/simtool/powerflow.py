"""Análisis algebraico de estado estacionario de la red reducida.

Es el oráculo independiente contra el que se comparan las simulaciones
dinámicas del escenario de dos convertidores.

Convención de potencia: :func:`line_power`, :func:`interconnection_angle` y
:func:`gamma_bound` usan por defecto la forma por fasor (``factor=1``);
con ``factor=FACTOR_TRIFASICO`` dan la potencia trifásica invariante en
amplitud que mide el simulador. :func:`solve_two_source_steady_state`
trabaja siempre con la potencia trifásica.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np

from .control import DroopGains
from .errors import (
    ErrorConfiguracion,
    ErrorNoConvergencia,
    ErrorTransferenciaInfactible,
    exigir_no_negativo,
    exigir_positivo,
)
from .frames import FACTOR_TRIFASICO, diferencia_angular

logger = logging.getLogger(__name__)

RAZON_GAMMA_RECOMENDADA = 1e-2


@dataclass(frozen=True)
class PhasorBus:
    V: float
    theta: float

    def __post_init__(self) -> None:
        exigir_positivo("V", self.V)

    @property
    def complejo(self) -> complex:
        return cmath.rect(self.V, self.theta)


@dataclass(frozen=True)
class ReducedTwoSource:
    """Dos fuentes que alimentan una carga resistiva común.

    ``V1`` y ``V2`` son las amplitudes de los voltajes de conmutación,
    ``X10``/``X20`` y ``R10``/``R20`` las líneas hacia el nodo común y
    ``V0`` el voltaje nominal del nodo común (solo se usa como referencia
    de escala). Los campos del filtro (``R_f``, ``X_f``, ``G_f``, ``B_c``)
    describen el filtro de salida de cada convertidor; en cero se obtiene la
    red reducida sin filtro.
    """

    V1: float
    V2: float
    V0: float
    X10: float
    X20: float
    R_load: float
    P_star_1: float
    P_star_2: float
    R10: float = 0.0
    R20: float = 0.0
    R_f: float = 0.0
    X_f: float = 0.0
    G_f: float = 0.0
    B_c: float = 0.0

    def __post_init__(self) -> None:
        for nombre in ("V1", "V2", "V0", "X10", "X20", "R_load"):
            exigir_positivo(nombre, getattr(self, nombre))
        for nombre in ("R10", "R20", "R_f", "X_f", "G_f", "B_c"):
            exigir_no_negativo(nombre, getattr(self, nombre))

    @property
    def con_filtro(self) -> bool:
        return self.R_f > 0.0 or self.X_f > 0.0


class PotenciaReactiva(NamedTuple):
    exacta: float
    pequena_senal: float


class SolucionPequenaSenal(NamedTuple):
    P_s: Tuple[float, float]
    diferencia_angular: float
    angulos_relativos: Tuple[float, float]


@dataclass(frozen=True)
class SolucionEstacionaria:
    """Resultado del oráculo: fasores por nodo y potencias por convertidor."""

    buses: Dict[str, PhasorBus]
    P_s: Tuple[float, float]
    Q_s: Tuple[float, float]
    diferencia_angular: float
    potencia_carga: float
    perdidas: float
    residuo: float
    iteraciones: int
    angulos_seguros: bool
    pequena_senal: SolucionPequenaSenal


# ---------------------------------------------------------------------------
# Expresiones cerradas
# ---------------------------------------------------------------------------


def line_power(Vk: float, V0: float, Xk0: float, dtheta: float, *, factor: float = 1.0) -> float:
    """Potencia activa transferida por una línea inductiva."""

    exigir_positivo("Xk0", Xk0)
    return factor * Vk * V0 / Xk0 * math.sin(dtheta)


def interconnection_angle(
    P_star: float, X10: float, V0: float, V1: float, theta0: float, *, factor: float = 1.0
) -> float:
    """Ángulo inicial que hace fluir ``P_star`` por la línea desde el primer instante."""

    exigir_positivo("X10", X10)
    argumento = P_star * X10 / (factor * V0 * V1)
    if abs(argumento) > 1.0 + 1e-12:
        raise ErrorTransferenciaInfactible(
            f"la línea no puede transportar P*={P_star:.1f} W: P*·X/(V0·V1) = {argumento:.4f} > 1"
        )
    return theta0 + math.asin(min(1.0, max(-1.0, argumento)))


def reactive_power_kron(Vk: float, Vj: float, Xkj: float, dtheta: float) -> PotenciaReactiva:
    """Potencia reactiva en el convertidor ``k`` de la red reducida de Kron."""

    exigir_positivo("Xkj", Xkj)
    exacta = Vk / Xkj * (Vk - Vj * math.cos(dtheta))
    return PotenciaReactiva(exacta, Vk / Xkj * (Vk - Vj))


def droop_steady_angle(g: DroopGains, P_s: float) -> float:
    """``θ^s = θ* + (P* − P^s)/γ`` tomando ``θ* = theta_star_0``."""

    return g.theta_star_0 + (g.P_star - P_s) / g.gamma


def gamma_bound(Vk: float, V0: float, Xk0: float, *, factor: float = 1.0) -> float:
    """Cota superior de referencia para la ganancia potencia–ángulo."""

    exigir_positivo("Xk0", Xk0)
    return factor * Vk * V0 / Xk0


def margen_gamma(gamma: float, cota: float) -> Tuple[float, bool]:
    """Razón ``γ/cota`` y si respeta la recomendación de un centésimo."""

    razon = gamma / cota
    return razon, razon <= RAZON_GAMMA_RECOMENDADA


def sharing_ratio(gains: Sequence[DroopGains]) -> float:
    """Razón de reparto ``r = P*_1/P*_2 = γ_1/γ_2``."""

    if len(gains) != 2:
        raise ErrorConfiguracion("la razón de reparto se define para dos convertidores", ruta="droop")
    g1, g2 = gains
    cruzado_1 = g1.P_star * g2.gamma
    cruzado_2 = g2.P_star * g1.gamma
    if abs(cruzado_1 - cruzado_2) > 1e-9 * max(abs(cruzado_1), abs(cruzado_2)):
        raise ErrorConfiguracion(
            "el reparto proporcional exige P*_1/P*_2 = γ_1/γ_2; "
            f"se recibió P*_1/P*_2 = {g1.P_star}/{g2.P_star} y γ_1/γ_2 = {g1.gamma}/{g2.gamma}",
            ruta="droop",
        )
    return g1.gamma / g2.gamma


# ---------------------------------------------------------------------------
# Solución no lineal
# ---------------------------------------------------------------------------


class _Flujos(NamedTuple):
    fuentes: Tuple[complex, complex]
    terminales: Tuple[complex, complex]
    v0: complex
    i_o: Tuple[complex, complex]
    P: Tuple[float, float]
    Q: Tuple[float, float]
    perdidas: float
    potencia_carga: float


def _flujos(net: ReducedTwoSource, theta1: float, theta2: float, factor: float) -> _Flujos:
    E = (cmath.rect(net.V1, theta1), cmath.rect(net.V2, theta2))
    y_l = (1.0 / complex(net.R10, net.X10), 1.0 / complex(net.R20, net.X20))
    y_sh = complex(net.G_f, net.B_c)
    y_L = 1.0 / net.R_load

    if net.con_filtro:
        y_f = 1.0 / complex(net.R_f, net.X_f)
        Y = np.array(
            [
                [y_f + y_sh + y_l[0], 0.0, -y_l[0]],
                [0.0, y_f + y_sh + y_l[1], -y_l[1]],
                [-y_l[0], -y_l[1], y_l[0] + y_l[1] + y_L],
            ],
            dtype=complex,
        )
        f1, f2, v0 = np.linalg.solve(Y, np.array([y_f * E[0], y_f * E[1], 0.0], dtype=complex))
        terminales = (complex(f1), complex(f2))
        v0 = complex(v0)
    else:
        terminales = E
        v0 = (y_l[0] * E[0] + y_l[1] * E[1]) / (y_l[0] + y_l[1] + y_L)

    i_o = tuple(y * (f - v0) for y, f in zip(y_l, terminales))
    P = tuple(
        factor * (f * (i + net.G_f * f).conjugate()).real for f, i in zip(terminales, i_o)
    )
    Q = tuple(factor * (f * i.conjugate()).imag for f, i in zip(terminales, i_o))
    perdidas = factor * (net.R10 * abs(i_o[0]) ** 2 + net.R20 * abs(i_o[1]) ** 2)
    return _Flujos(E, terminales, v0, i_o, P, Q, perdidas, factor * abs(v0) ** 2 / net.R_load)


def _pequena_senal(
    net: ReducedTwoSource, gains: Sequence[DroopGains], flujos: _Flujos, factor: float
) -> SolucionPequenaSenal:
    g1, g2 = gains
    V0 = abs(flujos.v0)
    a1 = factor * net.V1 * V0 / (net.X_f + net.X10)
    a2 = factor * net.V2 * V0 / (net.X_f + net.X20)
    P_T = sum(flujos.P)
    delta_star = diferencia_angular(g1.theta_star_0, g2.theta_star_0)
    matriz = np.array([[a1, a2], [1.0 + a1 / g1.gamma, -(1.0 + a2 / g2.gamma)]])
    lado = np.array([P_T, delta_star + net.P_star_1 / g1.gamma - net.P_star_2 / g2.gamma])
    x1, x2 = np.linalg.solve(matriz, lado)
    return SolucionPequenaSenal((float(a1 * x1), float(a2 * x2)), float(x1 - x2), (float(x1), float(x2)))


def solve_two_source_steady_state(
    net: ReducedTwoSource,
    gains: Sequence[DroopGains],
    *,
    factor: float = FACTOR_TRIFASICO,
    amortiguamiento: float = 0.5,
    tolerancia: float = 1e-9,
    max_iteraciones: int = 10_000,
) -> SolucionEstacionaria:
    """Resuelve simultáneamente la red fasorial y la ley de caída de ambos convertidores.

    La incógnita es la diferencia ``D = θ_1 − θ_2`` entre los ángulos de los
    voltajes de conmutación; con ``θ*_k`` tomado de ``gains[k].theta_star_0``
    la ley de caída impone
    ``D = (θ*_1 − θ*_2) + (P*_1 − P_1)/γ_1 − (P*_2 − P_2)/γ_2``.
    Se itera un punto fijo tipo Newton amortiguado hasta que el desbalance de
    potencia equivalente sea menor que ``tolerancia`` (W). ``P*_k`` se toma
    de ``net``; ``γ_k`` y ``θ*_k`` de ``gains``.
    """

    if len(gains) != 2:
        raise ErrorConfiguracion("se requieren las ganancias de dos convertidores", ruta="droop")
    g1, g2 = gains
    delta_star = diferencia_angular(g1.theta_star_0, g2.theta_star_0)
    gamma_eq = 1.0 / (1.0 / g1.gamma + 1.0 / g2.gamma)

    def desbalance(D: float) -> Tuple[float, _Flujos]:
        flujos = _flujos(net, D, 0.0, factor)
        P1, P2 = flujos.P
        objetivo = delta_star + (net.P_star_1 - P1) / g1.gamma - (net.P_star_2 - P2) / g2.gamma
        return D - objetivo, flujos

    D = delta_star
    residuo = math.inf
    paso = 1e-7
    for iteracion in range(1, max_iteraciones + 1):
        h, flujos = desbalance(D)
        residuo = abs(h) * gamma_eq
        if residuo < tolerancia:
            break
        pendiente = (desbalance(D + paso)[0] - desbalance(D - paso)[0]) / (2.0 * paso)
        if not math.isfinite(pendiente) or pendiente == 0.0:
            raise ErrorNoConvergencia("pendiente degenerada", residuo=residuo, iteraciones=iteracion)
        D -= amortiguamiento * h / pendiente
    else:
        raise ErrorNoConvergencia(
            "el punto fijo no convergió", residuo=residuo, iteraciones=max_iteraciones
        )

    P1, P2 = flujos.P
    theta1 = g1.theta_star_0 + (net.P_star_1 - P1) / g1.gamma
    theta2 = g2.theta_star_0 + (net.P_star_2 - P2) / g2.gamma
    rotacion = cmath.rect(1.0, theta2)

    buses = {
        "1": PhasorBus(net.V1, theta1),
        "2": PhasorBus(net.V2, theta2),
        "0": PhasorBus(abs(flujos.v0), cmath.phase(flujos.v0 * rotacion)),
    }
    aristas = [(flujos.terminales[k], flujos.v0) for k in range(2)]
    if net.con_filtro:
        for k, terminal in enumerate(flujos.terminales):
            buses[f"f{k + 1}"] = PhasorBus(abs(terminal), cmath.phase(terminal * rotacion))
            aristas.append((flujos.fuentes[k], terminal))
    angulos_seguros = all(abs(cmath.phase(a / b)) < math.pi / 2 for a, b in aristas)
    if not angulos_seguros:
        logger.warning("la solución estacionaria viola la condición de seguridad angular")

    return SolucionEstacionaria(
        buses=buses,
        P_s=(P1, P2),
        Q_s=flujos.Q,
        diferencia_angular=D,
        potencia_carga=flujos.potencia_carga,
        perdidas=flujos.perdidas,
        residuo=residuo,
        iteraciones=iteracion,
        angulos_seguros=angulos_seguros,
        pequena_senal=_pequena_senal(net, gains, flujos, factor),
    )


__all__ = [
    "RAZON_GAMMA_RECOMENDADA",
    "PhasorBus",
    "ReducedTwoSource",
    "PotenciaReactiva",
    "SolucionPequenaSenal",
    "SolucionEstacionaria",
    "line_power",
    "interconnection_angle",
    "reactive_power_kron",
    "droop_steady_angle",
    "gamma_bound",
    "margen_gamma",
    "sharing_ratio",
    "solve_two_source_steady_state",
]
