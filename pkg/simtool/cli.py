"""Interfaz de línea de comandos: ``python -m simtool run|sweep|export``.

Códigos de salida: 0 éxito, 1 error de ejecución, 2 verificación fallida
(solo con ``--check``).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from . import __version__
from .config import (
    BARRIDOS,
    ESCENARIOS,
    combinar,
    construir_escenario,
    hash_configuracion,
    leer_configuracion,
    resolver_configuracion,
)
from .errors import ErrorConfiguracion, ErrorExportacion, ErrorSimtool
from .export import FORMATOS, export, leer_csv, leer_json, marca_de_tiempo
from .registro import configurar_registro
from .control import DroopGains
from .sim import (
    MODOS,
    ClockModel,
    ResultadoDeriva,
    ResultadoSimulacion,
    ScenarioSpec,
    SummaryReport,
    clock_drift_demo,
    run_scenario,
    sweep,
)
from .traces import TraceRecorder

logger = logging.getLogger(__name__)

SALIDA_EXITO = 0
SALIDA_ERROR = 1
SALIDA_VERIFICACION = 2

ESCENARIOS_RUN = (*ESCENARIOS, "sweep", "custom")
ESCENARIO_BARRIDO = "loadstep"
DERIVA_PREDETERMINADA = 1e-2
UMBRAL_DESAJUSTE = 0.5


@dataclass
class RunManifest:
    """Registro de una corrida: qué se ejecutó, con qué configuración y qué se escribió."""

    escenario: str
    hash_configuracion: str
    version: str
    inicio: str
    fin: str = ""
    salidas: List[str] = field(default_factory=list)
    verificaciones: List[Dict[str, Any]] = field(default_factory=list)
    parametros: Dict[str, Any] = field(default_factory=dict)

    def a_dict(self) -> Dict[str, Any]:
        return asdict(self)


class Verificacion(NamedTuple):
    nombre: str
    valor: float
    umbral: float

    @property
    def aprobada(self) -> bool:
        return math.isfinite(self.valor) and self.valor < self.umbral

    def a_dict(self) -> Dict[str, Any]:
        return {"nombre": self.nombre, "valor": self.valor, "umbral": self.umbral, "aprobada": self.aprobada}


# ---------------------------------------------------------------------------
# Verificaciones de aceptación
# ---------------------------------------------------------------------------


def _relativo(valor: float, referencia: float) -> float:
    return abs(valor) / abs(referencia) if referencia else math.inf


def verificar_caida(spec: ScenarioSpec, resultado: ResultadoSimulacion) -> List[Verificacion]:
    """Ley de caída en estado estacionario, error de frecuencia nulo y costo que se extingue."""

    verificaciones = []
    for resumen, g in zip(resultado.resumen.convertidores, resultado.ganancias_finales):
        verificaciones += [
            Verificacion(f"|γ(θˢ−θ*) + Pˢ − P*| / P* ({resumen.id})", _relativo(resumen.residuo_caida, g.P_star), 1e-2),
            Verificacion(f"|ωˢ − ω*| ({resumen.id}, rad/s)", abs(resumen.omega_s - g.omega_star), 1e-3),
            Verificacion(f"cola del costo / pico ({resumen.id})", resumen.cola_costo, 1e-6),
        ]
    return verificaciones


def _verificar_oraculo(resumen: SummaryReport, tolerancia_angulo: float) -> List[Verificacion]:
    if resumen.oraculo is None or resumen.diferencia_angular is None:
        return [Verificacion("oráculo estacionario disponible", math.inf, 1.0)]
    oraculo = resumen.oraculo
    verificaciones = [
        Verificacion(
            "|(θ₁−θ₂)ˢ − oráculo| (rad)",
            abs(resumen.diferencia_angular - oraculo["diferencia_angular"]),
            tolerancia_angulo,
        )
    ]
    for convertidor, P_oraculo in zip(resumen.convertidores, oraculo["P_s"]):
        verificaciones.append(
            Verificacion(
                f"|Pˢ − P oráculo| / P carga ({convertidor.id})",
                _relativo(convertidor.P_s - P_oraculo, oraculo["potencia_carga"]),
                1e-2,
            )
        )
    return verificaciones


def verificar_sincronia(spec: ScenarioSpec, resultado: ResultadoSimulacion) -> List[Verificacion]:
    """Frecuencia tras la interconexión, ángulo relativo y estructura de las reactivas.

    El ángulo relativo se compara con ``(θ*₁−θ*₂)ˢ + δP₁/γ₁ − δP₂/γ₂``, con
    la diferencia nominal medida en la corrida y ``δP_k = P*_k − P_k`` del
    oráculo. La suma de reactivas medidas se compara con el consumo
    reactivo medido en las líneas; con desajuste de amplitud los signos
    deben seguir la forma de pequeña señal de Kron.
    """

    resumen = resultado.resumen
    desde = resumen.t_perturbacion + 1.0
    verificaciones = []
    for c in spec.convertidores:
        omega = resultado.traza.ventana(f"omega_{c.id}", desde)
        desviacion = float(np.nanmax(np.abs(omega - c.droop.omega_star))) if omega.size else math.inf
        verificaciones.append(Verificacion(f"|f − 50 Hz| a 1 s de la interconexión ({c.id}, Hz)", desviacion / (2.0 * math.pi), 0.1))
    verificaciones += _verificar_oraculo(resumen, 2e-4)
    verificaciones.append(_verificar_descomposicion(resumen, resultado.ganancias_finales))
    verificaciones += verificar_reactivas(resumen)
    return verificaciones


def _verificar_descomposicion(resumen: SummaryReport, ganancias: Sequence[DroopGains]) -> Verificacion:
    nombre = "|(θ₁−θ₂)ˢ − (θ*₁−θ*₂)ˢ − δP₁/γ₁ + δP₂/γ₂| (rad)"
    if resumen.oraculo is None or resumen.diferencia_angular is None or resumen.diferencia_nominal is None:
        return Verificacion(nombre, math.inf, 2e-4)
    g1, g2 = ganancias
    P1, P2 = resumen.oraculo["P_s"]
    esperada = resumen.diferencia_nominal + (g1.P_star - P1) / g1.gamma - (g2.P_star - P2) / g2.gamma
    return Verificacion(nombre, abs(resumen.diferencia_angular - esperada), 2e-4)


def verificar_reactivas(resumen: SummaryReport) -> List[Verificacion]:
    """``Q₁ˢ + Q₂ˢ`` contra el consumo de las líneas y, con desajuste de amplitud, sus signos."""

    reactivas = resumen.reactivas
    if reactivas is None:
        return [Verificacion("|Q₁ˢ + Q₂ˢ − Q líneas| (var)", math.inf, 1.0)]
    Q1, _ = reactivas["medidas"]
    verificaciones = [
        Verificacion(
            "|Q₁ˢ + Q₂ˢ − Q líneas| (var)",
            abs(reactivas["suma"] - reactivas["consumo_lineas"]),
            max(1.0, 1e-2 * abs(Q1)),
        )
    ]
    if abs(reactivas["desajuste_amplitud"]) >= UMBRAL_DESAJUSTE:
        contrarios = sum(
            1
            for medida, referencia in zip(reactivas["medidas"], reactivas["kron_pequena_senal"])
            if np.sign(medida) != np.sign(referencia)
        )
        verificaciones.append(Verificacion("signos de Qˢ contrarios a la forma de Kron", float(contrarios), 1.0))
    return verificaciones


def verificar_reparto(spec: ScenarioSpec, resultado: ResultadoSimulacion) -> List[Verificacion]:
    resumen = resultado.resumen
    if resumen.reparto is None:
        return [Verificacion("razón de reparto definida", math.inf, 1.0)]
    esperada = resumen.reparto["razon_esperada"]
    tolerancia = 0.05 if math.isclose(esperada, 1.0) else 0.10
    verificaciones = [Verificacion(f"|(P₁/P₂) / {esperada:g} − 1|", abs(resumen.reparto["razon"] / esperada - 1.0), tolerancia)]
    if math.isclose(esperada, 1.0) and resumen.oraculo is not None:
        mitad = 0.5 * resumen.oraculo["potencia_carga"]
        for convertidor in resumen.convertidores:
            verificaciones.append(
                Verificacion(f"|Pˢ − P carga/2| / (P carga/2) ({convertidor.id})", _relativo(convertidor.P_s - mitad, mitad), 0.05)
            )
    return verificaciones + _verificar_oraculo(resumen, 2e-3)


def diferencia_maxima(a: TraceRecorder, b: TraceRecorder) -> float:
    """Máxima diferencia absoluta entre canales comunes; NaN contra número cuenta como infinito."""

    if len(a) != len(b):
        return math.inf
    maximo = 0.0
    for nombre in a.canales:
        if nombre not in b:
            continue
        x, y = a.canal(nombre), b.canal(nombre)
        ambos_nan = np.isnan(x) & np.isnan(y)
        diferencia = np.where(ambos_nan, 0.0, np.abs(x - y))
        diferencia = np.where(np.isnan(diferencia), math.inf, diferencia)
        if diferencia.size:
            maximo = max(maximo, float(np.max(diferencia)))
    return maximo


def verificar_deriva(spec: ScenarioSpec, deriva: ResultadoDeriva) -> List[Verificacion]:
    """Pico de deriva en ``ω*Δε/2π``, ausente con reloj maestro, que además reproduce la corrida sin deriva."""

    referencia = run_scenario(replace(spec, clock=ClockModel()))
    return [
        Verificacion("|f pico / f esperada − 1|", abs(deriva.pico.frecuencia / deriva.frecuencia_esperada - 1.0), 0.10),
        Verificacion(
            "potencia del pico con reloj maestro / sin él",
            _relativo(deriva.pico_maestro.potencia, deriva.pico.potencia),
            1e-3,
        ),
        Verificacion("máx |traza con reloj maestro − traza sin deriva|", diferencia_maxima(deriva.reloj_maestro.traza, referencia.traza), 1e-9),
    ]


def verificar_barrido(parametro: str, reportes: Sequence[SummaryReport]) -> List[Verificacion]:
    """Profundidad del nadir monótona en α; ``γ·|Δθˢ|`` constante en γ."""

    if not reportes:
        return []
    primero = reportes[0].convertidores[0].id
    if parametro == "alpha":
        profundidades = np.array([r.convertidor(primero).profundidad_nadir for r in reportes])
        pasos = np.sign(np.diff(profundidades))
        if not np.all(np.isfinite(profundidades)):
            no_monotonos = math.inf
        else:
            no_monotonos = float(min(np.count_nonzero(pasos <= 0), np.count_nonzero(pasos >= 0)))
        return [Verificacion("pasos no monótonos de la profundidad del nadir", no_monotonos, 1.0)]
    if parametro == "gamma":
        productos = np.array([r.valor * abs(r.convertidor(primero).delta_theta_s) for r in reportes])
        dispersion = float(np.max(np.abs(productos / np.mean(productos) - 1.0)))
        return [Verificacion("máx |γ|Δθˢ| / promedio − 1|", dispersion, 0.05)]
    return []


_VERIFICADORES = {
    "blackstart": verificar_caida,
    "loadstep": verificar_caida,
    "custom": verificar_caida,
    "sync": verificar_sincronia,
    "sync_sin_perdidas": verificar_sincronia,
    "sync_desajuste": verificar_sincronia,
    "sharing": verificar_reparto,
    "sharing_r2": verificar_reparto,
}


# ---------------------------------------------------------------------------
# Artefactos
# ---------------------------------------------------------------------------


def _json_seguro(valor: Any) -> Any:
    """Convierte NaN/inf en ``null`` y tuplas en listas para un JSON estricto."""

    if isinstance(valor, dict):
        return {str(llave): _json_seguro(v) for llave, v in valor.items()}
    if isinstance(valor, (list, tuple)):
        return [_json_seguro(v) for v in valor]
    if isinstance(valor, (float, np.floating)):
        return float(valor) if math.isfinite(valor) else None
    if isinstance(valor, np.integer):
        return int(valor)
    if isinstance(valor, np.bool_):
        return bool(valor)
    return valor


def escribir_json(path: Path, datos: Any) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_json_seguro(datos), indent=2, ensure_ascii=False, allow_nan=False), encoding="utf-8")
    except OSError as error:
        raise ErrorExportacion(f"{path}: no se pudo escribir ({error.strerror})") from None
    return path


def _mostrar_resumen(resumen: SummaryReport) -> None:
    estado = f" (abortado en t = {resumen.t_aborto:.4f} s)" if resumen.abortado else ""
    print(f"Escenario {resumen.escenario}: {resumen.duracion:g} s{estado}")
    for c in resumen.convertidores:
        print(
            f"  {c.id}: Pˢ = {c.P_s:.2f} W, Qˢ = {c.Q_s:.2f} var, ωˢ = {c.omega_s:.5f} rad/s, "
            f"Δθˢ = {c.delta_theta_s:.6f} rad, V_dcˢ = {c.V_dc_s:.2f} V"
        )
    if resumen.diferencia_angular is not None:
        print(f"  (θ₁ − θ₂)ˢ = {resumen.diferencia_angular:.6f} rad")
    if resumen.parametro is not None:
        print(f"  {resumen.parametro} = {resumen.valor:g}")


def _mostrar_verificaciones(verificaciones: Sequence[Verificacion]) -> bool:
    for v in verificaciones:
        marca = "OK   " if v.aprobada else "FALLA"
        print(f"  [{marca}] {v.nombre}: {v.valor:.4g} (umbral {v.umbral:g})")
    return all(v.aprobada for v in verificaciones)


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------


def preparar_configuracion(escenario: str, args: argparse.Namespace) -> Dict[str, Any]:
    """Configuración resuelta con las opciones de la línea de comandos aplicadas."""

    config = leer_configuracion(args.config)
    if escenario == "custom":
        if args.config is None:
            raise ErrorConfiguracion("el escenario 'custom' requiere --config", ruta="--config")
    else:
        config = combinar(config, {"escenario": escenario})
    resuelta = resolver_configuracion(config)

    if args.line_resistance is not None:
        for linea in resuelta.get("red", {}).get("lineas", []):
            linea["R_l"] = args.line_resistance
    if args.mode is not None:
        resuelta["modo"] = args.mode
        for convertidor in resuelta.get("convertidores", []):
            convertidor.pop("modo", None)
    if args.duration is not None:
        resuelta["duracion"] = args.duration
    if args.seedless:
        resuelta["sembrar_con_pll"] = False
    return resuelta


def _salida(args: argparse.Namespace, escenario: str) -> Path:
    return Path(args.out) if args.out else Path("resultados") / escenario


def _terminar(manifiesto: RunManifest, salida: Path, verificaciones: Optional[Sequence[Verificacion]], abortado: bool) -> int:
    codigo = SALIDA_EXITO
    if verificaciones is not None:
        manifiesto.verificaciones = [v.a_dict() for v in verificaciones]
        if not _mostrar_verificaciones(verificaciones):
            codigo = SALIDA_VERIFICACION
    if abortado:
        codigo = SALIDA_ERROR
    manifiesto.fin = marca_de_tiempo()
    ruta = escribir_json(salida / "manifiesto.json", manifiesto.a_dict())
    logger.info("manifiesto escrito en %s", ruta)
    return codigo


def _ejecutar_corrida(escenario: str, args: argparse.Namespace) -> int:
    inicio = marca_de_tiempo()
    config = preparar_configuracion(escenario, args)
    huella = hash_configuracion(config)
    spec = construir_escenario(config)
    salida = _salida(args, escenario)
    manifiesto = RunManifest(escenario, huella, __version__, inicio)
    metadatos = {"escenario": spec.nombre, "hash_configuracion": huella}

    if escenario == "drift":
        epsilon = spec.clock.epsilon
        delta = epsilon[0] - epsilon[1] if len(epsilon) == 2 else DERIVA_PREDETERMINADA
        if delta == 0.0:
            raise ErrorConfiguracion("la demostración requiere ε₁ ≠ ε₂", ruta="reloj.epsilon")
        deriva = clock_drift_demo(spec, delta)
        resultado = deriva.deriva
        manifiesto.salidas.append(
            str(export(deriva.reloj_maestro.traza, args.formato, salida / f"trazas_reloj_maestro.{args.formato}", metadatos=metadatos))
        )
        extra = {
            "pico": deriva.pico._asdict(),
            "pico_reloj_maestro": deriva.pico_maestro._asdict(),
            "frecuencia_esperada": deriva.frecuencia_esperada,
        }
        print(f"Pico espectral de P: {deriva.pico.frecuencia:.4f} Hz (esperado {deriva.frecuencia_esperada:.4f} Hz)")
    else:
        resultado = run_scenario(spec)
        extra = {}

    manifiesto.salidas.append(str(export(resultado.traza, args.formato, salida / f"trazas.{args.formato}", metadatos=metadatos)))
    manifiesto.salidas.append(str(escribir_json(salida / "resumen.json", {**resultado.resumen.a_dict(), **extra})))
    _mostrar_resumen(resultado.resumen)

    verificaciones = None
    if args.check:
        if escenario == "drift":
            verificaciones = verificar_deriva(spec, deriva)
        else:
            verificaciones = _VERIFICADORES[escenario](spec, resultado)
    return _terminar(manifiesto, salida, verificaciones, resultado.resumen.abortado)


def _valores(texto: Optional[str], parametro: str) -> List[float]:
    if texto is None:
        if parametro not in BARRIDOS:
            raise ErrorConfiguracion(f"indique --values para el parámetro '{parametro}'", ruta="--values")
        return list(BARRIDOS[parametro])
    try:
        return [float(parte) for parte in texto.split(",") if parte.strip()]
    except ValueError:
        raise ErrorConfiguracion(f"valores no numéricos: '{texto}'", ruta="--values") from None


def _ejecutar_barrido(args: argparse.Namespace) -> int:
    if not args.param:
        raise ErrorConfiguracion("el barrido requiere --param", ruta="--param")
    inicio = marca_de_tiempo()
    base = args.escenario or leer_configuracion(args.config).get("escenario", ESCENARIO_BARRIDO)
    config = preparar_configuracion(base, args)
    valores = _valores(args.values, args.param)
    huella = hash_configuracion(config)
    spec = construir_escenario(config)
    salida = _salida(args, "sweep")

    reportes = sweep(spec, args.param, valores, trabajadores=args.trabajadores)
    for reporte in reportes:
        _mostrar_resumen(reporte)
    manifiesto = RunManifest(
        "sweep", huella, __version__, inicio, parametros={"escenario": base, "parametro": args.param, "valores": valores}
    )
    manifiesto.salidas.append(str(escribir_json(salida / "resumen.json", [r.a_dict() for r in reportes])))
    verificaciones = verificar_barrido(args.param, reportes) if args.check else None
    return _terminar(manifiesto, salida, verificaciones, any(r.abortado for r in reportes))


def comando_run(args: argparse.Namespace) -> int:
    if args.escenario_run == "sweep":
        args.escenario = None
        return _ejecutar_barrido(args)
    return _ejecutar_corrida(args.escenario_run, args)


def comando_sweep(args: argparse.Namespace) -> int:
    return _ejecutar_barrido(args)


def comando_export(args: argparse.Namespace) -> int:
    entrada = Path(args.entrada)
    traza = leer_json(entrada) if entrada.suffix.lower() == ".json" else leer_csv(entrada)
    destino = Path(args.salida)
    formato = args.formato or destino.suffix.lstrip(".").lower()
    export(traza, formato, destino)
    print(f"{entrada} → {destino} ({len(traza)} muestras)")
    return SALIDA_EXITO


# ---------------------------------------------------------------------------
# Analizador de argumentos
# ---------------------------------------------------------------------------


def _opciones_corrida(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="archivo JSON combinado sobre el escenario")
    parser.add_argument("--check", action="store_true", help="aplica los criterios de aceptación (salida 2 si fallan)")
    parser.add_argument("--out", help="directorio de salida (por defecto resultados/<escenario>)")
    parser.add_argument("--seedless", action="store_true", help="no siembra θ* con el PLL al interconectar")
    parser.add_argument("--line-resistance", type=float, help="resistencia R_l de todas las líneas (Ω)")
    parser.add_argument("--mode", choices=MODOS, help="implementación de la caída angular")
    parser.add_argument("--duration", type=float, help="duración simulada (s)")
    parser.add_argument("--formato", choices=FORMATOS, default="csv", help="formato de las trazas")
    parser.add_argument("--param", help="parámetro a barrer (alpha, gamma, P_star, A o ruta punteada)")
    parser.add_argument("--values", help="valores separados por comas")
    parser.add_argument("--trabajadores", type=int, default=None, help="procesos para el barrido")
    parser.add_argument("--verbose", "-v", action="store_true", help="registro a nivel DEBUG")


def construir_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simtool",
        description="Simulador de convertidores formadores de red con control de caída angular.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="comando", required=True)

    run = subparsers.add_parser("run", help="ejecuta un escenario integrado o personalizado")
    run.add_argument("escenario_run", metavar="escenario", choices=ESCENARIOS_RUN, help=", ".join(ESCENARIOS_RUN))
    _opciones_corrida(run)
    run.set_defaults(funcion=comando_run)

    barrido = subparsers.add_parser("sweep", help="barre un parámetro sobre un escenario base")
    barrido.add_argument("--escenario", choices=tuple(ESCENARIOS), help=f"escenario base (por defecto {ESCENARIO_BARRIDO})")
    _opciones_corrida(barrido)
    barrido.set_defaults(funcion=comando_sweep)

    exportar = subparsers.add_parser("export", help="convierte una traza entre CSV y JSON")
    exportar.add_argument("entrada", help="traza CSV o JSON")
    exportar.add_argument("salida", help="archivo destino")
    exportar.add_argument("--formato", choices=FORMATOS, help="por defecto, según la extensión del destino")
    exportar.add_argument("--verbose", "-v", action="store_true", help="registro a nivel DEBUG")
    exportar.set_defaults(funcion=comando_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = construir_parser().parse_args(argv)
    configurar_registro(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.funcion(args)
    except ErrorSimtool as error:
        logger.error("%s", error)
        return SALIDA_ERROR


__all__ = [
    "SALIDA_EXITO",
    "SALIDA_ERROR",
    "SALIDA_VERIFICACION",
    "RunManifest",
    "Verificacion",
    "verificar_caida",
    "verificar_sincronia",
    "verificar_reparto",
    "verificar_deriva",
    "verificar_barrido",
    "diferencia_maxima",
    "preparar_configuracion",
    "construir_parser",
    "main",
]
