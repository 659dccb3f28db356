from dataclasses import asdict, dataclass
import datetime
import json
import logging
import math
from pathlib import Path
import sys
import time

from skfeedback.core.system import SystemConfig
from skfeedback.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[2] / "configs"
SYSTEMS_FILE = CONFIGS / "systems.json"
REFERENCE_CURVES_FILE = CONFIGS / "reference_curves.json"

_LOGGER = logging.getLogger("skfeedback")
_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING, "error": logging.ERROR}


class _TimestampFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        tic = time.strftime("%Y-%m-%d %H:%M:%S", time.localtime(record.created))
        return f"[{tic}] {record.getMessage()}"


def configure_logging(verbosity: int = 0) -> None:
    """Configura el logger del paquete: salida por stderr con marca de tiempo.

    Args:
        verbosity (int): -1 solo avisos, 0 informativo, 1 o más depuración.
    """
    handlers = [h for h in _LOGGER.handlers if getattr(h, "_skfeedback", False)]
    if handlers:
        # sys.stderr puede haber cambiado desde que se creó el handler
        for handler in handlers:
            handler.stream = sys.stderr
    else:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(_TimestampFormatter())
        handler._skfeedback = True
        _LOGGER.addHandler(handler)
    _LOGGER.setLevel(logging.DEBUG if verbosity > 0 else logging.INFO if verbosity == 0 else logging.WARNING)
    _LOGGER.propagate = False


def log(message: str, level: str = "info") -> None:
    """Función simple para emitir mensajes de log con marca de tiempo."""
    _LOGGER.log(_LEVELS.get(level, logging.INFO), message)


_SYSTEM_KEYS = {"snr_db", "dsnr_db", "rounds", "rate"}
_SYSTEM_OPTIONAL = {"pe", "pm", "fb_power_db", "description"}


def _read_json(file_path: Path) -> dict:
    file_path = Path(file_path)
    if not file_path.is_file():
        raise ConfigError(f"El fichero de configuración {file_path} no existe.")
    with file_path.open("r", encoding="utf-8") as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"El fichero {file_path} no es JSON válido: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"El fichero {file_path} debe contener un objeto JSON.")
    return data


def load_systems(file_path: Path = SYSTEMS_FILE) -> dict[str, dict]:
    """Carga las configuraciones de sistema con nombre desde un fichero .json.

    Cada sistema se describe en dB, igual que en la línea de comandos:

    "desk-proposed": {
            "snr_db": 10.0,
            "dsnr_db": 10.0,
            "rounds": 4,
            "rate": 1,
            "pe": 0.01
        }

    Un dsnr_db nulo indica realimentación sin ruido.

    Args:
        file_path (Path): Ruta al fichero JSON.

    Returns:
        dict: Diccionario nombre -> atributos validados.
    """
    systems = _read_json(file_path)
    for name, attributes in systems.items():
        if not isinstance(attributes, dict):
            raise ConfigError(f"Los atributos del sistema '{name}' deben ser un diccionario.")
        missing = _SYSTEM_KEYS - attributes.keys()
        if missing:
            raise ConfigError(f"El sistema '{name}' no define los atributos {sorted(missing)}.")
        unknown = attributes.keys() - _SYSTEM_KEYS - _SYSTEM_OPTIONAL
        if unknown:
            raise ConfigError(f"El sistema '{name}' tiene atributos desconocidos {sorted(unknown)}.")
    return systems


def system_from_attributes(attributes: dict) -> SystemConfig:
    """Construye un SystemConfig a partir de los atributos en dB de un sistema."""
    dsnr_db = attributes["dsnr_db"]
    return SystemConfig.from_db(
        snr_db=float(attributes["snr_db"]),
        dsnr_db=None if dsnr_db is None else float(dsnr_db),
        N=int(attributes["rounds"]),
        rate_bits_per_use=float(attributes["rate"]),
        pe_target=float(attributes.get("pe", 1e-6)),
        p_m=attributes.get("pm"),
        fb_power_db=attributes.get("fb_power_db"),
    )


def load_system_config(name: str, file_path: Path = SYSTEMS_FILE) -> SystemConfig:
    """Carga un sistema con nombre y lo convierte en SystemConfig."""
    systems = load_systems(file_path)
    if name not in systems:
        raise ConfigError(f"El sistema '{name}' no existe en {file_path}. Disponibles: {list(systems.keys())}")
    log(f"Sistema '{name}' cargado desde {file_path}", level="debug")
    return system_from_attributes(systems[name])


def load_curve_sets(file_path: Path = REFERENCE_CURVES_FILE) -> dict[str, dict]:
    """Carga los conjuntos de curvas de gap desde un fichero .json.

    Cada conjunto fija la tasa, la probabilidad de error objetivo, los ΔSNR en dB
    (null para realimentación sin ruido), el número máximo de rondas y, de forma
    opcional, coordenadas de referencia por curva y el n_opt esperado.

    Args:
        file_path (Path): Ruta al fichero JSON.

    Returns:
        dict: Diccionario nombre -> conjunto de curvas.
    """
    sets = _read_json(file_path)
    for name, attributes in sets.items():
        for key in ("rate", "pe", "curves", "n_max"):
            if key not in attributes:
                raise ConfigError(f"El conjunto de curvas '{name}' no tiene definido el atributo '{key}'.")
        if not isinstance(attributes["curves"], list) or not attributes["curves"]:
            raise ConfigError(f"El conjunto '{name}' debe definir una lista no vacía de curvas.")
        for curve in attributes["curves"]:
            if "dsnr_db" not in curve:
                raise ConfigError(f"Una curva del conjunto '{name}' no tiene definido 'dsnr_db'.")
    return sets


def dsnr_from_db(dsnr_db: float | None) -> float:
    """ΔSNR lineal; None o infinito significan realimentación sin ruido."""
    if dsnr_db is None or math.isinf(dsnr_db):
        return math.inf
    return 10.0 ** (dsnr_db / 10.0)


@dataclass
class RunManifest:
    """Metadatos que acompañan a cada fichero de resultados."""

    command: str
    parameters: dict
    version: str
    seed: int | None
    timestamp: str

    @classmethod
    def create(cls, command: str, parameters: dict, seed: int | None = None) -> "RunManifest":
        from skfeedback import __version__

        return cls(
            command=command,
            parameters=parameters,
            version=__version__,
            seed=seed,
            timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _json_default(value):
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dump_json(payload: dict) -> str:
    """Serializa a JSON con orden de claves estable; los infinitos se escriben como null."""
    return json.dumps(_finite(payload), indent=2, ensure_ascii=False, default=_json_default, allow_nan=False)


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def write_output(text: str, out: Path | None) -> None:
    """Escribe el texto en el fichero indicado o, si no hay fichero, por la salida estándar."""
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    log(f"Resultados guardados en {out}")
