"""Flat ``key = value`` scenario files.

Lines are ``section.name = value``; ``#`` starts a comment. Unknown keys
and malformed values raise :class:`ConfigError` naming the key.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .channel import ChannelConfig, ParametricAtmosphere, TableAtmosphere
from .detstat import DetectorModel, ProtocolParams
from .finitekey import MIN_INTENSITY_GAP, SecurityParams
from .optimizer import OptimizerConfig
from .orbitpass import OrbitConfig
from .passsim import QkdSettings
from .qkpc import QkpcParams


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text!r}")
    return value


# key -> (parser, default, component field it feeds)
SCHEMA: dict[str, tuple] = {
    "orbit.h_km": (_float, 500.0, "altitude_km"),
    "orbit.theta_min_deg": (_float, 10.0, "min_elevation_deg"),
    "orbit.xi_deg": (_float, 0.0, "plane_offset_deg"),
    "source.f_s_hz": (_float, 1e9, "source_rate_hz"),
    "channel.d_t_m": (_float, 0.04, "tx_aperture_m"),
    "channel.d_r_m": (_float, 0.7, "rx_aperture_m"),
    "channel.w0_m": (_float, 0.02, "beam_waist_m"),
    "channel.lambda_m": (_float, 1550e-9, "wavelength_m"),
    "channel.intrinsic_db": (_float, 15.0, "intrinsic_loss_db"),
    "channel.t_zenith": (_float, 0.75, "zenith_transmittance"),
    "channel.atm_table": (str, None, None),
    "channel.zenith_loss_db": (_float, None, None),
    "detector.p_ec": (_float, 1e-8, "extraneous_count_prob"),
    "detector.p_ap": (_float, 1e-3, "afterpulse_prob"),
    "detector.qber_i": (_float, 1e-3, "intrinsic_qber"),
    "qkd.eps_s": (_float, 1e-9, "eps_s"),
    "qkd.eps_c": (_float, 1e-15, "eps_c"),
    "qkd.alpha": (_int, 19, "alpha"),
    "qkd.f_ec": (_float, 1.16, "f_ec"),
    "qkd.num_decoys": (_int, 1, "num_decoys"),
    "qkd.p_zb": (_float, 0.9, "p_zb"),
    "qkd.window_s": (_float, 1.0, "window_s"),
    "qkd.optimize": (_bool, True, None),
    "qkd.warm_start": (_bool, True, "warm_start"),
    "qkd.mu1": (_float, 0.81, "mu1"),
    "qkd.mu2": (_float, 0.12, "mu2"),
    "qkd.p_mu1": (_float, 0.76, "p_mu1"),
    "qkd.p_za": (_float, 0.88, "p_za"),
    "qkpc.gamma": (_float, 0.1, "gamma"),
    "qkpc.q": (_float, 0.5, "q"),
    "qkpc.optimize_q": (_bool, True, None),
    "qkpc.p_dark": (_float, 1e-8, "p_dark"),
    "qkpc.stray_mean": (_float, 0.0, "stray_mean"),
    "optimizer.restarts": (_int, 8, "restarts"),
    "optimizer.max_evals": (_int, 2000, "max_evals"),
    "optimizer.tolerance": (_float, 1e-6, "tolerance"),
    "optimizer.warm_restarts": (_int, 2, "warm_restarts"),
    "run.seed": (_int, 0, None),
    "run.output_dir": (str, "out", None),
    "run.loss_csv": (str, None, None),
    "run.trials": (_int, 100, None),
}

_LINE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")


@dataclass(frozen=True)
class ScenarioConfig:
    orbit: OrbitConfig = field(default_factory=OrbitConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    detector: DetectorModel = field(default_factory=DetectorModel)
    security: SecurityParams = field(default_factory=SecurityParams)
    qkpc: QkpcParams = field(default_factory=QkpcParams)
    qkd: QkdSettings = field(default_factory=QkdSettings)
    qkpc_optimize_q: bool = True
    zenith_loss_db: float | None = None
    loss_csv: str | None = None
    output_dir: str = "out"
    seed: int = 0
    trials: int = 100

    @property
    def source_rate_hz(self) -> float:
        return self.qkd.source_rate_hz

    @property
    def window_s(self) -> float:
        return self.qkd.window_s


def parse_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        if not line.strip():
            continue
        m = _LINE.match(line)
        if m is None:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = m.groups()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        raw[key] = value
    return raw


def _typed(raw: dict[str, str]) -> dict:
    values = {}
    for key, (parse, default, _) in SCHEMA.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except ValueError as err:
                raise ConfigError(f"{key}: {err}") from None
        else:
            values[key] = default
    return values


def _build(section: str, factory, values: dict, **extra):
    keys = {k: spec[2] for k, spec in SCHEMA.items()
            if k.startswith(section + ".") and spec[2] is not None}
    kwargs = {name: values[k] for k, name in keys.items()}
    kwargs.update(extra)
    try:
        return factory(**kwargs)
    except ValueError as err:
        msg = str(err)
        for key, name in keys.items():
            msg = re.sub(rf"\b{name}\b", key, msg)
        raise ConfigError(msg) from None


def from_mapping(raw: dict[str, str]) -> ScenarioConfig:
    """Validated scenario from string values keyed as in :data:`SCHEMA`."""
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]}")
    v = _typed(raw)
    if v["qkd.window_s"] <= 0:
        raise ConfigError(f"qkd.window_s must be > 0, got {v['qkd.window_s']}")

    # one pass sample per accumulation window
    orbit = _build("orbit", OrbitConfig, v, sample_interval_s=v["qkd.window_s"])
    if v["channel.atm_table"] is not None:
        try:
            atmosphere = TableAtmosphere.from_csv(v["channel.atm_table"])
        except (OSError, ValueError) as err:
            raise ConfigError(f"channel.atm_table: {err}") from None
    else:
        atmosphere = _build("channel", lambda zenith_transmittance, **_: ParametricAtmosphere(
            zenith_transmittance), v)
    channel = _build("channel", lambda zenith_transmittance, **kw: ChannelConfig(**kw),
                     v, atmosphere=atmosphere)
    detector = _build("detector", DetectorModel, v)
    security = _build("qkd", lambda eps_s, eps_c, alpha, f_ec, num_decoys, **_:
                      SecurityParams(eps_s, eps_c, alpha, f_ec, num_decoys), v)
    if security.num_decoys != 1:
        raise ConfigError("qkd.num_decoys: only the one-decoy analysis is implemented")
    fixed = None
    if not v["qkd.optimize"]:
        fixed = _build("qkd", lambda mu1, mu2, p_mu1, p_za, p_zb, **_:
                       ProtocolParams(mu1, mu2, p_mu1, p_za, p_zb), v)
        if fixed.mu1 - fixed.mu2 < MIN_INTENSITY_GAP:
            raise ConfigError("qkd.mu1 must exceed qkd.mu2")
    optimizer = _build("optimizer", lambda restarts, max_evals, tolerance, **_:
                       OptimizerConfig(restarts, max_evals, tolerance), v)
    qkd = _build("qkd", lambda p_zb, window_s, warm_start, **_: QkdSettings(
        detector=detector, security=security, source_rate_hz=v["source.f_s_hz"],
        window_s=window_s, p_zb=p_zb, optimizer=optimizer,
        warm_restarts=v["optimizer.warm_restarts"], warm_start=warm_start, fixed=fixed), v)
    qkpc = _build("qkpc", lambda gamma, q, p_dark, stray_mean, **_:
                  QkpcParams(q=q, gamma=gamma, p_dark=p_dark, stray_mean=stray_mean), v)
    if v["source.f_s_hz"] <= 0:
        raise ConfigError("source.f_s_hz must be > 0")
    if v["run.seed"] < 0:
        raise ConfigError("run.seed must be >= 0")
    if v["run.trials"] < 10:
        raise ConfigError(f"run.trials must be >= 10, got {v['run.trials']}")
    return ScenarioConfig(
        orbit=orbit, channel=channel, detector=detector, security=security, qkpc=qkpc,
        qkd=qkd, qkpc_optimize_q=v["qkpc.optimize_q"], zenith_loss_db=v["channel.zenith_loss_db"],
        loss_csv=v["run.loss_csv"], output_dir=v["run.output_dir"], seed=v["run.seed"],
        trials=v["run.trials"])


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None
                ) -> ScenarioConfig:
    raw: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from None
        raw = parse_text(text)
    raw.update(overrides or {})
    return from_mapping(raw)


def render_defaults() -> str:
    """A config file listing every key at its default value."""
    lines = []
    section = None
    for key, (_, default, _) in SCHEMA.items():
        head = key.split(".")[0]
        if head != section:
            if section is not None:
                lines.append("")
            section = head
        if default is None:
            lines.append(f"# {key} =")
        else:
            text = str(default).lower() if isinstance(default, bool) else str(default)
            lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
