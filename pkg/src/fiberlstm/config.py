"""Experiment configuration: validated dataclasses and JSON (de)serialization.

Defaults echo the numerical model table: 25 Gbaud dual-pol 16-QAM, 50 km
spans, 50 GHz spacing, per-band attenuation/dispersion/gain, 5 dB noise
figure. Desk-scale simulation controls (16 samples/symbol, 50 steps/span,
20000/5000/5000 symbol splits) keep runs at CPU-minutes while preserving
the studied trends; the full-scale settings remain reachable through the
same fields.
"""

import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .fiber import AmpParams, FiberParams, LinkConfig

EQUALIZERS = ("fde", "dbp", "fde+lstm")
NEIGHBOR_MODULATIONS = ("16qam", "qpsk")

_FIBER_DEFAULTS = {
    "C": {"alpha_db_per_km": 0.2, "beta2_ps2_per_km": -21.5, "gamma_per_w_km": 1.3, "span_km": 50.0},
    "O": {"alpha_db_per_km": 0.34, "beta2_ps2_per_km": -0.82, "gamma_per_w_km": 1.3, "span_km": 50.0},
}
_AMP_DEFAULTS = {
    "C": {"gain_db": 10.0, "noise_figure_db": 5.0, "wavelength_nm": 1550.0},
    "O": {"gain_db": 17.0, "noise_figure_db": 5.0, "wavelength_nm": 1310.0},
}


@dataclass
class LstmSettings:
    hidden_units: int = 16
    context_symbols: int = 15  # k; word length m = 2k + 1
    batch_size: int = 512
    max_epochs: int = 400
    patience: int = 20
    learning_rate: float = 1e-3

    @property
    def word_length(self):
        return 2 * self.context_symbols + 1


@dataclass
class SymbolBudget:
    train: int = 20000
    val: int = 5000
    test: int = 5000

    @property
    def total(self):
        return self.train + self.val + self.test

    @property
    def fractions(self):
        return (self.train / self.total, self.val / self.total, self.test / self.total)


@dataclass
class ExperimentConfig:
    band: str = "C"
    n_channels: int = 1
    n_spans: int = 10
    launch_power_dbm: object = 0.0  # scalar or list (sweep axis)
    equalizer: object = "fde"  # one of EQUALIZERS, or list (sweep axis)
    dbp_steps_per_span: object = 2  # scalar or list
    dbp_samples_per_symbol: int = 4
    lstm: LstmSettings = field(default_factory=LstmSettings)
    symbols: SymbolBudget = field(default_factory=SymbolBudget)
    seed: int = 1
    samples_per_symbol: int = 16
    steps_per_span: int = 50
    rolloff: float = 0.1
    spacing_ghz: float = 50.0
    baud_rate: float = 25e9
    noiseless: bool = False
    fiber_overrides: dict = field(default_factory=dict)
    neighbor_modulation: str = "16qam"
    train_power_dbm: object = None  # set for power-mismatch runs
    train_neighbor_modulation: object = None  # set for modulation-mismatch runs
    min_bit_errors: int = 10
    max_extra_test_batches: int = 0
    extra_test_batch_symbols: int = 20000

    def validate(self):
        if self.band not in ("C", "O"):
            raise ConfigError(f"band must be 'C' or 'O', got {self.band!r}")
        if self.n_channels < 1:
            raise ConfigError("n_channels must be >= 1")
        if self.n_spans < 0:
            raise ConfigError("n_spans must be >= 0")
        for eq in self.equalizer if isinstance(self.equalizer, list) else [self.equalizer]:
            if eq not in EQUALIZERS:
                raise ConfigError(f"equalizer must be one of {EQUALIZERS}, got {eq!r}")
        if self.neighbor_modulation not in NEIGHBOR_MODULATIONS:
            raise ConfigError(f"neighbor_modulation must be one of {NEIGHBOR_MODULATIONS}")
        if self.train_neighbor_modulation is not None and (
            self.train_neighbor_modulation not in NEIGHBOR_MODULATIONS
        ):
            raise ConfigError(f"train_neighbor_modulation must be one of {NEIGHBOR_MODULATIONS}")
        if self.samples_per_symbol < 4 or self.samples_per_symbol % 4 != 0:
            raise ConfigError("samples_per_symbol must be a multiple of 4")
        if self.dbp_samples_per_symbol not in (4, self.samples_per_symbol):
            raise ConfigError("dbp_samples_per_symbol must be 4 or the simulation rate")
        if min(self.symbols.train, self.symbols.val, self.symbols.test) < 1:
            raise ConfigError("symbol budgets must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError("rolloff must lie in [0, 1]")
        for key in self.fiber_overrides:
            if key not in _FIBER_DEFAULTS["C"]:
                raise ConfigError(f"unknown fiber override {key!r}")
        return self

    def fiber_params(self):
        values = dict(_FIBER_DEFAULTS[self.band])
        values.update(self.fiber_overrides)
        return FiberParams(**values)

    def amp_params(self):
        return AmpParams(noiseless=self.noiseless, **_AMP_DEFAULTS[self.band])

    def link(self):
        return LinkConfig(
            n_spans=self.n_spans,
            fiber=self.fiber_params(),
            amp=self.amp_params(),
            steps_per_span_forward=self.steps_per_span,
            samples_per_symbol=self.samples_per_symbol,
            band=self.band,
            n_channels=self.n_channels,
            spacing_hz=self.spacing_ghz * 1e9,
        )

    def to_dict(self):
        return asdict(self)


_SCALAR_FIELDS = {
    "band": str, "n_channels": int, "n_spans": int, "dbp_samples_per_symbol": int,
    "seed": int, "samples_per_symbol": int, "steps_per_span": int, "rolloff": float,
    "spacing_ghz": float, "baud_rate": float, "noiseless": bool,
    "neighbor_modulation": str, "min_bit_errors": int,
    "max_extra_test_batches": int, "extra_test_batch_symbols": int,
}
_AXIS_FIELDS = {"launch_power_dbm", "equalizer", "dbp_steps_per_span"}
_OPTIONAL_FIELDS = {"train_power_dbm", "train_neighbor_modulation"}


def config_from_dict(doc):
    """Build and validate an ExperimentConfig from a plain dict (JSON document)."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    known = set(_SCALAR_FIELDS) | _AXIS_FIELDS | _OPTIONAL_FIELDS | {"lstm", "symbols", "fiber_overrides"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, caster in _SCALAR_FIELDS.items():
        if key in doc:
            try:
                kwargs[key] = caster(doc[key])
            except (TypeError, ValueError) as err:
                raise ConfigError(f"bad value for {key!r}: {err}") from err
    for key in _AXIS_FIELDS | _OPTIONAL_FIELDS:
        if key in doc:
            kwargs[key] = doc[key]
    if "lstm" in doc:
        try:
            kwargs["lstm"] = LstmSettings(**doc["lstm"])
        except TypeError as err:
            raise ConfigError(f"bad lstm settings: {err}") from err
    if "symbols" in doc:
        try:
            kwargs["symbols"] = SymbolBudget(**doc["symbols"])
        except TypeError as err:
            raise ConfigError(f"bad symbol budget: {err}") from err
    if "fiber_overrides" in doc:
        kwargs["fiber_overrides"] = dict(doc["fiber_overrides"])
    return ExperimentConfig(**kwargs).validate()


def load_config(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: invalid JSON: {err}") from err
    return config_from_dict(doc)


def save_config(cfg, path):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
