import hashlib
import json
import math
from enum import Enum, IntEnum
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from .config import settings
from .exceptions import ConfigError


# ==================== Enumerations ====================

class Scheme(str, Enum):
    SCHEME1 = "scheme1"          # edge-ASK
    SCHEME2 = "scheme2"          # opportunistic
    PLAIN_FQAM = "plain-fqam"    # QAM on every active tone
    PLAIN_QAM = "plain-qam"      # dense grid, M_F == 1


class GroupMode(IntEnum):
    QAM = 0
    ASK_REAL = 1
    ASK_IMAG = 2


class SirMode(str, Enum):
    ALL_ACTIVE = "all-active"
    FQAM_AVERAGE = "fqam-average"
    FQAM_WORST_CASE = "fqam-worst-case"
    PROJECTED_ASK = "projected-ask"


class AskPhase(str, Enum):
    NONE = "none"
    QUARTER_TURN = "quarter-turn"


class ChannelKind(str, Enum):
    AWGN = "awgn"
    EVA = "eva"


class ReportKind(str, Enum):
    BER = "ber"
    SELFSIR = "selfsir"
    PSD = "psd"
    PAPR = "papr"
    RATE = "rate"
    COMPARE = "compare"


# Built-in frequency-sampling designs, four terms only
PHYDYAS_FILTERS = ("phydyas", "phydyas-interleaved")
PHYDYAS_OVERLAP = 4


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


def _ratio_db(p_signal: float, p_interference: float) -> float:
    return 10 * math.log10(p_signal / p_interference) if p_interference > 0 else math.inf


# ==================== Measurement Schemas ====================

class RateReport(BaseModel):
    mf: int
    mq: int
    scheme: Scheme
    r_bits_per_symbol: float
    r_loss_bits: float
    r_loss_fraction: float
    r_full: float


class SelfSirReport(BaseModel):
    mode: SirMode
    reference: int
    p_signal: float = Field(..., ge=0)
    p_interference: float = Field(..., ge=0)
    gamma_db: float
    p_intra_group: float = Field(0.0, ge=0)
    gamma_total_db: float

    @classmethod
    def from_powers(cls, mode: SirMode, reference: int, p_signal: float,
                    p_interference: float, p_intra_group: float = 0.0) -> "SelfSirReport":
        # Residual rounding can push a vanishing sum slightly negative
        p_interference = max(p_interference, 0.0)
        gamma_db = _ratio_db(p_signal, p_interference)
        # the reference group hops between its own tones from symbol to symbol
        gamma_total_db = _ratio_db(p_signal, p_interference + p_intra_group)
        return cls(
            mode=mode,
            reference=reference,
            p_signal=p_signal,
            p_interference=p_interference,
            gamma_db=gamma_db,
            p_intra_group=p_intra_group,
            gamma_total_db=gamma_total_db,
        )


class BerRecord(BaseModel):
    snr_db: float
    bits_sent: int = Field(..., ge=0)
    bit_errors: int = Field(..., ge=0)
    mode_mismatches: int = 0
    zf_floored: int = 0

    @model_validator(mode="after")
    def check_counts(self) -> "BerRecord":
        if self.bit_errors > self.bits_sent:
            raise ValueError("bit_errors cannot exceed bits_sent")
        return self

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0

    def merged(self, other: "BerRecord") -> "BerRecord":
        """Sum the counters of two records taken at the same SNR point"""
        return BerRecord(
            snr_db=self.snr_db,
            bits_sent=self.bits_sent + other.bits_sent,
            bit_errors=self.bit_errors + other.bit_errors,
            mode_mismatches=self.mode_mismatches + other.mode_mismatches,
            zf_floored=self.zf_floored + other.zf_floored,
        )


class Provenance(BaseModel):
    config_hash: str
    seed: int
    code_version: str
    noise_convention: str = ""


class SweepResult(BaseModel):
    label: str
    records: List[BerRecord]
    provenance: Provenance


def _config_error(e: ValidationError, prefix: str = "") -> ConfigError:
    """First validation failure as a ConfigError with a dotted field path"""
    first = e.errors()[0]
    parts = ([prefix] if prefix else []) + [str(part) for part in first["loc"]]
    return ConfigError(first["msg"], field_path=".".join(parts) or "<root>")


# ==================== Experiment Config Schemas ====================

class WaveformConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m_total: int = Field(100, ge=2, description="Number of subcarriers M")
    num_banks: int = Field(1, ge=1, le=2, description="Filter banks B")
    filters: List[str] = Field(default_factory=lambda: ["phydyas"])
    overlap: int = Field(4, ge=2, description="Overlap factor L")
    extra_filters: List[str] = Field(
        default_factory=list,
        description="Coefficient files evaluated as additional single-bank rows",
    )
    subcarrier_spacing_hz: float = Field(settings.SUBCARRIER_SPACING_HZ, gt=0)

    @field_validator("overlap")
    @classmethod
    def check_overlap(cls, v: int, info: ValidationInfo) -> int:
        builtin = [name for name in info.data.get("filters", []) if name in PHYDYAS_FILTERS]
        if builtin and v != PHYDYAS_OVERLAP:
            raise ValueError(f"filter '{builtin[0]}' only exists for overlap {PHYDYAS_OVERLAP}, got {v}")
        return v

    @model_validator(mode="after")
    def check_banks(self) -> "WaveformConfig":
        if self.m_total % self.num_banks:
            raise ValueError(f"m_total={self.m_total} is not divisible by num_banks={self.num_banks}")
        if len(self.filters) != self.num_banks:
            raise ValueError(f"expected {self.num_banks} filter(s), got {len(self.filters)}")
        return self

    @property
    def sample_rate_hz(self) -> float:
        return self.m_total * self.subcarrier_spacing_hz


class ModulationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mf: int = Field(4, ge=1)
    mq: int = Field(4, ge=4)
    schemes: List[Scheme] = Field(default_factory=lambda: [Scheme.SCHEME1])
    ask_phase: AskPhase = AskPhase.NONE
    wrap_groups: bool = False

    @field_validator("mf")
    @classmethod
    def check_mf(cls, v: int) -> int:
        if not _is_power_of_two(v):
            raise ValueError(f"mf={v} is not a power of two")
        return v

    @field_validator("mq")
    @classmethod
    def check_mq(cls, v: int) -> int:
        if not _is_power_of_two(v) or int(math.log2(v)) % 2:
            raise ValueError(f"mq={v} is not an even power of two")
        return v

    @model_validator(mode="after")
    def check_schemes(self) -> "ModulationConfig":
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        dense = [s == Scheme.PLAIN_QAM for s in self.schemes]
        if self.mf == 1 and not all(dense):
            raise ValueError("mf=1 only supports the plain-qam scheme")
        if self.mf > 1 and any(dense):
            raise ValueError("plain-qam requires mf=1")
        return self


class ChannelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ChannelKind = ChannelKind.AWGN
    speed_kmh: float = Field(50.0, ge=0)
    carrier_hz: float = Field(settings.CARRIER_FREQUENCY_HZ, gt=0)
    seed: int = Field(0, ge=0)
    fading: bool = True
    num_sinusoids: int = Field(32, ge=4)


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    snr_db: List[float] = Field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0])
    min_bits: int = Field(100_000, ge=1)
    max_bits: int = Field(1_000_000, ge=1)
    target_errors: int = Field(100, ge=1)
    symbols_per_frame: int = Field(32, ge=1)
    trials_per_batch: int = Field(16, ge=1)
    include_oracle: bool = False

    @model_validator(mode="after")
    def check_bits(self) -> "SweepConfig":
        if self.max_bits < self.min_bits:
            raise ValueError("max_bits must be at least min_bits")
        if not self.snr_db:
            raise ValueError("snr_db grid is empty")
        return self


class PsdConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    oversample: int = Field(8, ge=4)
    segment_length: int = Field(1024, ge=16)
    overlap_fraction: float = Field(0.5, ge=0, lt=1)
    num_symbols: int = Field(2000, ge=1)


class PaprConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    num_symbols: int = Field(20_000, ge=1)
    symbols_per_frame: int = Field(100, ge=1)
    min_probability: float = Field(1e-3, gt=0, lt=1)


class RateConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pairs: List[Tuple[int, int]] = Field(default_factory=lambda: [(4, 4), (8, 4)])
    schemes: List[Scheme] = Field(default_factory=lambda: [Scheme.SCHEME1, Scheme.SCHEME2])
    groups: int = Field(64, ge=2)
    num_symbols: int = Field(20_000, ge=1)


class OutputsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = None
    reports: List[ReportKind] = Field(
        default_factory=lambda: [ReportKind.BER, ReportKind.SELFSIR, ReportKind.PSD, ReportKind.PAPR, ReportKind.RATE],
        description="Reports the run subcommand emits, in this order",
    )

    @field_validator("reports")
    @classmethod
    def check_reports(cls, v: List[ReportKind]) -> List[ReportKind]:
        if len(set(v)) != len(v):
            raise ValueError("reports are listed more than once")
        return v


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    waveform: WaveformConfig = Field(default_factory=WaveformConfig)
    modulation: ModulationConfig = Field(default_factory=ModulationConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    psd: PsdConfig = Field(default_factory=PsdConfig)
    papr: PaprConfig = Field(default_factory=PaprConfig)
    rate: RateConfig = Field(default_factory=RateConfig)
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)

    @model_validator(mode="after")
    def check_layout(self) -> "ExperimentConfig":
        m_total, mf = self.waveform.m_total, self.modulation.mf
        if m_total % mf:
            raise ValueError(f"m_total={m_total} is not divisible by mf={mf}")
        return self

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        """Load and validate a JSON experiment document"""
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            raise _config_error(e) from e

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        """Copy with channel.seed replaced, validated like a file value"""
        if seed is None:
            return self
        try:
            channel = ChannelConfig.model_validate({**self.channel.model_dump(), "seed": seed})
        except ValidationError as e:
            raise _config_error(e, "channel") from e
        return self.model_copy(update={"channel": channel})

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
