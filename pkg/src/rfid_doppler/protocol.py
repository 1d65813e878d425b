"""Gen2 uplink timing model: BLF, FM0/Miller encodings, and reply durations.

Durations are kept as exact rationals (symbol counts over an integer-valued
BLF grid) and only converted to float seconds on demand, so the standard's
duration table is reproduced without accumulated rounding.

Model of a tag reply signal, in uplink symbols:

    symbols = preamble + payload + (16 CRC bits, EPC reply only) + 1 end symbol

with preamble lengths (pilot pattern + sync) of

    FM0:    18 symbols with pilot (TRext=1), 6 without
    Miller: 22 symbols with pilot (TRext=1), 10 without

and a symbol period of M/BLF.  The EPC reply is modeled as preamble + EPC +
CRC16 + end symbol; a separate protocol-control word is deliberately not
included (the duration table is only consistent without it).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .configfile import parse_bool, read_key_values

BLF_MIN_HZ = 40_000.0
BLF_MAX_HZ = 640_000.0

CRC16_BITS = 16
RN16_BITS = 16
END_OF_SIGNALING_SYMBOLS = 1

# preamble symbol totals, keyed by (is_miller, trext)
_PREAMBLE_SYMBOLS = {
    (False, False): 6,
    (False, True): 18,
    (True, False): 10,
    (True, True): 22,
}


@dataclass(frozen=True)
class EncodingScheme:
    """Uplink data encoding: FM0 or one of the Miller modes."""

    name: str
    spread_factor: int

    def __post_init__(self):
        if self.spread_factor not in (1, 2, 4, 8):
            raise ValueError(f"spread factor must be 1, 2, 4 or 8, got {self.spread_factor}")

    @property
    def is_miller(self) -> bool:
        return self.spread_factor > 1


FM0 = EncodingScheme("FM0", 1)
MILLER2 = EncodingScheme("Miller2", 2)
MILLER4 = EncodingScheme("Miller4", 4)
MILLER8 = EncodingScheme("Miller8", 8)

ENCODINGS = {e.name: e for e in (FM0, MILLER2, MILLER4, MILLER8)}


def encoding_from_name(name: str) -> EncodingScheme:
    """Look up an encoding by a forgiving name ('FM0', 'miller-8', 'M4', ...)."""
    key = name.strip().lower().replace("-", "").replace("_", "").replace(" ", "")
    aliases = {
        "fm0": FM0, "m1": FM0,
        "miller2": MILLER2, "m2": MILLER2,
        "miller4": MILLER4, "m4": MILLER4,
        "miller8": MILLER8, "m8": MILLER8,
    }
    try:
        return aliases[key]
    except KeyError:
        raise ValueError(f"unknown encoding {name!r} (expected FM0 or Miller-2/4/8)") from None


def _check_blf(blf_hz) -> None:
    if not (BLF_MIN_HZ <= blf_hz <= BLF_MAX_HZ):
        raise ValueError(f"BLF {blf_hz} Hz outside the standard 40-640 kHz range")


@dataclass(frozen=True)
class ReaderMode:
    """One reader uplink configuration (what a Query command pins down)."""

    label: str
    blf_hz: float
    encoding: EncodingScheme
    trext: bool = True
    epc_bits: int = 96
    sensitivity_dbm: Optional[float] = None

    def __post_init__(self):
        _check_blf(self.blf_hz)
        if self.epc_bits not in (96, 128, 256):
            raise ValueError(f"EPC length must be 96, 128 or 256 bits, got {self.epc_bits}")


@dataclass(frozen=True)
class ReplyTiming:
    """Durations of a successful tag reply: first packet, pause, second packet.

    Values are exact rational seconds; use float() for arithmetic.
    """

    t_rn16: Fraction
    t_pause: Fraction
    t_epc: Fraction

    def __post_init__(self):
        for name in ("t_rn16", "t_pause", "t_epc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def single(self, part: str) -> Fraction:
        """Duration of one signal part ('rn16' or 'epc') viewed in isolation."""
        if part == "rn16":
            return self.t_rn16
        if part == "epc":
            return self.t_epc
        raise ValueError(f"unknown signal part {part!r}")

    @property
    def total(self) -> Fraction:
        return self.t_rn16 + self.t_pause + self.t_epc


def symbol_period(blf_hz, scheme: EncodingScheme) -> Fraction:
    """Uplink symbol period M/BLF as an exact rational in seconds."""
    _check_blf(blf_hz)
    return Fraction(scheme.spread_factor) / Fraction(blf_hz)


def preamble_symbols(scheme: EncodingScheme, trext: bool) -> int:
    """Preamble length in symbols (pilot pattern plus sync sequence)."""
    return _PREAMBLE_SYMBOLS[(scheme.is_miller, bool(trext))]


def reply_symbol_counts(scheme: EncodingScheme, payload_bits: int, trext: bool,
                        with_crc: bool) -> int:
    """Total uplink symbols of a reply: preamble + payload (+CRC16) + end symbol."""
    if payload_bits <= 0:
        raise ValueError(f"payload_bits must be positive, got {payload_bits}")
    count = preamble_symbols(scheme, trext) + payload_bits
    if with_crc:
        count += CRC16_BITS
    return count + END_OF_SIGNALING_SYMBOLS


def signal_duration(mode: ReaderMode, kind: str) -> Fraction:
    """Exact duration in seconds of one reply signal ('rn16' or 'epc')."""
    kind = kind.lower()
    if kind == "rn16":
        count = reply_symbol_counts(mode.encoding, RN16_BITS, mode.trext, with_crc=False)
    elif kind == "epc":
        count = reply_symbol_counts(mode.encoding, mode.epc_bits, mode.trext, with_crc=True)
    else:
        raise ValueError(f"unknown signal kind {kind!r} (expected 'rn16' or 'epc')")
    return count * symbol_period(mode.blf_hz, mode.encoding)


def pause_duration(blf_hz) -> Fraction:
    """Pause between the two reply parts, affine in 1/BLF.

    T_pause = 0.12 ms + 51.2/BLF, which passes through 1.4 ms at 40 kHz and
    0.2 ms at 640 kHz.
    """
    _check_blf(blf_hz)
    return Fraction(3, 25000) + Fraction(256, 5) / Fraction(blf_hz)


def reply_timing(mode: ReaderMode) -> ReplyTiming:
    """Assemble the (T1, T_pause, T2) triple for a full two-part reply."""
    return ReplyTiming(
        t_rn16=signal_duration(mode, "rn16"),
        t_pause=pause_duration(mode.blf_hz),
        t_epc=signal_duration(mode, "epc"),
    )


# Built-in catalog: the two named modes of the reader analyzed in this work.
# The Mode 204 sensitivity is not published, so it stays unset.
_BUILTIN_MODES = (
    ReaderMode("Mode 290", 160_000.0, MILLER8, trext=True, epc_bits=96,
               sensitivity_dbm=-95.8),
    ReaderMode("Mode 204", 320_000.0, FM0, trext=True, epc_bits=96,
               sensitivity_dbm=None),
)

_MODE_FIELDS = ("label", "blf_hz", "encoding", "trext", "epc_bits", "sensitivity_dbm")


def load_reader_modes(path) -> list[ReaderMode]:
    """Read extra reader modes from a flat key-value file.

    A ``label`` key starts a new mode; the other keys (blf_hz, encoding,
    trext, epc_bits, sensitivity_dbm) apply to the most recent label.
    """
    modes: list[ReaderMode] = []
    current: dict | None = None

    def flush():
        if current is None:
            return
        try:
            modes.append(ReaderMode(
                label=current["label"],
                blf_hz=float(current["blf_hz"]),
                encoding=encoding_from_name(current["encoding"]),
                trext=parse_bool(current.get("trext", "true")),
                epc_bits=int(current.get("epc_bits", "96")),
                sensitivity_dbm=(float(current["sensitivity_dbm"])
                                 if "sensitivity_dbm" in current else None),
            ))
        except KeyError as exc:
            raise ValueError(f"{path}: mode {current.get('label')!r} missing key {exc}") from None

    for key, value in read_key_values(path):
        if key == "label":
            flush()
            current = {"label": value}
            continue
        if key not in _MODE_FIELDS:
            raise ValueError(f"{path}: unknown reader-mode key {key!r}")
        if current is None:
            raise ValueError(f"{path}: {key!r} before any 'label'")
        current[key] = value
    flush()
    return modes


def reader_mode_catalog(extra_path=None) -> list[ReaderMode]:
    """Built-in reader modes, optionally extended from a config file."""
    modes = list(_BUILTIN_MODES)
    if extra_path is not None:
        modes.extend(load_reader_modes(extra_path))
    return modes


def find_reader_mode(label: str, extra_path=None) -> ReaderMode:
    """Catalog lookup by label; raises KeyError if absent."""
    for mode in reader_mode_catalog(extra_path):
        if mode.label == label:
            return mode
    raise KeyError(f"no reader mode labeled {label!r} in the catalog")
