"""EDF (European Data Format) ingest.

Bit-exact reader and writer for the classic EDF container: a 256-byte
fixed-width ASCII global header, 256 bytes of per-signal header fields per
signal (stored field-major: all labels, then all transducers, ...), and data
records of interleaved 16-bit little-endian two's-complement samples.

Also provides the dataset catalog for the PhysioNet-style layout
``<root>/S###/S###R##.edf`` where run 01 is the eyes-open baseline and run
02 the eyes-closed baseline.  Annotation streams ("EDF Annotations") are
dropped; their payload is never decoded.
"""

from __future__ import annotations

import enum
import math
import os
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ANNOTATION_LABEL = "EDF Annotations"

# global header field widths, in order
_GLOBAL_FIELDS = (
    ("version", 8),
    ("patient_id", 80),
    ("recording_id", 80),
    ("start_date", 8),
    ("start_time", 8),
    ("header_bytes", 8),
    ("reserved", 44),
    ("n_data_records", 8),
    ("record_duration_s", 8),
    ("n_signals", 4),
)

# per-signal field widths, field-major blocks in this order
_SIGNAL_FIELDS = (
    ("label", 16),
    ("transducer", 80),
    ("physical_dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefiltering", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
)


class EdfParseError(ValueError):
    """Malformed EDF input; the message names the offending byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class Condition(enum.Enum):
    """Resting-state condition; values double as file/CLI tokens."""

    EYES_OPEN = "EO"
    EYES_CLOSED = "EC"

    def __str__(self):
        return self.value


RUN_CONDITIONS = {1: Condition.EYES_OPEN, 2: Condition.EYES_CLOSED}


@dataclass
class EdfHeader:
    version: str
    patient_id: str
    recording_id: str
    start_date: str
    start_time: str
    header_bytes: int
    n_data_records: int
    record_duration_s: float
    n_signals: int
    reserved: str = ""


@dataclass
class SignalSpec:
    label: str
    transducer: str
    physical_dimension: str
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int
    prefiltering: str
    samples_per_record: int
    reserved: str = ""

    @property
    def gain(self) -> float:
        return (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)

    def validate(self):
        if self.digital_min >= self.digital_max:
            raise ValueError(
                f"signal {self.label!r}: digital range [{self.digital_min}, "
                f"{self.digital_max}] is empty"
            )
        if self.physical_min == self.physical_max:
            raise ValueError(f"signal {self.label!r}: physical range is zero")
        if not math.isfinite(self.gain) or self.gain == 0.0:
            raise ValueError(f"signal {self.label!r}: gain is not finite and nonzero")


@dataclass
class Recording:
    """One subject/condition's EEG in physical units (uV), channels x samples."""

    subject_id: str
    condition: Condition
    sample_rate: float
    channel_labels: list[str]
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] != len(self.channel_labels):
            raise ValueError("data must be channels x samples matching channel_labels")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("recording contains NaN/Inf samples")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass
class DatasetCatalog:
    entries: list[tuple[str, Condition, Path]] = field(default_factory=list)
    excluded: list[tuple[Path, str]] = field(default_factory=list)

    def subjects(self) -> list[str]:
        return sorted({s for s, _, _ in self.entries})

    def for_condition(self, condition: Condition) -> list[tuple[str, Path]]:
        return [(s, p) for s, c, p in self.entries if c is condition]


def _ascii_field(buf: bytes, offset: int, width: int) -> str:
    raw = buf[offset : offset + width]
    try:
        return raw.decode("ascii").strip()
    except UnicodeDecodeError as exc:
        raise EdfParseError(f"non-ASCII bytes in header field: {raw!r}", offset) from exc


def _int_field(buf: bytes, offset: int, width: int, name: str) -> int:
    text = _ascii_field(buf, offset, width)
    try:
        return int(text)
    except ValueError as exc:
        raise EdfParseError(f"non-numeric {name} field {text!r}", offset) from exc


def _float_field(buf: bytes, offset: int, width: int, name: str) -> float:
    text = _ascii_field(buf, offset, width)
    try:
        return float(text)
    except ValueError as exc:
        raise EdfParseError(f"non-numeric {name} field {text!r}", offset) from exc


def parse_header(buf: bytes) -> EdfHeader:
    """Decode the 256-byte global header."""
    if len(buf) < 256:
        raise EdfParseError(f"file too short for global header ({len(buf)} bytes)", len(buf))
    values = {}
    offset = 0
    for name, width in _GLOBAL_FIELDS:
        if name in ("header_bytes", "n_data_records", "n_signals"):
            values[name] = _int_field(buf, offset, width, name)
        elif name == "record_duration_s":
            values[name] = _float_field(buf, offset, width, name)
        else:
            values[name] = _ascii_field(buf, offset, width)
        offset += width
    header = EdfHeader(**values)
    if header.n_signals < 1:
        raise EdfParseError(f"n_signals = {header.n_signals} < 1", 252)
    if header.header_bytes != 256 + 256 * header.n_signals:
        raise EdfParseError(
            f"header size mismatch: header_bytes = {header.header_bytes}, expected "
            f"{256 + 256 * header.n_signals} for {header.n_signals} signals",
            184,
        )
    if header.record_duration_s <= 0:
        raise EdfParseError(f"record duration {header.record_duration_s} <= 0", 244)
    return header


def parse_signal_specs(buf: bytes, header: EdfHeader) -> list[SignalSpec]:
    """Decode the field-major per-signal header block."""
    ns = header.n_signals
    if len(buf) < header.header_bytes:
        raise EdfParseError(
            f"file too short for {ns} signal headers ({len(buf)} < {header.header_bytes})",
            len(buf),
        )
    specs = [dict() for _ in range(ns)]
    offset = 256
    for name, width in _SIGNAL_FIELDS:
        for i in range(ns):
            if name in ("digital_min", "digital_max", "samples_per_record"):
                specs[i][name] = _int_field(buf, offset, width, name)
            elif name in ("physical_min", "physical_max"):
                specs[i][name] = _float_field(buf, offset, width, name)
            else:
                specs[i][name] = _ascii_field(buf, offset, width)
            offset += width
    out = []
    for i, kw in enumerate(specs):
        spec = SignalSpec(**kw)
        if spec.samples_per_record < 1:
            raise EdfParseError(f"signal {i}: samples_per_record < 1", 256 + 256 * ns)
        spec.validate()
        out.append(spec)
    return out


def parse_edf(data: bytes) -> tuple[EdfHeader, list[SignalSpec], list[np.ndarray]]:
    """Parse a complete EDF file image.

    Returns the header, the per-signal specs, and one int16 array of raw
    digital samples per signal (length ``n_data_records * samples_per_record``).
    A header count of -1 ("unknown") is replaced by the count implied by the
    file size, provided the data section is a whole number of records.
    """
    header = parse_header(data)
    specs = parse_signal_specs(data, header)
    spr = np.array([s.samples_per_record for s in specs], dtype=np.int64)
    record_samples = int(spr.sum())
    record_bytes = 2 * record_samples
    body = len(data) - header.header_bytes

    n_records = header.n_data_records
    if n_records == -1:
        n_records, rem = divmod(body, record_bytes)
        if rem:
            raise EdfParseError(
                "record count unknown (-1) and data section is not a whole number "
                f"of records ({body} bytes, record = {record_bytes})",
                header.header_bytes + body - rem,
            )
        header.n_data_records = n_records
    if n_records < 1:
        raise EdfParseError(f"n_data_records = {n_records} < 1", 236)

    expected = n_records * record_bytes
    if body < expected:
        raise EdfParseError(
            f"truncated data section: need {expected} bytes for {n_records} records, "
            f"have {body}",
            len(data),
        )
    if body > expected:
        warnings.warn(
            f"{body - expected} trailing bytes after the last data record ignored",
            stacklevel=2,
        )

    raw = np.frombuffer(data, dtype="<i2", count=n_records * record_samples,
                        offset=header.header_bytes)
    records = raw.reshape(n_records, record_samples)
    offsets = np.concatenate(([0], np.cumsum(spr)))
    samples = [
        np.ascontiguousarray(records[:, offsets[i] : offsets[i + 1]]).reshape(-1)
        for i in range(len(specs))
    ]
    return header, specs, samples


def _num_ascii(value, width: int) -> bytes:
    """Fixed-width ASCII for a numeric field; errors if it cannot fit."""
    if isinstance(value, (int, np.integer)):
        text = str(int(value))
    else:
        text = f"{value:.10g}"
        if len(text) > width:
            text = f"{value:.{max(width - 6, 1)}g}"
    if len(text) > width:
        raise ValueError(f"numeric value {value!r} does not fit in {width} ASCII chars")
    return text.ljust(width).encode("ascii")


def _text_ascii(value: str, width: int) -> bytes:
    raw = value.encode("ascii")
    if len(raw) > width:
        raise ValueError(f"text {value!r} longer than {width} chars")
    return raw.ljust(width)


def write_edf(header: EdfHeader, specs: list[SignalSpec],
              samples: list[np.ndarray]) -> bytes:
    """Serialize to EDF bytes; exact inverse of :func:`parse_edf`."""
    ns = len(specs)
    if header.n_signals != ns:
        raise ValueError("header.n_signals disagrees with specs")
    if header.header_bytes != 256 + 256 * ns:
        raise ValueError("header.header_bytes inconsistent with signal count")
    if len(samples) != ns:
        raise ValueError("one sample array required per signal")

    parts = []
    global_values = {
        "version": header.version,
        "patient_id": header.patient_id,
        "recording_id": header.recording_id,
        "start_date": header.start_date,
        "start_time": header.start_time,
        "header_bytes": header.header_bytes,
        "reserved": header.reserved,
        "n_data_records": header.n_data_records,
        "record_duration_s": header.record_duration_s,
        "n_signals": header.n_signals,
    }
    for name, width in _GLOBAL_FIELDS:
        v = global_values[name]
        parts.append(_num_ascii(v, width) if isinstance(v, (int, float)) else _text_ascii(v, width))
    for name, width in _SIGNAL_FIELDS:
        for spec in specs:
            v = getattr(spec, name)
            parts.append(_num_ascii(v, width) if isinstance(v, (int, float)) else _text_ascii(v, width))

    n_rec = header.n_data_records
    columns = []
    for spec, arr in zip(specs, samples):
        arr = np.asarray(arr)
        if arr.size != n_rec * spec.samples_per_record:
            raise ValueError(
                f"signal {spec.label!r}: {arr.size} samples, expected "
                f"{n_rec * spec.samples_per_record}"
            )
        columns.append(arr.astype("<i2").reshape(n_rec, spec.samples_per_record))
    body = np.concatenate(columns, axis=1) if columns else np.empty((n_rec, 0), "<i2")
    parts.append(body.tobytes())
    return b"".join(parts)


def to_physical(digital, specs: list[SignalSpec]):
    """Affine digital-to-physical conversion, one spec per channel.

    ``physical = (digital - digital_min) * gain + physical_min``.  Values
    outside [digital_min, digital_max] are clamped and counted (a warning
    reports the count).  Accepts a 2-D matrix or a list of 1-D arrays and
    returns the same shape in float64.
    """
    arrays = list(digital) if isinstance(digital, (list, tuple)) else [row for row in np.asarray(digital)]
    if len(arrays) != len(specs):
        raise ValueError(f"{len(arrays)} channels but {len(specs)} signal specs")
    out = []
    n_clamped = 0
    for arr, spec in zip(arrays, specs):
        spec.validate()
        values = np.asarray(arr, dtype=np.float64)
        low, high = float(spec.digital_min), float(spec.digital_max)
        bad = int(np.count_nonzero((values < low) | (values > high)))
        if bad:
            n_clamped += bad
            values = np.clip(values, low, high)
        out.append((values - low) * spec.gain + spec.physical_min)
    if n_clamped:
        warnings.warn(f"{n_clamped} digital samples outside the declared range were clamped",
                      stacklevel=2)
    if not isinstance(digital, (list, tuple)):
        return np.vstack(out)
    return out


def recording_from_edf(data: bytes, subject_id: str, condition: Condition,
                       drop_labels: tuple[str, ...] = (ANNOTATION_LABEL,)) -> Recording:
    """Parse EDF bytes into a physical-unit Recording, dropping annotation streams."""
    header, specs, samples = parse_edf(data)
    keep = [i for i, s in enumerate(specs) if s.label not in drop_labels]
    if not keep:
        raise ValueError("no EEG channels left after dropping annotation streams")
    rates = {specs[i].samples_per_record / header.record_duration_s for i in keep}
    if len(rates) != 1:
        raise ValueError(f"retained channels disagree on sample rate: {sorted(rates)}")
    physical = to_physical([samples[i] for i in keep], [specs[i] for i in keep])
    return Recording(
        subject_id=subject_id,
        condition=condition,
        sample_rate=rates.pop(),
        channel_labels=[specs[i].label for i in keep],
        data=np.vstack(physical),
    )


def load_recording(path: Path, subject_id: str, condition: Condition) -> Recording:
    return recording_from_edf(Path(path).read_bytes(), subject_id, condition)


_RUN_FILE = re.compile(r"^(S\d{3})R(\d{2})\.edf$")


def _validate_entry(path: Path, expected_rate: float, expected_channels: int) -> str | None:
    """Header-level validation; returns an exclusion reason or None."""
    with open(path, "rb") as fh:
        head = fh.read(256)
        header = parse_header(head)
        rest = fh.read(header.header_bytes - 256)
    specs = parse_signal_specs(head + rest, header)

    eeg = [s for s in specs if s.label != ANNOTATION_LABEL]
    if len(eeg) != expected_channels:
        return f"channel_count != {expected_channels} (found {len(eeg)})"
    rates = {s.samples_per_record / header.record_duration_s for s in eeg}
    if len(rates) != 1:
        return f"mixed sample rates {sorted(rates)}"
    rate = rates.pop()
    if abs(rate - expected_rate) > 1e-9:
        return f"sample_rate != {expected_rate:g} (found {rate:g})"

    record_bytes = 2 * sum(s.samples_per_record for s in specs)
    if header.n_data_records >= 1:
        expected_size = header.header_bytes + header.n_data_records * record_bytes
        if os.path.getsize(path) < expected_size:
            return f"truncated (need {expected_size} bytes)"
    return None


def catalog_dataset(root: Path, expected_rate: float = 160.0,
                    expected_channels: int = 64) -> DatasetCatalog:
    """Scan a ``<root>/S###/S###R##.edf`` tree into baseline-run entries.

    Run 01 maps to eyes-open, run 02 to eyes-closed; other runs are ignored.
    Files that fail header validation land in ``excluded`` with a reason.
    Raises if the tree contains no EDF files at all.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    catalog = DatasetCatalog()
    seen: set[tuple[str, Condition]] = set()
    found_any = False
    for sub_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for path in sorted(sub_dir.glob("*.edf")):
            found_any = True
            m = _RUN_FILE.match(path.name)
            if not m:
                catalog.excluded.append((path, "unrecognized file name"))
                continue
            subject, run = m.group(1), int(m.group(2))
            condition = RUN_CONDITIONS.get(run)
            if condition is None:
                continue  # task run, not a baseline
            key = (subject, condition)
            if key in seen:
                catalog.excluded.append((path, f"duplicate entry for {subject}/{condition}"))
                continue
            try:
                reason = _validate_entry(path, expected_rate, expected_channels)
            except (OSError, EdfParseError) as exc:
                reason = f"unreadable: {exc}"
            if reason is not None:
                catalog.excluded.append((path, reason))
                continue
            seen.add(key)
            catalog.entries.append((subject, condition, path))
    if not found_any:
        raise ValueError(f"no EDF files found under {root}")
    order = {Condition.EYES_OPEN: 0, Condition.EYES_CLOSED: 1}
    catalog.entries.sort(key=lambda e: (e[0], order[e[1]]))
    return catalog
