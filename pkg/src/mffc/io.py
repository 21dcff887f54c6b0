"""File formats: MFFC1 containers, descriptor stores, manifests, pairs and images."""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .diversify import OffspringSet
from .errors import FormatError, InputError
from .evaluation import VerifyPair
from .gabor import FilterBank
from .wpca import WpcaModel

MAGIC = b"MFFC1\n"
STORE_MAGIC = b"MFFC-DESC1\n"
LUMA = (0.299, 0.587, 0.114)


def atomic_write(path, data: bytes) -> None:
    """Write to a temporary sibling, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- MFFC1 container ---------------------------------------------------------

def _header_value(value) -> str:
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(str(int(v)) for v in value)
    text = str(value)
    if "\n" in text:
        raise FormatError("header values must be single-line")
    return text


def dump_container(artifact: str, meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    lines = [f"artifact={artifact}"]
    for key in meta:
        if key in ("artifact", "arrays"):
            raise FormatError(f"reserved header key {key!r}")
        lines.append(f"{key}={_header_value(meta[key])}")
    shapes = ";".join(f"{name}:{'x'.join(str(s) for s in arr.shape)}" for name, arr in arrays.items())
    lines.append(f"arrays={shapes}")
    header = ("\n".join(lines) + "\n\n").encode()
    payload = b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for arr in arrays.values())
    return MAGIC + header + payload


def write_container(path, artifact: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    atomic_write(path, dump_container(artifact, meta, arrays))


def parse_container(data: bytes) -> tuple[str, dict[str, str], dict[str, np.ndarray]]:
    if not data.startswith(MAGIC):
        raise FormatError("not an MFFC1 container")
    end = data.find(b"\n\n", len(MAGIC) - 1)
    if end < 0:
        raise FormatError("container header is not terminated by a blank line")
    meta = {}
    for line in data[len(MAGIC):end].decode().splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"bad header line {line!r}")
        meta[key] = value
    artifact = meta.pop("artifact", "")
    arrays = {}
    offset = end + 2
    for spec in filter(None, meta.pop("arrays", "").split(";")):
        name, _, dims = spec.partition(":")
        shape = tuple(int(s) for s in dims.split("x")) if dims else ()
        count = int(np.prod(shape))
        chunk = data[offset:offset + 8 * count]
        if len(chunk) != 8 * count:
            raise FormatError(f"payload for {name!r} is truncated")
        arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        offset += 8 * count
    if offset != len(data):
        raise FormatError("trailing bytes after container payload")
    return artifact, meta, arrays


def read_container(path):
    return parse_container(Path(path).read_bytes())


def _expect(artifact: str, wanted: str, path) -> None:
    if artifact != wanted:
        raise FormatError(f"{path}: expected a {wanted} container, found {artifact!r}")


def save_bank(path, bank: FilterBank) -> None:
    meta = {"kind": bank.kind, "count": len(bank), "support": bank.support, **bank.meta}
    write_container(path, "filter_bank", meta, {"re": bank.re, "im": bank.im})


def load_bank(path) -> FilterBank:
    artifact, meta, arrays = read_container(path)
    _expect(artifact, "filter_bank", path)
    kind = meta.pop("kind")
    for key in ("count", "support"):
        meta.pop(key, None)
    return FilterBank(arrays["re"], arrays["im"], kind, meta)


def save_offspring(path, oset: OffspringSet) -> None:
    meta = {
        "kind": oset.kind,
        "fold_sizes": list(oset.fold_sizes),
        "offspring_side": oset.offspring_side,
        "unique": oset.n_unique,
        "self_cross": int(oset.self_cross),
        "dedup": list(oset.dedup) if oset.dedup is not None else "none",
        **oset.meta,
    }
    write_container(path, "offspring_set", meta, {"re": oset.re, "im": oset.im})


def load_offspring(path) -> OffspringSet:
    artifact, meta, arrays = read_container(path)
    _expect(artifact, "offspring_set", path)
    kind = meta.pop("kind")
    sizes = tuple(int(s) for s in meta.pop("fold_sizes").split(","))
    dedup_text = meta.pop("dedup")
    dedup = None if dedup_text == "none" else np.array([int(s) for s in dedup_text.split(",")])
    self_cross = meta.pop("self_cross") == "1"
    for key in ("offspring_side", "unique"):
        meta.pop(key, None)
    return OffspringSet(arrays["re"], arrays["im"], sizes, kind, dedup, self_cross, meta)


def save_wpca(path, model: WpcaModel, meta: dict | None = None) -> None:
    header = {"q": model.dim_out, "d": model.dim_in, **(meta or {})}
    write_container(path, "wpca", header, {
        "mean": model.mean, "eigenvalues": model.eigenvalues, "projection": model.projection})


def load_wpca(path) -> WpcaModel:
    artifact, _, arrays = read_container(path)
    _expect(artifact, "wpca", path)
    return WpcaModel(arrays["mean"], arrays["projection"], arrays["eigenvalues"])


# --- descriptor store --------------------------------------------------------

def dump_descriptors(rows: np.ndarray, config_hash: str) -> bytes:
    rows = np.atleast_2d(np.asarray(rows))
    header = f"count={rows.shape[0]}\ndim={rows.shape[1]}\nconfig_hash={config_hash}\n\n".encode()
    return STORE_MAGIC + header + np.ascontiguousarray(rows, dtype="<f4").tobytes()


def write_descriptors(path, rows: np.ndarray, config_hash: str) -> None:
    atomic_write(path, dump_descriptors(rows, config_hash))


def read_descriptors(path) -> tuple[np.ndarray, str]:
    data = Path(path).read_bytes()
    if not data.startswith(STORE_MAGIC):
        raise FormatError(f"{path}: not a descriptor store")
    end = data.find(b"\n\n")
    meta = dict(line.split("=", 1) for line in data[len(STORE_MAGIC):end].decode().splitlines())
    count, dim = int(meta["count"]), int(meta["dim"])
    payload = data[end + 2:]
    if len(payload) != 4 * count * dim:
        raise FormatError(f"{path}: payload size does not match {count}x{dim}")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim).astype(np.float64)
    return rows, meta["config_hash"]


# --- manifests and pairs ----------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subject_id: str
    split: str
    flip_of: str = ""


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: Path = Path(".")

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise InputError("manifest paths must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    def split(self, *names: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split in names]

    @property
    def splits(self) -> list[str]:
        return sorted({e.split for e in self.entries})

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"path", "subject_id", "split"} - set(reader.fieldnames or ())
        if missing:
            raise FormatError(f"{path}: manifest lacks columns {sorted(missing)}")
        entries = [ManifestEntry(r["path"], r["subject_id"], r["split"], r.get("flip_of") or "")
                   for r in reader]
    return DatasetManifest(entries, path.parent)


def dump_manifest(entries) -> bytes:
    lines = ["path,subject_id,split"]
    for e in entries:
        lines.append(f"{e.path},{e.subject_id},{e.split}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_manifest(path, entries) -> None:
    atomic_write(path, dump_manifest(entries))


def write_pairs(path, pairs) -> None:
    lines = ["fold,path_a,path_b,same"] + [f"{p.fold},{p.a},{p.b},{int(p.same)}" for p in pairs]
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def read_pairs(path) -> list[VerifyPair]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [VerifyPair(int(r["fold"]), r["path_a"], r["path_b"], r["same"] in ("1", "true", "True"))
                for r in csv.DictReader(fh)]


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    lines = [",".join(columns)] + [",".join(str(r[c]) for c in columns) for r in rows]
    atomic_write(path, ("\n".join(lines) + "\n").encode())


# --- images -----------------------------------------------------------------

def load_image(path, expected_size=None) -> np.ndarray:
    """Grayscale float image in [0, 255]; color is reduced with 0.299/0.587/0.114 luma."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("RGB", "RGBA", "P", "CMYK", "YCbCr", "LA", "PA"):
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                arr = rgb @ np.array(LUMA)
            elif img.mode in ("L", "1"):
                arr = np.asarray(img.convert("L"), dtype=np.float64)
            else:
                arr = np.asarray(img, dtype=np.float64)
    except FileNotFoundError:
        raise InputError(f"image not found: {path}") from None
    except OSError as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc
    if expected_size is not None and tuple(arr.shape) != tuple(expected_size):
        raise InputError(f"{path}: size {arr.shape} differs from expected {tuple(expected_size)}")
    return arr


def save_image(path, image: np.ndarray) -> None:
    arr = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)


def hflip(image: np.ndarray) -> np.ndarray:
    return np.asarray(image)[:, ::-1].copy()
