"""CSV tables, run manifests and the two-snapshot spectrum file format."""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io as _io
import json
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .errors import ConfigError, DegenerateSpectrum
from .spectra import SpectralSnapshot

SECTIONS = ("tau1", "tau2")


class SpectrumFileError(ConfigError):
    def __init__(self, path, lineno, msg):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> Path:
    """Write a CSV table preceded by ``# key: value`` comment lines.

    Floats are written with ``repr`` so re-runs are byte-identical.
    """
    path = Path(path)
    buf = _io.StringIO()
    buf.write(f"# levelcross {__version__}\n")
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def write_manifest(out_dir, command: str, config: dict, config_hash: str,
                   files: Sequence[Path], seeds: Sequence[int] = (), extra: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    manifest = {
        "tool": "levelcross",
        "version": __version__,
        "command": command,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config_sha256": config_hash,
        "config": config,
        "seeds": list(seeds),
        "files": {Path(f).name: sha256_file(f) for f in files},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_user_spectra(path) -> tuple[SpectralSnapshot, SpectralSnapshot]:
    """Parse a two-section spectrum file.

    ::

        # comment
        [tau1]
        complete no        # optional, default no
        G1 8.87
        G2 9.87
        [tau2]
        G1 ...

    Energies must ascend within each group.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read spectrum file {path}: {exc}") from exc
    data: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SpectrumFileError(path, lineno, f"malformed section header {line!r}")
            name = line[1:-1].strip()
            if name not in SECTIONS:
                raise SpectrumFileError(path, lineno, f"unknown section {name!r}, expected tau1 or tau2")
            if name in data:
                raise SpectrumFileError(path, lineno, f"section {name!r} repeated")
            current = name
            data[name] = {"G1": [], "G2": [], "complete": False, "lines": {"G1": [], "G2": []}}
            continue
        parts = line.split()
        if current is None:
            raise SpectrumFileError(path, lineno, "entry before any [tau1]/[tau2] section")
        sec = data[current]
        if parts[0] == "complete" and len(parts) == 2 and parts[1] in ("yes", "no"):
            sec["complete"] = parts[1] == "yes"
            continue
        if len(parts) != 2 or parts[0] not in ("G1", "G2"):
            raise SpectrumFileError(path, lineno, f"expected 'G1 <energy>' or 'G2 <energy>', got {line!r}")
        try:
            e = float(parts[1])
        except ValueError:
            raise SpectrumFileError(path, lineno, f"not a number: {parts[1]!r}") from None
        grp = sec[parts[0]]
        if grp and e <= grp[-1]:
            raise SpectrumFileError(path, lineno,
                                    f"{parts[0]} energies must ascend: {e!r} after {grp[-1]!r}")
        grp.append(e)
        sec["lines"][parts[0]].append(lineno)
    missing = [s for s in SECTIONS if s not in data]
    if missing:
        raise ConfigError(f"{path}: missing section(s) {', '.join(missing)}")
    snaps = []
    for name in SECTIONS:
        sec = data[name]
        try:
            snaps.append(SpectralSnapshot(sec["G1"], sec["G2"], label=name, complete=sec["complete"]))
        except DegenerateSpectrum as exc:
            raise DegenerateSpectrum(f"{path} [{name}]: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{path} [{name}]: {exc}") from None
    return snaps[0], snaps[1]


def write_user_spectra(path, snap1: SpectralSnapshot, snap2: SpectralSnapshot) -> Path:
    path = Path(path)
    out = ["# levelcross spectrum pair"]
    for name, snap in zip(SECTIONS, (snap1, snap2)):
        out.append(f"[{name}]")
        out.append(f"complete {'yes' if snap.complete else 'no'}")
        out += [f"G1 {float(e)!r}" for e in snap.group1_energies]
        out += [f"G2 {float(e)!r}" for e in snap.group2_energies]
    path.write_text("\n".join(out) + "\n")
    return path
