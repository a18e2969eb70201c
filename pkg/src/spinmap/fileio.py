"""File formats: coupling tables, lattice exports, solution files, traces,
graphs, run manifests, and the flat key=value config format.

All writers are deterministic (sorted keys, fixed float formatting, no
timestamps) so identical inputs give byte-identical outputs.
"""

import csv
import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .errors import InputError
from .lattice import LatticeSite
from .placement import CouplingMeasurement
from .telegraph import TimeTrace

COUPLING_COLUMNS = ["spin_a", "spin_b", "f_hz", "sigma_hz", "subspace_mode"]


# ---------------------------------------------------------------------------
# coupling tables


def write_couplings_csv(path, measurements):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COUPLING_COLUMNS)
        for m in measurements:
            w.writerow([m.spin_a, m.spin_b, repr(m.f_ij), repr(m.sigma), m.subspace_mode])


def read_couplings_csv(path):
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COUPLING_COLUMNS:
            raise InputError(
                f"{path}: expected columns {COUPLING_COLUMNS}, got {reader.fieldnames}"
            )
        for i, row in enumerate(reader, start=2):
            try:
                out.append(
                    CouplingMeasurement(
                        row["spin_a"],
                        row["spin_b"],
                        float(row["f_hz"]),
                        float(row["sigma_hz"]),
                        row["subspace_mode"],
                    )
                )
            except (ValueError, InputError) as exc:
                raise InputError(f"{path}:{i}: {exc}") from exc
    return out


def write_couplings_json(path, measurements):
    rows = [
        {
            "spin_a": m.spin_a,
            "spin_b": m.spin_b,
            "f_hz": m.f_ij,
            "sigma_hz": m.sigma,
            "subspace_mode": m.subspace_mode,
        }
        for m in measurements
    ]
    write_json(path, {"couplings": rows})


def read_couplings_json(path):
    data = json.loads(Path(path).read_text())
    try:
        return [
            CouplingMeasurement(
                r["spin_a"], r["spin_b"], float(r["f_hz"]), float(r["sigma_hz"]),
                r.get("subspace_mode", "averaged"),
            )
            for r in data["couplings"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed coupling table: {exc}") from exc


def read_couplings(path):
    path = str(path)
    if path.endswith(".json"):
        return read_couplings_json(path)
    return read_couplings_csv(path)


# ---------------------------------------------------------------------------
# lattice exports


def write_lattice_csv(path, sites):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["species", "i", "j", "k", "basis", "x", "y", "z"])
        for s in sites:
            w.writerow(
                [s.species, *s.cell, s.basis]
                + [f"{v:.6f}" for v in s.position]
            )


def write_lattice_json(path, sites):
    rows = [
        {
            "species": s.species,
            "cell": list(s.cell),
            "basis": s.basis,
            "position": [round(float(v), 6) for v in s.position],
        }
        for s in sites
    ]
    write_json(path, {"sites": rows})


def site_to_dict(site: LatticeSite):
    return {
        "species": site.species,
        "cell": list(site.cell),
        "basis": site.basis,
        "position": [float(v) for v in site.position],
    }


# ---------------------------------------------------------------------------
# solutions


def write_solutions_json(path, solutions, ambiguous=None, meta=None):
    payload = {
        "n_solutions": len(solutions),
        "solutions": [
            {
                "assignment": {
                    lab: site_to_dict(site) for lab, site in sorted(sol.assignment.items())
                },
                "residual_hz2": sol.residual,
                "symmetry_multiplicity": sol.symmetry_multiplicity,
            }
            for sol in solutions
        ],
        "branch_history": list(solutions[0].branch_history) if solutions else [],
        "ambiguous": {
            lab: [site_to_dict(s) for s in sites]
            for lab, sites in (ambiguous or {}).items()
        },
    }
    if meta:
        payload["meta"] = meta
    write_json(path, payload)


def read_solution_positions(path, index: int = 0):
    """Positions (label -> np.ndarray) of one solution in a solutions file."""
    data = json.loads(Path(path).read_text())
    sols = data.get("solutions", [])
    if not sols:
        raise InputError(f"{path}: no solutions")
    if not 0 <= index < len(sols):
        raise InputError(f"{path}: solution index {index} out of range")
    return {
        lab: np.array(entry["position"], dtype=float)
        for lab, entry in sols[index]["assignment"].items()
    }


# ---------------------------------------------------------------------------
# traces


def write_trace_csv(path, trace: TimeTrace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "counts_per_s"])
        for t, c in zip(trace.timestamps, trace.counts):
            w.writerow([repr(float(t)), repr(float(c))])


def read_trace_csv(path):
    ts, cs = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t_s", "counts_per_s"]:
            raise InputError(f"{path}: expected columns t_s,counts_per_s")
        for row in reader:
            ts.append(float(row["t_s"]))
            cs.append(float(row["counts_per_s"]))
    return TimeTrace(np.array(ts), np.array(cs))


def write_sweep_csv(path, records, pair: str = ""):
    """Deviation-sweep records as CSV: pair, mode, phi1, phi2, deviation."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pair", "mode", "phi1_rad", "phi2_rad", "deviation_hz"])
        for r in records:
            w.writerow([pair, r.mode, repr(r.phi1), repr(r.phi2), repr(r.deviation)])


# ---------------------------------------------------------------------------
# graphs


def coupling_graph(measurements, positions=None, cutoff: float = 1.0):
    """Node/edge dict for a spin network; edges below cutoff omitted."""
    labels = sorted({m.spin_a for m in measurements} | {m.spin_b for m in measurements})
    nodes = []
    for lab in labels:
        node = {"label": lab, "species": "Si" if lab.startswith("Si") else "C"}
        if positions is not None and lab in positions:
            node["position"] = [float(v) for v in positions[lab]]
        nodes.append(node)
    edges = [
        {"a": m.spin_a, "b": m.spin_b, "f_hz": m.f_ij}
        for m in measurements
        if m.f_ij >= cutoff
    ]
    edges.sort(key=lambda e: (e["a"], e["b"]))
    return {"nodes": nodes, "edges": edges, "cutoff_hz": cutoff}


def graph_to_dot(graph):
    lines = ["graph spins {"]
    for n in graph["nodes"]:
        color = "green" if n["species"] == "Si" else "orange"
        lines.append(f'  "{n["label"]}" [color={color}];')
    for e in graph["edges"]:
        lines.append(f'  "{e["a"]}" -- "{e["b"]}" [label="{e["f_hz"]:.2f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# json / hashing / manifests


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def write_json(path, obj):
    Path(path).write_text(canonical_json(obj))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(command, config, inputs, outputs):
    """Reproducibility record: config hash, constants, versions, file hashes."""
    from . import __version__
    from .constants import constants_table

    cfg_json = canonical_json(config)
    return {
        "command": command,
        "config": config,
        "config_sha256": sha256_text(cfg_json),
        "constants": constants_table(),
        "version": __version__,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }


# ---------------------------------------------------------------------------
# flat key=value config files


_CONFIG_LINE = re.compile(r"^([A-Za-z0-9_.\-]+)\s*=\s*(.+)$")


def parse_config_text(text: str) -> dict:
    """Parse a flat `key = value` config (optional [section] prefixes).

    Values: quoted strings, integers, floats, true/false.  Returns a flat
    dict with dotted keys.
    """
    out = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        m = _CONFIG_LINE.match(line)
        if not m:
            raise InputError(f"config line {lineno}: cannot parse {raw!r}")
        key = f"{section}.{m.group(1)}" if section else m.group(1)
        out[key] = _parse_value(m.group(2).strip(), lineno)
    return out


def _parse_value(token: str, lineno: int):
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    low = token.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise InputError(f"config line {lineno}: bad value {token!r}") from None


def read_config(path) -> dict:
    return parse_config_text(Path(path).read_text())


def format_config(values: dict) -> str:
    """Render a flat dotted-key dict back to the key=value format; the
    result re-parses to the same dict."""
    sections = {}
    for key in sorted(values):
        section, _, name = key.rpartition(".")
        sections.setdefault(section, []).append((name, values[key]))
    lines = []
    for section in sorted(sections):
        if section:
            lines.append(f"[{section}]")
        for name, value in sections[section]:
            if isinstance(value, bool):
                token = "true" if value else "false"
            elif isinstance(value, str):
                token = f'"{value}"'
            else:
                token = repr(value)
            lines.append(f"{name} = {token}")
        lines.append("")
    return "\n".join(lines)
