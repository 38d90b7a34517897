"""Multilayer stack data model and the mirror/cavity constructors.

Conventions
-----------
* Thicknesses are in nm, refractive indices are real and non-dispersive.
* ``LayerStack.layers[0]`` is the layer first struck by light coming from
  ``incident``.  A stand-alone mirror is therefore written cavity side first:
  ``incident`` is the cavity medium, ``exit`` is the substrate.
* A flattened cavity runs from the bottom substrate to the top substrate:
  bottom mirror (reversed), membrane, air gap, top mirror.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .config import defaults
from .errors import InputFormatError, InvalidArgument


@dataclass(frozen=True)
class Material:
    name: str
    refractive_index: float

    def __post_init__(self):
        n = self.refractive_index
        if not (math.isfinite(n) and n > 0):
            raise InvalidArgument(f"refractive index of {self.name!r} must be positive, got {n}")

    @property
    def n(self) -> float:
        return self.refractive_index


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness: float  # nm

    def __post_init__(self):
        d = self.thickness
        if not (math.isfinite(d) and d > 0):
            raise InvalidArgument(f"layer thickness must be finite and > 0, got {d}")

    @property
    def optical_thickness(self) -> float:
        return self.material.n * self.thickness


@dataclass(frozen=True)
class LayerStack:
    incident: Material
    layers: tuple[Layer, ...] = ()
    exit: Material = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.exit is None:
            object.__setattr__(self, "exit", self.incident)

    def __len__(self):
        return len(self.layers)

    @property
    def total_thickness(self) -> float:
        return sum(layer.thickness for layer in self.layers)

    def reversed(self) -> "LayerStack":
        """The same structure seen from the other side."""
        return LayerStack(self.exit, self.layers[::-1], self.incident)

    def with_media(self, incident: Material | None = None, exit: Material | None = None) -> "LayerStack":
        return LayerStack(incident or self.incident, self.layers, exit or self.exit)

    def scaled(self, multipliers: Iterable[float]) -> "LayerStack":
        """Copy with every layer thickness multiplied by the matching factor."""
        multipliers = list(multipliers)
        if len(multipliers) != len(self.layers):
            raise InvalidArgument("need one multiplier per layer")
        layers = tuple(Layer(l.material, l.thickness * k) for l, k in zip(self.layers, multipliers))
        return LayerStack(self.incident, layers, self.exit)

    def __add__(self, other: "LayerStack") -> "LayerStack":
        return LayerStack(self.incident, self.layers + other.layers, other.exit)


# ---------------------------------------------------------------------------
# material registry


def default_materials(overrides: Mapping[str, float] | None = None) -> dict[str, Material]:
    table = dict(defaults()["materials"])
    if overrides:
        table.update(overrides)
    return {name: Material(name, float(n)) for name, n in table.items()}


def material(name: str) -> Material:
    try:
        return default_materials()[name]
    except KeyError:
        raise InvalidArgument(f"unknown material {name!r}") from None


# ---------------------------------------------------------------------------
# constructors


def build_quarter_wave_dbr(
    center_wavelength: float,
    pair_count: int,
    high: Material,
    low: Material,
    exit: Material,
    incident: Material | None = None,
) -> LayerStack:
    """Quarter-wave Bragg mirror, high-index layer on the cavity side.

    Every layer has optical thickness ``center_wavelength / 4``; the stack
    holds ``2 * pair_count`` layers.
    """
    if not center_wavelength > 0:
        raise InvalidArgument(f"center wavelength must be > 0, got {center_wavelength}")
    if int(pair_count) != pair_count or pair_count < 0:
        raise InvalidArgument(f"pair count must be a non-negative integer, got {pair_count}")
    incident = incident or material("air")
    pair = (
        Layer(high, center_wavelength / (4 * high.n)),
        Layer(low, center_wavelength / (4 * low.n)),
    )
    return LayerStack(incident, pair * int(pair_count), exit)


def nominal_mirrors(materials: Mapping[str, Material] | None = None) -> tuple[LayerStack, LayerStack]:
    """(bottom, top) mirrors with the reconstructed coating parameters."""
    cfg = defaults()
    mats = materials or default_materials()
    out = []
    for key in ("bottom_mirror", "top_mirror"):
        spec = cfg[key]
        out.append(
            build_quarter_wave_dbr(
                spec["center_nm"],
                spec["pairs"],
                mats[spec["high"]],
                mats[spec["low"]],
                mats[spec["substrate"]],
                incident=mats["air"],
            )
        )
    return out[0], out[1]


@dataclass(frozen=True)
class CavityAssembly:
    """Planar bottom mirror + membrane + air gap + top mirror.

    Both mirrors are stored cavity side first; their ``incident`` medium is
    the adjacent cavity medium (membrane for the bottom, gap for the top) and
    their ``exit`` is the respective substrate.
    """

    bottom_mirror: LayerStack
    membrane_thickness: float  # t_d, nm
    air_gap: float  # t_a, nm
    top_mirror: LayerStack
    membrane_material: Material
    gap_material: Material = field(default_factory=lambda: material("air"))

    def __post_init__(self):
        if not (math.isfinite(self.membrane_thickness) and self.membrane_thickness >= 0):
            raise InvalidArgument("membrane thickness must be >= 0")
        if not (math.isfinite(self.air_gap) and self.air_gap >= 0):
            raise InvalidArgument("air gap must be >= 0")

    @property
    def bottom_count(self) -> int:
        return len(self.bottom_mirror.layers)

    def membrane_span(self) -> tuple[float, float]:
        """(start, end) of the membrane along the flattened stack axis, nm."""
        z0 = self.bottom_mirror.total_thickness
        return z0, z0 + self.membrane_thickness

    def gap_span(self) -> tuple[float, float]:
        z0 = self.membrane_span()[1]
        return z0, z0 + self.air_gap

    def with_geometry(self, membrane_thickness: float | None = None, air_gap: float | None = None) -> "CavityAssembly":
        kw = {}
        if membrane_thickness is not None:
            kw["membrane_thickness"] = membrane_thickness
        if air_gap is not None:
            kw["air_gap"] = air_gap
        return replace(self, **kw)

    def flatten(self) -> LayerStack:
        inner = []
        if self.membrane_thickness > 0:
            inner.append(Layer(self.membrane_material, self.membrane_thickness))
        if self.air_gap > 0:
            inner.append(Layer(self.gap_material, self.air_gap))
        layers = self.bottom_mirror.layers[::-1] + tuple(inner) + self.top_mirror.layers
        return LayerStack(self.bottom_mirror.exit, layers, self.top_mirror.exit)

    @classmethod
    def from_stack(
        cls,
        stack: LayerStack,
        membrane_material: Material,
        gap_material: Material | None = None,
    ) -> "CavityAssembly":
        """Inverse of :meth:`flatten` for stacks holding a membrane layer."""
        gap_material = gap_material or material("air")
        layers = stack.layers
        try:
            i = next(k for k, l in enumerate(layers) if l.material == membrane_material)
        except StopIteration:
            raise InvalidArgument("no membrane layer in stack") from None
        j = i + 1
        t_a = 0.0
        if j < len(layers) and layers[j].material == gap_material:
            t_a = layers[j].thickness
            j += 1
        bottom = LayerStack(membrane_material, layers[:i][::-1], stack.incident)
        top = LayerStack(gap_material, layers[j:], stack.exit)
        return cls(bottom, layers[i].thickness, t_a, top, membrane_material, gap_material)


def assemble_cavity(
    bottom: LayerStack,
    t_d: float,
    t_a: float,
    top: LayerStack,
    membrane_material: Material | None = None,
    gap_material: Material | None = None,
) -> tuple[CavityAssembly, LayerStack]:
    """Build the cavity and its flattened propagation-order stack."""
    membrane_material = membrane_material or material("diamond")
    gap_material = gap_material or material("air")
    if not t_d > 0:
        raise InvalidArgument(f"membrane thickness must be > 0, got {t_d}")
    assembly = CavityAssembly(
        bottom.with_media(incident=membrane_material),
        float(t_d),
        float(t_a),
        top.with_media(incident=gap_material),
        membrane_material,
        gap_material,
    )
    return assembly, assembly.flatten()


def nominal_cavity(t_d: float | None = None, t_a: float | None = None) -> CavityAssembly:
    cfg = defaults()
    bottom, top = nominal_mirrors()
    t_d = cfg["membrane"]["thickness_nm"] if t_d is None else t_d
    t_a = cfg["air_gap_nm"] if t_a is None else t_a
    return assemble_cavity(bottom, t_d, t_a, top, material(cfg["membrane"]["material"]))[0]


# ---------------------------------------------------------------------------
# stack-definition documents


def stack_from_document(doc: Mapping) -> LayerStack:
    """Build a stack from the JSON-compatible definition document.

    ``layers`` entries are either ``{"material", "thickness_nm"}`` or a
    ``{"dbr": {"center_nm", "pairs", "high", "low"}}`` block expanded in place.
    """
    mats = default_materials()
    for entry in doc.get("materials", []):
        mats[entry["name"]] = Material(entry["name"], float(entry["n"]))

    def lookup(name):
        try:
            return mats[name]
        except KeyError:
            raise InvalidArgument(f"unknown material {name!r}") from None

    incident = lookup(doc.get("incident", "air"))
    exit_ = lookup(doc.get("exit", doc.get("incident", "air")))
    layers: list[Layer] = []
    for entry in doc.get("layers", []):
        if "dbr" in entry:
            b = entry["dbr"]
            mirror = build_quarter_wave_dbr(
                float(b["center_nm"]), int(b["pairs"]), lookup(b["high"]), lookup(b["low"]), exit_
            )
            layers.extend(mirror.layers)
        else:
            layers.append(Layer(lookup(entry["material"]), float(entry["thickness_nm"])))
    return LayerStack(incident, layers, exit_)


def stack_to_document(stack: LayerStack) -> dict:
    mats = {stack.incident, stack.exit, *(l.material for l in stack.layers)}
    return {
        "incident": stack.incident.name,
        "exit": stack.exit.name,
        "materials": [{"name": m.name, "n": m.n} for m in sorted(mats, key=lambda m: m.name)],
        "layers": [{"material": l.material.name, "thickness_nm": l.thickness} for l in stack.layers],
    }


def load_stack(path) -> LayerStack:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"malformed stack document {path}: {exc}") from None
    try:
        return stack_from_document(doc)
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"malformed stack document {path}: missing {exc}") from None
