"""Built-in grasp objects and the object-corpus file format.

Objects are expressed directly in the hand frame, resting on the palm (z = 0)
around ``GRASP_SITE``, which is where a top-down approach brings an object
relative to the hand. Dimensions and masses are estimates of common retail
items, not measured data.

Corpus files are YAML::

    objects:
      - name: sphere60
        mass_g: 120
        category: round
        primitives:
          - {type: sphere, center_mm: [0, 90, 30], radius_mm: 30}
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np
import yaml

from .geometry import Box, Capsule, Sphere, primitive_from_dict
from .grasp_engine import GraspObject

GRASP_SITE: Tuple[float, float] = (0.0, 90.0)


class CorpusError(ValueError):
    pass


def _xy(dx: float = 0.0, dy: float = 0.0) -> Tuple[float, float]:
    return GRASP_SITE[0] + dx, GRASP_SITE[1] + dy


def _rod(name: str, radius: float, length: float, mass: float, dy: float = 0.0, category: str = "round") -> GraspObject:
    """Cylinder-like capsule lying across the palm (axis along x)."""
    x, y = _xy(dy=dy)
    half = length / 2.0 - radius
    return GraspObject(name, (Capsule((x - half, y, radius), (x + half, y, radius), radius),), mass, category)


def _slab(name: str, size: Tuple[float, float, float], mass: float, dx: float = 0.0, dy: float = 0.0,
          yaw: float = 0.0, category: str = "box") -> GraspObject:
    x, y = _xy(dx, dy)
    sx, sy, sz = size
    return GraspObject(name, (Box((x, y, sz / 2.0), (sx / 2.0, sy / 2.0, sz / 2.0), (0.0, 0.0, yaw)),), mass, category)


def sphere60() -> GraspObject:
    x, y = _xy()
    return GraspObject("sphere60", (Sphere((x, y, 30.0), 30.0),), 120.0, "round")


def large_spool() -> GraspObject:
    """Cone yarn spool lying on its side with a loose rope tail.

    The cone is a chain of capsules that each rest on the palm, so the wide
    end sits under the index side and the axis drops toward the little finger.
    """
    _, y = _xy()
    n = 8
    xs = np.linspace(40.0, -10.0, n)
    rs = np.linspace(40.0, 8.0, n)
    prims = [Capsule((float(xs[i]), y, float(rs[i])), (float(xs[i + 1]), y, float(rs[i])), float(rs[i]))
             for i in range(n - 1)]
    prims.append(Capsule((-10.0, y, 5.0), (-60.0, y, 5.0), 5.0))
    return GraspObject("large_spool", tuple(prims), 220.0, "round")


def small_spool() -> GraspObject:
    x, y = _xy()
    axis_z = 26.0
    flange = Capsule((x + 0.0, y, axis_z), (x + 25.0, y, axis_z), 26.0)
    core = Capsule((x - 45.0, y, axis_z), (x + 25.0, y, axis_z), 19.0)
    return GraspObject("small_spool", (flange, core), 90.0, "round")


def screwdriver() -> GraspObject:
    x, y = _xy()
    handle = Capsule((x - 40.0, y, 16.0), (x + 40.0, y, 16.0), 16.0)
    shaft = Capsule((x + 40.0, y, 16.0), (x + 130.0, y, 16.0), 3.5)
    return GraspObject("screwdriver", (handle, shaft), 110.0, "rod")


def wrap() -> GraspObject:
    return _rod("wrap", 27.0, 180.0, 200.0)


def mouse() -> GraspObject:
    x, y = _xy()
    body = Box((x, y, 16.0), (31.0, 50.0, 16.0))
    hump = Sphere((x, y + 5.0, 12.0), 28.0)
    return GraspObject("mouse", (body, hump), 100.0, "box")


def coffee_box() -> GraspObject:
    return _slab("coffee_box", (110.0, 60.0, 80.0), 250.0, dy=-4.0)


def detergent() -> GraspObject:
    """Standing bottle grasped around its upper end."""
    x, y = _xy(dy=-6.0)
    body = Capsule((x, y, 35.0), (x, y, 240.0), 35.0)
    return GraspObject("detergent", (body,), 450.0, "round")


def tape() -> GraspObject:
    """Tape roll standing on its rim (short capsule: a rounded disc)."""
    x, y = _xy(dy=-6.0)
    return GraspObject("tape", (Capsule((x - 2.0, y, 48.0), (x + 2.0, y, 48.0), 48.0),), 150.0, "round")


def plier() -> GraspObject:
    x, y = _xy(dy=14.0)
    handles = Box((x - 30.0, y, 9.0), (60.0, 14.0, 9.0))
    jaws = Box((x + 55.0, y, 7.0), (25.0, 9.0, 7.0))
    return GraspObject("plier", (handles, jaws), 230.0, "thin")


def wrench() -> GraspObject:
    x, y = _xy(dy=18.0)
    shank = Box((x, y, 5.0), (75.0, 11.0, 5.0))
    head = Sphere((x + 78.0, y, 11.0), 11.0)
    return GraspObject("wrench", (shank, head), 180.0, "thin")


def phone_slab() -> GraspObject:
    return _slab("phone_slab", (146.0, 71.0, 8.0), 170.0, dy=-4.0, category="thin")


def keyboard_slab() -> GraspObject:
    return _slab("keyboard_slab", (300.0, 120.0, 22.0), 450.0, dy=-18.0, category="thin")


def card() -> GraspObject:
    """Access card lying flat on the palm (3 mm thick for grip purposes)."""
    return _slab("card", (85.0, 54.0, 3.0), 6.0, dx=-5.0, dy=-50.0, category="thin")


def usb_stick() -> GraspObject:
    return _slab("usb_stick", (55.0, 18.0, 9.0), 10.0, dx=-5.0, dy=-45.0, category="small")


def trapezoid(top_width: float = 60.0, base: float = 64.0, height: float = 34.0) -> GraspObject:
    """Force-test block: a flat-topped block pressed by the fingers onto a palm sensor.

    The sensing face (4.4 cm x 3.8 cm) sits on the palm; the fingers press on
    the top face.
    """
    x, y = _xy(dy=6.0)
    block = Box((x, y, height / 2.0), (top_width / 2.0, base / 2.0, height / 2.0))
    return GraspObject("trapezoid", (block,), 80.0, "box")


DEFAULT_CORPUS: Tuple[str, ...] = (
    "large_spool", "small_spool", "screwdriver", "wrap", "mouse", "coffee_box", "detergent",
    "tape", "plier", "wrench", "phone_slab", "keyboard_slab", "card", "usb_stick",
)

BUILTINS: Dict[str, Callable[[], GraspObject]] = {
    "sphere60": sphere60,
    "large_spool": large_spool,
    "small_spool": small_spool,
    "screwdriver": screwdriver,
    "wrap": wrap,
    "mouse": mouse,
    "coffee_box": coffee_box,
    "detergent": detergent,
    "tape": tape,
    "plier": plier,
    "wrench": wrench,
    "phone_slab": phone_slab,
    "keyboard_slab": keyboard_slab,
    "card": card,
    "card3mm": card,
    "usb_stick": usb_stick,
    "trapezoid": trapezoid,
}


def builtin(name: str) -> GraspObject:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise CorpusError(f"unknown builtin object {name!r}; builtins: {', '.join(sorted(BUILTINS))}") from None
    obj = factory()
    return obj if obj.name == name else GraspObject(name, obj.primitives, obj.mass, obj.category)


def default_corpus() -> List[GraspObject]:
    return [builtin(name) for name in DEFAULT_CORPUS]


def object_to_dict(obj: GraspObject) -> dict:
    out: dict = {"name": obj.name}
    if obj.mass is not None:
        out["mass_g"] = obj.mass
    if obj.category:
        out["category"] = obj.category
    out["primitives"] = [p.to_dict() for p in obj.primitives]
    return out


def object_from_dict(data: dict, where: str = "object") -> GraspObject:
    if not isinstance(data, dict) or "name" not in data:
        raise CorpusError(f"{where}: expected a mapping with a 'name'")
    prims = data.get("primitives")
    if not isinstance(prims, list) or not prims:
        raise CorpusError(f"{where}: needs a non-empty 'primitives' list")
    try:
        primitives = tuple(primitive_from_dict(p) for p in prims)
        mass = data.get("mass_g")
        return GraspObject(str(data["name"]), primitives, None if mass is None else float(mass),
                           str(data.get("category", "")))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"{where}: {exc}") from exc


def load_corpus(path: str | Path) -> List[GraspObject]:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise CorpusError(f"malformed corpus file: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("objects"), list):
        raise CorpusError("corpus file needs a top-level 'objects' list")
    objects = [object_from_dict(o, f"objects[{i}]") for i, o in enumerate(data["objects"])]
    if not objects:
        raise CorpusError("corpus is empty")
    return objects


def dump_corpus(objects: List[GraspObject]) -> str:
    return yaml.safe_dump({"objects": [object_to_dict(o) for o in objects]}, sort_keys=False)


def resolve_object(spec: str) -> GraspObject | None:
    """A builtin name, ``none`` or a path to a single-object or corpus YAML file."""
    if spec == "none":
        return None
    path = Path(spec)
    if path.suffix in (".yaml", ".yml", ".json") and path.exists():
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
        if isinstance(data, dict) and "objects" in data:
            objs = load_corpus(path)
            if len(objs) != 1:
                raise CorpusError(f"{spec}: expected exactly one object, found {len(objs)}")
            return objs[0]
        return object_from_dict(data, spec)
    return builtin(spec)
