"""Seeded procedural generation of pick-and-place rooms.

Rooms are populated in a fixed stage order (bins, tables, furniture,
decorations, trash); every candidate pose must pass three filters, in order: a
downward ray cast for support height, AABB overlap against everything already
placed, and a boundary check against its spawn area. Each stage draws from its
own labeled RNG substream, so the difficulty knobs (trash pose, bin scale)
never perturb the furniture layout for a given seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .mathutil import Aabb, Quat, RngStream, SupportSurface, Vec3, aabb_overlap, raycast_down

SCENE_FORMAT_VERSION = 1
TEMPLATE_FORMAT_VERSION = 1
DEFAULT_RETRY_BUDGET = 50
STAGE_ORDER = ("trash_bin", "table", "furniture", "decoration", "trash")
ROBOT_CLEARANCE = 0.55  # square side reserved around the robot start, meters
TRIGGER_INSET = 0.8  # goal trigger footprint as a fraction of the bin footprint


class SceneGenerationError(RuntimeError):
    pass


class TemplateError(ValueError):
    pass


class RejectReason(str, Enum):
    OUT_OF_ROOM = "out_of_room"
    OVERLAP = "overlap"
    OUT_OF_BOUNDS = "out_of_bounds"


@dataclass(frozen=True)
class Rect:
    x_min: float
    z_min: float
    x_max: float
    z_max: float

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.x_min <= other.x_min
            and self.z_min <= other.z_min
            and other.x_max <= self.x_max
            and other.z_max <= self.z_max
        )

    def center(self) -> tuple[float, float]:
        return 0.5 * (self.x_min + self.x_max), 0.5 * (self.z_min + self.z_max)

    def shrunk(self, factor: float) -> "Rect":
        cx, cz = self.center()
        hx = 0.5 * (self.x_max - self.x_min) * factor
        hz = 0.5 * (self.z_max - self.z_min) * factor
        return Rect(cx - hx, cz - hz, cx + hx, cz + hz)


@dataclass(frozen=True)
class SpawnArea:
    rect: Rect
    object_types: tuple[str, ...]
    max_objects: int
    zone: str = ""

    def __post_init__(self):
        if self.max_objects < 0:
            raise TemplateError("max_objects must be >= 0")


@dataclass(frozen=True)
class RoomTemplate:
    id: str
    bounds: Rect
    spawn_areas: tuple[SpawnArea, ...]
    zones: tuple[str, ...]
    robot_start: tuple[float, float, float]  # x, z, yaw

    def __post_init__(self):
        for area in self.spawn_areas:
            if not self.bounds.contains_rect(area.rect):
                raise TemplateError(f"template '{self.id}': spawn area outside room bounds")
        admitted = {t for a in self.spawn_areas for t in a.object_types if a.max_objects > 0}
        if "table" not in admitted or "trash_bin" not in admitted:
            raise TemplateError(
                f"template '{self.id}' must admit at least one table and one trash bin"
            )


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    category: str
    width: float
    depth: float
    height: float
    table_top: bool = False

    def __post_init__(self):
        if min(self.width, self.depth, self.height) <= 0:
            raise TemplateError(f"object '{self.name}' must have positive dimensions")


@dataclass(frozen=True)
class DifficultyConfig:
    level: str  # easy | hard
    trash_pose: str  # upright | lying
    bin_scale: float
    trash_count_range: tuple[int, int] = (1, 5)

    def __post_init__(self):
        n_min, n_max = self.trash_count_range
        if not (1 <= n_min <= n_max):
            raise ValueError("trash count range must satisfy 1 <= N_min <= N_max")
        if not 0 < self.bin_scale <= 1:
            raise ValueError("bin_scale must be in (0, 1]")

    @staticmethod
    def easy(trash_count_range=(1, 5)) -> "DifficultyConfig":
        return DifficultyConfig("easy", "upright", 1.0, trash_count_range)

    @staticmethod
    def hard(trash_count_range=(1, 5), bin_scale=0.6) -> "DifficultyConfig":
        return DifficultyConfig("hard", "lying", bin_scale, trash_count_range)

    @staticmethod
    def named(level: str, trash_count_range=(1, 5)) -> "DifficultyConfig":
        if level == "easy":
            return DifficultyConfig.easy(trash_count_range)
        if level == "hard":
            return DifficultyConfig.hard(trash_count_range)
        raise ValueError(f"unknown difficulty '{level}' (expected easy or hard)")


@dataclass(frozen=True)
class PlacedObject:
    object_id: str
    spec: ObjectSpec
    category: str
    position: Vec3  # bottom-center of the object
    yaw: float
    orientation: Quat
    aabb: Aabb
    pose_tag: str = "upright"
    interactable: bool = False
    scale: float = 1.0


@dataclass(frozen=True)
class GoalTrigger:
    bin_id: str
    volume: Aabb


@dataclass
class SceneInstance:
    template_id: str
    seed: int
    difficulty: DifficultyConfig
    objects: list[PlacedObject]
    surfaces: list[SupportSurface]
    goal_triggers: list[GoalTrigger]
    robot_start: tuple[float, float, float]
    bounds: Rect
    format_version: int = SCENE_FORMAT_VERSION

    def trash_objects(self) -> list[PlacedObject]:
        return [o for o in self.objects if o.category == "trash"]

    def tables(self) -> list[PlacedObject]:
        return [o for o in self.objects if o.category == "table"]

    def bins(self) -> list[PlacedObject]:
        return [o for o in self.objects if o.category == "trash_bin"]


@dataclass(frozen=True)
class PlacementDecision:
    accepted: bool
    height: float | None = None
    reason: RejectReason | None = None


def footprint_aabb(spec: ObjectSpec, x: float, z: float, yaw: float,
                   base_height: float, scale: float = 1.0) -> Aabb:
    """World AABB of the yaw-rotated footprint (enclosing axis-aligned box)."""
    hw = 0.5 * spec.width * scale
    hd = 0.5 * spec.depth * scale
    c, s = abs(math.cos(yaw)), abs(math.sin(yaw))
    ex = c * hw + s * hd
    ez = s * hw + c * hd
    return Aabb(
        Vec3(x - ex, base_height, z - ez),
        Vec3(x + ex, base_height + spec.height * scale, z + ez),
    )


def oriented_aabb(spec: ObjectSpec, x: float, z: float, orientation: Quat,
                  base_height: float) -> Aabb:
    """World AABB of an arbitrarily oriented object resting at base_height.

    The body box is rotated about its bottom-center and dropped so its lowest
    corner touches the support plane.
    """
    hw, h, hd = 0.5 * spec.width, spec.height, 0.5 * spec.depth
    corners = [
        Vec3(sx * hw, sy, sz * hd)
        for sx in (-1, 1)
        for sy in (0, h)
        for sz in (-1, 1)
    ]
    rotated = [orientation.rotate(c) for c in corners]
    min_x = min(c.x for c in rotated)
    max_x = max(c.x for c in rotated)
    min_y = min(c.y for c in rotated)
    max_y = max(c.y for c in rotated)
    min_z = min(c.z for c in rotated)
    max_z = max(c.z for c in rotated)
    lift = base_height - min_y
    return Aabb(
        Vec3(x + min_x, base_height, z + min_z),
        Vec3(x + max_x, max_y + lift, z + max_z),
    )


def settle_aabb_centered(spec: ObjectSpec, center_x: float, center_z: float,
                         orientation: Quat, base_height: float) -> Aabb:
    """World AABB of an oriented object dropped straight down: its volume
    center keeps (center_x, center_z) and its lowest point lands on the
    support plane. Used when settling released objects."""
    hw, h, hd = 0.5 * spec.width, spec.height, 0.5 * spec.depth
    corners = [
        Vec3(sx * hw, sy, sz * hd)
        for sx in (-1, 1)
        for sy in (0, h)
        for sz in (-1, 1)
    ]
    rotated = [orientation.rotate(c) for c in corners]
    ex = 0.5 * (max(c.x for c in rotated) - min(c.x for c in rotated))
    ey = 0.5 * (max(c.y for c in rotated) - min(c.y for c in rotated))
    ez = 0.5 * (max(c.z for c in rotated) - min(c.z for c in rotated))
    return Aabb(
        Vec3(center_x - ex, base_height, center_z - ez),
        Vec3(center_x + ex, base_height + 2.0 * ey, center_z + ez),
    )


def validate_placement(spec: ObjectSpec, x: float, z: float, yaw: float,
                       surfaces: list[SupportSurface], occupied: list[Aabb],
                       area: SpawnArea, scale: float = 1.0) -> PlacementDecision:
    """Apply the three validity filters in order; never rejects silently."""
    height = raycast_down(x, z, surfaces)
    if height is None:
        return PlacementDecision(False, reason=RejectReason.OUT_OF_ROOM)
    box = footprint_aabb(spec, x, z, yaw, height, scale)
    for other in occupied:
        if aabb_overlap(box, other):
            return PlacementDecision(False, reason=RejectReason.OVERLAP)
    rect = area.rect
    if not (rect.x_min <= box.min.x and box.max.x <= rect.x_max
            and rect.z_min <= box.min.z and box.max.z <= rect.z_max):
        return PlacementDecision(False, reason=RejectReason.OUT_OF_BOUNDS)
    return PlacementDecision(True, height=height)


def select_template(library: list[RoomTemplate], rng: RngStream) -> RoomTemplate:
    if not library:
        raise SceneGenerationError("template library is empty")
    return library[rng.choice(len(library))]


class ObjectCatalog:
    def __init__(self, specs: dict[str, ObjectSpec]):
        self.specs = specs
        self._by_category: dict[str, list[ObjectSpec]] = {}
        for spec in specs.values():
            self._by_category.setdefault(spec.category, []).append(spec)
        for group in self._by_category.values():
            group.sort(key=lambda s: s.name)

    def sample(self, category: str, rng: RngStream) -> ObjectSpec:
        group = self._by_category.get(category)
        if not group:
            raise SceneGenerationError(f"catalog has no objects of category '{category}'")
        return group[rng.choice(len(group))]

    def get(self, name: str) -> ObjectSpec:
        if name not in self.specs:
            raise TemplateError(f"unknown catalog object '{name}'")
        return self.specs[name]


def scatter_trash(table: PlacedObject, count: int, difficulty: DifficultyConfig,
                  rng: RngStream, catalog: ObjectCatalog,
                  retry_budget: int = DEFAULT_RETRY_BUDGET,
                  start_index: int = 0) -> list[PlacedObject]:
    """Scatter trash uniformly over the central half (per axis) of a table top.

    Easy difficulty stands items upright with a random yaw; Hard lays them on
    their side (a 90 degree tilt about a random horizontal axis) before the
    yaw is applied. Items are overlap-checked against each other only.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    top = table.aabb
    central = Rect(top.min.x, top.min.z, top.max.x, top.max.z).shrunk(0.5)
    top_height = top.max.y
    placed: list[PlacedObject] = []
    for i in range(count):
        spec = catalog.sample("trash", rng)
        for _ in range(retry_budget):
            x = rng.uniform(central.x_min, central.x_max)
            z = rng.uniform(central.z_min, central.z_max)
            yaw = rng.uniform(0.0, 2.0 * math.pi)
            if difficulty.trash_pose == "lying":
                axis_angle = rng.uniform(0.0, 2.0 * math.pi)
                tilt_axis = Vec3(math.cos(axis_angle), 0.0, math.sin(axis_angle))
                orientation = Quat.from_yaw(yaw) * Quat.from_axis_angle(tilt_axis, 0.5 * math.pi)
                pose_tag = "lying"
            else:
                orientation = Quat.from_yaw(yaw)
                pose_tag = "upright"
            box = oriented_aabb(spec, x, z, orientation, top_height)
            if any(aabb_overlap(box, other.aabb) for other in placed):
                continue
            placed.append(
                PlacedObject(
                    object_id=f"trash_{start_index + i}",
                    spec=spec,
                    category="trash",
                    position=Vec3(x, top_height, z),
                    yaw=yaw,
                    orientation=orientation,
                    aabb=box,
                    pose_tag=pose_tag,
                    interactable=True,
                )
            )
            break
    if not placed:
        raise SceneGenerationError("could not scatter any trash on the table")
    return placed


def populate_scene(template: RoomTemplate, difficulty: DifficultyConfig,
                   rng: RngStream, catalog: ObjectCatalog | None = None,
                   retry_budget: int = DEFAULT_RETRY_BUDGET) -> SceneInstance:
    """Generate a complete scene; pure function of (template, difficulty, seed)."""
    if retry_budget <= 0:
        raise ValueError("retry_budget must be positive")
    catalog = catalog or load_catalog()
    floor = SupportSurface(
        template.bounds.x_min, template.bounds.z_min,
        template.bounds.x_max, template.bounds.z_max, 0.0,
    )
    surfaces = [floor]
    objects: list[PlacedObject] = []
    occupied: list[Aabb] = []
    triggers: list[GoalTrigger] = []

    sx, sz, _ = template.robot_start
    half = 0.5 * ROBOT_CLEARANCE
    occupied.append(Aabb(Vec3(sx - half, 0.0, sz - half), Vec3(sx + half, 1.0, sz + half)))

    def place_category(category: str, stream: RngStream, want: int, area: SpawnArea,
                       index: int, scale: float = 1.0) -> int:
        placed_count = 0
        for _ in range(want):
            spec = catalog.sample(category, stream)
            for _ in range(retry_budget):
                x = stream.uniform(area.rect.x_min, area.rect.x_max)
                z = stream.uniform(area.rect.z_min, area.rect.z_max)
                yaw = stream.uniform(0.0, 2.0 * math.pi)
                # validate against the floor only: everything except trash
                # stands on the ground (trash is scattered separately)
                decision = validate_placement(spec, x, z, yaw, [floor], occupied, area)
                if not decision.accepted:
                    continue
                # the unscaled footprint is reserved even when the rendered
                # object shrinks (Hard bins), so later stages see identical
                # occupancy regardless of difficulty
                occupied.append(footprint_aabb(spec, x, z, yaw, decision.height))
                box = footprint_aabb(spec, x, z, yaw, decision.height, scale)
                obj = PlacedObject(
                    object_id=f"{category}_{index + placed_count}",
                    spec=spec,
                    category=category,
                    position=Vec3(x, decision.height, z),
                    yaw=yaw,
                    orientation=Quat.from_yaw(yaw),
                    aabb=box,
                    scale=scale,
                )
                objects.append(obj)
                if spec.table_top:
                    surfaces.append(
                        SupportSurface(box.min.x, box.min.z, box.max.x, box.max.z, box.max.y)
                    )
                if category == "trash_bin":
                    inner = Rect(box.min.x, box.min.z, box.max.x, box.max.z).shrunk(TRIGGER_INSET)
                    triggers.append(
                        GoalTrigger(
                            bin_id=obj.object_id,
                            volume=Aabb(
                                Vec3(inner.x_min, box.min.y, inner.z_min),
                                Vec3(inner.x_max, box.max.y, inner.z_max),
                            ),
                        )
                    )
                placed_count += 1
                break
        return placed_count

    counts = {c: 0 for c in STAGE_ORDER}
    for category in ("trash_bin", "table", "furniture", "decoration"):
        stream = rng.split(category)
        for area in template.spawn_areas:
            if category not in area.object_types or area.max_objects == 0:
                continue
            if category in ("trash_bin", "table"):
                want = min(1, area.max_objects)
            else:
                want = stream.uniform_int(0, area.max_objects)
            scale = difficulty.bin_scale if category == "trash_bin" else 1.0
            counts[category] += place_category(
                category, stream, want, area, counts[category], scale
            )

    if counts["trash_bin"] == 0:
        raise SceneGenerationError(f"template '{template.id}': could not place a trash bin")
    if counts["table"] == 0:
        raise SceneGenerationError(f"template '{template.id}': could not place a table")

    trash_stream = rng.split("trash")
    n_min, n_max = difficulty.trash_count_range
    count = trash_stream.uniform_int(n_min, n_max)
    tables = [o for o in objects if o.category == "table"]
    table = tables[trash_stream.choice(len(tables))]
    objects.extend(scatter_trash(table, count, difficulty, trash_stream, catalog, retry_budget))

    return SceneInstance(
        template_id=template.id,
        seed=rng.seed,
        difficulty=difficulty,
        objects=objects,
        surfaces=surfaces,
        goal_triggers=triggers,
        robot_start=template.robot_start,
        bounds=template.bounds,
    )


def generate_scene(library: list[RoomTemplate], difficulty: DifficultyConfig,
                   seed: int, catalog: ObjectCatalog | None = None) -> SceneInstance:
    rng = RngStream(seed, "scene")
    template = select_template(library, rng.split("template"))
    return populate_scene(template, difficulty, rng, catalog)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def _rect_from(data, where: str) -> Rect:
    if not (isinstance(data, list) and len(data) == 4):
        raise TemplateError(f"{where}: rect must be [x_min, z_min, x_max, z_max]")
    r = Rect(*map(float, data))
    if r.x_min >= r.x_max or r.z_min >= r.z_max:
        raise TemplateError(f"{where}: rect must have positive extent")
    return r


def template_from_dict(data: dict) -> RoomTemplate:
    version = data.get("format_version")
    if version != TEMPLATE_FORMAT_VERSION:
        raise TemplateError(f"unsupported template format_version {version!r}")
    if "id" not in data:
        raise TemplateError("template missing 'id'")
    areas = []
    for i, a in enumerate(data.get("spawn_areas", [])):
        areas.append(
            SpawnArea(
                rect=_rect_from(a.get("rect"), f"spawn_areas[{i}]"),
                object_types=tuple(a.get("object_types", [])),
                max_objects=int(a.get("max_objects", 0)),
                zone=a.get("zone", ""),
            )
        )
    start = data.get("robot_start", [0.0, 0.0, 0.0])
    return RoomTemplate(
        id=data["id"],
        bounds=_rect_from(data.get("bounds"), "bounds"),
        spawn_areas=tuple(areas),
        zones=tuple(z["label"] if isinstance(z, dict) else str(z) for z in data.get("zones", [])),
        robot_start=(float(start[0]), float(start[1]), math.radians(float(start[2]))),
    )


def load_templates(directory: str | Path | None = None) -> list[RoomTemplate]:
    """Load all *.json templates from a directory (bundled library by default)."""
    if directory is None:
        root = resources.files("binpick.data").joinpath("templates")
        names = sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))
        raw = [(n, root.joinpath(n).read_text()) for n in names]
    else:
        directory = Path(directory)
        if not directory.is_dir():
            raise FileNotFoundError(f"template directory not found: {directory}")
        paths = sorted(directory.glob("*.json"))
        raw = [(p.name, p.read_text()) for p in paths]
    templates = []
    for name, text in raw:
        try:
            templates.append(template_from_dict(json.loads(text)))
        except json.JSONDecodeError as exc:
            raise TemplateError(f"{name}: invalid JSON: {exc}") from exc
    if not templates:
        raise TemplateError("no templates found")
    return templates


def load_catalog(path: str | Path | None = None) -> ObjectCatalog:
    if path is None:
        raw = resources.files("binpick.data").joinpath("catalog.json").read_text()
    else:
        raw = Path(path).read_text()
    data = json.loads(raw)
    specs = {}
    for name, entry in data["objects"].items():
        specs[name] = ObjectSpec(
            name=name,
            category=entry["category"],
            width=float(entry["width"]),
            depth=float(entry["depth"]),
            height=float(entry["height"]),
            table_top=bool(entry.get("table_top", False)),
        )
    return ObjectCatalog(specs)


def scene_to_dict(scene: SceneInstance) -> dict:
    return {
        "format_version": scene.format_version,
        "template_id": scene.template_id,
        "seed": scene.seed,
        "difficulty": {
            "level": scene.difficulty.level,
            "trash_pose": scene.difficulty.trash_pose,
            "bin_scale": scene.difficulty.bin_scale,
            "trash_count_range": list(scene.difficulty.trash_count_range),
        },
        "bounds": [scene.bounds.x_min, scene.bounds.z_min, scene.bounds.x_max, scene.bounds.z_max],
        "robot_start": list(scene.robot_start),
        "objects": [
            {
                "id": o.object_id,
                "spec": o.spec.name,
                "category": o.category,
                "position": o.position.to_list(),
                "yaw": o.yaw,
                "orientation": o.orientation.to_list(),
                "aabb": o.aabb.min.to_list() + o.aabb.max.to_list(),
                "pose_tag": o.pose_tag,
                "interactable": o.interactable,
                "scale": o.scale,
            }
            for o in scene.objects
        ],
        "surfaces": [
            [s.x_min, s.z_min, s.x_max, s.z_max, s.height] for s in scene.surfaces
        ],
        "goal_triggers": [
            {"bin_id": t.bin_id, "volume": t.volume.min.to_list() + t.volume.max.to_list()}
            for t in scene.goal_triggers
        ],
    }


def scene_from_dict(data: dict, catalog: ObjectCatalog | None = None) -> SceneInstance:
    version = data.get("format_version")
    if version != SCENE_FORMAT_VERSION:
        raise TemplateError(f"unsupported scene format_version {version!r}")
    catalog = catalog or load_catalog()
    diff = data["difficulty"]
    difficulty = DifficultyConfig(
        level=diff["level"],
        trash_pose=diff["trash_pose"],
        bin_scale=diff["bin_scale"],
        trash_count_range=tuple(diff["trash_count_range"]),
    )
    objects = []
    for o in data["objects"]:
        box = o["aabb"]
        objects.append(
            PlacedObject(
                object_id=o["id"],
                spec=catalog.get(o["spec"]),
                category=o["category"],
                position=Vec3(*o["position"]),
                yaw=o["yaw"],
                orientation=Quat(*o["orientation"]),
                aabb=Aabb(Vec3(*box[:3]), Vec3(*box[3:])),
                pose_tag=o["pose_tag"],
                interactable=o["interactable"],
                scale=o["scale"],
            )
        )
    return SceneInstance(
        template_id=data["template_id"],
        seed=data["seed"],
        difficulty=difficulty,
        objects=objects,
        surfaces=[SupportSurface(*s) for s in data["surfaces"]],
        goal_triggers=[
            GoalTrigger(t["bin_id"], Aabb(Vec3(*t["volume"][:3]), Vec3(*t["volume"][3:])))
            for t in data["goal_triggers"]
        ],
        robot_start=tuple(data["robot_start"]),
        bounds=Rect(*data["bounds"]),
        format_version=version,
    )


def save_scene(scene: SceneInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")


def load_scene(path: str | Path) -> SceneInstance:
    return scene_from_dict(json.loads(Path(path).read_text()))
