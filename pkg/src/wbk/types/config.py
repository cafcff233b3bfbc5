"""
Experiment configs: TOML documents validated into `ExperimentConfig`.

Top-level keys (`experiment`, `name`, `anchors`) come first, followed by the
`[domain]`, `[weight]`, `[sequence]`, `[numeric]` and `[output]` tables.
See `configs/` for an annotated example of every experiment.
"""
import re
import sys
from typing import List, Optional, Tuple

import structlog
from pydantic import BaseModel, Field, ValidationError, root_validator, validator

from wbk.geometry import Domain, annulus, disc, named_shape
from wbk.sequences.generators import Schedule, SequenceSpec, disc_sequence, identity_sequence
from wbk.types.errors import ParseError
from wbk.types.main import ExperimentKind, OutputFormat, SequenceMode, WeightFamily
from wbk.weights import Weight

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = structlog.get_logger(__name__)

__all__ = [
    "DomainConfig",
    "WeightConfig",
    "SequenceConfig",
    "NumericConfig",
    "OutputConfig",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

DOMAIN_KINDS = ("disc", "annulus", "square", "ellipse", "stadium")
SEQUENCE_EXPERIMENTS = {
    ExperimentKind.increasing_run: SequenceMode.increasing,
    ExperimentKind.outside_run: SequenceMode.outside,
    ExperimentKind.thm15_check: SequenceMode.outside,
}


class _Section(BaseModel):
    class Config:
        extra = "forbid"
        use_enum_values = True


class DomainConfig(_Section):
    kind: str = "disc"
    center: Tuple[float, float] = (0.0, 0.0)
    radius: Optional[float] = None
    r_inner: Optional[float] = None
    r_outer: Optional[float] = None
    half_width: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    half_length: Optional[float] = None

    @validator("kind")
    def validate_kind(cls, val):
        if val not in DOMAIN_KINDS:
            raise ValueError(f"`{val}` is not a known domain; choose from {', '.join(DOMAIN_KINDS)}")
        return val

    def build(self) -> Domain:
        center = complex(*self.center)
        if self.kind == "disc":
            return disc(center, self.radius if self.radius is not None else 1.0)
        if self.kind == "annulus":
            return annulus(center, self.r_inner, self.r_outer)
        params = {
            key: value
            for key, value in self.dict(include={"half_width", "a", "b", "half_length", "radius"}).items()
            if value is not None
        }
        return named_shape(self.kind, center, **params)


class WeightConfig(_Section):
    """Unset `center` and `radius` follow the domain's center and (disc) radius."""

    family: WeightFamily = WeightFamily.constant
    c: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    radius: Optional[float] = None
    center: Optional[Tuple[float, float]] = None
    scale: float = 1.0
    name: Optional[str] = None
    width: float = 1.0

    def build(self, d: Domain) -> Weight:
        center = complex(*self.center) if self.center is not None else d.center
        radius = self.radius
        if radius is None:
            radius = d.radius if d.radius is not None else 1.0
        return Weight(
            family=self.family,
            c=self.c,
            alpha=self.alpha,
            beta=self.beta,
            radius=radius,
            center=center,
            scale=self.scale,
            name=self.name,
            width=self.width,
        )


class SequenceConfig(_Section):
    """
    The mode follows from the experiment. With `identity = true` every step is the
    limit pair itself; otherwise the domain and weight schedules drive a nested
    disc or annulus sequence.
    """

    identity: bool = False
    domain_schedule: Optional[Schedule] = None
    weight_schedule: Optional[Schedule] = None
    p: int = Field(1, ge=1)

    def build(self, mode: SequenceMode, d: Domain, w: Weight, steps: int) -> SequenceSpec:
        if self.identity:
            return identity_sequence(mode, d, w, steps)
        return disc_sequence(mode, d, w, steps, self.domain_schedule, self.weight_schedule)


class NumericConfig(_Section):
    M: int = Field(16, ge=1, le=64)
    resolution: int = Field(128, ge=8, le=1024)
    order: int = Field(2, ge=1, le=16)
    n_max: int = Field(8, ge=1, le=64)
    tolerance: float = Field(1e-3, gt=0)
    margin: float = Field(0.2, gt=0)
    grid_count: int = Field(16, ge=1)
    # exponent of the local integrability test of mu^-a
    a: float = Field(1.0, gt=0)
    # largest fiber degree of Hartogs systems
    L: int = Field(2, ge=0, le=32)


class OutputConfig(_Section):
    directory: str = "results"
    formats: List[OutputFormat] = Field(default_factory=lambda: [OutputFormat.csv, OutputFormat.json])

    @validator("formats")
    def validate_formats(cls, vals):
        if not vals:
            raise ValueError("at least one output format is needed")
        return vals


class ExperimentConfig(_Section):
    experiment: ExperimentKind
    name: str = ""
    anchors: List[Tuple[float, float]] = Field(default_factory=lambda: [(0.0, 0.0)])
    domain: DomainConfig = Field(default_factory=DomainConfig)
    weight: WeightConfig = Field(default_factory=WeightConfig)
    sequence: Optional[SequenceConfig] = None
    numeric: NumericConfig = Field(default_factory=NumericConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @validator("anchors")
    def validate_anchors(cls, vals):
        if not vals:
            raise ValueError("at least one anchor is needed")
        return vals

    @root_validator(skip_on_failure=True)
    def validate_sequence(cls, values):
        experiment = values["experiment"]
        if experiment in SEQUENCE_EXPERIMENTS and values.get("sequence") is None:
            raise ValueError(f"`{experiment}` needs a [sequence] table")
        if not values.get("name"):
            values["name"] = str(experiment)
        return values

    @property
    def label(self) -> str:
        return re.sub(r"[^A-Za-z0-9_.-]+", "_", self.name)

    @property
    def sequence_mode(self) -> Optional[SequenceMode]:
        return SEQUENCE_EXPERIMENTS.get(ExperimentKind(self.experiment))

    @property
    def anchor_points(self) -> List[complex]:
        return [complex(*pair) for pair in self.anchors]

    def build_domain(self) -> Domain:
        return self.domain.build()

    def build_weight(self, d: Domain = None) -> Weight:
        return self.weight.build(d or self.build_domain())

    def build_sequence(self) -> SequenceSpec:
        d = self.build_domain()
        return self.sequence.build(self.sequence_mode, d, self.build_weight(d), self.numeric.n_max)


def _line_of(text: str, location: Tuple) -> Optional[int]:
    """Line of the key `location` points at, searching inside its table when it has one."""
    keys = [str(part) for part in location if not isinstance(part, int)]
    if not keys:
        return None
    lines = text.splitlines()
    start, end = 0, len(lines)
    if len(keys) > 1:
        header = re.compile(rf"^\s*\[\s*{re.escape(keys[0])}\s*\]")
        for index, line in enumerate(lines):
            if header.match(line):
                start = index
                break
        else:
            return None
        for index in range(start + 1, len(lines)):
            if lines[index].lstrip().startswith("["):
                end = index
                break
    key = re.compile(rf"^\s*{re.escape(keys[-1])}\s*=")
    for index in range(start, end):
        if key.match(lines[index]):
            return index + 1
    return start + 1 if len(keys) > 1 else None


def _first_error(text: str, exc: ValidationError) -> ParseError:
    error = exc.errors()[0]
    location = tuple(error["loc"])
    field = ".".join(str(part) for part in location if part != "__root__") or None
    return ParseError(error["msg"], field=field, line=_line_of(text, location))


def parse_config(text: str) -> ExperimentConfig:
    """
    Parses and validates a TOML experiment config. Raises `ParseError` naming the first
    invalid field and, when it can be located, its line.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"invalid TOML: {exc}", line=int(match.group(1)) if match else None) from exc

    try:
        config = ExperimentConfig.parse_obj(data)
    except ValidationError as exc:
        raise _first_error(text, exc) from exc

    # descriptors have to resolve to shipped families before anything runs
    for section, build in (("domain", config.build_domain), ("weight", config.build_weight)):
        try:
            build()
        except (ValueError, ValidationError) as exc:
            raise ParseError(str(exc), field=section, line=_line_of(text, (section, ""))) from exc
    if config.sequence is not None:
        try:
            config.build_sequence()
        except (ValueError, ValidationError) as exc:
            raise ParseError(str(exc), field="sequence", line=_line_of(text, ("sequence", ""))) from exc
    logger.debug(f"parsed {config.experiment} config `{config.name}`")
    return config


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as f:
        text = f.read().decode("utf-8")
    return parse_config(text)
