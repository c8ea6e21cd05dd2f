"""Entity universe, process-statistic catalog and shared value types."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

PS_IDS: tuple[int, ...] = tuple(range(1, 11))
DIFFERENCE_PS_IDS: tuple[int, ...] = (3, 4, 5, 6, 8, 9)

US = "US"


class RiskdexError(Exception):
    """Base class for domain errors raised by this package."""


class UnknownEntityError(RiskdexError, KeyError):
    def __init__(self, code: str):
        super().__init__(code)
        self.code = code

    def __str__(self) -> str:
        return f"unknown entity code {self.code!r}"


class UnknownPsError(RiskdexError, KeyError):
    def __init__(self, ps_id: object):
        super().__init__(ps_id)
        self.ps_id = ps_id

    def __str__(self) -> str:
        return f"unknown process statistic {self.ps_id!r} (expected 1..10)"


class Phase(str, enum.Enum):
    MAF_DEVELOPMENT = "MAF_Development"
    SELF_RESPONSE = "Self_Response"
    NRFU = "NRFU"
    DATA_PROCESSING = "Data_Processing"
    GROUP_QUARTERS = "Group_Quarters"

    @property
    def short(self) -> str:
        return _PHASE_SHORT[self]


_PHASE_SHORT = {
    Phase.MAF_DEVELOPMENT: "maf",
    Phase.SELF_RESPONSE: "sr",
    Phase.NRFU: "nrfu",
    Phase.DATA_PROCESSING: "dp",
    Phase.GROUP_QUARTERS: "gq",
}

PHASES: tuple[Phase, ...] = tuple(Phase)


class Kind(str, enum.Enum):
    LEVEL_2020 = "Level2020"
    DIFFERENCE = "Difference2020Minus2010"


class WeightSource(str, enum.Enum):
    SELF_VALUE = "SelfValue"
    COMPONENT_2020 = "Component2020"
    REBASED = "RebasedIndependent"


class TieBreak(str, enum.Enum):
    CANONICAL = "canonical"
    REVERSE_CANONICAL = "reverse"
    # published profile order inside tied groups, canonical where none exists
    PUBLISHED = "published"


class UsSps(str, enum.Enum):
    SKIP = "skip"
    DERIVE = "derive"


@dataclass(frozen=True)
class Entity:
    code: str
    name: str

    @property
    def is_us(self) -> bool:
        return self.code == US


# Row order of the appendix tables: US first, then states by full name,
# with DC placed directly after Delaware.
ENTITIES: tuple[Entity, ...] = tuple(
    Entity(code, name)
    for code, name in [
        ("US", "United States"),
        ("AL", "Alabama"),
        ("AK", "Alaska"),
        ("AZ", "Arizona"),
        ("AR", "Arkansas"),
        ("CA", "California"),
        ("CO", "Colorado"),
        ("CT", "Connecticut"),
        ("DE", "Delaware"),
        ("DC", "Washington, D.C."),
        ("FL", "Florida"),
        ("GA", "Georgia"),
        ("HI", "Hawaii"),
        ("ID", "Idaho"),
        ("IL", "Illinois"),
        ("IN", "Indiana"),
        ("IA", "Iowa"),
        ("KS", "Kansas"),
        ("KY", "Kentucky"),
        ("LA", "Louisiana"),
        ("ME", "Maine"),
        ("MD", "Maryland"),
        ("MA", "Massachusetts"),
        ("MI", "Michigan"),
        ("MN", "Minnesota"),
        ("MS", "Mississippi"),
        ("MO", "Missouri"),
        ("MT", "Montana"),
        ("NE", "Nebraska"),
        ("NV", "Nevada"),
        ("NH", "New Hampshire"),
        ("NJ", "New Jersey"),
        ("NM", "New Mexico"),
        ("NY", "New York"),
        ("NC", "North Carolina"),
        ("ND", "North Dakota"),
        ("OH", "Ohio"),
        ("OK", "Oklahoma"),
        ("OR", "Oregon"),
        ("PA", "Pennsylvania"),
        ("RI", "Rhode Island"),
        ("SC", "South Carolina"),
        ("SD", "South Dakota"),
        ("TN", "Tennessee"),
        ("TX", "Texas"),
        ("UT", "Utah"),
        ("VT", "Vermont"),
        ("VA", "Virginia"),
        ("WA", "Washington"),
        ("WV", "West Virginia"),
        ("WI", "Wisconsin"),
        ("WY", "Wyoming"),
    ]
)

CODES: tuple[str, ...] = tuple(e.code for e in ENTITIES)
STATE_CODES: tuple[str, ...] = tuple(c for c in CODES if c != US)

_INDEX = {code: i for i, code in enumerate(CODES)}
_BY_CODE = {e.code: e for e in ENTITIES}
_BY_NAME = {e.name: e for e in ENTITIES}


def canonical_index(code: str) -> int:
    try:
        return _INDEX[code]
    except KeyError:
        raise UnknownEntityError(code) from None


def entity(code: str) -> Entity:
    try:
        return _BY_CODE[code]
    except KeyError:
        raise UnknownEntityError(code) from None


def entity_by_name(name: str) -> Entity:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise UnknownEntityError(name) from None


def canonical_sorted(codes: Iterable[str]) -> list[str]:
    return sorted(codes, key=canonical_index)


@dataclass(frozen=True)
class PsDef:
    id: int
    short_name: str
    phase: Phase
    kind: Kind
    weight_source: WeightSource
    universe: str

    @property
    def is_difference(self) -> bool:
        return self.kind is Kind.DIFFERENCE


_CATALOG: tuple[PsDef, ...] = (
    PsDef(1, "MAF Revisions", Phase.MAF_DEVELOPMENT, Kind.LEVEL_2020,
          WeightSource.SELF_VALUE, "all addresses"),
    PsDef(2, "Questionnaires Without ID not on MAF", Phase.SELF_RESPONSE, Kind.LEVEL_2020,
          WeightSource.REBASED, "housing units returning non-ID questionnaires"),
    PsDef(3, "Multiple Responses", Phase.SELF_RESPONSE, Kind.DIFFERENCE,
          WeightSource.COMPONENT_2020, "occupied housing units"),
    PsDef(4, "Usual Residence at College", Phase.SELF_RESPONSE, Kind.DIFFERENCE,
          WeightSource.REBASED, "occupied housing units with two or more persons"),
    PsDef(5, "Responses Obtained by Proxy", Phase.NRFU, Kind.DIFFERENCE,
          WeightSource.COMPONENT_2020, "persons in occupied housing units"),
    PsDef(6, "Enumerations With Only a Population Count", Phase.NRFU, Kind.DIFFERENCE,
          WeightSource.COMPONENT_2020, "occupied housing units"),
    PsDef(7, "Enumerations via Administrative Records", Phase.NRFU, Kind.LEVEL_2020,
          WeightSource.SELF_VALUE, "occupied housing units"),
    PsDef(8, "MAF Addresses Having Imputed Status", Phase.DATA_PROCESSING, Kind.DIFFERENCE,
          WeightSource.COMPONENT_2020, "MAF units"),
    PsDef(9, "Occupied Housing Units With Imputed Population Counts", Phase.DATA_PROCESSING,
          Kind.DIFFERENCE, WeightSource.COMPONENT_2020, "occupied housing units with known status"),
    PsDef(10, "Group Quarters With Imputed Count", Phase.GROUP_QUARTERS, Kind.LEVEL_2020,
          WeightSource.REBASED, "group quarters population"),
)

_CATALOG_BY_ID = {d.id: d for d in _CATALOG}


def catalog() -> list[PsDef]:
    return list(_CATALOG)


def ps_def(ps_id: int) -> PsDef:
    try:
        return _CATALOG_BY_ID[ps_id]
    except (KeyError, TypeError):
        raise UnknownPsError(ps_id) from None


def _freeze(mapping: Mapping) -> Mapping:
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True)
class PsMatrix:
    """Process-statistic values in percentage points, keyed by ``(code, ps_id)``."""

    values: Mapping[tuple[str, int], float]
    rel_diff: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(self.values))
        object.__setattr__(self, "rel_diff", _freeze(self.rel_diff))

    @property
    def entities(self) -> list[str]:
        return canonical_sorted(self.rel_diff)

    def column(self, ps_id: int, include_us: bool = True) -> dict[str, float]:
        ps_def(ps_id)
        return {
            code: self.values[code, ps_id]
            for code in self.entities
            if include_us or code != US
        }

    def row(self, code: str) -> dict[int, float]:
        return {ps: self.values[code, ps] for ps in PS_IDS}


@dataclass(frozen=True)
class WeightMatrix:
    """Raw weights as a percent of the state count; there is no US row."""

    raw: Mapping[tuple[str, int], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "raw", _freeze(self.raw))

    @property
    def entities(self) -> list[str]:
        return canonical_sorted({code for code, _ in self.raw})

    def row(self, code: str) -> dict[int, float]:
        if (code, 1) not in self.raw:
            raise UnknownEntityError(code)
        return {ps: self.raw[code, ps] for ps in PS_IDS}


@dataclass(frozen=True)
class Components2020:
    """2020 percentages underlying the six difference statistics."""

    values: Mapping[tuple[str, int], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(self.values))

    @property
    def entities(self) -> list[str]:
        return canonical_sorted({code for code, _ in self.values})


@dataclass(frozen=True)
class QuintileMatrix:
    q: Mapping[tuple[str, int], int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _freeze(self.q))

    def row(self, code: str) -> dict[int, int]:
        return {ps: self.q[code, ps] for ps in PS_IDS}

    def column(self, ps_id: int) -> dict[str, int]:
        return {code: q for (code, ps), q in self.q.items() if ps == ps_id}


@dataclass(frozen=True)
class VariantConfig:
    include_us_in_quintiles: bool = True
    zero_negative_weights: bool = True
    tie_break: TieBreak = TieBreak.CANONICAL
    us_sps: UsSps = UsSps.SKIP
    quintile_n51_scheme: tuple[int, ...] = (11, 10, 10, 10, 10)
    zero_nonpositive: bool = False
    rescale_after_zeroing: bool = True

    def __post_init__(self) -> None:
        scheme = tuple(int(s) for s in self.quintile_n51_scheme)
        if len(scheme) != 5 or any(s < 0 for s in scheme) or sum(scheme) != 51:
            raise ValueError(
                f"quintile_n51_scheme must be five nonnegative sizes summing to 51, got {scheme}"
            )
        object.__setattr__(self, "quintile_n51_scheme", scheme)
        object.__setattr__(self, "tie_break", TieBreak(self.tie_break))
        object.__setattr__(self, "us_sps", UsSps(self.us_sps))

    @property
    def label(self) -> str:
        parts = [
            "us-in" if self.include_us_in_quintiles else "us-out",
            "zero" if self.zero_negative_weights else "nozero",
        ]
        if self.zero_negative_weights and self.zero_nonpositive:
            parts.append("nonpos")
        if self.zero_negative_weights and not self.rescale_after_zeroing:
            parts.append("norescale")
        if self.tie_break is not TieBreak.CANONICAL:
            parts.append(f"tie-{self.tie_break.value}")
        if self.us_sps is not UsSps.SKIP:
            parts.append(f"us-{self.us_sps.value}")
        if not self.include_us_in_quintiles and self.quintile_n51_scheme != (11, 10, 10, 10, 10):
            parts.append("n51-" + "-".join(map(str, self.quintile_n51_scheme)))
        return "/".join(parts)


DEFAULT_VARIANT = VariantConfig()


def default_variant_grid() -> list[VariantConfig]:
    return [
        VariantConfig(include_us_in_quintiles=us, zero_negative_weights=zero)
        for us in (True, False)
        for zero in (True, False)
    ]


# Rules under which the published summary column is reproduced to rounding:
# zero differences <= 0 and divide by the full raw-weight total.
PUBLISHED_RULES = VariantConfig(
    include_us_in_quintiles=True,
    zero_negative_weights=True,
    tie_break=TieBreak.PUBLISHED,
    zero_nonpositive=True,
    rescale_after_zeroing=False,
)


def extended_variant_grid() -> list[VariantConfig]:
    return default_variant_grid() + [PUBLISHED_RULES]


@dataclass(frozen=True)
class SpsResult:
    """Per-entity summary values for one variant.

    ``scaled_weights`` are the weights actually multiplied into the
    quintiles. They sum to 1 per entity unless the variant disables
    rescaling after zeroing, in which case they sum to the retained share.
    """

    config: VariantConfig
    sps: Mapping[str, float]
    phase_pct: Mapping[tuple[str, Phase], float]
    zeroed: Mapping[str, frozenset[int]]
    scaled_weights: Mapping[tuple[str, int], float]
    quintiles: QuintileMatrix

    def __post_init__(self) -> None:
        for name in ("sps", "phase_pct", "zeroed", "scaled_weights"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def entities(self) -> list[str]:
        return canonical_sorted(self.sps)

    def phases(self, code: str) -> dict[Phase, float]:
        return {phase: self.phase_pct[code, phase] for phase in PHASES}

    def weights(self, code: str) -> dict[int, float]:
        return {ps: self.scaled_weights[code, ps] for ps in PS_IDS}


@dataclass(frozen=True)
class Table4Row:
    state: str
    sps: float
    phase_pct: tuple[float, float, float, float, float]


@dataclass(frozen=True)
class Table2Row:
    method: str
    pct_2020: float
    pct_2010: float


@dataclass(frozen=True)
class ProfileEntry:
    rank: int | None
    state: str
    value: float


@dataclass(frozen=True)
class PublishedReference:
    published_sps: Mapping[str, float]
    table4: tuple[Table4Row, ...]
    table2: tuple[Table2Row, ...]
    profile_orders: Mapping[int, tuple[ProfileEntry, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "published_sps", _freeze(self.published_sps))
        object.__setattr__(self, "profile_orders", _freeze(self.profile_orders))
