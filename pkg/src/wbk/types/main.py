import enum

import structlog

logger = structlog.get_logger(__name__)


# --- Enums ---
class BaseEnum(enum.Enum):
    def __str__(self):
        return str(self.value)

    def __eq__(self, other):
        return str(other) == self.value

    def __hash__(self):
        return hash(self.value)


class DomainKind(BaseEnum):
    disc = "disc"
    annulus = "annulus"
    indicator = "indicator"  # predicate + bounding box


class WeightFamily(BaseEnum):
    constant = "constant"  # c
    radial_power = "radial_power"  # |z - center|^(2*alpha)
    moebius_power = "moebius_power"  # (1 - |z|^2 / R^2)^beta
    expression = "expression"  # named built-in callable


class ExtensionMode(BaseEnum):
    inside = "inside"  # extend mu_k by mu on D
    outside = "outside"  # piecewise extension across D_1, ..., D_k


class SequenceMode(BaseEnum):
    increasing = "increasing"
    outside = "outside"


class Verdict(BaseEnum):
    passed = "pass"
    inconclusive = "inconclusive"


class SpotCheckMethod(BaseEnum):
    all = "all"  # every node
    random = "random"  # seeded sample of N nodes
    strided = "strided"  # every k-th node


class OracleKind(BaseEnum):
    disc_unweighted = "disc_unweighted"
    disc_radial_power = "disc_radial_power"
    disc_moebius_power = "disc_moebius_power"
    product = "product"


class ExperimentKind(BaseEnum):
    kernel_table = "kernel_table"
    increasing_run = "increasing_run"
    outside_run = "outside_run"
    thm15_check = "thm15_check"
    forelli_rudin_check = "forelli_rudin_check"
    toeplitz_check = "toeplitz_check"
    admissibility_check = "admissibility_check"


class OutputFormat(BaseEnum):
    csv = "csv"
    json = "json"


class LogFormat(BaseEnum):
    console = "console"
    json = "json"  # one JSON object per line, for batch runs
