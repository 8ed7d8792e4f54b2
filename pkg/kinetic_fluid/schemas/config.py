"""The validated run configuration.

`SimConfig` is built from the flat ``key = value`` file (see
`kinetic_fluid.io.config_io`). Field validators enforce the single-key
constraints; `SimConfig.consistency_problems` covers the ones that tie several
keys together. Use `SimConfig.build` to get both, reported as one
`ConfigError`.
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from kinetic_fluid.errors import ConfigError
from kinetic_fluid.numerics.alignment import Kernel, KernelKind
from kinetic_fluid.numerics.coupling_driver import CflPolicy
from kinetic_fluid.numerics.diagnostics import WeightParams
from kinetic_fluid.numerics.fluid_solver import FluidParams
from kinetic_fluid.numerics.phase_space import Boundary, PhaseGrid, SpatialGrid

# V_max must exceed this multiple of the predicted support ceiling
GUARD_FACTOR = 1.2


class KineticInit(str, Enum):
    BUMP = "bump"
    TWO_BEAM = "two_beam"
    ZERO = "zero"


class FluidInit(str, Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    VACUUM = "vacuum"


PER_AXIS_KEYS = ("x_lower", "x_upper", "x_cells", "v_max", "v_cells", "kinetic_center_x", "kinetic_center_v")
OPTIONAL_KEYS = (
    "kinetic_width_x",
    "fluid_bump_width",
    "fluid_vacuum_inner",
    "fluid_vacuum_outer",
    "monitor_abort",
)


def _split(value: Any) -> Any:
    if isinstance(value, str) and value.strip().lower() in ("off", "none"):
        return None
    if isinstance(value, str):
        return tuple(token.strip() for token in value.split(",") if token.strip())
    if isinstance(value, (int, float)):
        return (value,)
    return value


def _positive(key: str, value: float, note: str = "") -> float:
    if not value > 0.0:
        raise ValueError(f"must satisfy {key} > 0{note}")
    return value


class SimConfig(BaseModel):
    """Every parameter of a coupled run or a Picard study."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    dim: int = Field(..., description="Spatial dimension d (1..3)")
    x_lower: Tuple[float, ...] = Field((0.0,), description="Position box lower corner")
    x_upper: Tuple[float, ...] = Field((1.0,), description="Position box upper corner")
    x_cells: Tuple[int, ...] = Field(..., description="Position cells per axis")
    v_max: Tuple[float, ...] = Field(..., description="Velocity box half-width per axis")
    v_cells: Tuple[int, ...] = Field(..., description="Velocity cells per axis")
    boundary: Boundary = Field(Boundary.PERIODIC, description="periodic or clamped")

    mu: float = Field(..., description="Shear viscosity")
    lam: float = Field(0.0, alias="lambda", description="Bulk viscosity coefficient")
    gamma: float = Field(..., description="Adiabatic exponent, P = rho^gamma")
    eps_vac: float = Field(1e-10, description="Vacuum threshold on rho")

    kernel: KernelKind = Field(KernelKind.SMOOTH, description="smooth, constant or table")
    kernel_table: Tuple[Tuple[float, float], ...] = Field((), description="(r, phi) nodes for kernel = table")
    alpha: float = Field(3.5, description="Weight exponent alpha")
    beta: float = Field(1.0, description="Weight exponent beta")
    r0: float = Field(..., description="Initial velocity support radius R0")

    kinetic_init: KineticInit = Field(KineticInit.BUMP)
    kinetic_amplitude: float = Field(1.0)
    kinetic_center_x: Optional[Tuple[float, ...]] = Field(None, description="Defaults to the box centre")
    kinetic_width_x: Optional[float] = Field(None, description="Defaults to a quarter of the box")
    kinetic_center_v: Tuple[float, ...] = Field((0.0,))
    kinetic_beam_speed: float = Field(0.5)

    fluid_init: FluidInit = Field(FluidInit.UNIFORM)
    fluid_density: float = Field(1.0)
    fluid_bump_amplitude: float = Field(0.5)
    fluid_bump_width: Optional[float] = Field(None, description="Defaults to a tenth of the box")
    fluid_vacuum_inner: Optional[float] = Field(None)
    fluid_vacuum_outer: Optional[float] = Field(None)
    fluid_velocity_amplitude: float = Field(0.0)
    fluid_mode: int = Field(1)
    max_fluid_speed: float = Field(1.0, description="Expected sup |u|, used for the velocity guard")

    cfl: float = Field(0.4, description="CFL safety factor")
    max_dt: float = Field(1e-2)
    t_end: float = Field(1.0)
    picard_t0: float = Field(0.05)
    picard_max_iter: int = Field(25)
    picard_tol: float = Field(1e-10)
    diagnostics_every: int = Field(1)
    output_dir: str = Field("out")
    monitor_abort: Optional[float] = Field(None, description="Stop when the blowup monitor exceeds this")
    seed: int = Field(0)
    fft: bool = Field(False, description="FFT convolution (periodic grids only)")

    @field_validator(*PER_AXIS_KEYS, mode="before")
    @classmethod
    def _per_axis(cls, value):
        return _split(value)

    @field_validator("kernel_table", mode="before")
    @classmethod
    def _table(cls, value):
        if isinstance(value, str):
            pairs = []
            for token in _split(value):
                r, sep, phi = token.partition(":")
                if not sep:
                    raise ValueError("expected comma-separated r:phi pairs")
                pairs.append((r, phi))
            return tuple(pairs)
        return value

    @field_validator(*OPTIONAL_KEYS, mode="before")
    @classmethod
    def _off(cls, value):
        if isinstance(value, str) and value.strip().lower() in ("", "off", "none"):
            return None
        return value

    @field_validator("dim")
    @classmethod
    def _dim(cls, value):
        if value not in (1, 2, 3):
            raise ValueError("must be 1, 2 or 3")
        return value

    @field_validator("x_cells", "v_cells")
    @classmethod
    def _cells(cls, value):
        if any(n < 4 for n in value):
            raise ValueError("need at least 4 cells per axis")
        return value

    @field_validator("v_max")
    @classmethod
    def _v_max(cls, value):
        if any(not vm > 0.0 for vm in value):
            raise ValueError("must satisfy v_max > 0")
        return value

    @field_validator("mu")
    @classmethod
    def _mu(cls, value):
        return _positive("mu", value, " (viscosity restriction)")

    @field_validator("gamma")
    @classmethod
    def _gamma(cls, value):
        if not value > 1.0:
            raise ValueError("must satisfy gamma > 1 (pressure law P = rho^gamma)")
        return value

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, value):
        if not value > 3.0:
            raise ValueError("must satisfy alpha > 3 (weight omega requires alpha > 3, beta > 1/2)")
        return value

    @field_validator("beta")
    @classmethod
    def _beta(cls, value):
        if not value > 0.5:
            raise ValueError("must satisfy beta > 1/2 (weight omega requires alpha > 3, beta > 1/2)")
        return value

    @field_validator("r0")
    @classmethod
    def _r0(cls, value):
        return _positive("r0", value, " (initial velocity support radius)")

    @field_validator("cfl")
    @classmethod
    def _cfl(cls, value):
        if not 0.0 < value <= 1.0:
            raise ValueError("must lie in (0, 1]")
        return value

    @field_validator("eps_vac", "max_dt", "t_end", "picard_t0", "picard_tol")
    @classmethod
    def _strictly_positive(cls, value, info):
        return _positive(info.field_name, value)

    @field_validator("kinetic_width_x", "fluid_bump_width", "monitor_abort")
    @classmethod
    def _optional_positive(cls, value, info):
        return value if value is None else _positive(info.field_name, value)

    @field_validator("kinetic_amplitude", "fluid_density", "fluid_bump_amplitude", "max_fluid_speed", "kinetic_beam_speed")
    @classmethod
    def _nonnegative(cls, value, info):
        if not value >= 0.0:
            raise ValueError(f"must satisfy {info.field_name} >= 0")
        return value

    @field_validator("picard_max_iter", "diagnostics_every", "fluid_mode")
    @classmethod
    def _at_least_one(cls, value, info):
        if value < 1:
            raise ValueError(f"must satisfy {info.field_name} >= 1")
        return value

    @classmethod
    def build(cls, values: Dict[str, Any]) -> "SimConfig":
        """Validate ``values`` fully; every violation is reported in one `ConfigError`."""
        try:
            config = cls.model_validate(values)
        except ValidationError as exc:
            raise ConfigError([_describe(error) for error in exc.errors()]) from None
        problems = config.consistency_problems()
        if problems:
            raise ConfigError(problems)
        return config

    def axis(self, name: str) -> tuple:
        """A per-axis key broadcast to ``dim`` entries."""
        values = getattr(self, name)
        return values * self.dim if len(values) == 1 else values

    def consistency_problems(self) -> List[Tuple[str, str]]:
        problems = []
        d = self.dim
        for name in PER_AXIS_KEYS:
            values = getattr(self, name)
            if values is not None and len(values) not in (1, d):
                problems.append((name, f"needs 1 or {d} comma-separated values, got {len(values)}"))
        if problems:
            return problems
        if not 2.0 * self.mu + d * self.lam >= 0.0:
            problems.append(("lambda", f"must satisfy 2*mu + {d}*lambda >= 0 (viscosity restriction)"))
        if any(hi <= lo for lo, hi in zip(self.axis("x_lower"), self.axis("x_upper"))):
            problems.append(("x_upper", "must exceed x_lower on every axis"))
        if self.kernel is KernelKind.TABLE and not self.kernel_table:
            problems.append(("kernel_table", "required when kernel = table"))
        else:
            try:
                self.make_kernel().check_normalization()
            except ValueError as exc:
                problems.append(("kernel_table" if self.kernel_table else "kernel", str(exc)))
        if self.fft and self.boundary is not Boundary.PERIODIC:
            problems.append(("fft", "FFT convolution requires boundary = periodic"))
        if (self.fluid_vacuum_inner is None) != (self.fluid_vacuum_outer is None):
            problems.append(("fluid_vacuum_outer", "fluid_vacuum_inner and fluid_vacuum_outer must be set together"))
        elif self.fluid_vacuum_inner is not None and not 0.0 <= self.fluid_vacuum_inner < self.fluid_vacuum_outer:
            problems.append(("fluid_vacuum_outer", "must satisfy 0 <= fluid_vacuum_inner < fluid_vacuum_outer"))
        if min(self.axis("v_max")) <= self.r_guard:
            problems.append(
                (
                    "v_max",
                    f"must exceed the support guard radius {self.r_guard:g} "
                    f"({GUARD_FACTOR} x predicted ceiling {self.predicted_ceiling:g})",
                )
            )
        return problems

    @property
    def predicted_ceiling(self) -> float:
        """Largest speed the kinetic support should reach: initial support or fluid speed."""
        if self.kinetic_init is KineticInit.TWO_BEAM:
            kinetic = self.kinetic_beam_speed + self.r0
        elif self.kinetic_init is KineticInit.BUMP:
            kinetic = sum(c * c for c in self.axis("kinetic_center_v")) ** 0.5 + self.r0
        else:
            kinetic = self.r0
        return max(kinetic, self.max_fluid_speed)

    @property
    def r_guard(self) -> float:
        return GUARD_FACTOR * self.predicted_ceiling

    def spatial_grid(self) -> SpatialGrid:
        return SpatialGrid(self.axis("x_lower"), self.axis("x_upper"), self.axis("x_cells"), self.boundary)

    def phase_grid(self) -> PhaseGrid:
        return PhaseGrid(self.spatial_grid(), self.axis("v_max"), self.axis("v_cells"), self.r_guard)

    def fluid_params(self) -> FluidParams:
        return FluidParams(self.mu, self.lam, self.gamma, self.dim, self.eps_vac)

    def make_kernel(self) -> Kernel:
        if self.kernel is KernelKind.TABLE:
            r, phi = zip(*self.kernel_table) if self.kernel_table else ((), ())
            return Kernel(self.kernel, r, phi)
        return Kernel(self.kernel)

    def weight_params(self) -> WeightParams:
        return WeightParams(self.alpha, self.beta)

    def cfl_policy(self) -> CflPolicy:
        return CflPolicy(self.cfl, self.max_dt)


def _describe(error: dict) -> Tuple[str, str]:
    key = str(error["loc"][0]) if error["loc"] else "config"
    if error["type"] == "missing":
        return key, "required key is missing"
    if error["type"] == "extra_forbidden":
        return key, "unknown key"
    message = error["msg"]
    prefix = "Value error, "
    return key, message[len(prefix):] if message.startswith(prefix) else message
