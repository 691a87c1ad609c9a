"""Report payloads returned by the verification and simulation engines."""
from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field

Status = Literal["pass", "fail", "info"]


class Witness(BaseModel):
    row: int
    col: int
    value: str


class CheckResult(BaseModel):
    check_name: str
    status: Status
    first_failure: Optional[Witness] = None
    detail: Optional[str] = None

    @classmethod
    def from_witness(cls, name: str, witness: Optional[Witness], informational: bool = False) -> "CheckResult":
        if informational:
            return cls(check_name=name, status="info", first_failure=witness,
                       detail="holds" if witness is None else "does not hold")
        return cls(check_name=name, status="pass" if witness is None else "fail", first_failure=witness)


class CheckSuite(BaseModel):
    """Named list of checks; informational entries never fail the suite."""

    algebra: str
    L: int
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.status == "fail"]


class RelationReport(CheckSuite):
    pass


class KernelReport(CheckSuite):
    vectors: int = 0
    rank: int = 0


class ValidationReport(CheckSuite):
    q_samples: List[float] = Field(default_factory=list)


class GeneratorReport(CheckSuite):
    normalization_constant: str = "1"
    leaks: List[str] = Field(default_factory=list)


class DualityFailure(BaseModel):
    z: str
    y: str
    lhs: str
    rhs: str


class DualityReport(BaseModel):
    variant: str
    L: int
    ring: Literal["exact", "float"]
    pairs_checked: int
    failures: List[DualityFailure] = Field(default_factory=list)
    max_residual: Optional[float] = None

    @property
    def passed(self) -> bool:
        return not self.failures


class ProportionalityReport(BaseModel):
    variant: str
    L: int
    constants: Dict[str, str] = Field(default_factory=dict)
    first_break: Optional[DualityFailure] = None

    @property
    def passed(self) -> bool:
        return self.first_break is None


class DualityEstimate(BaseModel):
    variant: str
    x: str
    y: str
    t: float
    q: float
    lhs_mean: float
    lhs_stderr: float
    rhs_mean: float
    rhs_stderr: float
    n_lhs: int
    n_rhs: int
    exact_lhs: Optional[float] = None
    exact_rhs: Optional[float] = None

    def agrees(self, k: float = 3.0) -> bool:
        """Both means, and each against its exact value, within k combined standard errors."""
        tol = k * (self.lhs_stderr + self.rhs_stderr)
        ok = abs(self.lhs_mean - self.rhs_mean) <= tol + 1e-12
        if self.exact_lhs is not None:
            ok = ok and abs(self.lhs_mean - self.exact_lhs) <= tol + 1e-9
            ok = ok and abs(self.rhs_mean - self.exact_rhs) <= tol + 1e-9
        return ok


class MomentReport(BaseModel):
    algebra: str
    variant: str
    observable: str = "duality function D(eta(t), xi)"
    eta0: str
    xi: str
    r: int
    estimate: DualityEstimate
    agreement: bool


class RunManifest(BaseModel):
    command: str
    parameters: Dict[str, Any]
    versions: Dict[str, str]
    started_at: str
    wall_clock_seconds: float
    passed: bool
    summary: str
