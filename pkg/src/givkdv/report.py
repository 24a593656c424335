from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class VerificationReport:
    case: str
    lhs: str
    rhs: str
    difference: str
    depth: int | None = None
    wall_time: float = 0.0
    status: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.difference == "0" else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        return f"[{self.status.upper()}] {self.case}  diff={self.difference}"


def make_report(case: str, lhs, rhs, depth=None, wall_time: float = 0.0, **extra) -> VerificationReport:
    diff = lhs - rhs
    return VerificationReport(case, str(lhs), str(rhs), str(diff), depth, wall_time, extra=extra)
