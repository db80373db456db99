"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`GentreeError`
and carries a short ``kind`` string, which the CLI copies into its error JSON.
"""
from __future__ import annotations


class GentreeError(Exception):
    kind = "error"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class Unsupported(GentreeError):
    """No closed form exists for this profile combination."""

    kind = "unsupported"


class NonFiniteState(GentreeError):
    kind = "non_finite_state"


class InvalidField(GentreeError):
    """Speed profile is not strictly positive on the integration span."""

    kind = "invalid_field"


class BranchBudgetExceeded(GentreeError):
    kind = "branch_budget"


class ParseError(GentreeError):
    kind = "parse"

    def __init__(self, message: str, line: int | None = None,
                 col: int | None = None, path: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if col is not None:
            where.append(f"col {col}")
        if path:
            where.append(f"at {path}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.col = col
        self.path = path

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(line=self.line, col=self.col, path=self.path)
        return d


class ContractivityError(ParseError):
    kind = "contractivity"


class UnbalancedBrackets(ParseError):
    kind = "unbalanced_brackets"


class IrregularCurve(GentreeError):
    kind = "irregular_curve"


class UnsupportedFamily(GentreeError):
    kind = "unsupported_family"


class NoSolution(GentreeError):
    kind = "no_solution"


class DegenerateEdge(GentreeError):
    kind = "degenerate_edge"


class NotIsomorphic(GentreeError):
    kind = "not_isomorphic"

    def __init__(self, message: str, scaffold_node: int | None = None,
                 discrete_node: int | None = None):
        super().__init__(message)
        self.scaffold_node = scaffold_node
        self.discrete_node = discrete_node

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["mismatch"] = {"scaffold_node": self.scaffold_node,
                         "discrete_node": self.discrete_node}
        return d


class DepthUnavailable(GentreeError):
    kind = "depth_unavailable"


class EmptySet(GentreeError):
    kind = "empty_set"
