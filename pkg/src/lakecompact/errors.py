"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LakeCompactError(Exception):
    """Base class for all errors raised by lakecompact."""


class InputError(LakeCompactError):
    """Bad user input: malformed or invalid snapshot/config documents."""


class ParseError(InputError):
    """Syntactically malformed document."""

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        locus = ""
        if line is not None:
            locus = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + locus)


class ValidationError(InputError):
    """Well-formed document that violates a model invariant.

    ``path`` is a dotted/bracketed field locus such as
    ``databases[0].tables[1].partitions.__default[3].size_bytes``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class UnsupportedVersion(InputError):
    pass


class ConfigError(InputError):
    """Invalid engine, trigger or simulator configuration."""


class TraitEvaluationError(LakeCompactError):
    def __init__(self, trait: str, candidate_id: str, value: object):
        self.trait = trait
        self.candidate_id = candidate_id
        super().__init__(f"trait {trait!r} produced non-finite value {value!r} for {candidate_id}")


class MissingTrait(LakeCompactError):
    def __init__(self, trait: str, candidate_id: str | None = None):
        self.trait = trait
        self.candidate_id = candidate_id
        where = f" for {candidate_id}" if candidate_id else ""
        super().__init__(f"trait {trait!r} not computed{where}")


class UnknownTable(LakeCompactError):
    pass


class UnknownCandidate(InputError):
    pass
