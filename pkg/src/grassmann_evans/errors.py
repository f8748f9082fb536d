"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (used by the CLI's JSON
error envelope) and a free-form ``context`` dict.
"""


class EvansError(Exception):
    code = "evans_error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def envelope(self):
        return {"code": self.code, "message": self.message,
                "context": {k: _jsonable(v) for k, v in self.context.items()}}


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


class NonConvergence(EvansError):
    code = "non_convergence"


class OverflowRisk(EvansError):
    code = "overflow_risk"


class DimensionMismatch(EvansError, ValueError):
    code = "dimension_mismatch"


class RankDeficient(EvansError):
    code = "rank_deficient"


class PatchSingular(EvansError):
    code = "patch_singular"


class DenominatorSingular(EvansError):
    code = "denominator_singular"


class CapExceeded(EvansError):
    code = "cap_exceeded"


class StepDiverged(EvansError):
    code = "step_diverged"


class WrongDichotomy(EvansError):
    code = "wrong_dichotomy"


class Defective(EvansError):
    code = "defective"


class NonIntegerWinding(EvansError):
    code = "non_integer_winding"


class MaxIterations(EvansError):
    code = "max_iterations"


class Diverged(EvansError):
    code = "diverged"


class NoConnection(EvansError):
    code = "no_connection"


class Stiff(EvansError):
    code = "stiff"


class LostRoot(EvansError):
    code = "lost_root"


class ConfigError(EvansError):
    code = "config_error"
