"""Exception hierarchy.

Every error carries the process exit code the command-line front-end
reports for it, so library callers and the CLI agree on what failed.
"""


class BscError(Exception):
    exit_code = 1


# input-format problems (exit 2)

class InputFormatError(BscError):
    exit_code = 2


class MisalignedCorpus(InputFormatError):
    def __init__(self, source_lines, target_lines):
        super().__init__(
            f"source has {source_lines} lines but target has {target_lines} lines"
        )
        self.source_lines = source_lines
        self.target_lines = target_lines


class EmptyCorpus(InputFormatError):
    pass


class IoFailure(InputFormatError):
    pass


class ArtifactFormatError(InputFormatError):
    """A persisted artifact has a bad header, version or checksum."""


class ZeroFrequency(InputFormatError):
    pass


# empty results (exit 3)

class EmptyResult(BscError):
    exit_code = 3


class AllTokensPruned(EmptyResult):
    pass


class NoCliques(EmptyResult):
    pass


class IsolatedNode(NoCliques):
    pass


class EmptyCliqueSet(EmptyResult):
    pass


class EmptyTrainingSet(EmptyResult):
    pass


class CliqueBudgetExceeded(BscError):
    def __init__(self, budget):
        super().__init__(f"clique enumeration exceeded the budget of {budget} cliques")
        self.budget = budget


# unknown queries (exit 4)

class UnknownQuery(BscError):
    exit_code = 4


class QueryNotInSpace(UnknownQuery):
    pass


class NoTargetCandidates(UnknownQuery):
    pass


# evaluation impossible (exit 5)

class AllPairsOov(BscError):
    exit_code = 5


# numerical

class DimensionTooLarge(BscError, ValueError):
    exit_code = 2


class SvdNonConvergence(BscError):
    pass


class DegenerateMatrixWarning(UserWarning):
    """Raised as a warning when a reduction keeps fewer axes than requested."""
