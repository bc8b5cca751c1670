"""Exception hierarchy shared by every module."""


class MibError(Exception):
    """Base class for data/runtime errors (CLI exit code 1)."""


class UsageError(MibError):
    """Bad parameters supplied by the caller (CLI exit code 2)."""


# -- schema / ingestion
class UnknownVariableName(MibError):
    pass


class NonNumericCell(MibError):
    def __init__(self, line, column, value):
        super().__init__(f"line {line}, column {column!r}: non-numeric value {value!r}")
        self.line = line
        self.column = column
        self.value = value


class UnknownClassLabel(MibError):
    pass


class ArityMismatch(MibError):
    pass


class EmptyGroup(MibError):
    pass


class EmptyDataset(MibError):
    pass


class NonPositiveInterval(MibError):
    pass


class MismatchedInterface(MibError):
    pass


# -- ranking / training
class UnlabeledDataset(MibError):
    pass


class FewerThanTwoClasses(MibError):
    pass


class FewerThanTwoAttributes(MibError):
    pass


class OutOfRange(UsageError):
    pass


class KTooLarge(UsageError):
    pass


class SchemaMismatch(MibError):
    pass


class ModelFormatError(MibError):
    pass


# -- evaluation
class TooFewRecords(MibError):
    pass


class EmptyMatrix(MibError):
    pass


class EmptyConfig(MibError):
    pass


# -- snmp
class BadLabel(UsageError):
    pass


class MalformedBer(MibError):
    def __init__(self, msg, offset):
        super().__init__(f"{msg} (offset {offset})")
        self.offset = offset


class TruncatedMessage(MalformedBer):
    pass


class UnsupportedVersion(MibError):
    pass


class SnmpTimeout(MibError):
    pass


class AgentError(MibError):
    def __init__(self, status, index):
        super().__init__(f"agent returned errorStatus={status} errorIndex={index}")
        self.status = status
        self.index = index


class NoSuchObject(MibError):
    pass


class StreamTerminated(MibError):
    pass
