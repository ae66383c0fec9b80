"""Exception types shared across the package."""


class TbmcError(Exception):
    """Base class for all errors raised by this package."""


class DuplicateEntry(TbmcError):
    def __init__(self, row, col):
        super().__init__(f"duplicate entry at ({row}, {col})")
        self.row = row
        self.col = col


class IndexOutOfRange(TbmcError):
    pass


class EmptyRow(TbmcError):
    """Row has no observed entries, so a scaled Hamming distance is undefined."""


class DimensionMismatch(TbmcError):
    pass


class NumericalFailure(TbmcError):
    """Simplex left its tolerance envelope (degenerate pivot or iteration cap)."""


class TooLarge(TbmcError):
    """Instance exceeds the exhaustive-enumeration cap."""


class SpecInvalid(TbmcError):
    """Synthetic-model parameters are inconsistent (e.g. a tile rounds to zero rows)."""


class ConfigInvalid(TbmcError):
    pass


class ParseError(TbmcError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ValueOutOfDomain(TbmcError):
    pass


class EmptyTestSet(TbmcError):
    pass
