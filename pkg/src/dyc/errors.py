"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""


class DycError(Exception):
    code = "ERROR"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details


class DomainError(DycError, ValueError):
    code = "DOMAIN"


class NotInLattice(DycError, ValueError):
    code = "NOT_IN_LATTICE"


class NotInFamily(DycError, KeyError):
    code = "NOT_IN_FAMILY"

    def __str__(self):
        return Exception.__str__(self)


class PredicateInvalid(DycError):
    code = "PREDICATE_INVALID"


class EmptyFamily(DycError, ValueError):
    code = "EMPTY_FAMILY"


class EtaTooLarge(DycError, ValueError):
    code = "ETA_TOO_LARGE"


class RefinementTooDeep(DycError, ValueError):
    code = "REFINEMENT_TOO_DEEP"


class AlignmentError(DycError, ValueError):
    code = "ALIGNMENT"


class SupportMarginError(DycError, ValueError):
    code = "SUPPORT_MARGIN"


class RegularityError(DycError, ValueError):
    code = "REGULARITY"


class WeightConstraintError(DycError, ValueError):
    code = "WEIGHT_CONSTRAINT"
