"""Exception hierarchy shared by every stage of the toolchain."""


class RispError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


# isa
class IllegalEncoding(RispError):
    pass


class RegisterOutOfRange(RispError):
    pass


class FieldOverflow(RispError):
    pass


class Trap(RispError):
    """Architectural trap raised by ``isa.execute``."""


class MisalignedAccess(Trap):
    pass


class MisalignedTarget(Trap):
    pass


# profile
class UnsupportedFormat(RispError):
    pass


class EmptyImage(RispError):
    pass


class MalformedListing(RispError):
    def __init__(self, lineno, line):
        super().__init__(f"line {lineno}: {line.rstrip()!r}")
        self.lineno = lineno
        self.line = line


class AllWordsUndecodable(RispError):
    pass


# blocklib / gen
class UnknownInstruction(RispError):
    pass


class SurvivingMutant(RispError):
    def __init__(self, mnemonic, survivors):
        super().__init__(f"{mnemonic}: surviving mutants {', '.join(survivors)}")
        self.mnemonic = mnemonic
        self.survivors = list(survivors)


class EmptySubset(RispError):
    pass


class StructureMismatch(RispError):
    pass


class SubsetViolation(RispError):
    def __init__(self, mnemonics):
        self.mnemonics = sorted(set(mnemonics))
        super().__init__("instructions outside the design subset: " + ", ".join(self.mnemonics))


class IoFailure(RispError):
    pass


# sim
class NotHalted(RispError):
    pass


class NoRegionConfigured(RispError):
    pass


class ExternalToolFailure(RispError):
    def __init__(self, returncode, stderr):
        excerpt = stderr[-2000:]
        super().__init__(f"external simulator exited with {returncode}: {excerpt}")
        self.returncode = returncode
        self.stderr = excerpt


# retarget
class NoRuleFor(RispError):
    def __init__(self, mnemonic):
        super().__init__(f"no macro rule for {mnemonic!r} over the target subset")
        self.mnemonic = mnemonic


class ScratchUnavailable(RispError):
    pass


class OffsetOverflow(RispError):
    pass


class LayoutOverflow(RispError):
    """Expanded code would overlap another segment of the image."""


class PcRelativeReference(RispError):
    """A pc-relative code reference that cannot be relinked safely."""


# metrics
class MissingWeight(RispError):
    pass


class NonPositiveInput(RispError):
    pass
